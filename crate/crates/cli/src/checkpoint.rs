//! Versioned text checkpoints for trained weights.
//!
//! Format (line-oriented, space-separated):
//!
//! ```text
//! WGCNCKPT 1
//! dims 1433 16 7
//! seed 42
//! epoch 74
//! layer 0
//! <fan_in rows of fan_out floats each>
//! layer 1
//! ...
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so a load returns
//! the saved weights bit for bit. The seed is stored because evaluation
//! must regenerate the training run's walks to rebuild the identical
//! propagation operator.

use std::path::Path;

use wgcn_core::dense::DenseMatrix;
use wgcn_core::model::ModelParams;

use crate::io::DataError;

const MAGIC: &str = "WGCNCKPT 1";

/// A trained model with the context needed to reuse it.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    /// Layer weights.
    pub params: ModelParams,
    /// Master seed of the producing run.
    pub seed: u64,
    /// Epoch the weights were selected from, if any epoch ran.
    pub epoch: Option<usize>,
}

/// Writes a checkpoint to `path`.
pub fn save(path: &Path, ckpt: &Checkpoint) -> Result<(), DataError> {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str("dims");
    for d in ckpt.params.dims() {
        out.push_str(&format!(" {d}"));
    }
    out.push('\n');
    out.push_str(&format!("seed {}\n", ckpt.seed));
    match ckpt.epoch {
        Some(e) => out.push_str(&format!("epoch {e}\n")),
        None => out.push_str("epoch none\n"),
    }
    for (k, w) in ckpt.params.weights().iter().enumerate() {
        out.push_str(&format!("layer {k}\n"));
        for r in 0..w.rows() {
            let row: Vec<String> = w.row(r).iter().map(f64::to_string).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    std::fs::write(path, out).map_err(|e| DataError {
        path: path.display().to_string(),
        line: None,
        message: e.to_string(),
    })
}

struct Reader<'a> {
    path: &'a Path,
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Reader<'a> {
    fn next(&mut self) -> Result<(usize, &'a str), DataError> {
        match self.lines.next() {
            Some((i, l)) => Ok((i + 1, l.trim_end_matches('\r'))),
            None => Err(self.err(None, "unexpected end of file".into())),
        }
    }

    fn err(&self, line: Option<usize>, message: String) -> DataError {
        DataError { path: self.path.display().to_string(), line, message }
    }

    fn expect_tag(&mut self, tag: &str) -> Result<(usize, Vec<&'a str>), DataError> {
        let (no, line) = self.next()?;
        let mut fields = line.split_whitespace();
        if fields.next() != Some(tag) {
            return Err(self.err(Some(no), format!("expected {tag:?} line, got {line:?}")));
        }
        Ok((no, fields.collect()))
    }
}

/// Reads a checkpoint written by [`save`].
pub fn load(path: &Path) -> Result<Checkpoint, DataError> {
    let text = std::fs::read_to_string(path).map_err(|e| DataError {
        path: path.display().to_string(),
        line: None,
        message: e.to_string(),
    })?;
    let mut r = Reader { path, lines: text.lines().enumerate() };

    let (no, first) = r.next()?;
    if first != MAGIC {
        return Err(r.err(Some(no), format!("not a checkpoint (expected {MAGIC:?} header)")));
    }

    let (no, dim_fields) = r.expect_tag("dims")?;
    let dims: Vec<usize> = dim_fields
        .iter()
        .map(|t| t.parse().map_err(|_| r.err(Some(no), format!("bad dimension: {t:?}"))))
        .collect::<Result<_, _>>()?;
    if dims.len() < 2 {
        return Err(r.err(Some(no), "dims needs at least input and output sizes".into()));
    }

    let (no, seed_fields) = r.expect_tag("seed")?;
    let [seed_token] = seed_fields.as_slice() else {
        return Err(r.err(Some(no), "seed line needs exactly one value".into()));
    };
    let seed: u64 = seed_token
        .parse()
        .map_err(|_| r.err(Some(no), format!("bad seed: {seed_token:?}")))?;

    let (no, epoch_fields) = r.expect_tag("epoch")?;
    let [epoch_token] = epoch_fields.as_slice() else {
        return Err(r.err(Some(no), "epoch line needs exactly one value".into()));
    };
    let epoch: Option<usize> = match *epoch_token {
        "none" => None,
        t => Some(
            t.parse()
                .map_err(|_| r.err(Some(no), format!("bad epoch: {t:?}")))?,
        ),
    };

    let mut weights = Vec::with_capacity(dims.len() - 1);
    for k in 0..dims.len() - 1 {
        let (no, layer_fields) = r.expect_tag("layer")?;
        if layer_fields != [k.to_string().as_str()] {
            return Err(r.err(Some(no), format!("expected layer {k}")));
        }
        let (rows, cols) = (dims[k], dims[k + 1]);
        let mut w = DenseMatrix::zeros(rows, cols);
        for row in 0..rows {
            let (no, line) = r.next()?;
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != cols {
                return Err(r.err(
                    Some(no),
                    format!("layer {k} row {row} needs {cols} values, got {}", tokens.len()),
                ));
            }
            for (col, token) in tokens.iter().enumerate() {
                let v: f64 = token
                    .parse()
                    .map_err(|_| r.err(Some(no), format!("bad weight: {token:?}")))?;
                w.set(row, col, v);
            }
        }
        weights.push(w);
    }
    if let Some((no, _)) = r.lines.next() {
        return Err(r.err(Some(no + 1), "trailing content after weights".into()));
    }

    let params = ModelParams::from_weights(weights)
        .map_err(|e| r.err(None, format!("inconsistent weights: {e}")))?;
    Ok(Checkpoint { params, seed, epoch })
}
