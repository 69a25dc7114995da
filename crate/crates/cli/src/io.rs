//! TSV dataset formats and dump files.
//!
//! All readers tolerate CRLF line endings, blank lines, and `#`
//! comments. Fields are separated by tabs or spaces. Node ids are
//! zero-based and dense: the node count is the largest id seen plus
//! one, unless a `# nodes: N` directive declares a larger count (how
//! isolated trailing nodes are represented).

use std::fmt;
use std::fs;
use std::path::Path;

use wgcn_core::dense::DenseMatrix;
use wgcn_core::graph::Splits;
use wgcn_core::sparse::SparseMatrix;
use wgcn_core::walk::WalkSet;

/// A malformed or unreadable data file, with the offending line.
#[derive(Debug)]
pub struct DataError {
    /// File the problem was found in.
    pub path: String,
    /// One-based line number, when the problem is tied to a line.
    pub line: Option<usize>,
    /// What went wrong.
    pub message: String,
}

impl DataError {
    fn new(path: &Path, line: Option<usize>, message: String) -> Self {
        Self { path: path.display().to_string(), line, message }
    }
}

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "{}:{}: {}", self.path, n, self.message),
            None => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

impl std::error::Error for DataError {}

/// Lines that carry data: one-based number plus `\r`-stripped content,
/// with blank lines and comments removed.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r').trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// The `# nodes: N` directive, if present.
fn nodes_directive(path: &Path, text: &str) -> Result<Option<usize>, DataError> {
    let mut found: Option<usize> = None;
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r').trim();
        let Some(rest) = line.strip_prefix('#') else { continue };
        let Some(count) = rest.trim().strip_prefix("nodes:") else { continue };
        let n: usize = count.trim().parse().map_err(|_| {
            DataError::new(path, Some(no + 1), format!("bad node count: {:?}", count.trim()))
        })?;
        if found.is_some() {
            return Err(DataError::new(path, Some(no + 1), "duplicate nodes directive".into()));
        }
        found = Some(n);
    }
    Ok(found)
}

fn parse_id(path: &Path, line: usize, token: &str) -> Result<usize, DataError> {
    token
        .parse()
        .map_err(|_| DataError::new(path, Some(line), format!("not a node id: {token:?}")))
}

fn parse_float(path: &Path, line: usize, token: &str) -> Result<f64, DataError> {
    let v: f64 = token
        .parse()
        .map_err(|_| DataError::new(path, Some(line), format!("not a number: {token:?}")))?;
    if !v.is_finite() {
        return Err(DataError::new(path, Some(line), format!("non-finite value: {token}")));
    }
    Ok(v)
}

fn read(path: &Path) -> Result<String, DataError> {
    fs::read_to_string(path).map_err(|e| DataError::new(path, None, e.to_string()))
}

/// An edge list loaded from disk.
#[derive(Debug)]
pub struct EdgeList {
    /// 0/1 adjacency; symmetric when loaded as undirected.
    pub matrix: SparseMatrix,
    /// Self-loops dropped during loading.
    pub self_loops_dropped: usize,
}

/// Loads `u <tab> v` pairs. Duplicate edges collapse; self-loops are
/// dropped and counted. Undirected mode stores both directions of each
/// pair, so listing an edge either or both ways is equivalent.
pub fn load_edges(path: &Path, directed: bool) -> Result<EdgeList, DataError> {
    let text = read(path)?;
    let declared = nodes_directive(path, &text)?;
    let mut pairs = std::collections::BTreeSet::new();
    let mut self_loops = 0usize;
    let mut max_id = 0usize;
    for (no, line) in data_lines(&text) {
        let mut fields = line.split_whitespace();
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(DataError::new(path, Some(no), "expected two fields: u v".into()));
        };
        let u = parse_id(path, no, a)?;
        let v = parse_id(path, no, b)?;
        if u == v {
            self_loops += 1;
            continue;
        }
        max_id = max_id.max(u).max(v);
        if directed {
            pairs.insert((u, v));
        } else {
            pairs.insert((u.min(v), u.max(v)));
        }
    }
    let seen = if pairs.is_empty() && self_loops == 0 { 0 } else { max_id + 1 };
    let n = match declared {
        Some(d) if d < seen => {
            return Err(DataError::new(
                path,
                None,
                format!("edge references node {max_id} but the nodes directive declares {d}"),
            ));
        }
        Some(d) => d,
        None => seen,
    };
    let triplets: Vec<(usize, usize, f64)> = if directed {
        pairs.iter().map(|&(u, v)| (u, v, 1.0)).collect()
    } else {
        pairs
            .iter()
            .flat_map(|&(u, v)| [(u, v, 1.0), (v, u, 1.0)])
            .collect()
    };
    let matrix = SparseMatrix::from_triplets(n, triplets)
        .map_err(|e| DataError::new(path, None, e.to_string()))?;
    Ok(EdgeList { matrix, self_loops_dropped: self_loops })
}

/// Loads `node <tab> f1 f2 ...` rows; every node needs exactly one row
/// and all rows the same width.
pub fn load_features(path: &Path, num_nodes: usize) -> Result<DenseMatrix, DataError> {
    let text = read(path)?;
    let mut width: Option<usize> = None;
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; num_nodes];
    for (no, line) in data_lines(&text) {
        let mut fields = line.split_whitespace();
        let id = parse_id(path, no, fields.next().expect("data lines are non-empty"))?;
        if id >= num_nodes {
            return Err(DataError::new(
                path,
                Some(no),
                format!("node {id} out of range (graph has {num_nodes} nodes)"),
            ));
        }
        if rows[id].is_some() {
            return Err(DataError::new(path, Some(no), format!("duplicate row for node {id}")));
        }
        let values: Vec<f64> = fields
            .map(|t| parse_float(path, no, t))
            .collect::<Result<_, _>>()?;
        match width {
            None if values.is_empty() => {
                return Err(DataError::new(path, Some(no), "row has no feature values".into()));
            }
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(DataError::new(
                    path,
                    Some(no),
                    format!("row has {} values, earlier rows have {w}", values.len()),
                ));
            }
            Some(_) => {}
        }
        rows[id] = Some(values);
    }
    if let Some(missing) = rows.iter().position(Option::is_none) {
        return Err(DataError::new(path, None, format!("no feature row for node {missing}")));
    }
    let rows: Vec<Vec<f64>> = rows.into_iter().map(Option::unwrap).collect();
    if rows.is_empty() {
        return Err(DataError::new(path, None, "no feature rows".into()));
    }
    Ok(DenseMatrix::from_rows(&rows))
}

/// Loads `node <tab> class` rows; nodes without a row stay unlabeled.
pub fn load_labels(path: &Path, num_nodes: usize) -> Result<Vec<Option<usize>>, DataError> {
    let text = read(path)?;
    let mut labels = vec![None; num_nodes];
    for (no, line) in data_lines(&text) {
        let mut fields = line.split_whitespace();
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(DataError::new(path, Some(no), "expected two fields: node class".into()));
        };
        let id = parse_id(path, no, a)?;
        let class = parse_id(path, no, b)?;
        if id >= num_nodes {
            return Err(DataError::new(
                path,
                Some(no),
                format!("node {id} out of range (graph has {num_nodes} nodes)"),
            ));
        }
        if labels[id].is_some() {
            return Err(DataError::new(path, Some(no), format!("duplicate label for node {id}")));
        }
        labels[id] = Some(class);
    }
    Ok(labels)
}

/// Loads `node <tab> role` rows with roles `train`, `val`, or `test`;
/// nodes without a row belong to no split.
pub fn load_split(path: &Path, num_nodes: usize) -> Result<Splits, DataError> {
    let text = read(path)?;
    let mut assigned: Vec<Option<u8>> = vec![None; num_nodes];
    let mut splits = Splits { train: Vec::new(), val: Vec::new(), test: Vec::new() };
    for (no, line) in data_lines(&text) {
        let mut fields = line.split_whitespace();
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(DataError::new(path, Some(no), "expected two fields: node role".into()));
        };
        let id = parse_id(path, no, a)?;
        if id >= num_nodes {
            return Err(DataError::new(
                path,
                Some(no),
                format!("node {id} out of range (graph has {num_nodes} nodes)"),
            ));
        }
        if assigned[id].is_some() {
            return Err(DataError::new(
                path,
                Some(no),
                format!("node {id} assigned to a split twice"),
            ));
        }
        let (tag, bucket) = match b {
            "train" => (0, &mut splits.train),
            "val" => (1, &mut splits.val),
            "test" => (2, &mut splits.test),
            other => {
                return Err(DataError::new(
                    path,
                    Some(no),
                    format!("unknown role {other:?} (expected train, val, or test)"),
                ));
            }
        };
        assigned[id] = Some(tag);
        bucket.push(id);
    }
    Ok(splits)
}

fn write(path: &Path, contents: String) -> Result<(), DataError> {
    fs::write(path, contents).map_err(|e| DataError::new(path, None, e.to_string()))
}

/// Writes an adjacency as an edge list with a `# nodes:` directive;
/// undirected matrices emit each pair once.
pub fn write_edges(path: &Path, m: &SparseMatrix, directed: bool) -> Result<(), DataError> {
    let mut out = format!("# nodes: {}\n", m.dim());
    for (r, c, _) in m.entries() {
        if directed || r < c {
            out.push_str(&format!("{r}\t{c}\n"));
        }
    }
    write(path, out)
}

/// Writes features as `node <tab> f1 f2 ...`, one row per node, with
/// exact round-trip float formatting.
pub fn write_features(path: &Path, m: &DenseMatrix) -> Result<(), DataError> {
    let mut out = String::new();
    for r in 0..m.rows() {
        out.push_str(&r.to_string());
        for v in m.row(r) {
            out.push('\t');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    write(path, out)
}

/// Writes labels as `node <tab> class`, skipping unlabeled nodes.
pub fn write_labels(path: &Path, labels: &[Option<usize>]) -> Result<(), DataError> {
    let mut out = String::new();
    for (id, label) in labels.iter().enumerate() {
        if let Some(c) = label {
            out.push_str(&format!("{id}\t{c}\n"));
        }
    }
    write(path, out)
}

/// Writes split assignments as `node <tab> role`.
pub fn write_split(path: &Path, splits: &Splits) -> Result<(), DataError> {
    let mut out = String::new();
    for (role, nodes) in [("train", &splits.train), ("val", &splits.val), ("test", &splits.test)] {
        for id in nodes {
            out.push_str(&format!("{id}\t{role}\n"));
        }
    }
    write(path, out)
}

/// Writes one walk per line as space-separated node ids, grouped by
/// source node in id order.
pub fn write_walks(path: &Path, walks: &WalkSet) -> Result<(), DataError> {
    let mut out = format!(
        "# walks per node: {} / max length: {}\n",
        walks.t_walks(),
        walks.max_len()
    );
    for (_, walk) in walks.iter() {
        let ids: Vec<String> = walk.nodes().iter().map(usize::to_string).collect();
        out.push_str(&ids.join(" "));
        out.push('\n');
    }
    write(path, out)
}

/// Writes a sparse matrix as `row col value` triplets in row-major
/// order, values fixed to 12 significant digits.
pub fn write_matrix(path: &Path, m: &SparseMatrix) -> Result<(), DataError> {
    let mut out = format!("# dim: {}\n# nnz: {}\n", m.dim(), m.nnz());
    for (r, c, v) in m.entries() {
        out.push_str(&format!("{r}\t{c}\t{v:.11e}\n"));
    }
    write(path, out)
}

/// Writes per-node representations as `node <tab> v1 v2 ...`.
pub fn write_embeddings(path: &Path, m: &DenseMatrix) -> Result<(), DataError> {
    write_features(path, m)
}
