//! Full training pipeline: walks, reconstruction, epochs, selection.
//!
//! `train` wires the stages together: generate walks, reconstruct the
//! propagation operator, normalize features, then run full-batch epochs
//! with per-epoch validation tracking, optional early stopping, and
//! best-validation model selection. Everything is deterministic under
//! `TrainOptions::seed`; the file- and config-level plumbing lives in
//! the companion crate.

use alloc::vec::Vec;
use core::fmt;

use crate::dense::DenseMatrix;
use crate::graph::Graph;
use crate::model::{
    backward, cross_entropy, forward, forward_eval, init_params, optimizer_step, softmax_rows,
    HyperParams, Mode, ModelError, ModelParams, OptimizerState,
};
use crate::reconstruct::{reconstruct, ReconConfig, ReconError};
use crate::rng::{stream, Stream};
use crate::sparse::SparseMatrix;
use crate::walk::{generate_walks_mode, WalkMode, WalkSet};

/// Walk-stage parameters of the pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkParams {
    /// Walks started per node; 0 degenerates to plain adjacency.
    pub t_walks: usize,
    /// Maximum walk length in nodes (source included); at least 1.
    pub walk_length: usize,
    /// Per-step decay of walk contributions, strictly in (0, 1).
    pub alpha: f64,
    /// Blend weight of the walk matrix, finite and nonnegative.
    pub lambda: f64,
    /// Symmetrize the walk matrix before blending; `None` picks true
    /// for undirected graphs and false for directed ones.
    pub symmetrize: Option<bool>,
    /// How individual walks are drawn.
    pub mode: WalkMode,
}

impl Default for WalkParams {
    fn default() -> Self {
        Self {
            t_walks: 8,
            walk_length: 5,
            alpha: 0.8,
            lambda: 0.9,
            symmetrize: None,
            mode: WalkMode::Plain,
        }
    }
}

/// Which epoch's parameters the pipeline returns.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ModelSelection {
    /// Parameters from the epoch with the highest validation accuracy
    /// (earliest such epoch on ties); falls back to the final epoch
    /// when there is no validation mask.
    #[default]
    BestValidation,
    /// Parameters after the last epoch run.
    FinalEpoch,
}

/// Everything `train` needs besides the graph.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainOptions {
    /// Walk and reconstruction parameters.
    pub walk: WalkParams,
    /// Network and optimizer hyperparameters.
    pub hyper: HyperParams,
    /// Master seed for walks and dropout streams.
    pub seed: u64,
    /// Stop when validation loss stalls for `patience` epochs.
    pub early_stopping: bool,
    /// Consecutive non-improving epochs tolerated before stopping.
    pub patience: usize,
    /// Which epoch's parameters to return.
    pub selection: ModelSelection,
    /// L1-normalize feature rows before training.
    pub normalize_features: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            walk: WalkParams::default(),
            hyper: HyperParams::default(),
            seed: 0,
            early_stopping: true,
            patience: 10,
            selection: ModelSelection::BestValidation,
            normalize_features: true,
        }
    }
}

/// Per-epoch statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    /// Zero-based epoch index.
    pub epoch: usize,
    /// Masked training loss before this epoch's weight update.
    pub train_loss: f64,
    /// Validation loss after the update, when a validation mask exists.
    pub val_loss: Option<f64>,
    /// Validation accuracy after the update, when a mask exists.
    pub val_accuracy: Option<f64>,
}

/// Outcome of a training run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainRecord {
    /// Statistics for every epoch that ran.
    pub epochs: Vec<EpochStats>,
    /// Epoch whose parameters were returned; `None` if no epoch ran.
    pub best_epoch: Option<usize>,
    /// Accuracy of the returned parameters on the test mask.
    pub test_accuracy: Option<f64>,
    /// Stored nonzeros of the input adjacency.
    pub nnz_adjacency: usize,
    /// Stored nonzeros of the reconstructed operator.
    pub nnz_reconstructed: usize,
    /// Node count of the graph.
    pub num_nodes: usize,
    /// Seed the run used.
    pub seed: u64,
}

/// Errors aborting a training run, tagged by pipeline stage.
#[derive(Clone, Debug, PartialEq)]
pub enum TrainError {
    /// Walk parameters were out of range.
    InvalidWalk {
        /// Which constraint failed.
        what: &'static str,
    },
    /// The graph cannot be trained on.
    UnusableGraph {
        /// What is missing.
        what: &'static str,
    },
    /// Reconstruction failed.
    Recon(ReconError),
    /// A model-stage operation failed.
    Model(ModelError),
    /// The loss left the finite range.
    NumericFailure {
        /// Epoch at which training diverged.
        epoch: usize,
        /// The offending loss value.
        loss: f64,
    },
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::InvalidWalk { what } => write!(f, "walk stage: {what}"),
            TrainError::UnusableGraph { what } => write!(f, "graph: {what}"),
            TrainError::Recon(e) => write!(f, "reconstruction stage: {e}"),
            TrainError::Model(e) => write!(f, "model stage: {e}"),
            TrainError::NumericFailure { epoch, loss } => {
                write!(f, "training diverged at epoch {epoch}: loss = {loss}")
            }
        }
    }
}

impl From<ReconError> for TrainError {
    fn from(e: ReconError) -> Self {
        TrainError::Recon(e)
    }
}

impl From<ModelError> for TrainError {
    fn from(e: ModelError) -> Self {
        TrainError::Model(e)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TrainError {}

fn l1_normalize_rows(m: &DenseMatrix) -> DenseMatrix {
    let mut out = m.clone();
    for r in 0..out.rows() {
        let sum: f64 = out.row(r).iter().map(|v| v.abs()).sum();
        if sum > 0.0 {
            for v in out.row_mut(r) {
                *v /= sum;
            }
        }
    }
    out
}

fn check_walk_length(opts: &TrainOptions) -> Result<(), TrainError> {
    if opts.walk.walk_length == 0 {
        return Err(TrainError::InvalidWalk { what: "walk_length must be at least 1" });
    }
    Ok(())
}

fn gen_walks(graph: &Graph, opts: &TrainOptions) -> WalkSet {
    generate_walks_mode(
        graph,
        opts.walk.t_walks,
        opts.walk.walk_length,
        opts.seed,
        opts.walk.mode,
    )
}

/// Builds the propagation operator and preprocessed features for a run.
///
/// Shared by training and by checkpoint-based evaluation so both see
/// the identical operator: walks are regenerated deterministically from
/// the seed rather than persisted.
pub fn prepare(
    graph: &Graph,
    opts: &TrainOptions,
) -> Result<(SparseMatrix, DenseMatrix), TrainError> {
    check_walk_length(opts)?;
    let walks = gen_walks(graph, opts);
    prepare_with_walks(graph, opts, &walks)
}

/// [`prepare`] with externally generated walks.
///
/// Walk streams are keyed by (seed, node, walk index), so a set built
/// in parallel from `opts` matches the serial one bit for bit; passing
/// walks built under different parameters silently changes the run.
pub fn prepare_with_walks(
    graph: &Graph,
    opts: &TrainOptions,
    walks: &WalkSet,
) -> Result<(SparseMatrix, DenseMatrix), TrainError> {
    check_walk_length(opts)?;
    let symmetrize = opts.walk.symmetrize.unwrap_or(!graph.directed());
    let cfg = ReconConfig::new(opts.walk.alpha, opts.walk.lambda, symmetrize)?;
    let op = reconstruct(graph, walks, &cfg)?;
    let x = if opts.normalize_features {
        l1_normalize_rows(graph.features())
    } else {
        graph.features().clone()
    };
    Ok((op, x))
}

/// Fraction of masked nodes whose argmax logit matches their label.
///
/// Ties in the argmax resolve to the lowest class index. Every masked
/// node must be labeled and in range.
pub fn evaluate(
    params: &ModelParams,
    op: &SparseMatrix,
    x: &DenseMatrix,
    labels: &[Option<usize>],
    mask: &[usize],
) -> Result<f64, ModelError> {
    let logits = forward_eval(op, x, params)?;
    accuracy(&logits, labels, mask)
}

fn accuracy(
    logits: &DenseMatrix,
    labels: &[Option<usize>],
    mask: &[usize],
) -> Result<f64, ModelError> {
    if mask.is_empty() {
        return Err(ModelError::EmptyMask);
    }
    let mut hits = 0usize;
    for &node in mask {
        if node >= logits.rows() {
            return Err(ModelError::MaskOutOfRange { node, rows: logits.rows() });
        }
        let label = labels
            .get(node)
            .copied()
            .flatten()
            .ok_or(ModelError::UnlabeledNode { node })?;
        let row = logits.row(node);
        let mut arg = 0usize;
        for (c, &v) in row.iter().enumerate() {
            if v > row[arg] {
                arg = c;
            }
        }
        if arg == label {
            hits += 1;
        }
    }
    Ok(hits as f64 / mask.len() as f64)
}

/// Final-layer representations (pre-softmax logits) for every node.
pub fn embed(
    params: &ModelParams,
    op: &SparseMatrix,
    x: &DenseMatrix,
) -> Result<DenseMatrix, ModelError> {
    forward_eval(op, x, params)
}

/// Runs the full pipeline and returns the selected parameters.
pub fn train(graph: &Graph, opts: &TrainOptions) -> Result<(ModelParams, TrainRecord), TrainError> {
    opts.hyper.validate()?;
    check_walk_length(opts)?;
    let walks = gen_walks(graph, opts);
    train_with_walks(graph, opts, &walks)
}

/// [`train`] with externally generated walks; see [`prepare_with_walks`].
pub fn train_with_walks(
    graph: &Graph,
    opts: &TrainOptions,
    walks: &WalkSet,
) -> Result<(ModelParams, TrainRecord), TrainError> {
    opts.hyper.validate()?;
    let (op, x) = prepare_with_walks(graph, opts, walks)?;

    let classes = graph.num_classes();
    if classes == 0 {
        return Err(TrainError::UnusableGraph { what: "no labeled nodes" });
    }
    if graph.num_features() == 0 {
        return Err(TrainError::UnusableGraph { what: "no node features" });
    }
    let splits = graph.splits();
    if splits.train.is_empty() {
        return Err(TrainError::UnusableGraph { what: "empty training mask" });
    }

    let mut dims = Vec::with_capacity(opts.hyper.hidden_dims.len() + 2);
    dims.push(graph.num_features());
    dims.extend_from_slice(&opts.hyper.hidden_dims);
    dims.push(classes);

    let mut params = init_params(&dims, opts.hyper.init_seed);
    let mut opt_state = OptimizerState::new(opts.hyper.optimizer, &params);
    let mut dropout_rng = stream(opts.seed, Stream::Dropout, 0, 0);

    let labels = graph.labels();
    let has_val = !splits.val.is_empty();
    let mut epochs = Vec::with_capacity(opts.hyper.epochs);
    let mut best: Option<(usize, f64, ModelParams)> = None;
    let mut best_val_loss = f64::INFINITY;
    let mut stall = 0usize;

    for epoch in 0..opts.hyper.epochs {
        let (logits, trace) =
            forward(&op, &x, &params, &opts.hyper, Mode::Train, &mut dropout_rng)?;
        let probs = softmax_rows(&logits)?;
        let (train_loss, grad_logits) = cross_entropy(&probs, labels, &splits.train)?;
        if !train_loss.is_finite() {
            return Err(TrainError::NumericFailure { epoch, loss: train_loss });
        }
        let grads = backward(&trace, &grad_logits, &op, &params, opts.hyper.weight_decay)?;
        optimizer_step(&mut params, &grads, &mut opt_state, opts.hyper.learning_rate);

        let (val_loss, val_accuracy) = if has_val {
            let eval_logits = forward_eval(&op, &x, &params)?;
            let eval_probs = softmax_rows(&eval_logits)?;
            let (vl, _) = cross_entropy(&eval_probs, labels, &splits.val)?;
            let va = accuracy(&eval_logits, labels, &splits.val)?;
            (Some(vl), Some(va))
        } else {
            (None, None)
        };
        epochs.push(EpochStats { epoch, train_loss, val_loss, val_accuracy });

        if let Some(va) = val_accuracy {
            let improved = best.as_ref().map_or(true, |(_, acc, _)| va > *acc);
            if improved {
                best = Some((epoch, va, params.clone()));
            }
        }
        if opts.early_stopping {
            if let Some(vl) = val_loss {
                if vl < best_val_loss {
                    best_val_loss = vl;
                    stall = 0;
                } else {
                    stall += 1;
                    if stall >= opts.patience {
                        break;
                    }
                }
            }
        }
    }

    let ran = epochs.len();
    let (best_epoch, selected) = match (opts.selection, best) {
        (ModelSelection::BestValidation, Some((e, _, p))) => (Some(e), p),
        _ if ran == 0 => (None, params),
        _ => (Some(ran - 1), params),
    };

    let test_accuracy = if splits.test.is_empty() {
        None
    } else {
        Some(evaluate(&selected, &op, &x, labels, &splits.test)?)
    };

    let record = TrainRecord {
        epochs,
        best_epoch,
        test_accuracy,
        nnz_adjacency: graph.adjacency().nnz(),
        nnz_reconstructed: op.nnz(),
        num_nodes: graph.num_nodes(),
        seed: opts.seed,
    };
    Ok((selected, record))
}
