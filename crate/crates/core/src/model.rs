//! Dense graph convolutional network with hand-derived gradients.
//!
//! A network of `K` layers propagates `H_k = relu(op * H_(k-1) * W_k)`
//! with the activation dropped on the last layer, where `op` is the
//! (usually reconstructed and normalized) propagation operator. Training
//! uses inverted dropout on every layer input, masked softmax
//! cross-entropy, L2 weight decay on all weight matrices, and either
//! Adam or plain gradient descent. All arithmetic is `f64`; backward
//! passes are written out by hand and verified against finite
//! differences in the test suite.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::distributions::{Distribution, Uniform};
use rand::Rng;

use crate::dense::DenseMatrix;
use crate::rng::{stream, Stream};
use crate::sparse::SparseMatrix;

/// Optimizer family used for the weight update.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizerKind {
    /// Adam with beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
    Adam,
    /// Plain full-batch gradient descent.
    Sgd,
}

/// Training hyperparameters.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperParams {
    /// Widths of the hidden layers; empty means a single linear layer.
    pub hidden_dims: Vec<usize>,
    /// Step size of the optimizer.
    pub learning_rate: f64,
    /// Number of full-batch epochs.
    pub epochs: usize,
    /// L2 penalty coefficient applied to every weight matrix.
    pub weight_decay: f64,
    /// Drop probability for inverted dropout; 0 disables it.
    pub dropout: f64,
    /// Which optimizer updates the weights.
    pub optimizer: OptimizerKind,
    /// Seed for weight initialization.
    pub init_seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            hidden_dims: vec![16],
            learning_rate: 0.01,
            epochs: 200,
            weight_decay: 5e-4,
            dropout: 0.5,
            optimizer: OptimizerKind::Adam,
            init_seed: 0,
        }
    }
}

impl HyperParams {
    /// Rejects out-of-range hyperparameters.
    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(ModelError::InvalidHyper {
                what: "learning_rate must be finite and positive",
                value: self.learning_rate,
            });
        }
        if !self.weight_decay.is_finite() || self.weight_decay < 0.0 {
            return Err(ModelError::InvalidHyper {
                what: "weight_decay must be finite and nonnegative",
                value: self.weight_decay,
            });
        }
        if !self.dropout.is_finite() || !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::InvalidHyper {
                what: "dropout must lie in [0, 1)",
                value: self.dropout,
            });
        }
        if self.hidden_dims.iter().any(|&d| d == 0) {
            return Err(ModelError::InvalidHyper {
                what: "hidden layer widths must be positive",
                value: 0.0,
            });
        }
        Ok(())
    }
}

/// Errors from model construction, forward, loss, or backward.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelError {
    /// A hyperparameter was out of range.
    InvalidHyper {
        /// Which constraint failed.
        what: &'static str,
        /// Offending value.
        value: f64,
    },
    /// Adjacent weight matrices do not chain.
    WeightChain {
        /// Index of the later weight.
        layer: usize,
        /// Columns of the earlier weight.
        prev_cols: usize,
        /// Rows of the later weight.
        rows: usize,
    },
    /// Layer input width does not match the weight's row count.
    LayerShape {
        /// Input columns.
        input_cols: usize,
        /// Weight rows.
        weight_rows: usize,
    },
    /// Operator order does not match the number of input rows.
    OperatorSize {
        /// Operator order.
        operator: usize,
        /// Input rows.
        rows: usize,
    },
    /// The loss mask is empty.
    EmptyMask,
    /// A masked node has no label.
    UnlabeledNode {
        /// The unlabeled node.
        node: usize,
    },
    /// A label is outside the class range of the logits.
    LabelOutOfRange {
        /// The node carrying the label.
        node: usize,
        /// The label value.
        label: usize,
        /// Number of classes (logit columns).
        classes: usize,
    },
    /// A mask index is outside the node range.
    MaskOutOfRange {
        /// Offending node id.
        node: usize,
        /// Number of rows available.
        rows: usize,
    },
    /// Logits or probabilities contained NaN or infinity.
    NonFinite {
        /// Which quantity was non-finite.
        what: &'static str,
    },
    /// The trace does not belong to these parameters.
    StaleTrace {
        /// What disagreed.
        what: &'static str,
    },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::InvalidHyper { what, value } => write!(f, "{what} (got {value})"),
            ModelError::WeightChain { layer, prev_cols, rows } => write!(
                f,
                "weight {layer} has {rows} rows but the previous layer is {prev_cols} wide"
            ),
            ModelError::LayerShape { input_cols, weight_rows } => write!(
                f,
                "layer input is {input_cols} wide but the weight has {weight_rows} rows"
            ),
            ModelError::OperatorSize { operator, rows } => write!(
                f,
                "operator of order {operator} cannot propagate {rows} input rows"
            ),
            ModelError::EmptyMask => write!(f, "loss mask is empty"),
            ModelError::UnlabeledNode { node } => write!(f, "masked node {node} has no label"),
            ModelError::LabelOutOfRange { node, label, classes } => write!(
                f,
                "node {node} has label {label} but the model emits {classes} classes"
            ),
            ModelError::MaskOutOfRange { node, rows } => {
                write!(f, "mask references node {node} but only {rows} rows exist")
            }
            ModelError::NonFinite { what } => write!(f, "{what} contain non-finite values"),
            ModelError::StaleTrace { what } => {
                write!(f, "forward trace does not match parameters: {what}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ModelError {}

/// The network's weight matrices, one per layer.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    weights: Vec<DenseMatrix>,
}

impl ModelParams {
    /// Assembles parameters, checking that layer shapes chain.
    pub fn from_weights(weights: Vec<DenseMatrix>) -> Result<Self, ModelError> {
        assert!(!weights.is_empty(), "a model has at least one layer");
        for k in 1..weights.len() {
            if weights[k].rows() != weights[k - 1].cols() {
                return Err(ModelError::WeightChain {
                    layer: k,
                    prev_cols: weights[k - 1].cols(),
                    rows: weights[k].rows(),
                });
            }
        }
        Ok(Self { weights })
    }

    /// The per-layer weight matrices.
    pub fn weights(&self) -> &[DenseMatrix] {
        &self.weights
    }

    /// Mutable access for optimizer updates.
    pub fn weights_mut(&mut self) -> &mut [DenseMatrix] {
        &mut self.weights
    }

    /// Number of layers.
    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    /// Layer widths from input to output, length `num_layers() + 1`.
    pub fn dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.weights.len() + 1);
        dims.push(self.weights[0].rows());
        dims.extend(self.weights.iter().map(DenseMatrix::cols));
        dims
    }
}

/// Glorot-uniform initialization over `dims = [input, hidden.., output]`.
///
/// Each weight entry is drawn uniformly from
/// `[-sqrt(6 / (fan_in + fan_out)), +sqrt(6 / (fan_in + fan_out))]`
/// using a per-layer stream derived from `seed`.
///
/// # Panics
/// Panics if fewer than two dims are given or any dim is zero.
pub fn init_params(dims: &[usize], seed: u64) -> ModelParams {
    assert!(dims.len() >= 2, "need at least input and output widths");
    assert!(dims.iter().all(|&d| d > 0), "layer widths must be positive");
    let weights = dims
        .windows(2)
        .enumerate()
        .map(|(layer, pair)| {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
            let dist = Uniform::new_inclusive(-bound, bound);
            let mut rng = stream(seed, Stream::Init, layer as u64, 0);
            let data = (0..fan_in * fan_out).map(|_| dist.sample(&mut rng)).collect();
            DenseMatrix::from_vec(fan_in, fan_out, data)
        })
        .collect();
    ModelParams { weights }
}

/// Rectified linear unit, elementwise `max(0, x)`.
pub fn relu(m: &DenseMatrix) -> DenseMatrix {
    let mut out = m.clone();
    out.map_inplace(|v| if v > 0.0 { v } else { 0.0 });
    out
}

/// One propagation layer: `op * (input * weight)`, optionally rectified.
///
/// Multiplying `input * weight` first keeps the big product sparse-aware:
/// `input` is usually either the (mostly zero) feature matrix or a
/// dropout-thinned hidden state.
pub fn layer_forward(
    op: &SparseMatrix,
    input: &DenseMatrix,
    weight: &DenseMatrix,
    apply_relu: bool,
) -> Result<DenseMatrix, ModelError> {
    if input.cols() != weight.rows() {
        return Err(ModelError::LayerShape {
            input_cols: input.cols(),
            weight_rows: weight.rows(),
        });
    }
    if op.dim() != input.rows() {
        return Err(ModelError::OperatorSize { operator: op.dim(), rows: input.rows() });
    }
    let z = op.mul_dense(&input.matmul(weight));
    Ok(if apply_relu { relu(&z) } else { z })
}

/// Row-wise softmax with max-subtraction for stability.
///
/// Rejects non-finite logits; output rows are positive and sum to 1
/// within floating-point roundoff even for extreme magnitudes.
pub fn softmax_rows(logits: &DenseMatrix) -> Result<DenseMatrix, ModelError> {
    if logits.has_non_finite() {
        return Err(ModelError::NonFinite { what: "logits" });
    }
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = libm::exp(*v - max);
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    Ok(out)
}

/// Masked mean cross-entropy and its gradient with respect to logits.
///
/// Returns `(-sum_v ln p[v, label_v] / |mask|, (p - onehot) / |mask|)`
/// where the sum and the gradient cover only masked rows; unmasked rows
/// of the gradient are zero.
pub fn cross_entropy(
    probs: &DenseMatrix,
    labels: &[Option<usize>],
    mask: &[usize],
) -> Result<(f64, DenseMatrix), ModelError> {
    if mask.is_empty() {
        return Err(ModelError::EmptyMask);
    }
    let classes = probs.cols();
    let mut grad = DenseMatrix::zeros(probs.rows(), classes);
    let inv = 1.0 / mask.len() as f64;
    let mut loss = 0.0;
    for &node in mask {
        if node >= probs.rows() {
            return Err(ModelError::MaskOutOfRange { node, rows: probs.rows() });
        }
        let label = labels
            .get(node)
            .copied()
            .flatten()
            .ok_or(ModelError::UnlabeledNode { node })?;
        if label >= classes {
            return Err(ModelError::LabelOutOfRange { node, label, classes });
        }
        loss -= libm::log(probs.get(node, label)) * inv;
        let grad_row = grad.row_mut(node);
        for (g, &p) in grad_row.iter_mut().zip(probs.row(node)) {
            *g = p * inv;
        }
        grad_row[label] -= inv;
    }
    Ok((loss, grad))
}

/// Whether a forward pass applies dropout and records a trace for
/// backprop, or runs purely deterministically.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Dropout active (when the rate is positive), trace recorded.
    Train,
    /// No dropout, no RNG consumption.
    Eval,
}

/// Intermediate state of a forward pass, consumed by [`backward`].
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    /// Post-dropout input to each layer.
    inputs: Vec<DenseMatrix>,
    /// Pre-activation output of each layer.
    preacts: Vec<DenseMatrix>,
    /// Dropout keep masks per layer, present only when dropout ran.
    masks: Option<Vec<Vec<bool>>>,
    /// Keep probability the masks were drawn with.
    keep: f64,
}

impl ForwardTrace {
    /// Post-dropout input of layer `k`.
    pub fn input(&self, k: usize) -> &DenseMatrix {
        &self.inputs[k]
    }

    /// Pre-activation output of layer `k`.
    pub fn preactivation(&self, k: usize) -> &DenseMatrix {
        &self.preacts[k]
    }

    /// Dropout keep masks, if dropout was active.
    pub fn dropout_masks(&self) -> Option<&[Vec<bool>]> {
        self.masks.as_deref()
    }
}

fn apply_dropout(
    h: &DenseMatrix,
    keep: f64,
    rng: &mut impl Rng,
) -> (DenseMatrix, Vec<bool>) {
    let mut out = h.clone();
    let mut mask = Vec::with_capacity(h.rows() * h.cols());
    let scale = 1.0 / keep;
    for v in out.as_mut_slice() {
        let kept = rng.gen_bool(keep);
        mask.push(kept);
        *v = if kept { *v * scale } else { 0.0 };
    }
    (out, mask)
}

/// Full forward pass, returning logits and the trace backprop needs.
///
/// In [`Mode::Train`] with a positive dropout rate, each layer input is
/// thinned by inverted dropout using draws from `rng` (row-major entry
/// order); in [`Mode::Eval`] the RNG is never touched and the pass is a
/// pure function of its inputs.
pub fn forward(
    op: &SparseMatrix,
    x: &DenseMatrix,
    params: &ModelParams,
    hyper: &HyperParams,
    mode: Mode,
    rng: &mut impl Rng,
) -> Result<(DenseMatrix, ForwardTrace), ModelError> {
    hyper.validate()?;
    let layers = params.num_layers();
    let dropping = mode == Mode::Train && hyper.dropout > 0.0;
    let keep = 1.0 - hyper.dropout;

    let mut inputs = Vec::with_capacity(layers);
    let mut preacts = Vec::with_capacity(layers);
    let mut masks = dropping.then(|| Vec::with_capacity(layers));

    let mut h = x.clone();
    for (k, weight) in params.weights().iter().enumerate() {
        let input = if dropping {
            let (dropped, mask) = apply_dropout(&h, keep, rng);
            masks.as_mut().expect("dropping implies mask storage").push(mask);
            dropped
        } else {
            h
        };
        let z = layer_forward(op, &input, weight, false)?;
        h = if k + 1 < layers { relu(&z) } else { z.clone() };
        inputs.push(input);
        preacts.push(z);
    }

    Ok((h, ForwardTrace { inputs, preacts, masks, keep }))
}

/// Forward pass in eval mode without hyperparameters or RNG plumbing.
pub fn forward_eval(
    op: &SparseMatrix,
    x: &DenseMatrix,
    params: &ModelParams,
) -> Result<DenseMatrix, ModelError> {
    let layers = params.num_layers();
    let mut h = x.clone();
    for (k, weight) in params.weights().iter().enumerate() {
        h = layer_forward(op, &h, weight, k + 1 < layers)?;
    }
    Ok(h)
}

/// Gradients of the masked loss plus L2 weight decay for every layer.
///
/// `grad_logits` is the loss gradient with respect to the final
/// pre-activation (as produced by [`cross_entropy`]); the returned
/// vector holds `dL/dW_k + weight_decay * W_k` in layer order. The
/// derivation unrolls `Z_k = op * I_k * W_k`:
/// `dW_k = I_k^T (op^T dZ_k)` and `dI_k = (op^T dZ_k) W_k^T`, followed
/// by the dropout scaling and the ReLU gate to reach `dZ_(k-1)`.
pub fn backward(
    trace: &ForwardTrace,
    grad_logits: &DenseMatrix,
    op: &SparseMatrix,
    params: &ModelParams,
    weight_decay: f64,
) -> Result<Vec<DenseMatrix>, ModelError> {
    let layers = params.num_layers();
    if trace.inputs.len() != layers || trace.preacts.len() != layers {
        return Err(ModelError::StaleTrace { what: "layer count differs" });
    }
    for (k, weight) in params.weights().iter().enumerate() {
        if trace.inputs[k].cols() != weight.rows() {
            return Err(ModelError::StaleTrace { what: "input width differs" });
        }
        if trace.preacts[k].cols() != weight.cols() {
            return Err(ModelError::StaleTrace { what: "preactivation width differs" });
        }
    }
    let last = &trace.preacts[layers - 1];
    if grad_logits.rows() != last.rows() || grad_logits.cols() != last.cols() {
        return Err(ModelError::StaleTrace { what: "logit gradient shape differs" });
    }
    if let Some(masks) = &trace.masks {
        if masks.len() != layers {
            return Err(ModelError::StaleTrace { what: "dropout mask count differs" });
        }
    }

    let mut grads: Vec<DenseMatrix> = Vec::with_capacity(layers);
    let mut delta = grad_logits.clone();
    for k in (0..layers).rev() {
        // Propagate through the operator once: G = op^T * dZ_k.
        let g = op.transpose_mul_dense(&delta);
        let mut grad_w = trace.inputs[k].transpose_matmul(&g);
        grad_w.add_scaled(&params.weights()[k], weight_decay);

        if k > 0 {
            // dI_k = G * W_k^T, then undo dropout and gate through ReLU.
            let mut d_hidden = g.matmul(&params.weights()[k].transpose());
            if let Some(masks) = &trace.masks {
                let scale = 1.0 / trace.keep;
                for (v, &kept) in d_hidden.as_mut_slice().iter_mut().zip(&masks[k]) {
                    *v = if kept { *v * scale } else { 0.0 };
                }
            }
            let gate = &trace.preacts[k - 1];
            for (v, &z) in d_hidden.as_mut_slice().iter_mut().zip(gate.as_slice()) {
                if z <= 0.0 {
                    *v = 0.0;
                }
            }
            delta = d_hidden;
        }
        grads.push(grad_w);
    }
    grads.reverse();
    Ok(grads)
}

/// Optimizer state: Adam moment estimates, or nothing for SGD.
#[derive(Clone, Debug)]
pub struct OptimizerState {
    kind: OptimizerKind,
    first_moment: Vec<DenseMatrix>,
    second_moment: Vec<DenseMatrix>,
    beta1_pow: f64,
    beta2_pow: f64,
}

/// Adam moment decay and stabilization constants.
const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl OptimizerState {
    /// Fresh state shaped like `params`.
    pub fn new(kind: OptimizerKind, params: &ModelParams) -> Self {
        let zeros = |p: &ModelParams| {
            p.weights()
                .iter()
                .map(|w| DenseMatrix::zeros(w.rows(), w.cols()))
                .collect::<Vec<_>>()
        };
        Self {
            kind,
            first_moment: zeros(params),
            second_moment: zeros(params),
            beta1_pow: 1.0,
            beta2_pow: 1.0,
        }
    }

    /// Which optimizer this state belongs to.
    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }
}

/// Applies one optimizer step in place.
///
/// Adam uses the textbook bias-corrected update
/// `w -= lr * m_hat / (sqrt(v_hat) + eps)`; SGD is `w -= lr * g`.
///
/// # Panics
/// Panics if `grads` or `state` are not shaped like `params`.
pub fn optimizer_step(
    params: &mut ModelParams,
    grads: &[DenseMatrix],
    state: &mut OptimizerState,
    learning_rate: f64,
) {
    assert_eq!(grads.len(), params.num_layers(), "gradient count mismatch");
    assert_eq!(state.first_moment.len(), params.num_layers(), "state shape mismatch");
    match state.kind {
        OptimizerKind::Sgd => {
            for (w, g) in params.weights_mut().iter_mut().zip(grads) {
                w.add_scaled(g, -learning_rate);
            }
        }
        OptimizerKind::Adam => {
            state.beta1_pow *= ADAM_BETA1;
            state.beta2_pow *= ADAM_BETA2;
            for ((w, g), (m, v)) in params
                .weights_mut()
                .iter_mut()
                .zip(grads)
                .zip(state.first_moment.iter_mut().zip(&mut state.second_moment))
            {
                assert_eq!((w.rows(), w.cols()), (g.rows(), g.cols()), "gradient shape");
                let (ws, gs) = (w.as_mut_slice(), g.as_slice());
                let (ms, vs) = (m.as_mut_slice(), v.as_mut_slice());
                for i in 0..ws.len() {
                    ms[i] = ADAM_BETA1 * ms[i] + (1.0 - ADAM_BETA1) * gs[i];
                    vs[i] = ADAM_BETA2 * vs[i] + (1.0 - ADAM_BETA2) * gs[i] * gs[i];
                    let m_hat = ms[i] / (1.0 - state.beta1_pow);
                    let v_hat = vs[i] / (1.0 - state.beta2_pow);
                    ws[i] -= learning_rate * m_hat / (libm::sqrt(v_hat) + ADAM_EPS);
                }
            }
        }
    }
}
