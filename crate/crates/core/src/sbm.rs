//! Stochastic block model generator for synthetic classification tasks.
//!
//! Produces an undirected graph with planted communities: dense edges
//! inside blocks, sparse edges across them, one-hot block features with
//! optional Gaussian noise, block ids as labels, and a per-block
//! 10%/10%/80% train/validation/test split. Fully deterministic under
//! the config seed.

use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::dense::DenseMatrix;
use crate::graph::{Graph, Splits};
use crate::rng::{stream, Stream};
use crate::sparse::SparseMatrix;

/// Parameters of the block model.
#[derive(Clone, Debug, PartialEq)]
pub struct SbmConfig {
    /// Nodes in each block.
    pub nodes_per_block: usize,
    /// Number of blocks (= number of classes).
    pub blocks: usize,
    /// Edge probability inside a block.
    pub p_in: f64,
    /// Edge probability across blocks; must stay below `p_in`.
    pub p_out: f64,
    /// Standard deviation of the Gaussian noise added to one-hot features.
    pub feature_noise: f64,
    /// Seed for edges, features, and splits.
    pub seed: u64,
}

/// Rejected block-model parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum SbmError {
    /// A probability was outside [0, 1].
    InvalidProbability {
        /// Parameter name.
        name: &'static str,
        /// Offending value.
        value: f64,
    },
    /// `p_out >= p_in` leaves no community structure to recover.
    NoCommunityStructure {
        /// Within-block probability.
        p_in: f64,
        /// Cross-block probability.
        p_out: f64,
    },
    /// Zero blocks or zero nodes per block.
    EmptyModel,
    /// Noise scale was negative or non-finite.
    InvalidNoise {
        /// Offending value.
        value: f64,
    },
}

impl fmt::Display for SbmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SbmError::InvalidProbability { name, value } => {
                write!(f, "{name} = {value} is not a probability in [0, 1]")
            }
            SbmError::NoCommunityStructure { p_in, p_out } => {
                write!(f, "p_out = {p_out} must be below p_in = {p_in}")
            }
            SbmError::EmptyModel => write!(f, "blocks and nodes_per_block must be positive"),
            SbmError::InvalidNoise { value } => {
                write!(f, "feature_noise = {value} must be finite and nonnegative")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SbmError {}

/// Generates a block-model graph from `cfg`.
pub fn generate(cfg: &SbmConfig) -> Result<Graph, SbmError> {
    for (name, value) in [("p_in", cfg.p_in), ("p_out", cfg.p_out)] {
        if !(0.0..=1.0).contains(&value) || !value.is_finite() {
            return Err(SbmError::InvalidProbability { name, value });
        }
    }
    if cfg.p_out >= cfg.p_in {
        return Err(SbmError::NoCommunityStructure { p_in: cfg.p_in, p_out: cfg.p_out });
    }
    if cfg.blocks == 0 || cfg.nodes_per_block == 0 {
        return Err(SbmError::EmptyModel);
    }
    if !cfg.feature_noise.is_finite() || cfg.feature_noise < 0.0 {
        return Err(SbmError::InvalidNoise { value: cfg.feature_noise });
    }

    let n = cfg.blocks * cfg.nodes_per_block;
    let block_of = |v: usize| v / cfg.nodes_per_block;

    // Edges: visit unordered pairs in a fixed order so the seed pins the
    // exact edge set, inserting both directions.
    let mut edge_rng = stream(cfg.seed, Stream::SbmEdges, 0, 0);
    let mut triplets = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if block_of(u) == block_of(v) { cfg.p_in } else { cfg.p_out };
            if p > 0.0 && edge_rng.gen_bool(p) {
                triplets.push((u, v, 1.0));
                triplets.push((v, u, 1.0));
            }
        }
    }
    let adjacency =
        SparseMatrix::from_triplets(n, triplets).expect("generated edges are in range");

    // Features: one-hot block membership, optionally perturbed.
    let mut features = DenseMatrix::zeros(n, cfg.blocks);
    let mut feature_rng = stream(cfg.seed, Stream::SbmFeatures, 0, 0);
    let noise = if cfg.feature_noise > 0.0 {
        Some(Normal::new(0.0, cfg.feature_noise).expect("validated noise scale"))
    } else {
        None
    };
    for v in 0..n {
        for c in 0..cfg.blocks {
            let base = if block_of(v) == c { 1.0 } else { 0.0 };
            let eps = noise.as_ref().map_or(0.0, |d| d.sample(&mut feature_rng));
            features.set(v, c, base + eps);
        }
    }

    let labels = (0..n).map(|v| Some(block_of(v))).collect();

    // Splits: a seeded shuffle per block, 10% train, 10% val, rest test.
    let mut splits = Splits::default();
    for b in 0..cfg.blocks {
        let mut members: Vec<usize> =
            (b * cfg.nodes_per_block..(b + 1) * cfg.nodes_per_block).collect();
        let mut mask_rng = stream(cfg.seed, Stream::SbmMasks, b as u64, 0);
        members.shuffle(&mut mask_rng);
        let size = members.len();
        let n_train = (size / 10).max(1).min(size);
        let n_val = (size / 10).max(1).min(size - n_train);
        splits.train.extend(&members[..n_train]);
        splits.val.extend(&members[n_train..n_train + n_val]);
        splits.test.extend(&members[n_train + n_val..]);
    }

    Ok(Graph::new(adjacency, false, features, labels, splits)
        .expect("generated graph satisfies construction invariants"))
}
