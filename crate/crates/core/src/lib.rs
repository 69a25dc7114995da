//! Core algorithms for walk-weighted graph convolutional training.
//!
//! The pipeline reconstructs a denser connectivity matrix from decayed
//! random-walk co-occurrences, mixes it with the original adjacency,
//! normalizes it symmetrically, and trains a dense GCN on top with
//! hand-derived gradients. Everything here is deterministic under a
//! caller-supplied seed and works without `std` (alloc is required);
//! file formats, configs, and the CLI live in the companion crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(missing_docs)]

extern crate alloc;

pub mod dense;
pub mod graph;
pub mod model;
pub mod reconstruct;
mod rng;
pub mod sbm;
pub mod sparse;
pub mod train;
pub mod walk;

pub use dense::DenseMatrix;
pub use graph::{Graph, GraphError, Splits};
pub use sparse::{SparseError, SparseMatrix};
