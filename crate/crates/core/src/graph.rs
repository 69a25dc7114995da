//! Graph storage: weighted adjacency plus per-node features, labels, and
//! train/validation/test splits.
//!
//! A `Graph` is validated once at construction and immutable afterwards,
//! so downstream stages can lean on its invariants (symmetry when
//! undirected, nonnegative weights, no self-loops, disjoint in-range
//! masks, labeled training nodes) without rechecking.

use alloc::vec::Vec;
use core::fmt;

use crate::dense::DenseMatrix;
use crate::sparse::SparseMatrix;

/// Violations of the graph invariants, detected at construction.
#[derive(Clone, Debug, PartialEq)]
pub enum GraphError {
    /// Feature matrix row count does not match the node count.
    FeatureRows {
        /// Nodes in the adjacency.
        nodes: usize,
        /// Rows in the feature matrix.
        rows: usize,
    },
    /// Label vector length does not match the node count.
    LabelLen {
        /// Nodes in the adjacency.
        nodes: usize,
        /// Entries in the label vector.
        len: usize,
    },
    /// An undirected graph's adjacency is not symmetric.
    Asymmetric,
    /// The adjacency stores a self-loop.
    SelfLoop {
        /// The looping node.
        node: usize,
    },
    /// An edge weight is negative.
    NegativeWeight {
        /// Source node.
        from: usize,
        /// Target node.
        to: usize,
        /// The offending weight.
        weight: f64,
    },
    /// A split mask references a node outside the graph.
    MaskOutOfRange {
        /// The offending node id.
        node: usize,
        /// Node count of the graph.
        nodes: usize,
    },
    /// A node appears in more than one split mask.
    MaskOverlap {
        /// The node assigned to two roles.
        node: usize,
    },
    /// A training node has no label.
    UnlabeledTrainNode {
        /// The unlabeled training node.
        node: usize,
    },
    /// A feature value is NaN or infinite.
    NonFiniteFeature {
        /// Row of the offending value.
        node: usize,
    },
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::FeatureRows { nodes, rows } => {
                write!(f, "feature matrix has {rows} rows for {nodes} nodes")
            }
            GraphError::LabelLen { nodes, len } => {
                write!(f, "label vector has {len} entries for {nodes} nodes")
            }
            GraphError::Asymmetric => write!(f, "undirected adjacency is not symmetric"),
            GraphError::SelfLoop { node } => write!(f, "self-loop stored at node {node}"),
            GraphError::NegativeWeight { from, to, weight } => {
                write!(f, "negative weight {weight} on edge ({from}, {to})")
            }
            GraphError::MaskOutOfRange { node, nodes } => {
                write!(f, "mask references node {node} in a {nodes}-node graph")
            }
            GraphError::MaskOverlap { node } => {
                write!(f, "node {node} appears in more than one split")
            }
            GraphError::UnlabeledTrainNode { node } => {
                write!(f, "training node {node} has no label")
            }
            GraphError::NonFiniteFeature { node } => {
                write!(f, "non-finite feature value at node {node}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GraphError {}

/// Train/validation/test node-index sets.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Splits {
    /// Labeled nodes the loss is computed on.
    pub train: Vec<usize>,
    /// Nodes used for model selection and early stopping.
    pub val: Vec<usize>,
    /// Held-out nodes used for final accuracy.
    pub test: Vec<usize>,
}

/// Immutable graph with adjacency, features, labels, and splits.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    adjacency: SparseMatrix,
    directed: bool,
    features: DenseMatrix,
    labels: Vec<Option<usize>>,
    splits: Splits,
}

impl Graph {
    /// Validates all invariants and assembles a graph.
    ///
    /// `adjacency` must hold nonnegative weights and no self-loops, and
    /// must be exactly symmetric when `directed` is false. Features need
    /// one row per node (zero columns is fine), labels one entry per
    /// node, and the three splits must be disjoint, in range, and have
    /// labels on every training node.
    pub fn new(
        adjacency: SparseMatrix,
        directed: bool,
        features: DenseMatrix,
        labels: Vec<Option<usize>>,
        mut splits: Splits,
    ) -> Result<Self, GraphError> {
        let n = adjacency.dim();
        if features.rows() != n {
            return Err(GraphError::FeatureRows { nodes: n, rows: features.rows() });
        }
        if labels.len() != n {
            return Err(GraphError::LabelLen { nodes: n, len: labels.len() });
        }
        for (r, c, v) in adjacency.entries() {
            if r == c {
                return Err(GraphError::SelfLoop { node: r });
            }
            if v < 0.0 {
                return Err(GraphError::NegativeWeight { from: r, to: c, weight: v });
            }
        }
        if !directed && !adjacency.is_symmetric(0.0) {
            return Err(GraphError::Asymmetric);
        }
        for node in 0..n {
            if features.row(node).iter().any(|v| !v.is_finite()) {
                return Err(GraphError::NonFiniteFeature { node });
            }
        }

        let mut role = alloc::vec![0u8; n];
        for (mask, bit) in [(&mut splits.train, 1u8), (&mut splits.val, 2), (&mut splits.test, 4)]
        {
            mask.sort_unstable();
            mask.dedup();
            for &node in mask.iter() {
                if node >= n {
                    return Err(GraphError::MaskOutOfRange { node, nodes: n });
                }
                if role[node] != 0 {
                    return Err(GraphError::MaskOverlap { node });
                }
                role[node] = bit;
            }
        }
        for &node in &splits.train {
            if labels[node].is_none() {
                return Err(GraphError::UnlabeledTrainNode { node });
            }
        }

        Ok(Self { adjacency, directed, features, labels, splits })
    }

    /// Graph with adjacency only: no features, labels, or splits.
    ///
    /// Enough for walk generation and reconstruction.
    pub fn from_adjacency(adjacency: SparseMatrix, directed: bool) -> Result<Self, GraphError> {
        let n = adjacency.dim();
        Self::new(
            adjacency,
            directed,
            DenseMatrix::zeros(n, 0),
            alloc::vec![None; n],
            Splits::default(),
        )
    }

    /// Number of nodes.
    pub fn num_nodes(&self) -> usize {
        self.adjacency.dim()
    }

    /// Width of the feature matrix.
    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    /// One past the largest label, or zero when nothing is labeled.
    pub fn num_classes(&self) -> usize {
        self.labels
            .iter()
            .flatten()
            .max()
            .map_or(0, |&c| c + 1)
    }

    /// The weighted adjacency matrix.
    pub fn adjacency(&self) -> &SparseMatrix {
        &self.adjacency
    }

    /// Whether edges are one-directional.
    pub fn directed(&self) -> bool {
        self.directed
    }

    /// Node feature matrix (one row per node).
    pub fn features(&self) -> &DenseMatrix {
        &self.features
    }

    /// Per-node class labels; `None` marks unlabeled nodes.
    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    /// The three split masks.
    pub fn splits(&self) -> &Splits {
        &self.splits
    }

    /// Out-neighbors of `node` with their edge weights.
    #[inline]
    pub fn out_neighbors(&self, node: usize) -> (&[usize], &[f64]) {
        self.adjacency.row(node)
    }

    /// Out-degree of `node` (stored edges, not weight sum).
    pub fn out_degree(&self, node: usize) -> usize {
        self.out_neighbors(node).0.len()
    }
}
