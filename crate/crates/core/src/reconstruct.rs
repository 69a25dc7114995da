//! Connectivity reconstruction from walk co-occurrences.
//!
//! Walks are distilled into a weight matrix whose entry (v, w) sums a
//! geometric decay `alpha^(k-1)` over every time a walk rooted at `v`
//! reaches `w` at position `k+1`; nodes that co-occur often and close
//! together in walks end up strongly connected. That matrix is blended
//! into the adjacency as `A + lambda * W` (optionally after averaging
//! `W` with its transpose) and the blend is normalized symmetrically
//! with implicit self-loops, yielding the propagation operator the
//! network trains on.

use alloc::vec::Vec;
use core::fmt;

use crate::graph::Graph;
use crate::sparse::{SparseError, SparseMatrix};
use crate::walk::WalkSet;

/// Parameters of the reconstruction stage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReconConfig {
    /// Per-step decay of walk contributions; must lie strictly in (0, 1).
    pub alpha: f64,
    /// Weight of the walk matrix in the blend; must be finite and >= 0.
    pub lambda: f64,
    /// Replace the walk matrix by its symmetric part before blending.
    pub symmetrize: bool,
}

impl ReconConfig {
    /// Validates parameter ranges.
    pub fn new(alpha: f64, lambda: f64, symmetrize: bool) -> Result<Self, ReconError> {
        let cfg = Self { alpha, lambda, symmetrize };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks parameter ranges without consuming the config.
    pub fn validate(&self) -> Result<(), ReconError> {
        if !self.alpha.is_finite() || self.alpha <= 0.0 || self.alpha >= 1.0 {
            return Err(ReconError::AlphaOutOfRange { alpha: self.alpha });
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(ReconError::InvalidLambda { lambda: self.lambda });
        }
        Ok(())
    }
}

/// Errors from the reconstruction stage.
#[derive(Clone, Debug, PartialEq)]
pub enum ReconError {
    /// Decay must lie strictly between 0 and 1.
    AlphaOutOfRange {
        /// Offending value.
        alpha: f64,
    },
    /// Blend weight must be finite and nonnegative.
    InvalidLambda {
        /// Offending value.
        lambda: f64,
    },
    /// Walk set and graph disagree on the node count.
    NodeCountMismatch {
        /// Nodes in the graph.
        graph: usize,
        /// Source nodes in the walk set.
        walks: usize,
    },
    /// Normalization requires nonnegative entries.
    NegativeEntry {
        /// Row of the offending entry.
        row: usize,
        /// Column of the offending entry.
        col: usize,
        /// The negative value.
        value: f64,
    },
    /// Underlying sparse arithmetic failed.
    Sparse(SparseError),
}

impl fmt::Display for ReconError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReconError::AlphaOutOfRange { alpha } => {
                write!(f, "alpha = {alpha} must lie strictly inside (0, 1)")
            }
            ReconError::InvalidLambda { lambda } => {
                write!(f, "lambda = {lambda} must be finite and nonnegative")
            }
            ReconError::NodeCountMismatch { graph, walks } => {
                write!(f, "walk set covers {walks} nodes but the graph has {graph}")
            }
            ReconError::NegativeEntry { row, col, value } => {
                write!(f, "cannot normalize negative entry {value} at ({row}, {col})")
            }
            ReconError::Sparse(e) => write!(f, "sparse arithmetic failed: {e}"),
        }
    }
}

impl From<SparseError> for ReconError {
    fn from(e: SparseError) -> Self {
        ReconError::Sparse(e)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ReconError {}

/// Accumulates the decayed co-occurrence matrix of a walk set.
///
/// Every walk rooted at `v` adds `alpha^(k-1)` to entry (v, w) for the
/// node `w` at walk position `k + 1` (zero-based index `k`), for
/// `k = 1..len`. Contributions sum across walks; the result is generally
/// asymmetric, and its diagonal is nonzero exactly for sources whose
/// walks return to them.
pub fn build_walk_matrix(walks: &WalkSet, alpha: f64) -> Result<SparseMatrix, ReconError> {
    if !alpha.is_finite() || alpha <= 0.0 || alpha >= 1.0 {
        return Err(ReconError::AlphaOutOfRange { alpha });
    }
    let mut triplets = Vec::new();
    for (source, walk) in walks.iter() {
        let mut weight = 1.0;
        for &node in &walk.nodes()[1..] {
            weight *= alpha;
            triplets.push((source, node, weight));
        }
    }
    Ok(SparseMatrix::from_triplets(walks.num_nodes(), triplets)?)
}

/// Blends adjacency and walk matrix into `A + lambda * W`.
///
/// With `symmetrize` set, `W` is first replaced by `(W + W^T) / 2`.
pub fn mix(
    adjacency: &SparseMatrix,
    walk_matrix: &SparseMatrix,
    lambda: f64,
    symmetrize: bool,
) -> Result<SparseMatrix, ReconError> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(ReconError::InvalidLambda { lambda });
    }
    let blended = if symmetrize {
        adjacency.add_scaled(&walk_matrix.symmetrized(), lambda)?
    } else {
        adjacency.add_scaled(walk_matrix, lambda)?
    };
    Ok(blended)
}

/// Symmetric normalization with implicit self-loops.
///
/// For nonnegative `M` this computes `D^(-1/2) (I + M) D^(-1/2)` with
/// `D_ii = 1 + sum_j M_ij`; the added identity keeps every degree
/// positive, so isolated rows normalize cleanly to a unit diagonal.
/// Symmetric input yields exactly symmetric output, and every entry of
/// the result lies in [0, 1].
pub fn sym_normalize(m: &SparseMatrix) -> Result<SparseMatrix, ReconError> {
    let n = m.dim();
    let mut degree = Vec::with_capacity(n);
    for r in 0..n {
        degree.push(1.0 + m.row_sum(r));
    }
    for (row, col, value) in m.entries() {
        if value < 0.0 {
            return Err(ReconError::NegativeEntry { row, col, value });
        }
    }
    // Scaling is linear, so each triplet can be divided by sqrt(d_r * d_c)
    // up front and merged afterwards; the diagonal picks up 1/d_i from the
    // implicit identity.
    let identity = (0..n).map(|i| (i, i, 1.0 / degree[i]));
    let scaled = m
        .entries()
        .map(|(r, c, v)| (r, c, v / libm::sqrt(degree[r] * degree[c])));
    Ok(SparseMatrix::from_triplets(n, identity.chain(scaled))?)
}

/// Full reconstruction: walk matrix, blend, then normalization.
pub fn reconstruct(
    graph: &Graph,
    walks: &WalkSet,
    cfg: &ReconConfig,
) -> Result<SparseMatrix, ReconError> {
    cfg.validate()?;
    if walks.num_nodes() != graph.num_nodes() {
        return Err(ReconError::NodeCountMismatch {
            graph: graph.num_nodes(),
            walks: walks.num_nodes(),
        });
    }
    let walk_matrix = build_walk_matrix(walks, cfg.alpha)?;
    let blended = mix(graph.adjacency(), &walk_matrix, cfg.lambda, cfg.symmetrize)?;
    sym_normalize(&blended)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::{generate_walks, Walk, WalkSet};
    use alloc::vec;
    use proptest::prelude::*;

    // Builds a walk set from explicit node sequences, one list per node.
    fn walk_set(per_node: Vec<Vec<Vec<usize>>>, max_len: usize) -> WalkSet {
        let t = per_node.first().map_or(0, Vec::len);
        let per_node = per_node
            .into_iter()
            .map(|walks| walks.into_iter().map(test_walk).collect())
            .collect();
        WalkSet::from_parts(per_node, t, max_len)
    }

    // Materializes an exact sequence as a Walk by walking a directed
    // graph whose out-degrees make the sequence the only possibility.
    fn test_walk(nodes: Vec<usize>) -> Walk {
        let n = nodes.iter().max().unwrap() + 1;
        let triplets: Vec<_> = nodes.windows(2).map(|p| (p[0], p[1], 1.0)).collect();
        let g =
            Graph::from_adjacency(SparseMatrix::from_triplets(n, triplets).unwrap(), true)
                .unwrap();
        let mut rng = crate::rng::stream(0, crate::rng::Stream::Walk, 0, 0);
        let w = crate::walk::random_walk(&g, nodes[0], nodes.len(), &mut rng);
        assert_eq!(w.nodes(), nodes, "graph did not force the requested walk");
        w
    }

    #[test]
    fn single_walk_weights_decay_geometrically() {
        // Walk c -> v1 -> v2 with alpha 0.8: first hop 0.8, second 0.64.
        let set = walk_set(vec![vec![vec![0, 1, 2]], vec![vec![1]], vec![vec![2]]], 3);
        let m = build_walk_matrix(&set, 0.8).unwrap();
        assert_eq!(m.get(0, 1), 0.8);
        assert_eq!(m.get(0, 2), 0.8 * 0.8);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn contributions_accumulate_across_walks() {
        let set = walk_set(
            vec![vec![vec![0, 1], vec![0, 1]], vec![vec![1, 0], vec![1]]],
            2,
        );
        let m = build_walk_matrix(&set, 0.5).unwrap();
        assert_eq!(m.get(0, 1), 1.0); // 0.5 + 0.5
        assert_eq!(m.get(1, 0), 0.5);
    }

    #[test]
    fn returning_walk_hits_the_diagonal() {
        let set = walk_set(vec![vec![vec![0, 1, 0]], vec![vec![1]]], 3);
        let m = build_walk_matrix(&set, 0.5).unwrap();
        assert_eq!(m.get(0, 1), 0.5);
        assert_eq!(m.get(0, 0), 0.25);
    }

    #[test]
    fn alpha_must_be_strictly_inside_unit_interval() {
        let set = walk_set(vec![vec![vec![0]]], 1);
        for alpha in [0.0, 1.0, 1.5, -0.1, f64::NAN] {
            assert!(matches!(
                build_walk_matrix(&set, alpha),
                Err(ReconError::AlphaOutOfRange { .. })
            ));
        }
    }

    #[test]
    fn mix_blends_and_symmetrizes() {
        // Undirected edge (0, 1); walk weight 0.8 on (0, 1) only. After
        // symmetrization both directions carry 0.4, so the blend puts
        // 1 + 0.9 * 0.4 = 1.36 on both.
        let a = SparseMatrix::from_triplets(2, [(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let w = SparseMatrix::from_triplets(2, [(0, 1, 0.8)]).unwrap();
        let mixed = mix(&a, &w, 0.9, true).unwrap();
        assert!((mixed.get(0, 1) - 1.36).abs() < 1e-15);
        assert!((mixed.get(1, 0) - 1.36).abs() < 1e-15);

        let unsym = mix(&a, &w, 0.9, false).unwrap();
        assert!((unsym.get(0, 1) - 1.72).abs() < 1e-15);
        assert_eq!(unsym.get(1, 0), 1.0);
    }

    #[test]
    fn zero_lambda_keeps_plain_adjacency() {
        let a = SparseMatrix::from_triplets(2, [(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let w = SparseMatrix::from_triplets(2, [(0, 1, 0.8), (1, 1, 0.2)]).unwrap();
        assert_eq!(mix(&a, &w, 0.0, true).unwrap(), a);
    }

    #[test]
    fn normalize_handles_isolated_nodes() {
        // Node 2 is isolated: its degree is the implicit self-loop alone,
        // so its row is exactly [0, 0, 1].
        let m = SparseMatrix::from_triplets(3, [(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let r = sym_normalize(&m).unwrap();
        assert_eq!(r.get(2, 2), 1.0);
        assert_eq!(r.get(0, 0), 0.5);
        assert_eq!(r.get(0, 1), 0.5);
        assert!(r.is_symmetric(0.0));
    }

    #[test]
    fn normalize_rejects_negative_entries() {
        let m = SparseMatrix::from_triplets(2, [(0, 1, -1.0)]).unwrap();
        assert_eq!(
            sym_normalize(&m).unwrap_err(),
            ReconError::NegativeEntry { row: 0, col: 1, value: -1.0 }
        );
    }

    #[test]
    fn ablation_paths_coincide() {
        // lambda = 0 with real walks and T = 0 with no walks must produce
        // the same operator.
        let g = crate::sbm::generate(&crate::sbm::SbmConfig {
            nodes_per_block: 10,
            blocks: 2,
            p_in: 0.6,
            p_out: 0.05,
            feature_noise: 0.0,
            seed: 3,
        })
        .unwrap();
        let walks = generate_walks(&g, 4, 5, 11);
        let no_walks = generate_walks(&g, 0, 5, 11);
        let zero_lambda =
            reconstruct(&g, &walks, &ReconConfig::new(0.8, 0.0, true).unwrap()).unwrap();
        let zero_t =
            reconstruct(&g, &no_walks, &ReconConfig::new(0.8, 0.9, true).unwrap()).unwrap();
        assert_eq!(zero_lambda, zero_t);
        // Both reduce to the plain normalized adjacency.
        assert_eq!(zero_lambda, sym_normalize(g.adjacency()).unwrap());
    }

    fn random_graph(n: usize, edges: &[(usize, usize)]) -> Graph {
        let triplets: Vec<_> = edges
            .iter()
            .filter(|(u, v)| u != v)
            .flat_map(|&(u, v)| [(u % n, v % n, 1.0), (v % n, u % n, 1.0)])
            .filter(|(u, v, _)| u != v)
            .collect();
        Graph::from_adjacency(SparseMatrix::from_triplets(n, triplets).unwrap(), false).unwrap()
    }

    proptest! {
        // Without symmetrization each root contributes at most T*(L-1)
        // entries beyond the adjacency, and normalization adds the
        // diagonal; this bound is structural, not statistical.
        #[test]
        fn reconstructed_nnz_is_bounded(
            n in 1usize..40,
            edges in proptest::collection::vec((0usize..40, 0usize..40), 0..120),
            t in 0usize..6,
            l in 1usize..7,
            seed in 0u64..500,
        ) {
            let g = random_graph(n, &edges);
            let walks = generate_walks(&g, t, l, seed);
            let cfg = ReconConfig::new(0.8, 0.9, false).unwrap();
            let recon = reconstruct(&g, &walks, &cfg).unwrap();
            let bound = g.adjacency().nnz() + n * t * l.saturating_sub(1) + n;
            prop_assert!(recon.nnz() <= bound,
                "nnz {} exceeds bound {}", recon.nnz(), bound);
        }

        // Normalization agrees with the dense textbook formula.
        #[test]
        fn normalization_matches_dense_oracle(
            n in 1usize..12,
            edges in proptest::collection::vec((0usize..12, 0usize..12, 0.0f64..4.0), 0..40),
        ) {
            let triplets: Vec<_> = edges
                .iter()
                .flat_map(|&(u, v, w)| [(u % n, v % n, w), (v % n, u % n, w)])
                .collect();
            let m = SparseMatrix::from_triplets(n, triplets).unwrap();
            let m = m.symmetrized();
            let r = sym_normalize(&m).unwrap();

            // Dense oracle: D^(-1/2) (I + M) D^(-1/2) elementwise.
            let dense = m.to_dense();
            for i in 0..n {
                let d_i = 1.0 + dense.row(i).iter().sum::<f64>();
                for j in 0..n {
                    let d_j = 1.0 + dense.row(j).iter().sum::<f64>();
                    let expect =
                        ((if i == j { 1.0 } else { 0.0 }) + dense.get(i, j)) / (d_i * d_j).sqrt();
                    prop_assert!((r.get(i, j) - expect).abs() <= 1e-14,
                        "entry ({i}, {j}): {} vs oracle {}", r.get(i, j), expect);
                    prop_assert!((0.0..=1.0).contains(&r.get(i, j)));
                }
            }
            prop_assert!(r.is_symmetric(0.0));
        }

        // Walk-matrix entries grow with alpha on a fixed walk set.
        #[test]
        fn walk_weights_are_monotone_in_alpha(
            n in 2usize..20,
            edges in proptest::collection::vec((0usize..20, 0usize..20), 1..40),
            seed in 0u64..100,
        ) {
            let g = random_graph(n, &edges);
            let walks = generate_walks(&g, 3, 5, seed);
            let low = build_walk_matrix(&walks, 0.4).unwrap();
            let high = build_walk_matrix(&walks, 0.7).unwrap();
            for (r, c, v) in low.entries() {
                prop_assert!(high.get(r, c) >= v);
            }
        }
    }

    #[test]
    fn normalized_spectrum_lies_in_unit_interval() {
        // Symmetric blends have operator norm at most 1: the normalized
        // matrix is similar to a row-stochastic one. Checked against an
        // independent eigensolver.
        let g = crate::sbm::generate(&crate::sbm::SbmConfig {
            nodes_per_block: 15,
            blocks: 2,
            p_in: 0.5,
            p_out: 0.1,
            feature_noise: 0.0,
            seed: 21,
        })
        .unwrap();
        for (t, l, seed) in [(0, 1, 5), (3, 4, 6), (8, 5, 7)] {
            let walks = generate_walks(&g, t, l, seed);
            let cfg = ReconConfig::new(0.8, 0.9, true).unwrap();
            let recon = reconstruct(&g, &walks, &cfg).unwrap();
            assert!(recon.is_symmetric(0.0));
            let n = recon.dim();
            let dense = nalgebra::DMatrix::from_fn(n, n, |i, j| recon.get(i, j));
            let eigen = dense.symmetric_eigen();
            for ev in eigen.eigenvalues.iter() {
                assert!(
                    (-1.0 - 1e-10..=1.0 + 1e-10).contains(ev),
                    "eigenvalue {ev} outside [-1, 1]"
                );
            }
        }
    }
}
