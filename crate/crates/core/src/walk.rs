//! Random-walk generation with per-node deterministic streams.
//!
//! Walks follow out-edges uniformly at random. Each (node, walk index)
//! pair draws from its own seeded stream, so a walk set is a pure
//! function of (graph, T, L, seed) no matter how node iteration is
//! ordered or parallelized by the caller.

use alloc::vec::Vec;

use rand::Rng;

use crate::graph::Graph;
use crate::rng::{stream, Stream};

/// A single walk: the visited nodes in order, starting at the source.
#[derive(Clone, Debug, PartialEq)]
pub struct Walk {
    nodes: Vec<usize>,
}

impl Walk {
    /// Visited nodes in order; the first entry is the source.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Number of nodes in the walk (source included).
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// True only for walks with no nodes, which are never produced here.
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The walk's starting node.
    pub fn source(&self) -> usize {
        self.nodes[0]
    }
}

/// How individual walks are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WalkMode {
    /// Fixed-length walks; revisits allowed.
    #[default]
    Plain,
    /// Retries each walk (within a 4*L total step budget) until one
    /// visits only distinct nodes, keeping the most-distinct attempt
    /// seen when the budget runs out. Attempts stay ordinary walks, so
    /// every kept walk still satisfies the edge-validity and length
    /// invariants.
    DistinctResample,
}

/// All walks for a graph: `T` walks per node, indexed by source node.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkSet {
    per_node: Vec<Vec<Walk>>,
    t_walks: usize,
    max_len: usize,
}

impl WalkSet {
    /// Number of source nodes (equals the graph's node count).
    pub fn num_nodes(&self) -> usize {
        self.per_node.len()
    }

    /// Walks started per node.
    pub fn t_walks(&self) -> usize {
        self.t_walks
    }

    /// Maximum walk length in nodes.
    pub fn max_len(&self) -> usize {
        self.max_len
    }

    /// The walks rooted at `node`.
    pub fn walks(&self, node: usize) -> &[Walk] {
        &self.per_node[node]
    }

    /// Iterates every walk with its source node.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &Walk)> {
        self.per_node
            .iter()
            .enumerate()
            .flat_map(|(v, walks)| walks.iter().map(move |w| (v, w)))
    }

    /// Reassembles a walk set from per-node pieces.
    ///
    /// # Panics
    /// Panics if any piece holds a different number of walks than
    /// `t_walks` or contains a walk longer than `max_len`.
    pub fn from_parts(per_node: Vec<Vec<Walk>>, t_walks: usize, max_len: usize) -> Self {
        for walks in &per_node {
            assert_eq!(walks.len(), t_walks, "uneven walk count per node");
            assert!(walks.iter().all(|w| w.len() <= max_len), "walk exceeds max length");
        }
        Self { per_node, t_walks, max_len }
    }
}

/// One uniform random walk of at most `max_len` nodes from `start`.
///
/// The walk ends early only when it reaches a node with no out-edges.
///
/// # Panics
/// Panics if `start` is out of range or `max_len` is zero.
pub fn random_walk(graph: &Graph, start: usize, max_len: usize, rng: &mut impl Rng) -> Walk {
    assert!(start < graph.num_nodes(), "walk start out of range");
    assert!(max_len >= 1, "walks contain at least the source");
    let mut nodes = Vec::with_capacity(max_len);
    nodes.push(start);
    let mut current = start;
    while nodes.len() < max_len {
        let (neighbors, _) = graph.out_neighbors(current);
        if neighbors.is_empty() {
            break;
        }
        current = neighbors[rng.gen_range(0..neighbors.len())];
        nodes.push(current);
    }
    Walk { nodes }
}

fn distinct_beyond_source(walk: &Walk) -> usize {
    let source = walk.source();
    let mut seen: Vec<usize> = Vec::new();
    for &v in &walk.nodes()[1..] {
        if v != source && !seen.contains(&v) {
            seen.push(v);
        }
    }
    seen.len()
}

/// Like [`random_walk`], but resamples toward all-distinct walks.
///
/// Draws whole walks until one has `max_len - 1` distinct non-source
/// nodes or a total budget of `4 * max_len` steps is spent, then returns
/// the attempt with the most distinct nodes (the earliest such attempt
/// on ties).
pub fn random_walk_distinct(
    graph: &Graph,
    start: usize,
    max_len: usize,
    rng: &mut impl Rng,
) -> Walk {
    let budget = 4 * max_len;
    let mut spent = 0usize;
    let mut best: Option<(usize, Walk)> = None;
    loop {
        let walk = random_walk(graph, start, max_len, rng);
        let steps = walk.len() - 1;
        let distinct = distinct_beyond_source(&walk);
        if best.as_ref().map_or(true, |(d, _)| distinct > *d) {
            best = Some((distinct, walk));
        }
        // A stalled walk (no out-edges) can never improve; stop retrying.
        if distinct + 1 >= max_len || steps == 0 {
            break;
        }
        spent += steps;
        if spent >= budget {
            break;
        }
    }
    best.expect("at least one attempt is always made").1
}

/// The `t_walks` walks rooted at `node`, each from its own stream.
///
/// This is the parallelization unit: callers may invoke it for any
/// subset of nodes in any order and still reproduce the output of
/// [`generate_walks`].
pub fn walks_for_node(
    graph: &Graph,
    node: usize,
    t_walks: usize,
    max_len: usize,
    seed: u64,
    mode: WalkMode,
) -> Vec<Walk> {
    (0..t_walks)
        .map(|t| {
            let mut rng = stream(seed, Stream::Walk, node as u64, t as u64);
            match mode {
                WalkMode::Plain => random_walk(graph, node, max_len, &mut rng),
                WalkMode::DistinctResample => {
                    random_walk_distinct(graph, node, max_len, &mut rng)
                }
            }
        })
        .collect()
}

/// Generates `t_walks` plain walks of at most `max_len` nodes per node.
pub fn generate_walks(graph: &Graph, t_walks: usize, max_len: usize, seed: u64) -> WalkSet {
    generate_walks_mode(graph, t_walks, max_len, seed, WalkMode::Plain)
}

/// [`generate_walks`] with an explicit walk mode.
pub fn generate_walks_mode(
    graph: &Graph,
    t_walks: usize,
    max_len: usize,
    seed: u64,
    mode: WalkMode,
) -> WalkSet {
    assert!(max_len >= 1, "walks contain at least the source");
    let per_node = (0..graph.num_nodes())
        .map(|v| walks_for_node(graph, v, t_walks, max_len, seed, mode))
        .collect();
    WalkSet { per_node, t_walks, max_len }
}
