//! Subcommand implementations.
//!
//! Each command takes a config whose seed is already resolved, does its
//! file work, and returns the one-line summary for stdout. Warnings go
//! to stderr so stdout stays machine-readable.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use wgcn_core::graph::{Graph, Splits};
use wgcn_core::train::{self, TrainError, TrainOptions};
use wgcn_core::walk::{generate_walks_mode, walks_for_node, Walk, WalkSet};

use crate::checkpoint::{self, Checkpoint};
use crate::config::Config;
use crate::io;
use crate::report::RunReport;
use crate::CliError;

fn usage(msg: String) -> CliError {
    CliError::Usage(msg)
}

fn data(msg: String) -> CliError {
    CliError::Data(msg)
}

fn warn_dropped(count: usize) {
    if count > 0 {
        eprintln!("warning: dropped {count} self-loop(s) from the edge list");
    }
}

/// Loads the full dataset; labels and split may be omitted when the
/// command does not need supervision.
fn load_graph(cfg: &Config, need_supervision: bool) -> Result<Graph, CliError> {
    let mut missing = Vec::new();
    if cfg.edges.is_none() {
        missing.push("edges");
    }
    if cfg.features.is_none() {
        missing.push("features");
    }
    if need_supervision {
        if cfg.labels.is_none() {
            missing.push("labels");
        }
        if cfg.split.is_none() {
            missing.push("split");
        }
    }
    if !missing.is_empty() {
        return Err(usage(format!("missing config keys: {}", missing.join(", "))));
    }
    let edges = io::load_edges(Path::new(cfg.edges.as_ref().unwrap()), cfg.directed)?;
    warn_dropped(edges.self_loops_dropped);
    let n = edges.matrix.dim();
    let features = io::load_features(Path::new(cfg.features.as_ref().unwrap()), n)?;
    let labels = match &cfg.labels {
        Some(p) => io::load_labels(Path::new(p), n)?,
        None => vec![None; n],
    };
    let splits = match &cfg.split {
        Some(p) => io::load_split(Path::new(p), n)?,
        None => Splits { train: Vec::new(), val: Vec::new(), test: Vec::new() },
    };
    Graph::new(edges.matrix, cfg.directed, features, labels, splits)
        .map_err(|e| data(format!("dataset: {e}")))
}

/// Loads an edge list alone, for commands that ignore features.
fn load_adjacency(cfg: &Config) -> Result<Graph, CliError> {
    let Some(edges) = &cfg.edges else {
        return Err(usage("missing config keys: edges".into()));
    };
    let e = io::load_edges(Path::new(edges), cfg.directed)?;
    warn_dropped(e.self_loops_dropped);
    Graph::from_adjacency(e.matrix, cfg.directed).map_err(|e| data(format!("dataset: {e}")))
}

/// Generates the run's walks, on `jobs` threads when asked. Walk
/// streams are keyed by (seed, node, index), so the result is the same
/// for every thread count.
pub fn build_walks(graph: &Graph, opts: &TrainOptions, jobs: usize) -> Result<WalkSet, CliError> {
    if opts.walk.walk_length == 0 {
        return Err(usage("walk_length must be at least 1".into()));
    }
    match jobs {
        0 => Err(usage("--jobs must be at least 1".into())),
        1 => Ok(generate_walks_mode(
            graph,
            opts.walk.t_walks,
            opts.walk.walk_length,
            opts.seed,
            opts.walk.mode,
        )),
        _ => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| usage(format!("--jobs: {e}")))?;
            let per_node: Vec<Vec<Walk>> = pool.install(|| {
                (0..graph.num_nodes())
                    .into_par_iter()
                    .map(|v| {
                        walks_for_node(
                            graph,
                            v,
                            opts.walk.t_walks,
                            opts.walk.walk_length,
                            opts.seed,
                            opts.walk.mode,
                        )
                    })
                    .collect()
            });
            Ok(WalkSet::from_parts(
                per_node,
                opts.walk.t_walks,
                opts.walk.walk_length,
            ))
        }
    }
}

/// Trains a model; writes a report and checkpoint when asked.
pub fn train(
    cfg: Config,
    out: Option<&Path>,
    ckpt_path: Option<&Path>,
    jobs: usize,
) -> Result<String, CliError> {
    let started = Instant::now();
    let graph = load_graph(&cfg, true)?;
    let opts = cfg.train_options()?;
    let walks = build_walks(&graph, &opts, jobs)?;
    let (params, record) = train::train_with_walks(&graph, &opts, &walks)?;
    let report = RunReport::from_record(
        "train",
        cfg,
        &record,
        graph.num_features(),
        graph.num_classes(),
        started.elapsed().as_secs_f64(),
    );
    if let Some(p) = ckpt_path {
        let ckpt = Checkpoint { params, seed: record.seed, epoch: record.best_epoch };
        checkpoint::save(p, &ckpt)?;
    }
    if let Some(p) = out {
        report.write(p)?;
    }
    Ok(report.summary())
}

/// Rebuilds the operator a checkpoint was trained against: the config
/// supplies the walk parameters, the checkpoint supplies the seed.
fn replay_operator(
    graph: &Graph,
    cfg: &Config,
    seed: u64,
    jobs: usize,
) -> Result<(wgcn_core::SparseMatrix, wgcn_core::DenseMatrix), CliError> {
    let mut opts = cfg.train_options()?;
    opts.seed = seed;
    let walks = build_walks(graph, &opts, jobs)?;
    Ok(train::prepare_with_walks(graph, &opts, &walks)?)
}

/// Evaluates a checkpoint on the dataset's test split.
pub fn eval(
    mut cfg: Config,
    ckpt_path: &Path,
    out: Option<&Path>,
    jobs: usize,
) -> Result<String, CliError> {
    let started = Instant::now();
    let graph = load_graph(&cfg, true)?;
    if graph.splits().test.is_empty() {
        return Err(data("split has no test nodes".into()));
    }
    let ckpt = checkpoint::load(ckpt_path)?;
    cfg.seed = Some(ckpt.seed);

    let mut expected = vec![graph.num_features()];
    expected.extend_from_slice(&cfg.hidden_dims);
    expected.push(graph.num_classes());
    if ckpt.params.dims() != expected {
        return Err(data(format!(
            "checkpoint layer sizes {:?} do not match dataset and config {:?}",
            ckpt.params.dims(),
            expected
        )));
    }

    let (op, x) = replay_operator(&graph, &cfg, ckpt.seed, jobs)?;
    let acc = train::evaluate(&ckpt.params, &op, &x, graph.labels(), &graph.splits().test)
        .map_err(TrainError::Model)?;

    let report = RunReport {
        command: "eval".into(),
        config_hash: cfg.hash(),
        seed: ckpt.seed,
        num_nodes: graph.num_nodes(),
        num_features: graph.num_features(),
        num_classes: graph.num_classes(),
        nnz_adjacency: graph.adjacency().nnz(),
        nnz_reconstructed: op.nnz(),
        epochs: Vec::new(),
        best_epoch: ckpt.epoch,
        test_accuracy: Some(acc),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        config: cfg,
    };
    if let Some(p) = out {
        report.write(p)?;
    }
    Ok(report.summary())
}

/// Writes per-node output representations from a checkpoint.
pub fn embed(
    mut cfg: Config,
    ckpt_path: &Path,
    out: &Path,
    jobs: usize,
) -> Result<String, CliError> {
    let graph = load_graph(&cfg, false)?;
    let ckpt = checkpoint::load(ckpt_path)?;
    cfg.seed = Some(ckpt.seed);
    let in_dim = ckpt.params.dims()[0];
    if in_dim != graph.num_features() {
        return Err(data(format!(
            "checkpoint expects {in_dim} input features, dataset has {}",
            graph.num_features()
        )));
    }
    let (op, x) = replay_operator(&graph, &cfg, ckpt.seed, jobs)?;
    let reps = train::embed(&ckpt.params, &op, &x).map_err(TrainError::Model)?;
    io::write_embeddings(out, &reps)?;
    Ok(format!(
        "embed ok hash={} seed={} nodes={} dims={} out={}",
        cfg.hash(),
        ckpt.seed,
        reps.rows(),
        reps.cols(),
        out.display()
    ))
}

/// Generates walks and dumps them.
pub fn walk(cfg: Config, out: Option<&Path>, jobs: usize) -> Result<String, CliError> {
    let graph = load_adjacency(&cfg)?;
    let opts = cfg.train_options()?;
    let walks = build_walks(&graph, &opts, jobs)?;
    let count: usize = (0..graph.num_nodes()).map(|v| walks.walks(v).len()).sum();
    let steps: usize = walks.iter().map(|(_, w)| w.len()).sum();
    if let Some(p) = out {
        io::write_walks(p, &walks)?;
    }
    let mut s = format!(
        "walk ok hash={} seed={} nodes={} walks={count} steps={steps}",
        cfg.hash(),
        opts.seed,
        graph.num_nodes()
    );
    if let Some(p) = out {
        s.push_str(&format!(" out={}", p.display()));
    }
    Ok(s)
}

/// Builds the normalized propagation operator and dumps it.
pub fn reconstruct(cfg: Config, out: Option<&Path>, jobs: usize) -> Result<String, CliError> {
    let graph = load_adjacency(&cfg)?;
    let opts = cfg.train_options()?;
    let walks = build_walks(&graph, &opts, jobs)?;
    let (op, _) = train::prepare_with_walks(&graph, &opts, &walks)?;
    if let Some(p) = out {
        io::write_matrix(p, &op)?;
    }
    let mut s = format!(
        "reconstruct ok hash={} seed={} nodes={} nnz_adj={} nnz_op={}",
        cfg.hash(),
        opts.seed,
        graph.num_nodes(),
        graph.adjacency().nnz(),
        op.nnz()
    );
    if let Some(p) = out {
        s.push_str(&format!(" out={}", p.display()));
    }
    Ok(s)
}

/// Generates a block-model dataset directory with a ready-to-train
/// config.json pointing at the four TSV files.
pub fn sbm(cfg: Config, out: &Path) -> Result<String, CliError> {
    let graph = wgcn_core::sbm::generate(&cfg.sbm_config()).map_err(|e| usage(e.to_string()))?;
    std::fs::create_dir_all(out)
        .map_err(|e| data(format!("{}: {e}", out.display())))?;
    io::write_edges(&out.join("edges.tsv"), graph.adjacency(), false)?;
    io::write_features(&out.join("features.tsv"), graph.features())?;
    io::write_labels(&out.join("labels.tsv"), graph.labels())?;
    io::write_split(&out.join("split.tsv"), graph.splits())?;

    let written = Config {
        edges: Some("edges.tsv".into()),
        features: Some("features.tsv".into()),
        labels: Some("labels.tsv".into()),
        split: Some("split.tsv".into()),
        ..cfg
    };
    let mut text = serde_json::to_string_pretty(&written).expect("config serializes");
    text.push('\n');
    let cfg_path = out.join("config.json");
    std::fs::write(&cfg_path, text)
        .map_err(|e| data(format!("{}: {e}", cfg_path.display())))?;

    Ok(format!(
        "sbm ok hash={} seed={} nodes={} edges={} out={}",
        written.hash(),
        written.seed.expect("seed resolved"),
        graph.num_nodes(),
        graph.adjacency().nnz() / 2,
        out.display()
    ))
}
