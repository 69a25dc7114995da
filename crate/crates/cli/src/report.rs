//! JSON run reports.
//!
//! A report echoes the fully resolved config (seed included), so
//! feeding `report.config` back through `--config` re-executes the run
//! exactly; `wall_clock_seconds` is the only field that varies between
//! identical runs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use wgcn_core::train::TrainRecord;

use crate::config::Config;
use crate::io::DataError;

/// One epoch's statistics, mirroring the core pipeline's.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    /// Zero-based epoch index.
    pub epoch: usize,
    /// Masked training loss before the update.
    pub train_loss: f64,
    /// Validation loss after the update, when a validation mask exists.
    pub val_loss: Option<f64>,
    /// Validation accuracy after the update.
    pub val_accuracy: Option<f64>,
}

/// Everything a run produced, plus the config to reproduce it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Subcommand that produced the report.
    pub command: String,
    /// Fully resolved configuration of the run.
    pub config: Config,
    /// Short hash of `config`.
    pub config_hash: String,
    /// Seed the run used.
    pub seed: u64,
    /// Node count of the graph.
    pub num_nodes: usize,
    /// Feature width of the graph.
    pub num_features: usize,
    /// Number of classes (highest label plus one).
    pub num_classes: usize,
    /// Stored nonzeros of the input adjacency.
    pub nnz_adjacency: usize,
    /// Stored nonzeros of the reconstructed operator.
    pub nnz_reconstructed: usize,
    /// Per-epoch statistics; empty for evaluation-only runs.
    pub epochs: Vec<EpochRow>,
    /// Epoch whose parameters were kept.
    pub best_epoch: Option<usize>,
    /// Accuracy on the test split.
    pub test_accuracy: Option<f64>,
    /// Wall-clock duration of the pipeline stages.
    pub wall_clock_seconds: f64,
}

impl RunReport {
    /// Folds a training record into a report.
    pub fn from_record(
        command: &str,
        config: Config,
        record: &TrainRecord,
        num_features: usize,
        num_classes: usize,
        wall_clock_seconds: f64,
    ) -> Self {
        let config_hash = config.hash();
        Self {
            command: command.into(),
            seed: record.seed,
            config,
            config_hash,
            num_nodes: record.num_nodes,
            num_features,
            num_classes,
            nnz_adjacency: record.nnz_adjacency,
            nnz_reconstructed: record.nnz_reconstructed,
            epochs: record
                .epochs
                .iter()
                .map(|e| EpochRow {
                    epoch: e.epoch,
                    train_loss: e.train_loss,
                    val_loss: e.val_loss,
                    val_accuracy: e.val_accuracy,
                })
                .collect(),
            best_epoch: record.best_epoch,
            test_accuracy: record.test_accuracy,
            wall_clock_seconds,
        }
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Writes the report to `path`.
    pub fn write(&self, path: &Path) -> Result<(), DataError> {
        std::fs::write(path, self.to_json()).map_err(|e| DataError {
            path: path.display().to_string(),
            line: None,
            message: e.to_string(),
        })
    }

    /// One-line stdout summary of the run.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "{} ok hash={} seed={} nodes={} nnz_adj={} nnz_op={}",
            self.command,
            self.config_hash,
            self.seed,
            self.num_nodes,
            self.nnz_adjacency,
            self.nnz_reconstructed
        );
        if !self.epochs.is_empty() {
            s.push_str(&format!(" epochs={}", self.epochs.len()));
        }
        if let Some(b) = self.best_epoch {
            s.push_str(&format!(" best={b}"));
        }
        if let Some(a) = self.test_accuracy {
            s.push_str(&format!(" test_acc={a:.4}"));
        }
        s.push_str(&format!(" wall={:.2}s", self.wall_clock_seconds));
        s
    }
}
