//! The `wgcn` binary.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 unreadable
//! or malformed data, 3 numeric failure during training.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use wgcn_cli::{commands, config, CliError};

#[derive(Parser)]
#[command(
    name = "wgcn",
    version,
    about = "Graph convolutional networks over walk-reconstructed connectivity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; built-in defaults apply when omitted.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one config key, e.g. --set alpha=0.6 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Where to write the command's artifact (report, dump, table, or
    /// dataset directory).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Checkpoint file to write (train) or read (eval, embed).
    #[arg(long, value_name = "PATH")]
    checkpoint: Option<PathBuf>,
    /// Worker threads for walk generation.
    #[arg(long, value_name = "N", default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on a TSV dataset.
    Train(RunArgs),
    /// Evaluate a checkpoint on the dataset's test split.
    Eval(RunArgs),
    /// Write per-node output representations from a checkpoint.
    Embed(RunArgs),
    /// Generate random walks and dump them.
    Walk(RunArgs),
    /// Build and dump the normalized propagation operator.
    Reconstruct(RunArgs),
    /// Generate a synthetic block-model dataset directory.
    Sbm(RunArgs),
}

fn required<'a>(
    value: Option<&'a Path>,
    flag: &str,
    command: &str,
) -> Result<&'a Path, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("{command} requires {flag}")))
}

fn run(cli: &Cli) -> Result<String, CliError> {
    let args = match &cli.command {
        Command::Train(a)
        | Command::Eval(a)
        | Command::Embed(a)
        | Command::Walk(a)
        | Command::Reconstruct(a)
        | Command::Sbm(a) => a,
    };
    let mut cfg = config::load(args.config.as_deref(), &args.set)?;
    cfg.resolve_seed()?;
    let out = args.out.as_deref();
    let ckpt = args.checkpoint.as_deref();
    match &cli.command {
        Command::Train(_) => commands::train(cfg, out, ckpt, args.jobs),
        Command::Eval(_) => {
            commands::eval(cfg, required(ckpt, "--checkpoint", "eval")?, out, args.jobs)
        }
        Command::Embed(_) => commands::embed(
            cfg,
            required(ckpt, "--checkpoint", "embed")?,
            required(out, "--out", "embed")?,
            args.jobs,
        ),
        Command::Walk(_) => commands::walk(cfg, out, args.jobs),
        Command::Reconstruct(_) => commands::reconstruct(cfg, out, args.jobs),
        Command::Sbm(_) => commands::sbm(cfg, required(out, "--out", "sbm")?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
