//! `evgraph`: batch runner for the graph-filter benchmarks.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on configuration or
//! usage errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "evgraph", version, about = "Edge-variant graph filter benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (overrides the config; 0 = logical cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Validate the configuration, print resolved settings, write nothing.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Source-localization benchmark on stochastic block models.
    SourceLoc(RunArgs),
    /// Authorship attribution over word adjacency networks.
    Author {
        /// Corpus root: one text file per excerpt under <author>/ dirs.
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Finite-difference gradient checks across the five filter families.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Largest admissible relative error.
        #[arg(long, default_value_t = 1e-5)]
        tolerance: f64,
    },
    /// Spectral response of an archived filter on a graph.
    SpectralResponse {
        /// Graph in the text edge-list format.
        #[arg(long)]
        graph: PathBuf,
        /// Filter parameter archive (JSON).
        #[arg(long)]
        filter: PathBuf,
        /// Output directory; created if missing.
        #[arg(long)]
        out: PathBuf,
    },
}

/// Failures split by exit code.
pub enum CliError {
    /// Configuration or usage problem: exit 2.
    Config(String),
    /// Runtime failure: exit 1.
    Runtime(String),
}

impl CliError {
    fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    fn runtime(err: evgraph_core::Error) -> Self {
        CliError::Runtime(err.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::SourceLoc(args) => commands::source_loc::run(&args),
        Command::Author { corpus, run } => commands::author::run(&corpus, &run),
        Command::Gradcheck { seed, tolerance } => commands::gradcheck::run(seed, tolerance),
        Command::SpectralResponse { graph, filter, out } => {
            commands::spectral_response::run(&graph, &filter, &out)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
    }
}
