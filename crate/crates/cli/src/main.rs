//! `fracollapse`: ground states, threshold classification, simulation and
//! blow-up analysis driven by INI configuration files.

mod commands;
mod config;
mod error;
mod manifest;
mod plot;
mod pool;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Context;

#[derive(Parser)]
#[command(name = "fracollapse", version, about = "Fractional NLS collapse toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (INI).
    #[arg(long, global = true, default_value = "fracollapse.ini")]
    config: PathBuf,

    /// Worker threads for sweeps over several [model] sections.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Output directory; FRACOLLAPSE_OUT takes precedence.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for ground states and write them with their certificates.
    GroundState,
    /// Classify initial data against the blow-up / global-existence thresholds.
    Classify {
        /// Snapshot file with the data; defaults to the [initial] section.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Evolve initial data and record diagnostics, snapshots and plots.
    Simulate,
    /// Concentration, limiting-profile and rate-fit analysis of a finished run.
    Analyze {
        /// Manifest of the run; defaults to <out>/manifest.txt.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = std::env::var_os("FRACOLLAPSE_OUT")
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .or(cli.out)
        .unwrap_or_else(|| PathBuf::from("fracollapse-out"));
    let ctx = Context {
        config: cli.config,
        out,
        jobs: cli.jobs,
    };
    let result = match &cli.command {
        Command::GroundState => commands::ground_state(&ctx),
        Command::Classify { data } => commands::classify(&ctx, data.as_deref()),
        Command::Simulate => commands::simulate(&ctx),
        Command::Analyze { manifest } => commands::analyze(&ctx, manifest.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
