use std::path::PathBuf;
use std::process::ExitCode;

use bequation_cli::commands::{self, Options, Outcome, StudyKind, ERROR_EXIT};
use bequation_cli::error::CliResult;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bequation", version, about = "Pseudospectral b-equation solver")]
struct Cli {
    /// Worker threads; 1 gives bit-reproducible output.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Replace the seed of a random scenario.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the configured formulation(s).
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check an inertia operator against its symbol class.
    ValidateSymbol {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run both formulations and record their difference.
    Compare {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Step-halving and/or grid-doubling study.
    Convergence {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, value_enum, default_value_t = StudyKind::Temporal)]
        kind: StudyKind,
    },
}

fn dispatch(cli: Cli) -> CliResult<Outcome> {
    let opts = Options { seed_override: cli.seed_override };
    match cli.command {
        Command::Run { config, out } => commands::cmd_run(&config, out.as_deref(), &opts),
        Command::ValidateSymbol { config, out } => commands::cmd_validate_symbol(&config, Some(&out)),
        Command::Compare { config, out } => commands::cmd_compare(&config, out.as_deref(), &opts),
        Command::Convergence { config, out, levels, kind } => {
            commands::cmd_convergence(&config, out.as_deref(), levels, kind, &opts)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { ERROR_EXIT } else { 0 });
        }
    };
    if cli.threads == 0 {
        eprintln!("bequation: --threads must be at least 1");
        return ExitCode::from(ERROR_EXIT);
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("bequation: {e}");
        return ExitCode::from(ERROR_EXIT);
    }
    match dispatch(cli) {
        Ok(outcome) => ExitCode::from(outcome.exit_code()),
        Err(e) => {
            eprintln!("bequation: {e}");
            ExitCode::from(ERROR_EXIT)
        }
    }
}
