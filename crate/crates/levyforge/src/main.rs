use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use levyforge::config::{self, Command};
use levyforge::{run, Error};

/// Simulate Lévy paths, integrate against them, solve equations they
/// drive, and validate the results against closed-form targets.
#[derive(Parser)]
#[command(name = "levyforge", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate driver paths and dump them as CSV.
    Simulate(RunArgs),
    /// Compute a discrete stochastic integral of the driver paths.
    Integrate(RunArgs),
    /// Run a numerical scheme driven by the simulated paths.
    Solve(RunArgs),
    /// Run Monte Carlo checks and write a pass/fail report.
    Validate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Root seed; overrides the config value.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config value.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for path-parallel stages (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (expected, args) = match &cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Integrate(a) => (Command::Integrate, a),
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Validate(a) => (Command::Validate, a),
    };

    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read config {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let mut cfg = match config::parse_config(&text) {
        Ok(c) => c,
        Err(e @ Error::Json(_)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    if cfg.command != expected {
        eprintln!(
            "error: config error at `command`: config says `{}` but the `{}` subcommand was invoked",
            cfg.command.name(),
            expected.name()
        );
        return ExitCode::from(3);
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }

    let result = match args.workers {
        None => run::execute(&cfg),
        Some(w) => {
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build() {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: cannot build worker pool: {e}");
                    return ExitCode::from(1);
                }
            };
            pool.install(|| run::execute(&cfg))
        }
    };

    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
