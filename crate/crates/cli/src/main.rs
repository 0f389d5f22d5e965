use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use splitwave::EquationKind;
use splitwave_cli::commands::{self, CheckStep, ExperimentKind};
use splitwave_cli::config::RunConfig;
use splitwave_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "splitwave", version, about = "Time-splitting Fourier solver for weakly perturbed Schrodinger equations")]
struct Cli {
    /// Worker threads (falls back to SPLITWAVE_THREADS, then the core count).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the configured problem and write field snapshots.
    Simulate(RunArgs),
    /// Run an experiment driver and write its CSV table.
    Experiment {
        #[arg(value_enum)]
        kind: ExperimentKind,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Compute reference snapshots on the configured fine grid.
    Reference(RunArgs),
    /// Report admissibility of a step under both step-size rules.
    CheckStep {
        #[arg(long, allow_negative_numbers = true)]
        tau: f64,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 0.5)]
        tau0: f64,
        #[arg(long, default_value_t = 1.0)]
        nu3: f64,
        #[arg(long, default_value_t = 1.0)]
        mu1: f64,
        #[arg(long, value_enum, default_value_t = Eq::Linear)]
        equation: Eq,
        /// Also print the nearest step that passes the diophantine rule.
        #[arg(long)]
        suggest: bool,
        /// Search radius for --suggest (default: tau / 10).
        #[arg(long)]
        radius: Option<f64>,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Eq {
    Linear,
    Nlse,
}

fn init_threads(flag: Option<usize>) -> CliResult<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("SPLITWAVE_THREADS") {
            Ok(v) => Some(
                v.trim()
                    .parse()
                    .map_err(|_| CliError::config(format!("SPLITWAVE_THREADS must be a count, got '{v}'")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::config("thread count must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<i32> {
    init_threads(cli.threads)?;
    match cli.command {
        Command::Simulate(a) => {
            let cfg = RunConfig::load(&a.config)?;
            commands::simulate(&cfg, &cfg.out_dir(a.out.as_deref()))?;
        }
        Command::Experiment { kind, run } => {
            let cfg = RunConfig::load(&run.config)?;
            commands::experiment(kind, &cfg, &cfg.out_dir(run.out.as_deref()))?;
        }
        Command::Reference(a) => {
            let cfg = RunConfig::load(&a.config)?;
            commands::reference(&cfg, &cfg.out_dir(a.out.as_deref()))?;
        }
        Command::CheckStep {
            tau,
            alpha,
            tau0,
            nu3,
            mu1,
            equation,
            suggest,
            radius,
        } => {
            let equation = match equation {
                Eq::Linear => EquationKind::Linear,
                Eq::Nlse => EquationKind::Nlse,
            };
            let (lines, code) = commands::check_step(&CheckStep {
                tau,
                alpha,
                tau0,
                nu3,
                mu1,
                equation,
                suggest,
                radius,
            })?;
            for l in lines {
                println!("{l}");
            }
            return Ok(code);
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
