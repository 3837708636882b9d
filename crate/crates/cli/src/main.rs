//! `mbdqc` command-line tool.
//!
//! Exit codes: 0 success, 1 IO error, 2 invalid config or violated contract,
//! 3 a check ran and failed.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mbdqc::bounds::DeltaConvention;
use mbdqc::protocol::BackendKind;

use commands::{BoundFlags, Context, Outcome};
use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "mbdqc", version, about = "Simulate, verify and bound magic-blind delegated quantum computation")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Number of trials; overrides the config.
    #[arg(long, global = true)]
    trials: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, env = "MBDQC_OUT", default_value = "mbdqc-out")]
    out: PathBuf,

    #[arg(long, global = true, value_enum)]
    backend: Option<BackendArg>,

    #[arg(long, global = true, value_enum, default_value = "range")]
    delta_convention: ConventionArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendArg {
    Auto,
    Stab,
    Dense,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConventionArg {
    /// Margin α − (w/s)·k.
    Range,
    /// Margin α − w/(s·k).
    Quotient,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run single sessions and tally their outputs.
    Simulate,
    /// Run the verified protocol and compare with the analytic bounds.
    Verify,
    /// Build the trap family, check coverage and merge compatible traps.
    Traps,
    /// Evaluate the security, correctness and robustness bounds.
    Bounds {
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long)]
        w: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        p_err: Option<f64>,
    },
    /// Exhaustive Pauli twirl check on a random state.
    TwirlCheck {
        #[arg(long, default_value_t = 2)]
        qubits: usize,
    },
    /// Compare server views across inputs sharing the Clifford structure.
    BlindnessCheck,
    /// Check that random server unitaries act as Pauli mixtures.
    ReductionCheck,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Verify => "verify",
            Command::Traps => "traps",
            Command::Bounds { .. } => "bounds",
            Command::TwirlCheck { .. } => "twirl-check",
            Command::BlindnessCheck => "blindness-check",
            Command::ReductionCheck => "reduction-check",
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let started = output::unix_now();
    let config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
            Some(config::parse_config(&text).map_err(CliError::Config)?)
        }
        None => None,
    };
    let ctx = Context {
        config,
        seed: cli.seed,
        trials: cli.trials,
        backend: cli.backend.map(|b| match b {
            BackendArg::Auto => BackendKind::Auto,
            BackendArg::Stab => BackendKind::Stabilizer,
            BackendArg::Dense => BackendKind::Dense,
        }),
        convention: match cli.delta_convention {
            ConventionArg::Range => DeltaConvention::Range,
            ConventionArg::Quotient => DeltaConvention::Quotient,
        },
    };
    let outcome: Outcome = match &cli.command {
        Command::Simulate => commands::simulate(&ctx)?,
        Command::Verify => commands::verify(&ctx)?,
        Command::Traps => commands::traps(&ctx)?,
        Command::Bounds { d, s, w, k, c, p_err } => {
            commands::bounds(&ctx, BoundFlags { d: *d, s: *s, w: *w, k: *k, c: *c, p_err: *p_err })?
        }
        Command::TwirlCheck { qubits } => commands::twirl_check(&ctx, *qubits)?,
        Command::BlindnessCheck => commands::blindness_check(&ctx)?,
        Command::ReductionCheck => commands::reduction_check(&ctx)?,
    };
    let written = outcome.bundle.write(&cli.out, cli.command.name(), started)?;
    print!("{}", outcome.report);
    for p in written {
        log::info!("wrote {}", p.display());
    }
    match outcome.failure {
        Some(reason) => Err(CliError::CheckFailed(reason)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
