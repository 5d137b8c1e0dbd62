//! Command-line pipeline: synth, ingest, probe, analyze, report.

mod commands;
mod config;
mod figures;
mod manifest;
mod outdir;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{BackendKind, RunConfig};

/// Pipeline failure classes, mapped onto process exit codes:
/// 1 validation, 2 backend failure, 3 corrupt state.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Backend(String),
    Corrupt(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Backend(_) => 2,
            CliError::Corrupt(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Backend(m) | CliError::Corrupt(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "moralign",
    version,
    about = "Probes causal language models for cross-cultural moral judgment patterns and compares them against survey ground truth"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the backend kind.
    #[arg(long)]
    backend: Option<BackendKind>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Run configuration file (TOML); alternative to --out.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory holding the bundle to summarize.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Directory receiving the generated exports and config files.
    #[arg(long)]
    out: PathBuf,
    /// Generator seed.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Which survey to generate.
    #[arg(long, value_enum, default_value_t = commands::synth::SynthTarget::Both)]
    survey: commands::synth::SynthTarget,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a survey export into the canonical matrix, with figure data.
    Ingest(CommonArgs),
    /// Score all contrast pairs and build the model matrix (resumable).
    Probe(CommonArgs),
    /// Run the three comparison methods and seal the report bundle.
    Analyze(CommonArgs),
    /// Verify the bundle and render the human-readable summary.
    Report(ReportArgs),
    /// Generate calibrated synthetic survey data and example configs.
    Synth(SynthArgs),
}

fn load_config(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(kind) = args.backend {
        config.backend.kind = kind;
    }
    if let Some(out) = &args.out {
        config.out_dir = out.clone();
    }
    Ok(config)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest(args) => commands::ingest::run(&load_config(&args)?),
        Command::Probe(args) => commands::probe::run(&load_config(&args)?),
        Command::Analyze(args) => commands::analyze::run(&load_config(&args)?),
        Command::Report(args) => {
            let out_dir = match (&args.out, &args.config) {
                (Some(out), _) => out.clone(),
                (None, Some(config)) => RunConfig::load(config)?.out_dir,
                (None, None) => {
                    return Err(CliError::Validation(
                        "report needs --out <dir> or --config <file>".into(),
                    ))
                }
            };
            commands::report::run(&out_dir)
        }
        Command::Synth(args) => commands::synth::run(args.survey, args.seed, &args.out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Let clap print help/version normally; argument mistakes are
            // validation failures.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            log::error!("{}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}
