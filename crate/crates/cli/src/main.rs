use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use seizure_cli::commands;
use seizure_cli::{exit, CliError, PipelineConfig, Result};
use seizure_core::net::GradcheckOptions;

/// EEG seizure prediction pipeline.
///
/// Exit codes: 0 success, 1 I/O, 2 configuration, 3 data,
/// 4 too few leading seizures, 5 verification failed.
#[derive(Parser)]
#[command(name = "seizure", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Pipeline config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replaces the data, init and train seeds.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<(PipelineConfig, PathBuf)> {
        let mut cfg = PipelineConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.override_seed(seed);
        }
        let out = self.out.clone().unwrap_or_else(|| cfg.out_dir.clone());
        std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
        Ok((cfg, out))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic source as EDF files plus a CHB-MIT style summary.
    MakeSynth(Common),
    /// Build and cache the labeled spectrogram dataset.
    Preprocess(Common),
    /// Train and evaluate one fold.
    Train {
        #[command(flatten)]
        common: Common,
        /// Leading seizure held out for testing.
        #[arg(long)]
        fold: usize,
    },
    /// Leave-one-seizure-out cross-validation.
    Crossval(Common),
    /// Finite-difference check of every layer and the full model.
    Gradcheck {
        /// Optional config; its init seed seeds the checks.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Merge the fold CSVs of crossval output directories.
    Report {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    let mut log = io::stdout();
    match cli.command {
        Command::MakeSynth(c) => {
            let (cfg, out) = c.load()?;
            commands::make_synth(&cfg, &out, &mut log)?;
        }
        Command::Preprocess(c) => {
            let (cfg, out) = c.load()?;
            commands::preprocess(&cfg, &out, &mut log)?;
        }
        Command::Train { common, fold } => {
            let (cfg, out) = common.load()?;
            commands::train(&cfg, &out, fold, &mut log)?;
        }
        Command::Crossval(c) => {
            let (cfg, out) = c.load()?;
            commands::crossval(&cfg, &out, &mut log)?;
        }
        Command::Gradcheck { config, out, seed } => {
            let cfg_seed = config.as_deref().map(PipelineConfig::load).transpose()?.map(|c| c.seeds.init);
            let opts = GradcheckOptions { seed: seed.or(cfg_seed).unwrap_or(0), ..GradcheckOptions::default() };
            commands::gradcheck(&opts, out.as_deref(), &mut log)?;
        }
        Command::Report { runs, out } => {
            commands::report(&runs, out.as_deref().map(Path::new), &mut log)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
