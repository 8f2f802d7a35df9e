//! Command-line front end for the `mcsense` experiments.
//!
//! Each subcommand resolves a [`RunConfig`] from its defaults, an optional
//! TOML file and flags, runs the Monte Carlo harness and writes one CSV table.

pub mod commands;
pub mod config;
pub mod samples;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{Sweep, Table};
pub use config::{ConfigFile, DetectorKind, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid configuration: {0}")]
    Config(#[from] mcsense::Error),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 2 for bad invocations or configurations, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Input(_) | CliError::Io(_) | CliError::Csv(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mcsense",
    version,
    about = "Multi-cycle cyclostationary spectrum sensing experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// False-alarm rate versus threshold on noise-only observations.
    Calibrate(CommonArgs),
    /// Detection rate versus SNR for each modulation.
    Compare(CommonArgs),
    /// Detection rate versus cyclic-prefix ratio.
    CpSweep(CommonArgs),
    /// Detection rate versus number of OFDM symbols.
    SymbolsSweep(CommonArgs),
    /// Run one detector on a recorded sample file.
    Detect(DetectArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML file with [signals], [cac], [detectors] and [montecarlo] tables.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub target_pf: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub thresholds: Option<Vec<f64>>,
    #[arg(long = "snr-db", value_delimiter = ',', allow_hyphen_values = true)]
    pub snr_db: Option<Vec<f64>>,
    #[arg(long = "delta-db", value_delimiter = ',', allow_hyphen_values = true)]
    pub delta_db: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub cp_ratios: Option<Vec<String>>,
    #[arg(long = "n-ofdm", value_delimiter = ',')]
    pub n_ofdm: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub modulations: Option<Vec<String>>,
    #[arg(long)]
    pub n_fft: Option<usize>,
    #[arg(long)]
    pub tau: Option<usize>,
    #[arg(long)]
    pub tau_bar: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub k_list: Option<Vec<i64>>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Comma-separated subset of multi, single, baseline-ratio, energy.
    #[arg(long, value_delimiter = ',')]
    pub detectors: Option<Vec<String>>,
}

#[derive(Debug, Clone, Args)]
pub struct DetectArgs {
    /// `.csv` of re,im rows, or interleaved little-endian f64 I/Q.
    pub file: PathBuf,
    #[arg(long, default_value = "multi")]
    pub detector: String,
    #[command(flatten)]
    pub common: CommonArgs,
}

impl CommonArgs {
    /// Layers the config file and flags over `defaults`.
    pub fn resolve(&self, defaults: RunConfig) -> Result<RunConfig, CliError> {
        let mut cfg = defaults;
        if let Some(path) = &self.config {
            cfg.apply_file(&ConfigFile::load(path)?)?;
        }
        if let Some(v) = self.n_fft {
            cfg.n_fft = v;
        }
        if let Some(v) = self.seed {
            cfg.master_seed = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        if let Some(v) = self.target_pf {
            cfg.target_pf = v;
        }
        if let Some(v) = &self.thresholds {
            cfg.thresholds = v.clone();
        }
        if let Some(v) = &self.snr_db {
            cfg.snr_grid_db = v.clone();
        }
        if let Some(v) = &self.delta_db {
            cfg.delta_db_grid = v.clone();
        }
        if let Some(v) = &self.cp_ratios {
            let ratios = v.iter().map(|s| s.parse()).collect::<Result<Vec<_>, _>>()?;
            cfg.cp_ratios = Some(ratios);
        }
        if self.n_ofdm.is_some() {
            cfg.n_ofdm_grid = self.n_ofdm.clone();
        }
        if let Some(v) = &self.modulations {
            let mods = v.iter().map(|s| s.parse()).collect::<Result<Vec<_>, _>>()?;
            cfg.modulations = Some(mods);
        }
        if self.tau.is_some() {
            cfg.tau = self.tau;
        }
        if self.tau_bar.is_some() {
            cfg.tau_bar = self.tau_bar;
        }
        if let Some(v) = &self.k_list {
            cfg.k_list = v.clone();
        }
        if let Some(v) = self.beta {
            cfg.beta = v;
        }
        if let Some(v) = &self.detectors {
            cfg.enabled = v.iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
        }
        Ok(cfg)
    }
}

fn emit(table: &Table, output: Option<&PathBuf>) -> Result<(), CliError> {
    for w in &table.warnings {
        eprintln!("warning: {w}");
    }
    let csv = table.to_csv()?;
    match output {
        Some(path) => std::fs::write(path, csv)?,
        None => std::io::stdout().write_all(csv.as_bytes())?,
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Calibrate(args) => {
            let cfg = args.resolve(RunConfig::calibrate_defaults())?;
            let rows = commands::run_calibrate(&cfg)?;
            emit(&commands::calibration_table(&rows), args.output.as_ref())
        }
        Command::Compare(args) => sweep(Sweep::Compare, RunConfig::compare_defaults(), &args),
        Command::CpSweep(args) => sweep(Sweep::CpRatio, RunConfig::cp_sweep_defaults(), &args),
        Command::SymbolsSweep(args) => {
            sweep(Sweep::Symbols, RunConfig::symbols_sweep_defaults(), &args)
        }
        Command::Detect(args) => {
            let cfg = args.common.resolve(RunConfig::default())?;
            let kind: DetectorKind = args.detector.parse()?;
            let samples = samples::read_samples(&args.file)?;
            let report = commands::detect(&cfg, kind, &samples).map_err(|e| match e {
                CliError::Config(inner) => CliError::Input(inner.to_string()),
                other => other,
            })?;
            let line = format!("{report}\n");
            match &args.common.output {
                Some(path) => std::fs::write(path, line)?,
                None => std::io::stdout().write_all(line.as_bytes())?,
            }
            Ok(())
        }
    }
}

fn sweep(kind: Sweep, defaults: RunConfig, args: &CommonArgs) -> Result<(), CliError> {
    let cfg = args.resolve(defaults)?;
    let rows = commands::run_sweep(kind, &cfg)?;
    emit(&commands::sweep_table(kind, &rows), args.output.as_ref())
}
