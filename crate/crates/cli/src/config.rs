//! Run configuration.
//!
//! Values are resolved in three layers: per-command defaults, then an
//! optional TOML file, then command-line flags.

use std::path::Path;
use std::str::FromStr;

use mcsense::cac::LagPair;
use mcsense::detectors::{DetectorSpec, DEFAULT_BETA, DEFAULT_ETA_FLOOR};
use mcsense::montecarlo::ExperimentPlan;
use mcsense::signals::{symmetric_subcarriers, CpRatio, ModulationScheme, OfdmParams};
use serde::Deserialize;

use crate::CliError;

/// On-disk layout, one table per library module. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub signals: SignalsSection,
    pub cac: CacSection,
    pub detectors: DetectorsSection,
    pub montecarlo: MonteCarloSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalsSection {
    pub n_fft: Option<usize>,
    pub cp_ratio: Option<String>,
    pub used_subcarriers: Option<Vec<i32>>,
    pub n_ofdm_symbols: Option<usize>,
    pub modulation: Option<String>,
    pub sigma2_nominal: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CacSection {
    pub tau: Option<usize>,
    pub tau_bar: Option<usize>,
    pub k_list: Option<Vec<i64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorsSection {
    pub beta: Option<f64>,
    pub eta_floor: Option<f64>,
    pub alpha0: Option<f64>,
    pub enabled: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSection {
    pub trials: Option<usize>,
    pub master_seed: Option<u64>,
    pub target_pf: Option<f64>,
    pub snr_grid_db: Option<Vec<f64>>,
    pub delta_db_grid: Option<Vec<f64>>,
    pub cp_ratios: Option<Vec<String>>,
    pub n_ofdm_grid: Option<Vec<usize>>,
    pub modulations: Option<Vec<String>>,
    pub thresholds: Option<Vec<f64>>,
    pub threads: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }
}

/// Detector families selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorKind {
    Multi,
    Single,
    BaselineRatio,
    Energy,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 4] =
        [Self::Multi, Self::Single, Self::BaselineRatio, Self::Energy];
}

impl FromStr for DetectorKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim() {
            "multi" => Ok(Self::Multi),
            "single" => Ok(Self::Single),
            "baseline-ratio" => Ok(Self::BaselineRatio),
            "energy" => Ok(Self::Energy),
            other => Err(CliError::Usage(format!(
                "unknown detector `{other}` (expected multi, single, baseline-ratio or energy)"
            ))),
        }
    }
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n_fft: usize,
    pub cp_ratio: CpRatio,
    /// `None` means the symmetric band of `15 n_fft / 32` bins on each side of DC.
    pub used_subcarriers: Option<Vec<i32>>,
    pub n_ofdm_symbols: usize,
    pub modulation: ModulationScheme,
    pub sigma2_nominal: f64,

    /// `None` means `n_fft` and `n_fft - 2`.
    pub tau: Option<usize>,
    pub tau_bar: Option<usize>,
    pub k_list: Vec<i64>,

    pub beta: f64,
    pub eta_floor: f64,
    pub alpha0: f64,
    pub enabled: Vec<DetectorKind>,

    pub trials: usize,
    pub master_seed: u64,
    pub target_pf: f64,
    pub snr_grid_db: Vec<f64>,
    pub delta_db_grid: Vec<f64>,
    /// `None` grids fall back to the single value in the signal settings.
    pub cp_ratios: Option<Vec<CpRatio>>,
    pub n_ofdm_grid: Option<Vec<usize>>,
    pub modulations: Option<Vec<ModulationScheme>>,
    pub thresholds: Vec<f64>,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    /// WiMAX profile: 512-point FFT, CP 1/8, 480 used subcarriers, 32 QPSK symbols.
    fn default() -> Self {
        Self {
            n_fft: 512,
            cp_ratio: CpRatio::new(1, 8).expect("valid ratio"),
            used_subcarriers: None,
            n_ofdm_symbols: 32,
            modulation: ModulationScheme::Qpsk,
            sigma2_nominal: 1.0,
            tau: None,
            tau_bar: None,
            k_list: vec![-2, -1, 0, 1, 2],
            beta: DEFAULT_BETA,
            eta_floor: DEFAULT_ETA_FLOOR,
            alpha0: 0.0,
            enabled: DetectorKind::ALL.to_vec(),
            trials: 20_000,
            master_seed: 0,
            target_pf: 0.1,
            snr_grid_db: vec![-10.0],
            delta_db_grid: vec![1.0],
            cp_ratios: None,
            n_ofdm_grid: None,
            modulations: None,
            thresholds: vec![0.5, 1.0, 2.0, 3.0, 5.0, 9.0, 19.0, 49.0, 99.0],
            threads: None,
        }
    }
}

fn parse_all<T: FromStr<Err = mcsense::Error>>(items: &[String]) -> Result<Vec<T>, CliError> {
    items
        .iter()
        .map(|s| s.parse().map_err(CliError::Config))
        .collect()
}

impl RunConfig {
    /// Noise-only calibration on 8 symbols of a 128-point FFT (1152 samples).
    pub fn calibrate_defaults() -> Self {
        Self {
            n_fft: 128,
            n_ofdm_symbols: 8,
            delta_db_grid: vec![0.0],
            enabled: vec![DetectorKind::Single, DetectorKind::Multi],
            ..Self::default()
        }
    }

    /// SNR sweep for every modulation at 1 dB uncertainty.
    pub fn compare_defaults() -> Self {
        Self {
            snr_grid_db: (0..=10).map(|i| -20.0 + 2.0 * f64::from(i)).collect(),
            modulations: Some(ModulationScheme::ALL.to_vec()),
            ..Self::default()
        }
    }

    pub fn cp_sweep_defaults() -> Self {
        Self {
            delta_db_grid: vec![0.5, 1.0],
            cp_ratios: Some(
                [32, 16, 8, 4]
                    .iter()
                    .map(|&d| CpRatio::new(1, d).expect("valid ratio"))
                    .collect(),
            ),
            ..Self::default()
        }
    }

    pub fn symbols_sweep_defaults() -> Self {
        Self {
            delta_db_grid: vec![0.5, 1.0],
            n_ofdm_grid: Some(vec![16, 32, 64, 128]),
            ..Self::default()
        }
    }

    pub fn apply_file(&mut self, file: &ConfigFile) -> Result<(), CliError> {
        let s = &file.signals;
        set(&mut self.n_fft, s.n_fft);
        if let Some(r) = &s.cp_ratio {
            self.cp_ratio = r.parse().map_err(CliError::Config)?;
        }
        if let Some(u) = &s.used_subcarriers {
            self.used_subcarriers = Some(u.clone());
        }
        set(&mut self.n_ofdm_symbols, s.n_ofdm_symbols);
        if let Some(m) = &s.modulation {
            self.modulation = m.parse().map_err(CliError::Config)?;
        }
        set(&mut self.sigma2_nominal, s.sigma2_nominal);

        let c = &file.cac;
        set_opt(&mut self.tau, c.tau);
        set_opt(&mut self.tau_bar, c.tau_bar);
        set(&mut self.k_list, c.k_list.clone());

        let d = &file.detectors;
        set(&mut self.beta, d.beta);
        set(&mut self.eta_floor, d.eta_floor);
        set(&mut self.alpha0, d.alpha0);
        if let Some(names) = &d.enabled {
            self.enabled = names.iter().map(|n| n.parse()).collect::<Result<_, _>>()?;
        }

        let m = &file.montecarlo;
        set(&mut self.trials, m.trials);
        set(&mut self.master_seed, m.master_seed);
        set(&mut self.target_pf, m.target_pf);
        set(&mut self.snr_grid_db, m.snr_grid_db.clone());
        set(&mut self.delta_db_grid, m.delta_db_grid.clone());
        if let Some(r) = &m.cp_ratios {
            self.cp_ratios = Some(parse_all(r)?);
        }
        set_opt(&mut self.n_ofdm_grid, m.n_ofdm_grid.clone());
        if let Some(r) = &m.modulations {
            self.modulations = Some(parse_all(r)?);
        }
        set(&mut self.thresholds, m.thresholds.clone());
        set_opt(&mut self.threads, m.threads);
        Ok(())
    }

    pub fn lags(&self) -> Result<LagPair, CliError> {
        let tau = self.tau.unwrap_or(self.n_fft);
        let tau_bar = match self.tau_bar {
            Some(t) => t,
            None => self
                .n_fft
                .checked_sub(2)
                .filter(|&t| t > 0)
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "n_fft {} too small for the default tau_bar",
                        self.n_fft
                    ))
                })?,
        };
        LagPair::new(tau, tau_bar).map_err(CliError::Config)
    }

    pub fn base_params(&self) -> Result<OfdmParams, CliError> {
        let used = self
            .used_subcarriers
            .clone()
            .unwrap_or_else(|| symmetric_subcarriers(self.n_fft * 15 / 32));
        OfdmParams::new(
            self.n_fft,
            self.cp_ratio,
            used,
            self.n_ofdm_symbols,
            self.modulation,
        )
        .map_err(CliError::Config)
    }

    pub fn detector(&self, kind: DetectorKind) -> Result<DetectorSpec, CliError> {
        let lags = self.lags()?;
        Ok(match kind {
            DetectorKind::Multi => DetectorSpec::MultiCycle {
                k_list: self.k_list.clone(),
                lags,
                beta: self.beta,
                eta_floor: self.eta_floor,
            },
            DetectorKind::Single => DetectorSpec::SingleCycle {
                alpha0: self.alpha0,
                lags,
                beta: self.beta,
            },
            DetectorKind::BaselineRatio => DetectorSpec::BaselineRatio { lags },
            DetectorKind::Energy => DetectorSpec::Energy,
        })
    }

    /// Experiment plan over the configured grids and enabled detectors,
    /// validated against every sweep point.
    pub fn plan(&self) -> Result<ExperimentPlan, CliError> {
        if self.enabled.is_empty() {
            return Err(CliError::Usage("no detectors enabled".into()));
        }
        let detectors = self
            .enabled
            .iter()
            .map(|&k| self.detector(k))
            .collect::<Result<Vec<_>, _>>()?;
        let mut plan = ExperimentPlan::new(self.base_params()?, detectors);
        plan.trials = self.trials;
        plan.master_seed = self.master_seed;
        plan.target_pf = self.target_pf;
        plan.sigma2_nominal = self.sigma2_nominal;
        plan.snr_grid_db = self.snr_grid_db.clone();
        plan.delta_db_grid = self.delta_db_grid.clone();
        plan.cp_ratios = self
            .cp_ratios
            .clone()
            .unwrap_or_else(|| vec![self.cp_ratio]);
        plan.n_ofdm_grid = self
            .n_ofdm_grid
            .clone()
            .unwrap_or_else(|| vec![self.n_ofdm_symbols]);
        plan.modulations = self
            .modulations
            .clone()
            .unwrap_or_else(|| vec![self.modulation]);
        plan.threads = self.threads;
        if self.delta_db_grid.iter().any(|d| !d.is_finite()) {
            return Err(CliError::Usage("delta_db_grid must be finite".into()));
        }
        plan.validate().map_err(CliError::Config)?;
        Ok(plan)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}
