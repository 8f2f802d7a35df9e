//! Experiment commands and their CSV tables.

use std::fmt;

use mcsense::detectors::{decide, DetectorDecision};
use mcsense::montecarlo::{
    run_pd_experiment, run_pf_experiment, ExperimentPlan, MonteCarloEstimate, PdRow,
};
use mcsense::{theory, Complex64};

use crate::config::{DetectorKind, RunConfig};
use crate::CliError;

/// Fixed-point rendering used for every real-valued CSV cell.
pub fn fmt6(x: f64) -> String {
    // Avoid "-0.000000" so output does not depend on the sign of zero.
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.6}")
}

/// Header plus string rows, ready for CSV output.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// Anomalies to surface on stderr alongside the table.
    pub warnings: Vec<String>,
}

impl Table {
    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("CSV cells are ASCII"))
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| *h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }
}

fn degenerate_warning(what: &str, est: &MonteCarloEstimate) -> Option<String> {
    (est.degenerate > 0).then(|| {
        format!(
            "{what}: {} of {} trials had an undefined statistic and were counted as non-detections",
            est.degenerate, est.trials
        )
    })
}

/// Which grids a sweep command may vary; all others must hold one value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    Compare,
    CpRatio,
    Symbols,
}

impl Sweep {
    fn name(self) -> &'static str {
        match self {
            Sweep::Compare => "compare",
            Sweep::CpRatio => "cp-sweep",
            Sweep::Symbols => "symbols-sweep",
        }
    }

    fn header(self) -> Vec<&'static str> {
        let lead: &[&'static str] = match self {
            Sweep::Compare => &["snr_db", "modulation"],
            Sweep::CpRatio => &["cp_ratio", "delta_db"],
            Sweep::Symbols => &["n_ofdm", "delta_db"],
        };
        lead.iter()
            .copied()
            .chain(["detector", "pd", "ci_low", "ci_high"])
            .collect()
    }

    fn check_shape(self, plan: &ExperimentPlan) -> Result<(), CliError> {
        let grids = [
            (
                "snr_grid_db",
                plan.snr_grid_db.len(),
                self == Sweep::Compare,
            ),
            (
                "modulations",
                plan.modulations.len(),
                self == Sweep::Compare,
            ),
            (
                "delta_db_grid",
                plan.delta_db_grid.len(),
                self != Sweep::Compare,
            ),
            ("cp_ratios", plan.cp_ratios.len(), self == Sweep::CpRatio),
            (
                "n_ofdm_grid",
                plan.n_ofdm_grid.len(),
                self == Sweep::Symbols,
            ),
        ];
        for (name, len, may_vary) in grids {
            if len > 1 && !may_vary {
                return Err(CliError::Usage(format!(
                    "`{name}` must hold a single value for {} (its CSV has no column for it)",
                    self.name()
                )));
            }
        }
        Ok(())
    }
}

/// Validates the configuration for `sweep` and runs it.
pub fn run_sweep(sweep: Sweep, cfg: &RunConfig) -> Result<Vec<PdRow>, CliError> {
    let plan = cfg.plan()?;
    sweep.check_shape(&plan)?;
    run_pd_experiment(&plan).map_err(CliError::Config)
}

pub fn sweep_table(sweep: Sweep, rows: &[PdRow]) -> Table {
    let mut out = Vec::with_capacity(rows.len());
    let mut warnings = Vec::new();
    for r in rows {
        let p = &r.point;
        let mut cells = match sweep {
            Sweep::Compare => vec![fmt6(p.snr_db), p.modulation.name().to_string()],
            Sweep::CpRatio => vec![p.cp_ratio.to_string(), fmt6(p.delta_db)],
            Sweep::Symbols => vec![p.n_ofdm.to_string(), fmt6(p.delta_db)],
        };
        let e = &r.estimate;
        cells.extend([
            r.detector.clone(),
            fmt6(e.p_hat),
            fmt6(e.ci_low),
            fmt6(e.ci_high),
        ]);
        out.push(cells);
        let what = format!(
            "{} at snr {} dB, delta {} dB, cp {}, {} symbols, {}",
            r.detector, p.snr_db, p.delta_db, p.cp_ratio, p.n_ofdm, p.modulation
        );
        warnings.extend(degenerate_warning(&what, e));
    }
    Table {
        header: sweep.header(),
        rows: out,
        warnings,
    }
}

/// Simulated and closed-form false-alarm rates of the single- and
/// multi-cycle detectors at one threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRow {
    pub threshold: f64,
    pub pf_theory: f64,
    pub single: MonteCarloEstimate,
    pub multi: MonteCarloEstimate,
}

pub fn run_calibrate(cfg: &RunConfig) -> Result<Vec<CalibrationRow>, CliError> {
    if cfg.thresholds.is_empty() {
        return Err(CliError::Usage("threshold list is empty".into()));
    }
    let mut cfg = cfg.clone();
    cfg.enabled = vec![DetectorKind::Single, DetectorKind::Multi];
    let plan = cfg.plan()?;
    for (name, len) in [
        ("delta_db_grid", plan.delta_db_grid.len()),
        ("cp_ratios", plan.cp_ratios.len()),
        ("n_ofdm_grid", plan.n_ofdm_grid.len()),
        ("modulations", plan.modulations.len()),
    ] {
        if len > 1 {
            return Err(CliError::Usage(format!(
                "`{name}` must hold a single value for calibrate"
            )));
        }
    }
    let pf_theory = cfg
        .thresholds
        .iter()
        .map(|&t| theory::pf_of_threshold(t))
        .collect::<Result<Vec<_>, _>>()?;
    let table = run_pf_experiment(&plan, &cfg.thresholds)?;
    Ok(cfg
        .thresholds
        .iter()
        .enumerate()
        .map(|(t, &threshold)| CalibrationRow {
            threshold,
            pf_theory: pf_theory[t],
            single: table.estimates[t][0],
            multi: table.estimates[t][1],
        })
        .collect())
}

/// The confidence interval columns belong to the multi-cycle estimate.
pub fn calibration_table(rows: &[CalibrationRow]) -> Table {
    let mut warnings = Vec::new();
    if let Some(r) = rows.first() {
        warnings.extend(degenerate_warning("single1", &r.single));
        warnings.extend(degenerate_warning("multi", &r.multi));
    }
    Table {
        header: vec![
            "threshold",
            "pf_theory",
            "pf_sim_single",
            "pf_sim_multi",
            "ci_low",
            "ci_high",
        ],
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    fmt6(r.threshold),
                    fmt6(r.pf_theory),
                    fmt6(r.single.p_hat),
                    fmt6(r.multi.p_hat),
                    fmt6(r.multi.ci_low),
                    fmt6(r.multi.ci_high),
                ]
            })
            .collect(),
        warnings,
    }
}

/// Outcome of running one detector on a recorded observation.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectReport {
    pub detector: String,
    pub decision: DetectorDecision,
    pub target_pf: f64,
    pub n: usize,
    pub lags: Option<(usize, usize)>,
    pub n_fft: usize,
    pub n_cp: usize,
}

impl fmt::Display for DetectReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "detector={} statistic={:.6e} threshold={:.6e} decision={} target_pf={} n={}",
            self.detector,
            self.decision.statistic,
            self.decision.threshold,
            self.decision.decision,
            fmt6(self.target_pf),
            self.n
        )?;
        if let Some((tau, tau_bar)) = self.lags {
            write!(f, " tau={tau} tau_bar={tau_bar}")?;
        }
        write!(f, " n_fft={} n_cp={}", self.n_fft, self.n_cp)
    }
}

/// Applies detector `kind` to `samples` with the threshold for `cfg.target_pf`.
pub fn detect(
    cfg: &RunConfig,
    kind: DetectorKind,
    samples: &[Complex64],
) -> Result<DetectReport, CliError> {
    let params = cfg.base_params()?;
    let spec = cfg.detector(kind)?;
    let prepared = spec.prepare(&params, samples.len())?;
    let threshold =
        theory::detector_threshold(&spec, cfg.target_pf, samples.len(), cfg.sigma2_nominal)?;
    let statistic = prepared.statistic(samples)?;
    Ok(DetectReport {
        detector: spec.label(),
        decision: decide(statistic, threshold)?,
        target_pf: cfg.target_pf,
        n: samples.len(),
        lags: spec.lags().map(|l| (l.tau(), l.tau_bar())),
        n_fft: params.n_fft(),
        n_cp: params.n_cp(),
    })
}
