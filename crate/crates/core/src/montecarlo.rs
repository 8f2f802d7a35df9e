//! Reproducible Monte Carlo estimation of false-alarm and detection rates.
//!
//! Every trial draws from its own counter-addressed ChaCha stream
//! `(master_seed, trial_index)`, and per-trial outcomes are reduced with
//! integer sums. Results therefore do not depend on the number of worker
//! threads or the order in which trials run.
//!
//! The same trial index is reused at every sweep point and for every
//! detector, so comparisons across detectors and along a sweep are paired.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use crate::detectors::{DetectorSpec, PreparedDetector};
use crate::signals::{CpRatio, ModulationScheme, NoiseUncertaintyModel, OfdmParams, Synthesizer};
use crate::theory;
use crate::{Error, Hypothesis, Result};

pub type TrialRng = Xoshiro256PlusPlus;

/// Independent random stream for one trial.
///
/// The trial is addressed by ChaCha8 stream `trial_index` under key
/// `master_seed`; its first 256 bits seed a xoshiro256++ generator, which is
/// several times faster for the bulk Gaussian draws.
pub fn trial_stream(master_seed: u64, trial_index: u64) -> TrialRng {
    let mut key = ChaCha8Rng::seed_from_u64(master_seed);
    key.set_stream(trial_index);
    Xoshiro256PlusPlus::from_rng(&mut key)
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    if successes > trials {
        return Err(Error::param(
            "successes",
            format!("{successes} exceeds trial count {trials}"),
        ));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::param(
            "confidence",
            format!("must lie in (0, 1), got {confidence}"),
        ));
    }
    let z = theory::inverse_normal_tail((1.0 - confidence) / 2.0)?;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let low = if successes == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let high = if successes == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    Ok((low, high))
}

pub const CONFIDENCE: f64 = 0.95;

/// Empirical rejection rate with its 95% Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub successes: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Trials whose statistic could not be evaluated; counted as non-rejections.
    pub degenerate: u64,
}

impl MonteCarloEstimate {
    pub fn from_counts(successes: u64, trials: u64, degenerate: u64) -> Result<Self> {
        let (ci_low, ci_high) = wilson_interval(successes, trials, CONFIDENCE)?;
        Ok(Self {
            successes,
            trials,
            p_hat: successes as f64 / trials as f64,
            ci_low,
            ci_high,
            degenerate,
        })
    }

    pub fn ci_width(&self) -> f64 {
        self.ci_high - self.ci_low
    }

    pub fn overlaps(&self, other: &MonteCarloEstimate) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}

/// Grids and settings for a batch of experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub trials: usize,
    pub master_seed: u64,
    pub snr_grid_db: Vec<f64>,
    pub delta_db_grid: Vec<f64>,
    pub cp_ratios: Vec<CpRatio>,
    pub n_ofdm_grid: Vec<usize>,
    pub modulations: Vec<ModulationScheme>,
    pub detectors: Vec<DetectorSpec>,
    pub target_pf: f64,
    /// FFT size and used subcarriers; CP ratio, symbol count and modulation
    /// are taken from the grids.
    pub base: OfdmParams,
    pub sigma2_nominal: f64,
    /// Worker threads; `None` uses the global rayon pool. Never affects results.
    pub threads: Option<usize>,
}

impl ExperimentPlan {
    /// Single-point plan on `base` with the given detectors.
    pub fn new(base: OfdmParams, detectors: Vec<DetectorSpec>) -> Self {
        Self {
            trials: 20_000,
            master_seed: 0,
            snr_grid_db: vec![-10.0],
            delta_db_grid: vec![0.0],
            cp_ratios: vec![base.cp_ratio()],
            n_ofdm_grid: vec![base.n_ofdm_symbols()],
            modulations: vec![base.modulation()],
            detectors,
            target_pf: 0.1,
            base,
            sigma2_nominal: 1.0,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::param("trials", "must be at least 1"));
        }
        let grids = [
            ("snr_db", self.snr_grid_db.is_empty()),
            ("delta_db", self.delta_db_grid.is_empty()),
            ("cp_ratios", self.cp_ratios.is_empty()),
            ("n_ofdm", self.n_ofdm_grid.is_empty()),
            ("modulations", self.modulations.is_empty()),
            ("detectors", self.detectors.is_empty()),
        ];
        if let Some((name, _)) = grids.iter().find(|(_, empty)| *empty) {
            return Err(Error::param(name, "grid is empty"));
        }
        if let Some(s) = self.snr_grid_db.iter().find(|s| !s.is_finite()) {
            return Err(Error::param("snr_db", format!("non-finite SNR {s}")));
        }
        theory::threshold_for_pf(self.target_pf)?;
        if self.threads == Some(0) {
            return Err(Error::param("threads", "must be at least 1"));
        }
        for &delta in &self.delta_db_grid {
            NoiseUncertaintyModel::new(self.sigma2_nominal, delta)?;
        }
        for point in self.sweep_points() {
            let params = point.params(&self.base)?;
            for det in &self.detectors {
                det.prepare(&params, params.frame_len())?;
            }
        }
        Ok(())
    }

    /// Cartesian product of the grids, outermost first: modulation, CP ratio,
    /// symbol count, uncertainty, SNR.
    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        let mut points = Vec::new();
        for &modulation in &self.modulations {
            for &cp_ratio in &self.cp_ratios {
                for &n_ofdm in &self.n_ofdm_grid {
                    for &delta_db in &self.delta_db_grid {
                        for &snr_db in &self.snr_grid_db {
                            points.push(SweepPoint {
                                snr_db,
                                delta_db,
                                cp_ratio,
                                n_ofdm,
                                modulation,
                            });
                        }
                    }
                }
            }
        }
        points
    }

    pub fn labels(&self) -> Vec<String> {
        self.detectors.iter().map(DetectorSpec::label).collect()
    }

    fn run_in_pool<T: Send>(&self, job: impl FnOnce() -> T + Send) -> Result<T> {
        match self.threads {
            None => Ok(job()),
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::param("threads", e.to_string()))?;
                Ok(pool.install(job))
            }
        }
    }
}

/// One operating point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub delta_db: f64,
    pub cp_ratio: CpRatio,
    pub n_ofdm: usize,
    pub modulation: ModulationScheme,
}

impl SweepPoint {
    pub fn params(&self, base: &OfdmParams) -> Result<OfdmParams> {
        Ok(base
            .with_cp_ratio(self.cp_ratio)?
            .with_symbols(self.n_ofdm)?
            .with_modulation(self.modulation))
    }
}

struct Operating {
    synth: Synthesizer,
    detectors: Vec<PreparedDetector>,
    len: usize,
}

impl Operating {
    fn new(plan: &ExperimentPlan, point: &SweepPoint) -> Result<Self> {
        let params = point.params(&plan.base)?;
        let noise = NoiseUncertaintyModel::new(plan.sigma2_nominal, point.delta_db)?;
        let len = params.frame_len();
        let detectors = plan
            .detectors
            .iter()
            .map(|d| d.prepare(&params, len))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            synth: Synthesizer::new(&params, point.snr_db, noise),
            detectors,
            len,
        })
    }
}

struct Tally {
    rejections: Vec<u64>,
    degenerate: Vec<u64>,
    buf: Vec<Complex64>,
}

impl Tally {
    fn new(cells: usize, detectors: usize, len: usize) -> Self {
        Self {
            rejections: vec![0; cells],
            degenerate: vec![0; detectors],
            buf: vec![Complex64::default(); len],
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.rejections.iter_mut().zip(&other.rejections) {
            *a += b;
        }
        for (a, b) in self.degenerate.iter_mut().zip(&other.degenerate) {
            *a += b;
        }
        self
    }
}

/// Runs `trials` observations under `hypothesis` and counts, per detector `d`
/// and threshold `t`, how often statistic `>= thresholds[d][t]`.
fn tally(
    plan: &ExperimentPlan,
    op: &Operating,
    hypothesis: Hypothesis,
    thresholds: &[Vec<f64>],
) -> Result<Tally> {
    let n_det = op.detectors.len();
    let offsets: Vec<usize> = thresholds
        .iter()
        .scan(0, |acc, t| {
            let start = *acc;
            *acc += t.len();
            Some(start)
        })
        .collect();
    let cells = thresholds.iter().map(Vec::len).sum();
    let seed = plan.master_seed;

    let job = || {
        (0..plan.trials as u64)
            .into_par_iter()
            .fold(
                || Tally::new(cells, n_det, op.len),
                |mut acc, i| {
                    let mut rng = trial_stream(seed, i);
                    op.synth.observe_into(hypothesis, &mut rng, &mut acc.buf);
                    for (d, det) in op.detectors.iter().enumerate() {
                        match det.statistic(&acc.buf) {
                            Ok(stat) => {
                                for (t, &thr) in thresholds[d].iter().enumerate() {
                                    if stat >= thr {
                                        acc.rejections[offsets[d] + t] += 1;
                                    }
                                }
                            }
                            Err(_) => acc.degenerate[d] += 1,
                        }
                    }
                    acc
                },
            )
            .reduce(|| Tally::new(cells, n_det, 0), Tally::merge)
    };
    plan.run_in_pool(job)
}

/// Simulated false-alarm rates: `estimates[t][d]` for threshold `t`, detector `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PfTable {
    pub thresholds: Vec<f64>,
    pub detectors: Vec<String>,
    pub estimates: Vec<Vec<MonteCarloEstimate>>,
    pub observation_len: usize,
}

impl PfTable {
    pub fn get(&self, threshold_index: usize, label: &str) -> Option<&MonteCarloEstimate> {
        let d = self.detectors.iter().position(|l| l == label)?;
        self.estimates.get(threshold_index)?.get(d)
    }
}

/// H0 rejection rates for each threshold, one observation per trial shared
/// by all thresholds and detectors. Geometry and noise model come from the
/// first entry of each grid.
pub fn run_pf_experiment(plan: &ExperimentPlan, thresholds: &[f64]) -> Result<PfTable> {
    plan.validate()?;
    if thresholds.is_empty() {
        return Err(Error::param(
            "thresholds",
            "at least one threshold is required",
        ));
    }
    if let Some(t) = thresholds.iter().find(|t| t.is_nan()) {
        return Err(Error::param("thresholds", format!("invalid threshold {t}")));
    }
    let point = plan.sweep_points()[0];
    let op = Operating::new(plan, &point)?;
    let per_detector = vec![thresholds.to_vec(); op.detectors.len()];
    let counts = tally(plan, &op, Hypothesis::H0, &per_detector)?;

    let n_det = op.detectors.len();
    let trials = plan.trials as u64;
    let estimates = (0..thresholds.len())
        .map(|t| {
            (0..n_det)
                .map(|d| {
                    MonteCarloEstimate::from_counts(
                        counts.rejections[d * thresholds.len() + t],
                        trials,
                        counts.degenerate[d],
                    )
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PfTable {
        thresholds: thresholds.to_vec(),
        detectors: plan.labels(),
        estimates,
        observation_len: op.len,
    })
}

/// Detection rate of one detector at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct PdRow {
    pub point: SweepPoint,
    pub detector: String,
    pub threshold: f64,
    pub estimate: MonteCarloEstimate,
}

/// H1 detection rates of every detector at one sweep point, thresholds set
/// for `plan.target_pf`.
pub fn run_pd_point(plan: &ExperimentPlan, point: &SweepPoint) -> Result<Vec<PdRow>> {
    let op = Operating::new(plan, point)?;
    let thresholds = plan
        .detectors
        .iter()
        .map(|d| theory::detector_threshold(d, plan.target_pf, op.len, plan.sigma2_nominal))
        .collect::<Result<Vec<_>>>()?;
    let per_detector: Vec<Vec<f64>> = thresholds.iter().map(|&t| vec![t]).collect();
    let counts = tally(plan, &op, Hypothesis::H1, &per_detector)?;
    plan.detectors
        .iter()
        .enumerate()
        .map(|(d, spec)| {
            Ok(PdRow {
                point: *point,
                detector: spec.label(),
                threshold: thresholds[d],
                estimate: MonteCarloEstimate::from_counts(
                    counts.rejections[d],
                    plan.trials as u64,
                    counts.degenerate[d],
                )?,
            })
        })
        .collect()
}

/// Detection rates over every sweep point of the plan.
pub fn run_pd_experiment(plan: &ExperimentPlan) -> Result<Vec<PdRow>> {
    plan.validate()?;
    let mut rows = Vec::new();
    for point in plan.sweep_points() {
        rows.extend(run_pd_point(plan, &point)?);
    }
    Ok(rows)
}

/// Raw statistics `out[d][trial]` at one sweep point, in trial order.
/// Degenerate evaluations are reported as NaN.
pub fn sample_statistics(
    plan: &ExperimentPlan,
    point: &SweepPoint,
    hypothesis: Hypothesis,
) -> Result<Vec<Vec<f64>>> {
    let op = Operating::new(plan, point)?;
    let seed = plan.master_seed;
    let per_trial: Vec<Vec<f64>> = plan.run_in_pool(|| {
        (0..plan.trials as u64)
            .into_par_iter()
            .map_init(
                || vec![Complex64::default(); op.len],
                |buf, i| {
                    let mut rng = trial_stream(seed, i);
                    op.synth.observe_into(hypothesis, &mut rng, buf);
                    op.detectors
                        .iter()
                        .map(|d| d.statistic(buf).unwrap_or(f64::NAN))
                        .collect()
                },
            )
            .collect()
    })?;
    Ok((0..op.detectors.len())
        .map(|d| per_trial.iter().map(|row| row[d]).collect())
        .collect())
}
