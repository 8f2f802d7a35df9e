//! Test statistics and threshold decisions.
//!
//! The multi-cycle statistic is the ratio of a phase-weighted lag product sum
//! at the prefix lag `tau` to a plain lag product sum at a reference lag
//! `tau_bar` demodulated at an unrelated frequency `beta`. Both sums are
//! quadratic in the input, so the ratio does not depend on the noise power.

use std::fmt;

use num_complex::Complex64;

use crate::cac::{self, CyclicFrequencySet, LagPair, WeightTable};
use crate::signals::OfdmParams;
use crate::{Error, Hypothesis, Result};

pub const DEFAULT_BETA: f64 = 0.412;
pub const DEFAULT_ETA_FLOOR: f64 = 1e-6;

/// Frequencies closer than this (mod 1) are treated as equal when validating `beta`.
const FREQ_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MultiCycleConfig {
    freqs: CyclicFrequencySet,
    lags: LagPair,
    beta: f64,
    eta_floor: f64,
}

impl MultiCycleConfig {
    pub fn new(
        freqs: CyclicFrequencySet,
        lags: LagPair,
        beta: f64,
        eta_floor: f64,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::param(
                "beta",
                format!("must lie in [0, 1), got {beta}"),
            ));
        }
        if !(eta_floor.is_finite() && eta_floor >= 0.0) {
            return Err(Error::param(
                "eta_floor",
                format!("must be finite and >= 0, got {eta_floor}"),
            ));
        }
        for &alpha in freqs.alphas() {
            let d = (alpha.rem_euclid(1.0) - beta).abs();
            if d < FREQ_TOL || (1.0 - d) < FREQ_TOL {
                return Err(Error::param(
                    "beta",
                    format!("{beta} coincides with cyclic frequency {alpha} (mod 1)"),
                ));
            }
        }
        Ok(Self {
            freqs,
            lags,
            beta,
            eta_floor,
        })
    }

    pub fn freqs(&self) -> &CyclicFrequencySet {
        &self.freqs
    }

    pub fn lags(&self) -> LagPair {
        self.lags
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn eta_floor(&self) -> f64 {
        self.eta_floor
    }
}

/// Multi-cycle statistic with weight and demodulation tables precomputed
/// for inputs up to `capacity` samples. Immutable, so one instance can be
/// shared across threads.
#[derive(Debug, Clone)]
pub struct MultiCycleDetector {
    config: MultiCycleConfig,
    capacity: usize,
    weights: Vec<Complex64>,
    // included_before[n] = number of included indices in [0, n)
    included_before: Vec<usize>,
    reference: Vec<Complex64>,
}

impl MultiCycleDetector {
    pub fn new(config: MultiCycleConfig, capacity: usize) -> Result<Self> {
        config.lags.check_len(capacity)?;
        let n_tau = capacity - config.lags.tau();
        let n_tau_bar = capacity - config.lags.tau_bar();

        let table: WeightTable = cac::weight_table(&config.freqs, n_tau, config.eta_floor)?;
        let weights = (0..n_tau).map(|n| table.unit_weight(n)).collect();
        let mut included_before = Vec::with_capacity(n_tau + 1);
        included_before.push(0);
        for &inc in &table.included {
            included_before.push(included_before.last().unwrap() + usize::from(inc));
        }
        let reference = (0..n_tau_bar)
            .map(|n| cac::phasor(config.beta, n))
            .collect();

        Ok(Self {
            config,
            capacity,
            weights,
            included_before,
            reference,
        })
    }

    pub fn config(&self) -> &MultiCycleConfig {
        &self.config
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Numerator and denominator lag sums, each divided by the square root of
    /// its term count, so that the statistic is `|a|² / |b|²`.
    pub fn normalized_sums(&self, x: &[Complex64]) -> Result<(Complex64, Complex64)> {
        let lags = self.config.lags;
        lags.check_len(x.len())?;
        if x.len() > self.capacity {
            return Err(Error::param(
                "x",
                format!(
                    "input has {} samples, detector was built for {}",
                    x.len(),
                    self.capacity
                ),
            ));
        }
        let (tau, tau_bar) = (lags.tau(), lags.tau_bar());
        let n_tau = x.len() - tau;
        let n_tau_bar = x.len() - tau_bar;

        let num = lag_sum(&x[..n_tau], &x[tau..], &self.weights[..n_tau]);
        let den = lag_sum(&x[..n_tau_bar], &x[tau_bar..], &self.reference[..n_tau_bar]);

        let n_inc = self.included_before[n_tau];
        if n_inc == 0 {
            return Err(Error::Degenerate(
                "every phasor weight fell below the eta floor".to_string(),
            ));
        }
        Ok((num / (n_inc as f64).sqrt(), den / (n_tau_bar as f64).sqrt()))
    }

    pub fn statistic(&self, x: &[Complex64]) -> Result<f64> {
        let (a, b) = self.normalized_sums(x)?;
        let den = b.norm_sqr();
        if den == 0.0 {
            return Err(Error::Degenerate(
                "reference lag correlation is exactly zero".to_string(),
            ));
        }
        Ok(a.norm_sqr() / den)
    }
}

/// `Σ w[n] a[n] b[n]*` over the common length, with four interleaved partial sums.
#[inline]
fn lag_sum(head: &[Complex64], tail: &[Complex64], weights: &[Complex64]) -> Complex64 {
    let len = head.len().min(tail.len()).min(weights.len());
    let (head, tail, weights) = (&head[..len], &tail[..len], &weights[..len]);
    let mut acc = [Complex64::default(); 4];
    let mut h = head.chunks_exact(4);
    let mut t = tail.chunks_exact(4);
    let mut w = weights.chunks_exact(4);
    for ((h4, t4), w4) in (&mut h).zip(&mut t).zip(&mut w) {
        for i in 0..4 {
            acc[i] += w4[i] * (h4[i] * t4[i].conj());
        }
    }
    for ((a, b), c) in h.remainder().iter().zip(t.remainder()).zip(w.remainder()) {
        acc[0] += c * (a * b.conj());
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

pub fn multicycle_statistic(x: &[Complex64], cfg: &MultiCycleConfig) -> Result<f64> {
    MultiCycleDetector::new(cfg.clone(), x.len())?.statistic(x)
}

pub fn singlecycle_config(lags: LagPair, beta: f64, alpha0: f64) -> Result<MultiCycleConfig> {
    MultiCycleConfig::new(
        CyclicFrequencySet::new(vec![alpha0])?,
        lags,
        beta,
        DEFAULT_ETA_FLOOR,
    )
}

/// The K = 1 case of [`multicycle_statistic`].
pub fn singlecycle_statistic(
    x: &[Complex64],
    lags: LagPair,
    beta: f64,
    alpha0: f64,
) -> Result<f64> {
    multicycle_statistic(x, &singlecycle_config(lags, beta, alpha0)?)
}

/// `|R̂⁰(τ)| / |R̂⁰(τ̄)|`, a plain ratio of zero-frequency lag correlations.
pub fn baseline_ratio_statistic(x: &[Complex64], lags: LagPair) -> Result<f64> {
    lags.check_len(x.len())?;
    let num = cac::cac_estimate(x, 0.0, lags.tau())?.norm();
    let den = cac::cac_estimate(x, 0.0, lags.tau_bar())?.norm();
    if den == 0.0 {
        return Err(Error::Degenerate(
            "reference lag correlation is exactly zero".to_string(),
        ));
    }
    Ok(num / den)
}

/// Mean sample power `(1/N) Σ |x[n]|²`.
pub fn energy_statistic(x: &[Complex64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::TooShort {
            len: 0,
            reason: "energy needs at least one sample".to_string(),
        });
    }
    Ok(x.iter().map(|z| z.norm_sqr()).sum::<f64>() / x.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorDecision {
    pub statistic: f64,
    pub threshold: f64,
    pub decision: Hypothesis,
}

/// H1 when `statistic >= threshold`.
pub fn decide(statistic: f64, threshold: f64) -> Result<DetectorDecision> {
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::param(
            "threshold",
            format!("must be positive, got {threshold}"),
        ));
    }
    let decision = if statistic >= threshold {
        Hypothesis::H1
    } else {
        Hypothesis::H0
    };
    Ok(DetectorDecision {
        statistic,
        threshold,
        decision,
    })
}

/// Geometry-independent description of a detector; instantiated per OFDM
/// geometry with [`DetectorSpec::prepare`].
#[derive(Debug, Clone, PartialEq)]
pub enum DetectorSpec {
    /// Cyclic frequencies `k / (n_fft + n_cp)` for each `k` in `k_list`.
    MultiCycle {
        k_list: Vec<i64>,
        lags: LagPair,
        beta: f64,
        eta_floor: f64,
    },
    SingleCycle {
        alpha0: f64,
        lags: LagPair,
        beta: f64,
    },
    BaselineRatio {
        lags: LagPair,
    },
    Energy,
}

impl DetectorSpec {
    /// The four detectors compared in the OFDM experiments.
    pub fn standard_set(
        lags: LagPair,
        k_list: &[i64],
        beta: f64,
        eta_floor: f64,
    ) -> Vec<DetectorSpec> {
        vec![
            DetectorSpec::MultiCycle {
                k_list: k_list.to_vec(),
                lags,
                beta,
                eta_floor,
            },
            DetectorSpec::SingleCycle {
                alpha0: 0.0,
                lags,
                beta,
            },
            DetectorSpec::BaselineRatio { lags },
            DetectorSpec::Energy,
        ]
    }

    pub fn label(&self) -> String {
        match self {
            DetectorSpec::MultiCycle { k_list, .. } => format!("multi{}", k_list.len()),
            DetectorSpec::SingleCycle { .. } => "single1".to_string(),
            DetectorSpec::BaselineRatio { .. } => "baseline-ratio".to_string(),
            DetectorSpec::Energy => "energy".to_string(),
        }
    }

    pub fn lags(&self) -> Option<LagPair> {
        match self {
            DetectorSpec::MultiCycle { lags, .. }
            | DetectorSpec::SingleCycle { lags, .. }
            | DetectorSpec::BaselineRatio { lags } => Some(*lags),
            DetectorSpec::Energy => None,
        }
    }

    /// Builds the statistic evaluator for observations of `len` samples
    /// drawn with geometry `params`.
    pub fn prepare(&self, params: &OfdmParams, len: usize) -> Result<PreparedDetector> {
        if let Some(lags) = self.lags() {
            lags.check_ofdm(params.n_fft())?;
            lags.check_len(len)?;
        }
        Ok(match self {
            DetectorSpec::MultiCycle {
                k_list,
                lags,
                beta,
                eta_floor,
            } => {
                let freqs = cac::ofdm_cyclic_frequencies(params.n_fft(), params.n_cp(), k_list)?;
                let cfg = MultiCycleConfig::new(freqs, *lags, *beta, *eta_floor)?;
                PreparedDetector::Cyclic(MultiCycleDetector::new(cfg, len)?)
            }
            DetectorSpec::SingleCycle { alpha0, lags, beta } => {
                let cfg = singlecycle_config(*lags, *beta, *alpha0)?;
                PreparedDetector::Cyclic(MultiCycleDetector::new(cfg, len)?)
            }
            DetectorSpec::BaselineRatio { lags } => PreparedDetector::Ratio(*lags),
            DetectorSpec::Energy => PreparedDetector::Energy,
        })
    }
}

impl fmt::Display for DetectorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone)]
pub enum PreparedDetector {
    Cyclic(MultiCycleDetector),
    Ratio(LagPair),
    Energy,
}

impl PreparedDetector {
    pub fn statistic(&self, x: &[Complex64]) -> Result<f64> {
        match self {
            PreparedDetector::Cyclic(d) => d.statistic(x),
            PreparedDetector::Ratio(lags) => baseline_ratio_statistic(x, *lags),
            PreparedDetector::Energy => energy_statistic(x),
        }
    }
}
