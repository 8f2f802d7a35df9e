//! Closed-form false-alarm law and threshold calibration.
//!
//! Under H0 the numerator and denominator of the cyclic ratio statistic are
//! independent chi-square variables with two degrees of freedom each (after
//! normalization by the common noise power), so the statistic is F(2, 2)
//! distributed with CDF `r / (r + 1)` and `Pf(λ) = 1 / (λ + 1)`.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

use crate::cac::LagPair;
use crate::detectors::DetectorSpec;
use crate::{Error, Result};

/// False-alarm probability of the cyclic ratio statistic at threshold `lambda`.
pub fn pf_of_threshold(lambda: f64) -> Result<f64> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::param(
            "lambda",
            format!("threshold must be positive, got {lambda}"),
        ));
    }
    Ok(1.0 / (lambda + 1.0))
}

/// Threshold giving false-alarm probability `pf`: `λ = 1/pf - 1`.
pub fn threshold_for_pf(pf: f64) -> Result<f64> {
    check_probability(pf)?;
    Ok(1.0 / pf - 1.0)
}

fn check_probability(pf: f64) -> Result<()> {
    if !(pf > 0.0 && pf < 1.0) {
        return Err(Error::param(
            "pf",
            format!("must lie strictly inside (0, 1), got {pf}"),
        ));
    }
    Ok(())
}

const BETA_MAX_ITER: usize = 500;
const BETA_EPS: f64 = 1e-15;
const TINY: f64 = 1e-300;

/// `I_z(a, b) = ∫₀^z t^{a-1}(1-t)^{b-1} dt / B(a, b)`.
pub fn regularized_incomplete_beta(z: f64, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
        return Err(Error::param(
            "a, b",
            format!("shape parameters must be positive, got ({a}, {b})"),
        ));
    }
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::param("z", format!("must lie in [0, 1], got {z}")));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z == 1.0 {
        return Ok(1.0);
    }
    // The continued fraction converges fast below the mean of Beta(a, b);
    // above it use I_z(a, b) = 1 - I_{1-z}(b, a).
    if z > (a + 1.0) / (a + b + 2.0) {
        return Ok(1.0 - beta_cf_form(1.0 - z, b, a)?);
    }
    beta_cf_form(z, a, b)
}

fn beta_cf_form(z: f64, a: f64, b: f64) -> Result<f64> {
    let ln_front = a * z.ln() + b * (1.0 - z).ln() - ln_beta(a, b);
    Ok(ln_front.exp() * beta_continued_fraction(z, a, b)? / a)
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Modified Lentz evaluation of the incomplete beta continued fraction.
fn beta_continued_fraction(z: f64, a: f64, b: f64) -> Result<f64> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * z / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=BETA_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * z / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * z / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < BETA_EPS {
            return Ok(h);
        }
    }
    Err(Error::Degenerate(format!(
        "incomplete beta continued fraction did not converge for z={z}, a={a}, b={b}"
    )))
}

/// Degrees of freedom of an F distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FDistParams {
    d1: f64,
    d2: f64,
}

impl FDistParams {
    pub fn new(d1: f64, d2: f64) -> Result<Self> {
        if !(d1 > 0.0 && d1.is_finite() && d2 > 0.0 && d2.is_finite()) {
            return Err(Error::param(
                "d1, d2",
                format!("degrees of freedom must be positive, got ({d1}, {d2})"),
            ));
        }
        Ok(Self { d1, d2 })
    }

    /// The H0 law of the cyclic ratio statistic.
    pub fn two_two() -> Self {
        Self { d1: 2.0, d2: 2.0 }
    }

    pub fn d1(&self) -> f64 {
        self.d1
    }

    pub fn d2(&self) -> f64 {
        self.d2
    }
}

/// `F(r; d1, d2) = I_{d1 r / (d1 r + d2)}(d1/2, d2/2)`; zero for `r <= 0`.
pub fn f_cdf(r: f64, params: FDistParams) -> f64 {
    if r.is_nan() {
        return f64::NAN;
    }
    if r <= 0.0 {
        return 0.0;
    }
    if r.is_infinite() {
        return 1.0;
    }
    let x = params.d1 * r;
    let z = x / (x + params.d2);
    regularized_incomplete_beta(z, params.d1 / 2.0, params.d2 / 2.0)
        .expect("argument and shapes are in range by construction")
}

/// `Q⁻¹(p)`: the point whose standard normal upper tail has mass `p`.
pub fn inverse_normal_tail(p: f64) -> Result<f64> {
    check_probability(p)?;
    Ok(-Normal::standard().inverse_cdf(p))
}

/// Smallest sample count for which the Gaussian approximation is used.
pub const ENERGY_MIN_SAMPLES: usize = 100;

/// Energy threshold `σ²_nom (1 + Q⁻¹(pf) / √n)` from the nominal noise variance.
pub fn energy_threshold(pf: f64, n: usize, sigma2_nominal: f64) -> Result<f64> {
    let q = inverse_normal_tail(pf)?;
    if n < ENERGY_MIN_SAMPLES {
        return Err(Error::param(
            "n",
            format!("energy calibration needs at least {ENERGY_MIN_SAMPLES} samples, got {n}"),
        ));
    }
    if !(sigma2_nominal > 0.0 && sigma2_nominal.is_finite()) {
        return Err(Error::param(
            "sigma2",
            format!("must be positive, got {sigma2_nominal}"),
        ));
    }
    Ok(sigma2_nominal * (1.0 + q / (n as f64).sqrt()))
}

/// Threshold on `|R̂⁰(τ)| / |R̂⁰(τ̄)|` with false-alarm probability `pf`.
///
/// The squared ratio equals the single-cycle statistic times `N_τ̄ / N_τ`,
/// so the threshold follows from the same F(2, 2) law.
pub fn baseline_ratio_threshold(pf: f64, lags: LagPair, n: usize) -> Result<f64> {
    lags.check_len(n)?;
    let lambda = threshold_for_pf(pf)?;
    let n_tau = (n - lags.tau()) as f64;
    let n_tau_bar = (n - lags.tau_bar()) as f64;
    Ok((lambda * n_tau_bar / n_tau).sqrt())
}

/// Threshold for any detector at false-alarm target `pf` on `n`-sample observations.
pub fn detector_threshold(
    spec: &DetectorSpec,
    pf: f64,
    n: usize,
    sigma2_nominal: f64,
) -> Result<f64> {
    match spec {
        DetectorSpec::MultiCycle { .. } | DetectorSpec::SingleCycle { .. } => threshold_for_pf(pf),
        DetectorSpec::BaselineRatio { lags } => baseline_ratio_threshold(pf, *lags, n),
        DetectorSpec::Energy => energy_threshold(pf, n, sigma2_nominal),
    }
}
