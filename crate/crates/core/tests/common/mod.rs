//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::TAU;

use mcsense::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Direct double-loop evaluation of the multi-cycle ratio statistic, with
/// unreduced phases and η recomputed from the cosine and sine sums.
pub fn literal_multicycle(
    x: &[Complex64],
    alphas: &[f64],
    tau: usize,
    tau_bar: usize,
    beta: f64,
) -> f64 {
    let n = x.len();
    let n_tau = n - tau;
    let n_tau_bar = n - tau_bar;

    let mut num = Complex64::new(0.0, 0.0);
    for i in 0..n_tau {
        let mut phasor_sum = Complex64::new(0.0, 0.0);
        let mut cos_sum = 0.0;
        let mut sin_sum = 0.0;
        for &a in alphas {
            let phase = TAU * a * i as f64;
            phasor_sum += Complex64::new(phase.cos(), -phase.sin());
            cos_sum += phase.cos();
            sin_sum += phase.sin();
        }
        let eta = (cos_sum * cos_sum + sin_sum * sin_sum).sqrt();
        num += x[i] * x[i + tau].conj() * phasor_sum / eta;
    }

    let mut den = Complex64::new(0.0, 0.0);
    for i in 0..n_tau_bar {
        let phase = TAU * beta * i as f64;
        den += x[i] * x[i + tau_bar].conj() * Complex64::new(phase.cos(), -phase.sin());
    }

    (num.norm_sqr() / n_tau as f64) / (den.norm_sqr() / n_tau_bar as f64)
}

/// Circularly symmetric Gaussian samples with total power `variance`.
pub fn complex_noise<R: Rng>(len: usize, variance: f64, rng: &mut R) -> Vec<Complex64> {
    let sd = (variance / 2.0).sqrt();
    (0..len)
        .map(|_| {
            Complex64::new(
                rng.sample::<f64, _>(StandardNormal) * sd,
                rng.sample::<f64, _>(StandardNormal) * sd,
            )
        })
        .collect()
}

/// One-sample Kolmogorov–Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the KS statistic: sqrt(-ln(0.005)/2) / sqrt(n).
pub fn ks_critical_1pct(n: usize) -> f64 {
    (-(0.005f64).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// Jarque–Bera statistic; chi-square(2) under normality.
pub fn jarque_bera(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let m2 = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m3 = samples.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    let m4 = samples.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let skew = m3 / m2.powf(1.5);
    let kurt = m4 / (m2 * m2);
    n / 6.0 * (skew * skew + (kurt - 3.0).powi(2) / 4.0)
}

/// 99th percentile of chi-square with 2 degrees of freedom: -2 ln(0.01).
pub fn chi2_2dof_99() -> f64 {
    -2.0 * (0.01f64).ln()
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 50)
}
