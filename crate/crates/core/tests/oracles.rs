mod common;

use mcsense::cac::{weight_table, CyclicFrequencySet, LagPair};
use mcsense::detectors::{multicycle_statistic, MultiCycleConfig};
use mcsense::theory::{f_cdf, regularized_incomplete_beta, FDistParams};
use mcsense::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn multicycle_matches_literal_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut compared = 0;
    let mut case = 0;
    while compared < 300 {
        case += 1;
        let len = rng.random_range(8..=64usize);
        let tau = rng.random_range(1..len - 1);
        let mut tau_bar = rng.random_range(1..len - 1);
        if tau_bar == tau {
            tau_bar = if tau > 1 { tau - 1 } else { tau + 1 };
        }
        let k = rng.random_range(1..=6usize);
        let period = rng.random_range(5..200u32) as f64;
        let alphas: Vec<f64> = (0..k)
            .map(|i| (i as f64 - (k / 2) as f64) / period)
            .collect();
        let beta = rng.random_range(0.3..0.49);
        // The literal form is only defined where no phasor sum vanishes.
        let set = CyclicFrequencySet::new(alphas.clone()).unwrap();
        if weight_table(&set, len - tau, 1e-6)
            .unwrap()
            .included
            .contains(&false)
        {
            continue;
        }
        compared += 1;
        let x: Vec<Complex64> = (0..len)
            .map(|_| Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
            .collect();

        let cfg =
            MultiCycleConfig::new(set, LagPair::new(tau, tau_bar).unwrap(), beta, 1e-6).unwrap();
        let ours = multicycle_statistic(&x, &cfg).unwrap();
        let oracle = common::literal_multicycle(&x, &alphas, tau, tau_bar, beta);
        assert!(
            ((ours - oracle) / oracle).abs() < 1e-12,
            "case {case}: {ours} vs {oracle} (len {len}, tau {tau}, tau_bar {tau_bar}, K {k})"
        );
    }
}

#[test]
fn incomplete_beta_matches_quadrature() {
    let density = |t: f64| t * (1.0 - t) * (1.0 - t);
    let total = common::adaptive_simpson(&density, 0.0, 1.0, 1e-15);
    // J(2, 3) = Γ(2)Γ(3)/Γ(5) = 1/12
    assert!((total - 1.0 / 12.0).abs() < 1e-14);
    for i in 0..=40 {
        let z = i as f64 / 40.0;
        let expected = common::adaptive_simpson(&density, 0.0, z, 1e-15) / total;
        let got = regularized_incomplete_beta(z, 2.0, 3.0).unwrap();
        assert!((got - expected).abs() < 1e-10, "z={z}: {got} vs {expected}");
    }
}

#[test]
fn incomplete_beta_matches_quadrature_non_integer_shapes() {
    for &(a, b) in &[(1.5, 2.5), (3.0, 1.0), (2.0, 2.0), (4.0, 6.0)] {
        let density = move |t: f64| t.powf(a - 1.0) * (1.0 - t).powf(b - 1.0);
        let total = common::adaptive_simpson(&density, 0.0, 1.0, 1e-15);
        for i in 1..20 {
            let z = i as f64 / 20.0;
            let expected = common::adaptive_simpson(&density, 0.0, z, 1e-15) / total;
            let got = regularized_incomplete_beta(z, a, b).unwrap();
            assert!(
                (got - expected).abs() < 1e-10,
                "I_{z}({a},{b}): {got} vs {expected}"
            );
        }
    }
}

#[test]
fn f22_cdf_is_r_over_r_plus_one() {
    let p = FDistParams::two_two();
    let mut r = 0.0;
    while r <= 1e4 {
        assert!((f_cdf(r, p) - r / (r + 1.0)).abs() < 1e-12, "r={r}");
        r = if r == 0.0 { 1e-3 } else { r * 1.1 };
    }
}

#[test]
fn vanishing_phasor_sums_are_dropped_from_numerator() {
    // α = ±1/4 cancel at odd n: only even n contribute, normalized by their count.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x: Vec<Complex64> = (0..41)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let (tau, tau_bar) = (3, 5);
    let cfg = MultiCycleConfig::new(
        CyclicFrequencySet::new(vec![0.25, -0.25]).unwrap(),
        LagPair::new(tau, tau_bar).unwrap(),
        0.412,
        1e-6,
    )
    .unwrap();

    let n_tau = x.len() - tau;
    let mut num = Complex64::new(0.0, 0.0);
    let mut count = 0;
    for n in (0..n_tau).step_by(2) {
        let sign = if n % 4 == 0 { 1.0 } else { -1.0 };
        num += x[n] * x[n + tau].conj() * sign;
        count += 1;
    }
    let n_tau_bar = x.len() - tau_bar;
    let mut den = Complex64::new(0.0, 0.0);
    for n in 0..n_tau_bar {
        den += x[n]
            * x[n + tau_bar].conj()
            * Complex64::from_polar(1.0, -std::f64::consts::TAU * 0.412 * n as f64);
    }
    let expected = (num.norm_sqr() / count as f64) / (den.norm_sqr() / n_tau_bar as f64);
    let got = multicycle_statistic(&x, &cfg).unwrap();
    assert!(
        ((got - expected) / expected).abs() < 1e-12,
        "{got} vs {expected}"
    );
}
