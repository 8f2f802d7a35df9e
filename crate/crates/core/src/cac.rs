//! Cyclic autocorrelation estimation and multi-cycle phasor weights.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::{Error, Result};

/// Ordered set of normalized cyclic frequencies (cycles/sample).
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicFrequencySet {
    alphas: Vec<f64>,
    k_indices: Vec<i64>,
}

impl CyclicFrequencySet {
    /// Arbitrary frequencies without harmonic indices.
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        Self::check(&alphas)?;
        Ok(Self {
            alphas,
            k_indices: Vec::new(),
        })
    }

    fn check(alphas: &[f64]) -> Result<()> {
        if alphas.is_empty() {
            return Err(Error::param(
                "alphas",
                "at least one cyclic frequency is required",
            ));
        }
        if let Some(a) = alphas.iter().find(|a| !a.is_finite()) {
            return Err(Error::param(
                "alphas",
                format!("non-finite cyclic frequency {a}"),
            ));
        }
        for (i, a) in alphas.iter().enumerate() {
            if alphas[..i].contains(a) {
                return Err(Error::param(
                    "alphas",
                    format!("duplicate cyclic frequency {a}"),
                ));
            }
        }
        Ok(())
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Harmonic indices `k` when built from an OFDM symbol period, empty otherwise.
    pub fn k_indices(&self) -> &[i64] {
        &self.k_indices
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }
}

/// Cyclic frequencies `k / (n_fft + n_cp)` induced by the cyclic prefix.
pub fn ofdm_cyclic_frequencies(
    n_fft: usize,
    n_cp: usize,
    k_list: &[i64],
) -> Result<CyclicFrequencySet> {
    let period = n_fft + n_cp;
    if period == 0 {
        return Err(Error::param(
            "n_fft",
            "symbol period n_fft + n_cp must be positive",
        ));
    }
    if k_list.is_empty() {
        return Err(Error::param(
            "k_list",
            "at least one harmonic index is required",
        ));
    }
    for (i, k) in k_list.iter().enumerate() {
        if k_list[..i].contains(k) {
            return Err(Error::param(
                "k_list",
                format!("duplicate harmonic index {k}"),
            ));
        }
    }
    let alphas = k_list.iter().map(|&k| k as f64 / period as f64).collect();
    Ok(CyclicFrequencySet {
        alphas,
        k_indices: k_list.to_vec(),
    })
}

/// Lag `tau` of the cyclic test and reference lag `tau_bar` of the normalizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LagPair {
    tau: usize,
    tau_bar: usize,
}

impl LagPair {
    pub fn new(tau: usize, tau_bar: usize) -> Result<Self> {
        if tau == 0 || tau_bar == 0 {
            return Err(Error::param("tau", "lags must be at least 1"));
        }
        if tau == tau_bar {
            return Err(Error::param(
                "tau_bar",
                format!("reference lag must differ from tau (both {tau})"),
            ));
        }
        Ok(Self { tau, tau_bar })
    }

    /// The usual OFDM choice `tau = n_fft`, `tau_bar = n_fft - 2`.
    pub fn for_ofdm(n_fft: usize) -> Result<Self> {
        if n_fft < 3 {
            return Err(Error::param(
                "n_fft",
                "must be at least 3 to derive default lags",
            ));
        }
        Self::new(n_fft, n_fft - 2)
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn tau_bar(&self) -> usize {
        self.tau_bar
    }

    pub fn max(&self) -> usize {
        self.tau.max(self.tau_bar)
    }

    /// The reference lag must not hit the prefix correlation lag.
    pub fn check_ofdm(&self, n_fft: usize) -> Result<()> {
        if self.tau_bar == n_fft {
            return Err(Error::param(
                "tau_bar",
                format!("reference lag equals n_fft={n_fft}, where the prefix correlates"),
            ));
        }
        Ok(())
    }

    /// Needs at least one lag product at each lag.
    pub fn check_len(&self, len: usize) -> Result<()> {
        if len <= self.max() {
            return Err(Error::TooShort {
                len,
                reason: format!(
                    "lags ({}, {}) need more than {} samples",
                    self.tau,
                    self.tau_bar,
                    self.max()
                ),
            });
        }
        Ok(())
    }
}

/// `e^{-j 2π α n}` with the phase reduced modulo one cycle before scaling.
#[inline]
pub(crate) fn phasor(alpha: f64, n: usize) -> Complex64 {
    let cycles = (alpha * n as f64).fract();
    let (s, c) = (TAU * cycles).sin_cos();
    Complex64::new(c, -s)
}

/// `R̂_x^α(τ) = (1/N_τ) Σ_{n<N_τ} x[n] x[n+τ]* e^{-j2παn}` with `N_τ = N - τ`.
pub fn cac_estimate(x: &[Complex64], alpha: f64, tau: usize) -> Result<Complex64> {
    if tau >= x.len() {
        return Err(Error::TooShort {
            len: x.len(),
            reason: format!("lag {tau} needs at least {} samples", tau + 1),
        });
    }
    let n_tau = x.len() - tau;
    let products = x[..n_tau].iter().zip(&x[tau..]);
    let sum: Complex64 = if alpha == 0.0 {
        products.map(|(a, b)| a * b.conj()).sum()
    } else {
        products
            .enumerate()
            .map(|(n, (a, b))| a * b.conj() * phasor(alpha, n))
            .sum()
    };
    Ok(sum / n_tau as f64)
}

/// Per-index combination of the K cyclic phasors.
///
/// `f[n] = Σ_k cos(2πα_k n)`, `g[n] = Σ_k sin(2πα_k n)`, `eta[n] = |f[n] + j g[n]|`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub eta: Vec<f64>,
    pub included: Vec<bool>,
}

impl WeightTable {
    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    /// `(f_n - j g_n) / η_n` for included indices, zero otherwise.
    pub fn unit_weight(&self, n: usize) -> Complex64 {
        if self.included[n] {
            Complex64::new(self.f[n], -self.g[n]) / self.eta[n]
        } else {
            Complex64::default()
        }
    }
}

pub fn weight_table(freqs: &CyclicFrequencySet, n_max: usize, floor: f64) -> Result<WeightTable> {
    if n_max == 0 {
        return Err(Error::param("n_max", "must be at least 1"));
    }
    if !(floor.is_finite() && floor >= 0.0) {
        return Err(Error::param(
            "eta_floor",
            format!("must be finite and >= 0, got {floor}"),
        ));
    }
    let mut table = WeightTable {
        f: Vec::with_capacity(n_max),
        g: Vec::with_capacity(n_max),
        eta: Vec::with_capacity(n_max),
        included: Vec::with_capacity(n_max),
    };
    for n in 0..n_max {
        let (mut f, mut g) = (0.0, 0.0);
        for &alpha in &freqs.alphas {
            let (s, c) = (TAU * (alpha * n as f64).fract()).sin_cos();
            f += c;
            g += s;
        }
        let eta = f.hypot(g);
        table.f.push(f);
        table.g.push(g);
        table.eta.push(eta);
        table.included.push(eta >= floor && eta > 0.0);
    }
    Ok(table)
}
