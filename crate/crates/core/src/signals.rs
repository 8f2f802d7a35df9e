//! OFDM primary-user synthesis, uncertain-variance noise and labeled observations.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};

use crate::{Error, Hypothesis, Result};

/// Square QAM family used on the data subcarriers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModulationScheme {
    Qpsk,
    Qam16,
    Qam64,
}

impl ModulationScheme {
    pub const ALL: [ModulationScheme; 3] = [Self::Qpsk, Self::Qam16, Self::Qam64];

    pub fn bits_per_symbol(self) -> usize {
        match self {
            Self::Qpsk => 2,
            Self::Qam16 => 4,
            Self::Qam64 => 6,
        }
    }

    pub fn order(self) -> usize {
        1 << self.bits_per_symbol()
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Qpsk => "qpsk",
            Self::Qam16 => "qam16",
            Self::Qam64 => "qam64",
        }
    }

    /// Unit-average-power constellation indexed by the bit label read MSB first.
    ///
    /// The first half of the label selects the in-phase level, the second half
    /// the quadrature level. On each axis the level index `i` (0 = most
    /// positive) carries the Gray label `i ^ (i >> 1)`, so a leading 0 bit
    /// means a positive amplitude.
    pub fn constellation(self) -> Vec<Complex64> {
        let axis_bits = self.bits_per_symbol() / 2;
        let levels = 1usize << axis_bits;
        // Per-axis PAM power is (M^2 - 1) / 3, two axes.
        let scale = 1.0 / (2.0 * ((levels * levels - 1) as f64) / 3.0).sqrt();

        let mut amplitude = vec![0.0; levels];
        for i in 0..levels {
            let gray = i ^ (i >> 1);
            amplitude[gray] = ((levels - 1) as f64 - 2.0 * i as f64) * scale;
        }

        (0..self.order())
            .map(|label| {
                let i_label = label >> axis_bits;
                let q_label = label & (levels - 1);
                Complex64::new(amplitude[i_label], amplitude[q_label])
            })
            .collect()
    }
}

impl fmt::Display for ModulationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModulationScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "qpsk" | "4qam" | "qam4" => Ok(Self::Qpsk),
            "qam16" | "16qam" => Ok(Self::Qam16),
            "qam64" | "64qam" => Ok(Self::Qam64),
            other => Err(Error::param(
                "modulation",
                format!("unknown scheme `{other}` (expected qpsk, qam16 or qam64)"),
            )),
        }
    }
}

/// Maps a bit stream onto constellation points, `bits_per_symbol` bits at a time.
pub fn map_bits_to_symbols(bits: &[bool], scheme: ModulationScheme) -> Result<Vec<Complex64>> {
    let width = scheme.bits_per_symbol();
    if !bits.len().is_multiple_of(width) {
        return Err(Error::param(
            "bits",
            format!(
                "length {} is not a multiple of {} bits per {} symbol",
                bits.len(),
                width,
                scheme
            ),
        ));
    }
    let table = scheme.constellation();
    Ok(bits
        .chunks_exact(width)
        .map(|chunk| {
            let label = chunk
                .iter()
                .fold(0usize, |acc, &b| (acc << 1) | usize::from(b));
            table[label]
        })
        .collect())
}

/// Cyclic prefix length as a fraction of the FFT size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CpRatio {
    num: u32,
    den: u32,
}

impl CpRatio {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if den == 0 {
            return Err(Error::param("cp_ratio", "zero denominator"));
        }
        let g = gcd(num, den);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    pub fn numerator(self) -> u32 {
        self.num
    }

    pub fn denominator(self) -> u32 {
        self.den
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.num) / f64::from(self.den)
    }

    /// Exact prefix length for `n_fft`, or an error when it is not an integer.
    pub fn prefix_len(self, n_fft: usize) -> Result<usize> {
        let scaled = n_fft as u64 * u64::from(self.num);
        if !scaled.is_multiple_of(u64::from(self.den)) {
            return Err(Error::param(
                "cp_ratio",
                format!("{self} of n_fft={n_fft} is not an integer number of samples"),
            ));
        }
        Ok((scaled / u64::from(self.den)) as usize)
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

impl fmt::Display for CpRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for CpRatio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::param(
                "cp_ratio",
                format!("cannot parse `{s}` as a ratio like 1/8"),
            )
        };
        match s.trim().split_once('/') {
            Some((n, d)) => {
                let n = n.trim().parse().map_err(|_| bad())?;
                let d = d.trim().parse().map_err(|_| bad())?;
                CpRatio::new(n, d)
            }
            None => CpRatio::new(s.trim().parse().map_err(|_| bad())?, 1),
        }
    }
}

/// Symmetric used-subcarrier set `{-half..=-1} ∪ {1..=half}` with the DC bin nulled.
pub fn symmetric_subcarriers(half: usize) -> Vec<i32> {
    let half = half as i32;
    (-half..=-1).chain(1..=half).collect()
}

/// OFDM frame geometry and modulation.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmParams {
    n_fft: usize,
    cp_ratio: CpRatio,
    n_cp: usize,
    used_subcarriers: Vec<i32>,
    n_ofdm_symbols: usize,
    modulation: ModulationScheme,
}

impl OfdmParams {
    pub fn new(
        n_fft: usize,
        cp_ratio: CpRatio,
        used_subcarriers: Vec<i32>,
        n_ofdm_symbols: usize,
        modulation: ModulationScheme,
    ) -> Result<Self> {
        if n_fft < 2 {
            return Err(Error::param(
                "n_fft",
                format!("must be at least 2, got {n_fft}"),
            ));
        }
        let n_cp = cp_ratio.prefix_len(n_fft)?;
        if n_cp > n_fft {
            return Err(Error::param(
                "cp_ratio",
                format!("{cp_ratio} exceeds one symbol"),
            ));
        }
        if n_ofdm_symbols == 0 {
            return Err(Error::param("n_ofdm_symbols", "must be at least 1"));
        }
        if used_subcarriers.is_empty() {
            return Err(Error::param("used_subcarriers", "set is empty"));
        }
        let lo = -((n_fft / 2) as i64);
        let hi = (n_fft / 2) as i64 - 1;
        let mut seen = vec![false; n_fft];
        for &k in &used_subcarriers {
            let k64 = i64::from(k);
            if k == 0 {
                return Err(Error::param(
                    "used_subcarriers",
                    "DC bin 0 must stay unused",
                ));
            }
            if k64 < lo || k64 > hi {
                return Err(Error::param(
                    "used_subcarriers",
                    format!("bin {k} outside [{lo}, {hi}]"),
                ));
            }
            let bin = k64.rem_euclid(n_fft as i64) as usize;
            if std::mem::replace(&mut seen[bin], true) {
                return Err(Error::param(
                    "used_subcarriers",
                    format!("bin {k} listed twice"),
                ));
            }
        }
        Ok(Self {
            n_fft,
            cp_ratio,
            n_cp,
            used_subcarriers,
            n_ofdm_symbols,
            modulation,
        })
    }

    /// Mobile WiMAX profile: 512-point FFT, 1/8 prefix, bins ±1..±240, 32 QPSK symbols.
    pub fn wimax() -> Self {
        Self::new(
            512,
            CpRatio { num: 1, den: 8 },
            symmetric_subcarriers(240),
            32,
            ModulationScheme::Qpsk,
        )
        .expect("built-in WiMAX profile is valid")
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    pub fn cp_ratio(&self) -> CpRatio {
        self.cp_ratio
    }

    pub fn n_cp(&self) -> usize {
        self.n_cp
    }

    pub fn used_subcarriers(&self) -> &[i32] {
        &self.used_subcarriers
    }

    pub fn n_ofdm_symbols(&self) -> usize {
        self.n_ofdm_symbols
    }

    pub fn modulation(&self) -> ModulationScheme {
        self.modulation
    }

    pub fn symbol_len(&self) -> usize {
        self.n_fft + self.n_cp
    }

    pub fn frame_len(&self) -> usize {
        self.n_ofdm_symbols * self.symbol_len()
    }

    pub fn with_cp_ratio(&self, cp_ratio: CpRatio) -> Result<Self> {
        Self::new(
            self.n_fft,
            cp_ratio,
            self.used_subcarriers.clone(),
            self.n_ofdm_symbols,
            self.modulation,
        )
    }

    pub fn with_symbols(&self, n_ofdm_symbols: usize) -> Result<Self> {
        Self::new(
            self.n_fft,
            self.cp_ratio,
            self.used_subcarriers.clone(),
            n_ofdm_symbols,
            self.modulation,
        )
    }

    pub fn with_modulation(&self, modulation: ModulationScheme) -> Self {
        Self {
            modulation,
            ..self.clone()
        }
    }
}

/// Reusable OFDM frame generator; holds the inverse FFT plan and constellation.
pub struct OfdmGenerator {
    params: OfdmParams,
    ifft: Arc<dyn Fft<f64>>,
    constellation: Vec<Complex64>,
    bins: Vec<usize>,
    // 1/sqrt(n_fft) times the correction for unused bins.
    unit_scale: f64,
}

impl fmt::Debug for OfdmGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OfdmGenerator")
            .field("params", &self.params)
            .finish_non_exhaustive()
    }
}

impl OfdmGenerator {
    pub fn new(params: &OfdmParams) -> Self {
        let n_fft = params.n_fft;
        let ifft = FftPlanner::new().plan_fft_inverse(n_fft);
        let bins = params
            .used_subcarriers
            .iter()
            .map(|&k| i64::from(k).rem_euclid(n_fft as i64) as usize)
            .collect::<Vec<_>>();
        let unit_scale = (1.0 / n_fft as f64).sqrt() * (n_fft as f64 / bins.len() as f64).sqrt();
        Self {
            params: params.clone(),
            ifft,
            constellation: params.modulation.constellation(),
            bins,
            unit_scale,
        }
    }

    pub fn params(&self) -> &OfdmParams {
        &self.params
    }

    pub fn generate<R: Rng + ?Sized>(&self, target_power: f64, rng: &mut R) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); self.params.frame_len()];
        self.generate_into(target_power, rng, &mut out);
        out
    }

    /// Writes one frame into `out`, which must hold exactly `frame_len` samples.
    pub fn generate_into<R: Rng + ?Sized>(
        &self,
        target_power: f64,
        rng: &mut R,
        out: &mut [Complex64],
    ) {
        let p = &self.params;
        assert_eq!(
            out.len(),
            p.frame_len(),
            "output buffer must match frame length"
        );
        let scale = self.unit_scale * target_power.sqrt();
        let order = self.constellation.len();
        let mut freq = vec![Complex64::default(); p.n_fft];
        let mut scratch = vec![Complex64::default(); self.ifft.get_inplace_scratch_len()];

        for symbol in out.chunks_exact_mut(p.symbol_len()) {
            freq.fill(Complex64::default());
            for &bin in &self.bins {
                freq[bin] = self.constellation[rng.random_range(0..order)];
            }
            self.ifft.process_with_scratch(&mut freq, &mut scratch);

            let (prefix, useful) = symbol.split_at_mut(p.n_cp);
            for (dst, src) in useful.iter_mut().zip(&freq) {
                *dst = src * scale;
            }
            prefix.copy_from_slice(&useful[p.n_fft - p.n_cp..]);
        }
    }
}

/// Draws one frame of `n_ofdm_symbols` CP-OFDM symbols with expected power `target_power`.
pub fn generate_ofdm_frame<R: Rng + ?Sized>(
    params: &OfdmParams,
    target_power: f64,
    rng: &mut R,
) -> Vec<Complex64> {
    OfdmGenerator::new(params).generate(target_power, rng)
}

/// Nominal noise variance with a uniform uncertainty interval `[σ²/ε, εσ²]`, `ε = 10^(Δ/10)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseUncertaintyModel {
    sigma2_nominal: f64,
    delta_db: f64,
}

impl NoiseUncertaintyModel {
    pub fn new(sigma2_nominal: f64, delta_db: f64) -> Result<Self> {
        if !(sigma2_nominal.is_finite() && sigma2_nominal > 0.0) {
            return Err(Error::param(
                "sigma2",
                format!("nominal variance must be positive and finite, got {sigma2_nominal}"),
            ));
        }
        if !(delta_db.is_finite() && delta_db >= 0.0) {
            return Err(Error::param(
                "delta_db",
                format!("uncertainty must be a finite non-negative dB value, got {delta_db}"),
            ));
        }
        Ok(Self {
            sigma2_nominal,
            delta_db,
        })
    }

    pub fn sigma2_nominal(&self) -> f64 {
        self.sigma2_nominal
    }

    pub fn delta_db(&self) -> f64 {
        self.delta_db
    }

    pub fn epsilon(&self) -> f64 {
        10f64.powf(self.delta_db / 10.0)
    }

    pub fn bounds(&self) -> (f64, f64) {
        let eps = self.epsilon();
        (self.sigma2_nominal / eps, self.sigma2_nominal * eps)
    }
}

/// Realized noise variance for one observation.
pub fn draw_noise_variance<R: Rng + ?Sized>(model: &NoiseUncertaintyModel, rng: &mut R) -> f64 {
    if model.delta_db == 0.0 {
        return model.sigma2_nominal;
    }
    let (lo, hi) = model.bounds();
    rng.random_range(lo..=hi)
}

/// Adds i.i.d. circularly symmetric Gaussian noise of total power `variance`.
pub fn add_complex_noise<R: Rng + ?Sized>(samples: &mut [Complex64], variance: f64, rng: &mut R) {
    let sd = (variance / 2.0).sqrt();
    for s in samples {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *s += Complex64::new(re * sd, im * sd);
    }
}

/// Complex baseband samples with the hypothesis they were drawn under.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub samples: Vec<Complex64>,
    pub hypothesis: Hypothesis,
    pub realized_noise_variance: f64,
    pub snr_db: f64,
}

/// Observation factory for one (geometry, SNR, noise model) operating point.
#[derive(Debug)]
pub struct Synthesizer {
    generator: OfdmGenerator,
    noise: NoiseUncertaintyModel,
    snr_db: f64,
}

impl Synthesizer {
    pub fn new(params: &OfdmParams, snr_db: f64, noise: NoiseUncertaintyModel) -> Self {
        Self {
            generator: OfdmGenerator::new(params),
            noise,
            snr_db,
        }
    }

    pub fn len(&self) -> usize {
        self.generator.params.frame_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Signal power σ_s² = σ²_nominal · 10^(SNR/10).
    pub fn signal_power(&self) -> f64 {
        self.noise.sigma2_nominal * 10f64.powf(self.snr_db / 10.0)
    }

    /// Fills `out` with one observation and returns the realized noise variance.
    ///
    /// Draw order is fixed: noise variance, then the frame (H1 only), then noise samples.
    pub fn observe_into<R: Rng + ?Sized>(
        &self,
        hypothesis: Hypothesis,
        rng: &mut R,
        out: &mut [Complex64],
    ) -> f64 {
        let variance = draw_noise_variance(&self.noise, rng);
        match hypothesis {
            Hypothesis::H1 => self.generator.generate_into(self.signal_power(), rng, out),
            Hypothesis::H0 => out.fill(Complex64::default()),
        }
        add_complex_noise(out, variance, rng);
        variance
    }

    pub fn observe<R: Rng + ?Sized>(&self, hypothesis: Hypothesis, rng: &mut R) -> Observation {
        let mut samples = vec![Complex64::default(); self.len()];
        let realized_noise_variance = self.observe_into(hypothesis, rng, &mut samples);
        Observation {
            samples,
            hypothesis,
            realized_noise_variance,
            snr_db: self.snr_db,
        }
    }
}

pub fn synthesize_observation<R: Rng + ?Sized>(
    hypothesis: Hypothesis,
    params: &OfdmParams,
    snr_db: f64,
    noise: &NoiseUncertaintyModel,
    rng: &mut R,
) -> Observation {
    Synthesizer::new(params, snr_db, *noise).observe(hypothesis, rng)
}

pub fn remove_mean(samples: &[Complex64]) -> Vec<Complex64> {
    if samples.is_empty() {
        return Vec::new();
    }
    let mean = samples.iter().sum::<Complex64>() / samples.len() as f64;
    samples.iter().map(|s| s - mean).collect()
}
