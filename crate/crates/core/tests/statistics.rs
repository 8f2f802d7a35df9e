//! Distributional checks of the synthesized signals and the detectors.

mod common;

use mcsense::cac::{self, LagPair};
use mcsense::detectors::{
    DetectorSpec, MultiCycleConfig, MultiCycleDetector, DEFAULT_BETA, DEFAULT_ETA_FLOOR,
};
use mcsense::montecarlo::{
    run_pd_experiment, run_pd_point, run_pf_experiment, sample_statistics, trial_stream,
    ExperimentPlan, SweepPoint,
};
use mcsense::signals::{
    symmetric_subcarriers, CpRatio, ModulationScheme, NoiseUncertaintyModel, OfdmGenerator,
    OfdmParams, Synthesizer,
};
use mcsense::theory;
use mcsense::{Complex64, Hypothesis};

const K5: [i64; 5] = [-2, -1, 0, 1, 2];

/// 8 symbols of a 128-point FFT with a 1/8 prefix: 1152 samples.
fn short_params() -> OfdmParams {
    OfdmParams::new(
        128,
        CpRatio::new(1, 8).unwrap(),
        symmetric_subcarriers(60),
        8,
        ModulationScheme::Qpsk,
    )
    .unwrap()
}

fn short_lags() -> LagPair {
    LagPair::new(128, 126).unwrap()
}

fn cyclic_detectors(lags: LagPair) -> Vec<DetectorSpec> {
    vec![
        DetectorSpec::SingleCycle {
            alpha0: 0.0,
            lags,
            beta: DEFAULT_BETA,
        },
        DetectorSpec::MultiCycle {
            k_list: K5.to_vec(),
            lags,
            beta: DEFAULT_BETA,
            eta_floor: DEFAULT_ETA_FLOOR,
        },
    ]
}

fn wimax_point(snr_db: f64, delta_db: f64) -> SweepPoint {
    SweepPoint {
        snr_db,
        delta_db,
        cp_ratio: CpRatio::new(1, 8).unwrap(),
        n_ofdm: 32,
        modulation: ModulationScheme::Qpsk,
    }
}

#[test]
fn h0_noise_is_white() {
    let noise = NoiseUncertaintyModel::new(1.0, 1.0).unwrap();
    let synth = Synthesizer::new(&OfdmParams::wimax(), 0.0, noise);
    for trial in 0..3 {
        let obs = synth.observe(Hypothesis::H0, &mut trial_stream(17, trial));
        let x = &obs.samples;
        let n = x.len() as f64;
        let power = x.iter().map(|z| z.norm_sqr()).sum::<f64>() / n;
        for tau in 1..=200 {
            let r = cac::cac_estimate(x, 0.0, tau).unwrap().norm() / power;
            assert!(r < 5.0 / n.sqrt(), "lag {tau}: {r}");
        }
    }
}

#[test]
fn h0_power_is_uniform_over_uncertainty_interval() {
    let noise = NoiseUncertaintyModel::new(1.0, 1.0).unwrap();
    let (lo, hi) = noise.bounds();
    let synth = Synthesizer::new(&OfdmParams::wimax(), 0.0, noise);
    let n = 2000;
    let powers: Vec<f64> = (0..n)
        .map(|i| {
            let obs = synth.observe(Hypothesis::H0, &mut trial_stream(3, i));
            obs.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / obs.samples.len() as f64
        })
        .collect();
    let d = common::ks_statistic(&powers, |p| ((p - lo) / (hi - lo)).clamp(0.0, 1.0));
    assert!(d < common::ks_critical_1pct(n as usize), "KS {d}");
}

#[test]
fn signal_power_tracks_snr() {
    for snr_db in [-10.0, 0.0, 5.0] {
        let noise = NoiseUncertaintyModel::new(2.0, 1.0).unwrap();
        let synth = Synthesizer::new(&OfdmParams::wimax(), snr_db, noise);
        let gen = OfdmGenerator::new(&OfdmParams::wimax());
        let mut total = 0.0;
        for i in 0..100 {
            let frame = gen.generate(synth.signal_power(), &mut trial_stream(5, i));
            total += frame.iter().map(|z| z.norm_sqr()).sum::<f64>() / frame.len() as f64;
        }
        let ratio = total / 100.0 / noise.sigma2_nominal();
        let expected = 10f64.powf(snr_db / 10.0);
        assert!(
            (ratio / expected - 1.0).abs() < 0.05,
            "snr {snr_db}: {ratio} vs {expected}"
        );
    }
}

#[test]
fn h0_statistics_follow_f22() {
    let mut plan = ExperimentPlan::new(short_params(), cyclic_detectors(short_lags()));
    plan.trials = 5000;
    plan.master_seed = 99;
    plan.delta_db_grid = vec![1.0];
    let point = plan.sweep_points()[0];
    let stats = sample_statistics(&plan, &point, Hypothesis::H0).unwrap();
    for (label, s) in plan.labels().iter().zip(&stats) {
        let d = common::ks_statistic(s, |r| r / (r + 1.0));
        assert!(d < common::ks_critical_1pct(s.len()), "{label}: KS {d}");
        let mut sorted = s.clone();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[sorted.len() / 2];
        assert!((median - 1.0).abs() < 0.1, "{label}: median {median}");
    }
}

#[test]
fn numerator_and_denominator_components_are_gaussian() {
    let params = short_params();
    let freqs = cac::ofdm_cyclic_frequencies(128, 16, &K5).unwrap();
    let cfg = MultiCycleConfig::new(freqs, short_lags(), DEFAULT_BETA, DEFAULT_ETA_FLOOR).unwrap();
    let det = MultiCycleDetector::new(cfg, params.frame_len()).unwrap();
    let noise = NoiseUncertaintyModel::new(1.0, 0.0).unwrap();
    let synth = Synthesizer::new(&params, 0.0, noise);

    let trials = 5000;
    let mut parts: [Vec<f64>; 4] = Default::default();
    let mut buf = vec![Complex64::default(); params.frame_len()];
    for i in 0..trials {
        synth.observe_into(Hypothesis::H0, &mut trial_stream(8, i), &mut buf);
        let (a, b) = det.normalized_sums(&buf).unwrap();
        for (dst, v) in parts.iter_mut().zip([a.re, a.im, b.re, b.im]) {
            dst.push(v);
        }
    }
    for (name, v) in ["A1", "A2", "B1", "B2"].iter().zip(&parts) {
        let jb = common::jarque_bera(v);
        assert!(jb < common::chi2_2dof_99(), "{name}: JB {jb}");
        // Each component has variance σ⁴/2 with σ² = 1.
        let var = v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64;
        assert!((var - 0.5).abs() < 0.05, "{name}: variance {var}");
    }
}

#[test]
fn single_cycle_false_alarm_at_lambda_nine() {
    let mut plan =
        ExperimentPlan::new(short_params(), cyclic_detectors(short_lags())[..1].to_vec());
    plan.master_seed = 4;
    let table = run_pf_experiment(&plan, &[9.0, 1e9]).unwrap();
    assert_eq!(table.observation_len, 1152);
    let pf = table.get(0, "single1").unwrap().p_hat;
    assert!((pf - 0.1).abs() < 0.01, "{pf}");
    assert!(table.get(1, "single1").unwrap().successes <= 3);
}

#[test]
fn false_alarm_rate_within_binomial_band_across_runs() {
    let mut plan = ExperimentPlan::new(short_params(), cyclic_detectors(short_lags()));
    plan.trials = 2000;
    let lambdas = [1.0, 9.0];
    let runs = 20;
    let mut inside = vec![0; lambdas.len() * 2];
    for run in 0..runs {
        plan.master_seed = 1000 + run;
        let table = run_pf_experiment(&plan, &lambdas).unwrap();
        for (t, &lambda) in lambdas.iter().enumerate() {
            let p = theory::pf_of_threshold(lambda).unwrap();
            let band = 3.0 * (p * (1.0 - p) / plan.trials as f64).sqrt();
            for d in 0..2 {
                if (table.estimates[t][d].p_hat - p).abs() < band {
                    inside[t * 2 + d] += 1;
                }
            }
        }
    }
    for count in inside {
        assert!(
            count as f64 >= 0.95 * runs as f64,
            "{count}/{runs} runs inside 3σ"
        );
    }
}

#[test]
fn energy_threshold_calibration_without_uncertainty() {
    let mut plan = ExperimentPlan::new(OfdmParams::wimax(), vec![DetectorSpec::Energy]);
    plan.master_seed = 21;
    let thr = theory::energy_threshold(0.1, 18432, 1.0).unwrap();
    let table = run_pf_experiment(&plan, &[thr]).unwrap();
    let pf = table.estimates[0][0].p_hat;
    assert!((pf - 0.1).abs() < 0.01, "{pf}");
}

#[test]
fn detection_saturates_at_high_snr() {
    let lags = LagPair::for_ofdm(512).unwrap();
    let mut plan = ExperimentPlan::new(
        OfdmParams::wimax(),
        DetectorSpec::standard_set(lags, &K5, DEFAULT_BETA, DEFAULT_ETA_FLOOR),
    );
    plan.trials = 1000;
    let rows = run_pd_point(&plan, &wimax_point(0.0, 1.0)).unwrap();
    let multi = rows.iter().find(|r| r.detector == "multi5").unwrap();
    assert!(multi.estimate.p_hat >= 0.99, "{:?}", multi.estimate);
}

#[test]
fn vanishing_signal_detects_at_false_alarm_rate() {
    let lags = LagPair::for_ofdm(512).unwrap();
    let mut plan = ExperimentPlan::new(
        OfdmParams::wimax(),
        DetectorSpec::standard_set(lags, &K5, DEFAULT_BETA, DEFAULT_ETA_FLOOR),
    );
    plan.trials = 2000;
    plan.master_seed = 77;
    // Exact nominal variance: with uncertainty the energy detector's false
    // alarm rate is no longer the target.
    for row in run_pd_point(&plan, &wimax_point(-40.0, 0.0)).unwrap() {
        assert!(
            (row.estimate.p_hat - 0.1).abs() < 0.03,
            "{}: {:?}",
            row.detector,
            row.estimate
        );
    }
    // Cyclic detectors keep their rate under uncertainty.
    for row in run_pd_point(&plan, &wimax_point(-40.0, 1.0)).unwrap() {
        if row.detector != "energy" {
            assert!(
                (row.estimate.p_hat - 0.1).abs() < 0.03,
                "{}: {:?}",
                row.detector,
                row.estimate
            );
        }
    }
}

#[test]
fn detection_probability_monotone_in_snr_and_threshold() {
    let lags = LagPair::for_ofdm(512).unwrap();
    let mut plan = ExperimentPlan::new(
        OfdmParams::wimax(),
        DetectorSpec::standard_set(lags, &K5, DEFAULT_BETA, DEFAULT_ETA_FLOOR),
    );
    plan.trials = 1000;
    plan.snr_grid_db = vec![-14.0, -12.0, -10.0, -8.0];
    plan.delta_db_grid = vec![1.0];
    let rows = run_pd_experiment(&plan).unwrap();
    for label in plan.labels() {
        let series: Vec<_> = rows
            .iter()
            .filter(|r| r.detector == label)
            .map(|r| r.estimate)
            .collect();
        for w in series.windows(2) {
            assert!(
                w[1].p_hat >= w[0].p_hat - w[0].ci_width(),
                "{label}: {:?}",
                series
            );
        }
    }

    // Higher target Pf means a lower threshold and more detections.
    let point = wimax_point(-10.0, 1.0);
    let mut previous = 0.0;
    for pf in [0.01, 0.05, 0.1, 0.3] {
        plan.target_pf = pf;
        let rows = run_pd_point(&plan, &point).unwrap();
        let p = rows
            .iter()
            .find(|r| r.detector == "multi5")
            .unwrap()
            .estimate
            .p_hat;
        assert!(p >= previous, "pf {pf}: {p} < {previous}");
        previous = p;
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let lags = LagPair::for_ofdm(512).unwrap();
    let mut plan = ExperimentPlan::new(
        OfdmParams::wimax(),
        DetectorSpec::standard_set(lags, &K5, DEFAULT_BETA, DEFAULT_ETA_FLOOR),
    );
    plan.trials = 150;
    plan.snr_grid_db = vec![-12.0, -8.0];
    plan.threads = Some(1);
    let one = run_pd_experiment(&plan).unwrap();
    plan.threads = Some(4);
    let four = run_pd_experiment(&plan).unwrap();
    assert_eq!(one, four);

    plan.threads = Some(3);
    let point = plan.sweep_points()[0];
    let a = sample_statistics(&plan, &point, Hypothesis::H1).unwrap();
    plan.threads = Some(1);
    let b = sample_statistics(&plan, &point, Hypothesis::H1).unwrap();
    assert_eq!(a, b);
}

#[test]
fn cyclic_statistic_grows_with_observation_length_only_under_h1() {
    let lags = LagPair::for_ofdm(512).unwrap();
    let det = vec![DetectorSpec::MultiCycle {
        k_list: K5.to_vec(),
        lags,
        beta: DEFAULT_BETA,
        eta_floor: DEFAULT_ETA_FLOOR,
    }];
    let mut plan = ExperimentPlan::new(OfdmParams::wimax(), det);
    plan.trials = 300;
    plan.delta_db_grid = vec![1.0];
    let median = |n_ofdm: usize, h: Hypothesis| {
        let mut point = wimax_point(0.0, 1.0);
        point.n_ofdm = n_ofdm;
        let mut s = sample_statistics(&plan, &point, h).unwrap().remove(0);
        s.sort_by(f64::total_cmp);
        s[s.len() / 2]
    };
    let (h1_short, h1_long) = (median(8, Hypothesis::H1), median(32, Hypothesis::H1));
    assert!(
        h1_long > 2.0 * h1_short,
        "H1 medians {h1_short} -> {h1_long}"
    );
    let (h0_short, h0_long) = (median(8, Hypothesis::H0), median(32, Hypothesis::H0));
    for m in [h0_short, h0_long] {
        assert!((0.6..1.6).contains(&m), "H0 median {m}");
    }
}
