use fbs_core::estimator::update;
use fbs_core::experiments::stats::median_abs;
use fbs_core::experiments::{
    closed_loop_track, compare_frequentist, fit_fringe, frequentist_estimate, gaussian_validity_sweep, mad_calibration,
    run_campaign, track_drift, CampaignConfig, ComparisonConfig, GridSpec, TrackConfig,
};
use fbs_core::sim::{stream_rng, NoiseProcess, Overheads};
use fbs_core::{optimal_tau, GaussianBelief, LikelihoodModel, Outcome, ProbeSettings};

fn prior() -> GaussianBelief {
    GaussianBelief::new(0.0, 1e6).unwrap()
}

#[test]
fn ideal_campaign_error_spread_follows_sigma_recursion() {
    let cfg = CampaignConfig::new(5000, 15, prior(), LikelihoodModel::new(0.0, 1.0, f64::INFINITY).unwrap(), 21);
    let res = run_campaign(&cfg).unwrap();
    let expected = 1e6 * (1.0 - (-1.0f64).exp()).powf(7.5);
    assert!((expected / 1e6 - 0.0321).abs() < 1e-4);
    // the raw std is dominated by a few percent of far outliers; the robust spread follows the recursion
    let robust = mad_calibration(&res.stats).unwrap().k_times_mad;
    assert!((robust / expected - 1.0).abs() < 0.15, "k*MAD {robust} vs {expected}");
    assert!(res.stats.std > expected);
    assert!(res.runs.iter().all(|r| (r.final_sigma / expected - 1.0).abs() < 1e-9));
}

#[test]
fn matched_campaign_calibration_fraction() {
    let cfg = CampaignConfig::new(5000, 15, prior(), LikelihoodModel::reference(), 3);
    let stats = run_campaign(&cfg).unwrap().stats;
    assert!((0.60..=0.76).contains(&stats.calibration_fraction), "{}", stats.calibration_fraction);
    assert!(stats.errors.iter().all(|e| e.is_finite()));
    assert!(mad_calibration(&stats).is_ok());
}

#[test]
fn mad_calibration_needs_enough_errors() {
    let cfg = CampaignConfig::new(500, 5, prior(), LikelihoodModel::reference(), 3);
    let stats = run_campaign(&cfg).unwrap().stats;
    assert!(mad_calibration(&stats).is_err());
}

#[test]
fn warm_started_tracking_follows_slow_drift() {
    let model = LikelihoodModel::reference();
    let overheads = Overheads::REFERENCE;
    let shots = 8;
    // duration of one estimation from the actual probe times
    let mut belief = GaussianBelief::new(0.0, 30e3).unwrap();
    let mut duration = 0.0;
    for _ in 0..shots {
        let probe = ProbeSettings::optimal(&belief, &model, 0).unwrap();
        duration += fbs_core::sim::cycle_duration(&probe, &overheads);
        belief = update(&belief, &probe, Outcome::Plus, &model).unwrap().belief;
    }
    let noise = NoiseProcess::OuDrift { sigma_eps: 30e3, correlation_time: 100.0 * duration };
    let records = track_drift(&noise, shots, 10_000, 30e3, &model, &overheads, 17).unwrap();
    let errors: Vec<f64> = records.iter().map(|r| r.mu - r.eps_true).collect();
    let median = median_abs(&errors);
    assert!(median < 15e3, "median |error| {median}");
}

#[test]
fn zero_noise_fringes_agree() {
    let mut cfg = TrackConfig::reference(NoiseProcess::Quasistatic { sigma_eps: 0.0 }, 400, 4);
    cfg.model = LikelihoodModel::ideal();
    let res = closed_loop_track(&cfg).unwrap();
    // difference of two binomial means with 400 samples each
    for (a, b) in res.feedback.flip_fractions.iter().zip(&res.open_loop.flip_fractions) {
        let p = 0.5 * (a + b);
        let sd = (2.0 * p * (1.0 - p) / 400.0).sqrt().max(1.0 / 400.0);
        assert!((a - b).abs() <= 4.5 * sd, "{a} vs {b}");
    }
    let (fb, ol) = (fit_fringe(&res.feedback).unwrap(), fit_fringe(&res.open_loop).unwrap());
    assert!((fb.frequency - ol.frequency).abs() < 3.0 * (fb.frequency_err.hypot(ol.frequency_err)) + 1e3);
}

#[test]
fn frequentist_unbiased_at_inflection() {
    let model = LikelihoodModel::ideal();
    let tau = 1e-7;
    let mut rng = stream_rng(1, 0);
    let shots = 20_000;
    let est = frequentist_estimate(0.0, tau, shots, &model, &mut rng).unwrap();
    let bound = 3.0 * (1.0 / shots as f64).sqrt() / (2.0 * std::f64::consts::PI * tau);
    assert!(est.abs() < bound, "{est} vs {bound}");
}

#[test]
fn frequentist_linear_regime() {
    let model = LikelihoodModel::ideal();
    let tau = 1e-7;
    let eps = 0.05 / tau;
    let mut rng = stream_rng(2, 0);
    let est = frequentist_estimate(eps, tau, 10_000, &model, &mut rng).unwrap();
    assert!((est / eps - 1.0).abs() < 0.1, "{est} vs {eps}");
}

#[test]
fn frequentist_fails_outside_range_where_fbs_does_not() {
    let model = LikelihoodModel::reference();
    let tau = optimal_tau(1e6, model.coherence_time()).unwrap();
    let eps = 0.6 / (2.0 * tau);
    let mut f_err = Vec::new();
    let mut b_err = Vec::new();
    for i in 0..400 {
        let mut rng = stream_rng(9, i);
        f_err.push(frequentist_estimate(eps, tau, 15, &model, &mut rng).unwrap() - eps);
        let est = fbs_core::run_estimation(prior(), 15, &model, |p| {
            Ok(fbs_core::sim::sample_outcome(eps, p, &model, &mut rng))
        })
        .unwrap();
        b_err.push(est.belief.mu() - eps);
    }
    assert!(median_abs(&f_err) > median_abs(&b_err), "{} vs {}", median_abs(&f_err), median_abs(&b_err));
}

#[test]
fn comparison_rows_cover_sweep() {
    let cfg = ComparisonConfig {
        sigma0: 1e6,
        shots: 15,
        multipliers: vec![0.5, 1.0, 2.0, 4.0],
        model: LikelihoodModel::reference(),
        trials: 400,
        seed: 5,
    };
    let rows = compare_frequentist(&cfg).unwrap();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert!(r.fbs_median_abs_error < r.frequentist_median_abs_error, "{r:?}");
        assert!((r.range_half_width * 2.0 * r.tau - 1.0).abs() < 1e-12);
    }
}

#[test]
fn validity_sweep_matches_closed_form_at_optimum() {
    let model = LikelihoodModel::reference();
    let rows = gaussian_validity_sweep(&prior(), &model, &[1.0, 3.0], GridSpec::default()).unwrap();
    assert_eq!(rows.len(), 4);
    for r in rows.iter().filter(|r| r.multiplier == 1.0) {
        assert!((r.posterior_sigma / r.closed_form_sigma - 1.0).abs() < 1e-4, "{r:?}");
        assert!(r.kl_bits.is_finite() && r.kl_bits >= 0.0);
    }
}
