use mtt_fisher_core::mle::{consistency_experiment, likelihood_gap_experiment};
use mtt_fisher_core::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn truth(k: usize, p: f64, states: Vec<f64>) -> GroundTruth {
    let params =
        ModelParams::new(SingleTargetModel::static_gaussian_variance(1.0).unwrap(), k, p, ClutterModel::none()).unwrap();
    GroundTruth::new(params, states).unwrap()
}

fn observed(t: &GroundTruth, spec: &PerturbationSpec, n: usize, seed: u64) -> Vec<ObservationFrame> {
    simulate_static(t, spec, n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap().into_iter().map(|f| f.observed).collect()
}

#[test]
fn variance_mle_is_the_mean_square() {
    let t = truth(1, 1.0, vec![0.0]);
    let spec = PerturbationSpec::unperturbed();
    for seed in 0..5 {
        let frames = observed(&t, &spec, 500, seed);
        let closed = frames.iter().map(|f| f.points()[0].powi(2)).sum::<f64>() / frames.len() as f64;
        let settings = MleSettings::scale(FreeParam::Theta, 1.0, Integration::ExactStatic { states: vec![0.0] });
        let r = maximize_loglik(&frames, t.params(), &spec, &settings).unwrap();
        assert!((r.theta_hat - closed).abs() < 1e-3, "{} vs {closed}", r.theta_hat);
        assert_eq!(r.n, 500);
    }
}

#[test]
fn maximizer_beats_every_evaluated_point() {
    let t = truth(2, 0.8, vec![-0.5, 0.5]);
    let spec = PerturbationSpec::full();
    let frames = observed(&t, &spec, 300, 9);
    let settings = MleSettings::scale(FreeParam::Theta, 1.0, Integration::ExactStatic { states: vec![-0.5, 0.5] });
    let r = maximize_loglik(&frames, t.params(), &spec, &settings).unwrap();
    assert!(r.evaluations.iter().all(|&(_, f)| f <= r.loglik_at_hat));
    let (a, b) = *r.brackets.last().unwrap();
    assert!(b - a <= settings.tol);
    assert!(r.brackets.windows(2).all(|w| w[1].0 >= w[0].0 && w[1].1 <= w[0].1));
    // neighbours of the optimum are no better
    let ll = |v: f64| {
        marginal_log_likelihood_sequence(&frames, &t.params().with_theta(v).unwrap(), &spec, &settings.integration).unwrap()
    };
    assert!(ll(r.theta_hat + 1e-2) <= r.loglik_at_hat && ll(r.theta_hat - 1e-2) <= r.loglik_at_hat);
}

#[test]
fn mle_is_deterministic() {
    let t = truth(2, 0.9, vec![0.0, 1.0]);
    let spec = PerturbationSpec::full();
    let settings = MleSettings::scale(FreeParam::Theta, 1.0, Integration::ExactStatic { states: vec![0.0, 1.0] });
    let a = maximize_loglik(&observed(&t, &spec, 100, 3), t.params(), &spec, &settings).unwrap();
    let b = maximize_loglik(&observed(&t, &spec, 100, 3), t.params(), &spec, &settings).unwrap();
    assert_eq!(a, b);
}

#[test]
fn empty_data_is_refused() {
    let t = truth(1, 1.0, vec![0.0]);
    let settings = MleSettings::scale(FreeParam::Theta, 1.0, Integration::ExactStatic { states: vec![0.0] });
    let r = maximize_loglik(&[], t.params(), &PerturbationSpec::unperturbed(), &settings);
    assert!(matches!(r, Err(Error::NoData)));
}

#[test]
fn restricted_coordinates_cannot_be_estimated() {
    let t = truth(1, 1.0, vec![0.0]);
    let spec = PerturbationSpec::unperturbed();
    let frames = observed(&t, &spec, 10, 1);
    let pinned = t.params().clone().restrict_perfect_detection().restrict_no_clutter();
    for free in [FreeParam::DetectionProbability, FreeParam::ClutterRate] {
        let settings = MleSettings { free, bounds: (0.1, 0.9), tol: 1e-4, integration: Integration::ExactStatic { states: vec![0.0] } };
        assert!(matches!(maximize_loglik(&frames, &pinned, &spec, &settings), Err(Error::Config(_))));
    }
}

#[test]
fn detection_probability_mle_is_the_hit_rate() {
    let t = truth(1, 0.3, vec![0.0]);
    let spec = PerturbationSpec::new(Bound::Finite(1), Bound::Unbounded).unwrap();
    let frames = observed(&t, &spec, 2000, 4);
    let hits = frames.iter().filter(|f| !f.is_empty()).count() as f64 / frames.len() as f64;
    let settings = MleSettings {
        free: FreeParam::DetectionProbability,
        bounds: (0.01, 0.99),
        tol: 1e-5,
        integration: Integration::ExactStatic { states: vec![0.0] },
    };
    let r = maximize_loglik(&frames, t.params(), &spec, &settings).unwrap();
    assert!((r.theta_hat - hits).abs() < 1e-4, "{} vs {hits}", r.theta_hat);
}

#[test]
fn single_length_consistency_table() {
    let t = truth(1, 1.0, vec![0.0]);
    let settings = MleSettings::scale(FreeParam::Theta, 1.0, Integration::ExactStatic { states: vec![0.0] });
    let rows = consistency_experiment(&t, &PerturbationSpec::unperturbed(), &settings, &[400], 50, 2).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].replicates, 50);
    // E|θ̂ - θ| ≈ √(2/π)·√(2/n) for a chi-square mean
    let approx = (2.0 / std::f64::consts::PI).sqrt() * (2.0f64 / 400.0).sqrt();
    assert!((rows[0].mean_abs_error - approx).abs() < 4.0 * rows[0].sd_abs_error / 50f64.sqrt(), "{rows:?}");
    assert!(consistency_experiment(&t, &PerturbationSpec::unperturbed(), &settings, &[400, 100], 5, 2).is_err());
}

#[test]
fn gap_is_zero_at_truth_and_negative_on_average_elsewhere() {
    let t = truth(1, 1.0, vec![0.0]);
    let rows =
        likelihood_gap_experiment(&t, &PerturbationSpec::unperturbed(), FreeParam::Theta, &[0.5, 1.0, 2.0], 5000, 1).unwrap();
    assert_eq!(rows[1].gap, 0.0);
    assert!(rows[0].gap < 0.0 && rows[2].gap < 0.0);
    // the expected gap is minus the KL divergence
    let kl = |v: f64| 0.5 * (1.0 / v - 1.0 + v.ln());
    for r in [&rows[0], &rows[2]] {
        assert!((r.gap + kl(r.theta)).abs() < 4.0 * r.std_error, "{r:?}");
    }
}
