mod common;

use common::{kalman_log_likelihood, kalman_variance_score, random_instance, rel_err};
use mtt_fisher_core::likelihood::particle;
use mtt_fisher_core::math::{ln_binomial, ln_poisson};
use mtt_fisher_core::*;
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn single_target_formula_matches_general_evaluator() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 100 {
        let (frame, x, params, _) = random_instance(&mut rng);
        if params.num_targets() != 1 {
            continue;
        }
        let a = log_multi_likelihood_k1(&frame, x[0], &params).unwrap();
        let b = log_multi_likelihood(&frame, &x, &params).unwrap();
        if b == f64::NEG_INFINITY {
            assert_eq!(a, b);
        } else {
            assert!(rel_err(a, b) < 1e-12, "{a} vs {b}");
        }
        checked += 1;
    }
}

#[test]
fn no_clutter_means_no_extra_points() {
    let target = SingleTargetModel::static_gaussian_variance(1.0).unwrap();
    for k in 1..=3 {
        let params = ModelParams::new(target.clone(), k, 0.8, ClutterModel::none()).unwrap();
        let x: Vec<f64> = (0..k).map(|i| i as f64).collect();
        for m in 0..=k + 2 {
            let frame = ObservationFrame::new((0..m).map(|j| 0.3 * j as f64).collect()).unwrap();
            let ll = log_multi_likelihood(&frame, &x, &params).unwrap();
            assert_eq!(ll == f64::NEG_INFINITY, m > k, "K={k} M={m}: {ll}");
        }
    }
}

#[test]
fn single_target_density_sums_to_one_over_frame_sizes() {
    // P(M = m) = Σ_j P(j detected)·Po(m - j); checked for m ≤ 2 by quadrature
    let (a, lo, hi) = (3.0, -9.0, 9.0);
    let rate = 0.7;
    let p = 0.85;
    let params = ModelParams::new(
        SingleTargetModel::static_gaussian_variance(1.3).unwrap(),
        1,
        p,
        ClutterModel::uniform(rate, a).unwrap(),
    )
    .unwrap();
    let x = [0.4];
    // Simpson nodes on three pieces so the clutter edges are never straddled
    let mut nodes = Vec::new();
    for (s, e, n) in [(lo, -a, 300), (-a, a, 600), (a, hi, 300)] {
        let (s, e) = (s + 1e-12, e - 1e-12);
        let h = (e - s) / n as f64;
        for i in 0..=n {
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            nodes.push((s + i as f64 * h, w * h / 3.0));
        }
    }
    let mass = |pts: Vec<f64>| log_multi_likelihood(&ObservationFrame::new(pts).unwrap(), &x, &params).unwrap().exp();
    let expected = |m: usize| {
        let miss = (1.0 - p) * ln_poisson(rate, m).exp();
        let hit = if m > 0 { p * ln_poisson(rate, m - 1).exp() } else { 0.0 };
        miss + hit
    };
    let m0 = mass(vec![]);
    let m1: f64 = nodes.iter().map(|&(y, w)| w * mass(vec![y])).sum();
    let m2: f64 = nodes.iter().flat_map(|&(y1, w1)| nodes.iter().map(move |&(y2, w2)| (y1, y2, w1 * w2))).map(|(y1, y2, w)| w * mass(vec![y1, y2])).sum();
    for (m, got) in [m0, m1, m2].into_iter().enumerate() {
        assert!((got - expected(m)).abs() < 1e-6, "M={m}: {got} vs {}", expected(m));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn full_uncertainty_likelihood_ignores_point_order(seed in any::<u64>(), shift in 0usize..24) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (frame, x, params, _) = random_instance(&mut rng);
        let mut pts = frame.points().to_vec();
        if !pts.is_empty() {
            let n = pts.len();
            pts.rotate_left(shift % n);
            pts.swap(0, n - 1);
        }
        let a = log_multi_likelihood(&frame, &x, &params).unwrap();
        let b = log_multi_likelihood(&ObservationFrame::new(pts).unwrap(), &x, &params).unwrap();
        if a == f64::NEG_INFINITY {
            prop_assert_eq!(b, a);
        } else {
            prop_assert!(rel_err(a, b) < 1e-12, "{} vs {}", a, b);
        }
    }

    #[test]
    fn target_relabelling_leaves_likelihood_unchanged(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (frame, mut x, params, _) = random_instance(&mut rng);
        let a = log_multi_likelihood(&frame, &x, &params).unwrap();
        x.reverse();
        let b = log_multi_likelihood(&frame, &x, &params).unwrap();
        prop_assert!(a == b || rel_err(a, b) < 1e-12, "{} vs {}", a, b);
    }
}

#[test]
fn known_association_is_a_sum_of_single_target_terms() {
    let target = SingleTargetModel::static_gaussian_variance(0.7).unwrap();
    let params = ModelParams::new(target.clone(), 3, 1.0, ClutterModel::none()).unwrap();
    let x = vec![-1.0, 0.2, 2.5];
    let frames: Vec<ObservationFrame> =
        [[-0.8, 0.1, 2.9], [-1.4, 0.6, 2.2]].iter().map(|f| ObservationFrame::new(f.to_vec()).unwrap()).collect();
    let traj = vec![MultiTargetState::new(x.clone()).unwrap(); 3];
    let joint = log_joint_known_association(&frames, &traj, &params).unwrap();
    let by_hand: f64 = frames.iter().flat_map(|f| f.points().iter().zip(&x).map(|(&y, &s)| target.ln_g(y, s))).sum();
    assert!(rel_err(joint, by_hand) < 1e-14);
    let unperturbed = marginal_log_likelihood_sequence(
        &frames,
        &params,
        &PerturbationSpec::unperturbed(),
        &Integration::ExactStatic { states: x.clone() },
    )
    .unwrap();
    assert!(rel_err(unperturbed, by_hand) < 1e-14);
}

#[test]
fn far_separated_targets_pay_only_the_labelling_cost() {
    // with one plausible matching, only 1 of the K! orderings contributes
    let target = SingleTargetModel::static_gaussian_variance(1.0).unwrap();
    let params = ModelParams::new(target.clone(), 4, 1.0, ClutterModel::none()).unwrap();
    let x = vec![0.0, 100.0, 200.0, 300.0];
    let y = vec![0.3, 99.1, 201.0, 299.5];
    let known: f64 = y.iter().zip(&x).map(|(&a, &b)| target.ln_g(a, b)).sum();
    let full = log_multi_likelihood(&ObservationFrame::new(y).unwrap(), &x, &params).unwrap();
    assert!((full - (known - 24f64.ln())).abs() < 1e-10, "{full} vs {}", known - 24f64.ln());
}

#[test]
fn detection_constraint_zeroes_small_frames() {
    let target = SingleTargetModel::static_gaussian_variance(1.0).unwrap();
    let params = ModelParams::new(target, 3, 0.5, ClutterModel::none()).unwrap();
    let spec = PerturbationSpec::new(Bound::Unbounded, Bound::Finite(1)).unwrap();
    let x = [0.0, 1.0, 2.0];
    let one = ObservationFrame::new(vec![0.5]).unwrap();
    assert_eq!(log_perturbed_likelihood(&one, &x, &params, &spec).unwrap(), f64::NEG_INFINITY);
    let two = ObservationFrame::new(vec![0.5, 1.5]).unwrap();
    let ll = log_perturbed_likelihood(&two, &x, &params, &spec).unwrap();
    // the restricted count law puts 3/7 of its mass on two detections
    let ln_p2 = ln_binomial(3, 2) + 3.0 * 0.5f64.ln() - (4.0f64 * 0.125).ln();
    assert!(ll.is_finite() && ll < ln_p2);
}

#[test]
fn particle_filter_agrees_with_kalman_filter() {
    let (walk, obs_var, p) = (0.3, 0.5, 0.7);
    let target = SingleTargetModel::random_walk(walk, obs_var, FreeParameter::ObservationVariance).unwrap();
    let params = ModelParams::new(target, 1, p, ClutterModel::none()).unwrap();
    let truth = GroundTruth::new(params.clone(), vec![0.0]).unwrap();
    let spec = PerturbationSpec::new(Bound::Finite(1), Bound::Unbounded).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let frames: Vec<ObservationFrame> =
        simulate_sequence(&truth, &spec, 25, &mut rng).unwrap().into_iter().map(|f| f.observed).collect();
    let exact_ll = kalman_log_likelihood(&frames, 0.0, walk, obs_var, p);
    let exact_score = kalman_variance_score(&frames, 0.0, walk, obs_var, p);

    let runs = 40;
    let (mut ratios, mut scores) = (Vec::new(), Vec::new());
    for r in 0..runs {
        let mut prng = ChaCha8Rng::seed_from_u64(1000 + r);
        let est = particle::run(&frames, &[0.0], &params, &spec, 2000, &mut prng).unwrap();
        // the likelihood estimate, not its log, is unbiased
        ratios.push((est.log_likelihood - exact_ll).exp());
        scores.push(est.score);
    }
    let stat = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        (m, (var / v.len() as f64).sqrt())
    };
    let (rm, rse) = stat(&ratios);
    assert!((rm - 1.0).abs() < 3.0 * rse.max(1e-3), "likelihood ratio {rm} ± {rse}");
    let (sm, sse) = stat(&scores);
    assert!((sm - exact_score).abs() < 3.0 * sse.max(1e-3 * exact_score.abs()), "score {sm} ± {sse} vs {exact_score}");
}

#[test]
fn mc_integration_needs_enough_particles() {
    let target = SingleTargetModel::random_walk(0.1, 1.0, FreeParameter::ObservationVariance).unwrap();
    let params = ModelParams::new(target, 1, 0.9, ClutterModel::none()).unwrap();
    let frames = vec![ObservationFrame::new(vec![0.1]).unwrap()];
    let r = marginal_log_likelihood_sequence(
        &frames,
        &params,
        &PerturbationSpec::full(),
        &Integration::MonteCarlo { samples: 10, seed: 1, initial: vec![0.0] },
    );
    assert!(matches!(r, Err(Error::Config(_))));
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let _: f64 = rng.random();
}
