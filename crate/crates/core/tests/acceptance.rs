//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! `MTT_FISHER_ACCEPTANCE_SCALE` multiplies every Monte Carlo count (default
//! 1, the documented sample sizes). Criterion failures are reported, not
//! panicked on, unless `MTT_FISHER_ACCEPTANCE_STRICT=1`; crashes always fail.

mod common;

use std::collections::HashSet;
use std::time::{Duration, Instant};

use common::{random_instance, rel_err};
use mtt_fisher_core::experiments::*;
use mtt_fisher_core::likelihood::brute::brute_force_log_likelihood;
use mtt_fisher_core::perm::{binomial, factorial};
use mtt_fisher_core::*;
use num_bigint::BigUint;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

const SEED: u64 = 2024;

struct Report {
    lines: Vec<(bool, String, String)>,
}

impl Report {
    fn record(&mut self, pass: bool, name: &str, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.lines.push((pass, name.to_string(), detail));
    }
}

fn run(id: &str, extra: Value, scale: f64) -> (Vec<ResultRow>, Duration) {
    let mut v = extra;
    v["experiment"] = json!(id);
    v["seed"] = json!(SEED);
    let cfg = ExperimentConfig::from_json(v).expect("valid acceptance config");
    let t = Instant::now();
    let rows = cfg.run(scale).unwrap_or_else(|e| panic!("{id} failed: {e}"));
    (rows, t.elapsed())
}

fn find<'a>(rows: &'a [ResultRow], curve: &str, x: f64) -> &'a ResultRow {
    rows.iter()
        .find(|r| r.curve == curve && (r.x_value == x || (x.is_finite() && (r.x_value - x).abs() <= 1e-9 * x.abs())))
        .unwrap_or_else(|| panic!("no row {curve} at {x}"))
}

fn combined(a: &ResultRow, b: &ResultRow) -> f64 {
    (a.std_error.powi(2) + b.std_error.powi(2)).sqrt()
}

fn false_alarm(rep: &mut Report, scale: f64) {
    let (rows, took) = run("false-alarm", json!({}), scale);
    let mut ok = true;
    let mut detail = Vec::new();
    for rate in [0.1, 1.0, 10.0, 100.0] {
        let mc = find(&rows, "worst-case", rate);
        let exact = loss_false_alarm_closed_form(rate).unwrap();
        let z = (mc.y_value - exact) / mc.std_error;
        ok &= z.abs() <= 3.0;
        detail.push(format!("λ={rate}: {:.4}±{:.4} vs {exact:.4} ({z:+.1} se)", mc.y_value, mc.std_error));
    }
    let series = loss_false_alarm_worst_case(1.0).unwrap();
    ok &= (series - (-1f64).exp()).abs() < 1e-12;
    detail.push(format!("series at λ=1 {series:.6}"));
    if scale >= 1.0 {
        ok &= took <= Duration::from_secs(300);
        detail.push(format!("{:.1}s", took.as_secs_f64()));
    }
    rep.record(ok, "worst-case false-alarm loss", detail.join("; "));

    let mut worst = f64::NEG_INFINITY;
    let mut checked = 0;
    for a in [5.0, 10.0, 25.0, 50.0, 100.0] {
        for w in rows.iter().filter(|r| r.curve == "worst-case") {
            let u = find(&rows, &format!("uniform-a{a}"), w.x_value);
            worst = worst.max((u.y_value - w.y_value) / combined(u, w).max(1e-300));
            checked += 1;
        }
    }
    rep.record(
        worst <= 3.0,
        "uniform clutter loses no more than worst-case clutter",
        format!("{checked} pairs, largest excess {worst:+.2} se"),
    );
}

fn detection(rep: &mut Report, scale: f64) {
    let (rows, took) = run("detection-failure", json!({"p_detect": [0.2, 0.5, 0.8]}), scale);
    let mut ok = true;
    let mut detail = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let full = common::walk_variance_information(&[true; 50], 0.1, 1.0);
    for p in [0.2, 0.5, 0.8] {
        let mc = find(&rows, "monte-carlo", p);
        let z = (mc.y_value - (1.0 - p)) / mc.std_error;
        ok &= z.abs() <= 3.0;
        // not part of the criterion: the exact loss of the Gaussian random walk
        let masks = 2000;
        let kept: f64 = (0..masks)
            .map(|_| common::walk_variance_information(&(0..50).map(|_| rng.random::<f64>() < p).collect::<Vec<_>>(), 0.1, 1.0))
            .sum::<f64>()
            / masks as f64;
        detail.push(format!(
            "p={p}: {:.4}±{:.4} ({z:+.1} se; exact random-walk loss ≈ {:.3})",
            mc.y_value,
            mc.std_error,
            1.0 - kept / full
        ));
    }
    if scale >= 1.0 {
        ok &= took <= Duration::from_secs(1200);
        detail.push(format!("{:.1}s", took.as_secs_f64()));
    }
    rep.record(ok, "detection-failure loss equals 1 - p_D", detail.join("; "));
}

fn runtime_at_small_scale(rep: &mut Report) {
    let (_, fa) = run("false-alarm", json!({}), 0.01);
    let (_, df) = run("detection-failure", json!({"p_detect": [0.2, 0.5, 0.8]}), 0.01);
    rep.record(
        fa <= Duration::from_secs(10) && df <= Duration::from_secs(30),
        "runtime at scale 0.01",
        format!("false-alarm {:.2}s (≤10), detection-failure {:.2}s (≤30)", fa.as_secs_f64(), df.as_secs_f64()),
    );
}

fn association(rep: &mut Report, scale: f64) {
    let (rows, _) = run("association-tau-alpha", json!({}), scale);
    let alphas = ["1", "2", "3", "4", "5", "inf"];
    // exact zeros may come back as rounding-level negatives
    let within = |r: &ResultRow| r.y_value.abs() <= 3.0 * r.std_error + 1e-12;
    let a1_zero = rows.iter().filter(|r| r.curve == "alpha=1").all(within);
    let tau0_zero = alphas.iter().all(|a| within(find(&rows, &format!("alpha={a}"), 0.0)));
    let at1: Vec<&ResultRow> = alphas.iter().map(|a| find(&rows, &format!("alpha={a}"), 1.0)).collect();
    let monotone = at1.windows(2).all(|w| w[1].y_value >= w[0].y_value - 3.0 * combined(w[0], w[1]));
    let (l1, l5) = (find(&rows, "alpha=inf", 1.0), find(&rows, "alpha=inf", 5.0));
    let bump = l1.y_value > l5.y_value;
    let curve: Vec<String> = at1.iter().map(|r| format!("{:.3}", r.y_value)).collect();
    rep.record(
        a1_zero && tau0_zero && monotone && bump,
        "association-uncertainty structure",
        format!(
            "α=1 zero {a1_zero}; τ=0 zero {tau0_zero}; τ=1 over α [{}] non-decreasing {monotone}; α=∞ loss τ=1 {:.4} > τ=5 {:.4}",
            curve.join(", "),
            l1.y_value,
            l5.y_value
        ),
    );
}

fn strictness(rep: &mut Report, scale: f64) {
    let (rows, _) = run("property-suite", json!({"extra_targets": 0, "cardinality_p_detect": [0.5]}), scale);
    let inf = find(&rows, "strictness-k2", f64::INFINITY);
    let one = find(&rows, "strictness-k2", 1.0);
    let ok = inf.y_value > 3.0 * inf.std_error && one.y_value.abs() <= 3.0 * one.std_error + 1e-12;
    rep.record(
        ok,
        "strict loss for two crowded targets",
        format!("α=∞: {:.4}±{:.4}; α=1: {:.4}±{:.4}", inf.y_value, inf.std_error, one.y_value, one.std_error),
    );
}

fn special_scaling(rep: &mut Report, scale: f64) {
    let (rows, _) = run("num-targets-special", json!({}), scale);
    let c = find(&rows, "constant-slope", 2.0);
    let a = find(&rows, "adaptive-slope", 2.0);
    let ok = c.y_value > 2.0 * c.std_error && a.y_value.abs() < 2.0 * a.std_error;
    rep.record(
        ok,
        "windowed-likelihood loss vs number of targets",
        format!(
            "constant space slope {:.5}±{:.5} (needs > 2 se); adaptive space slope {:.5}±{:.5} (needs |·| < 2 se, ratio {:.2})",
            c.y_value,
            c.std_error,
            a.y_value,
            a.std_error,
            a.y_value.abs() / a.std_error
        ),
    );
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn oracles(rep: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    let mut zero_mismatch = 0;
    for _ in 0..50 {
        let (frame, x, params, spec) = random_instance(&mut rng);
        let fast = log_perturbed_likelihood(&frame, &x, &params, &spec).unwrap();
        let slow = brute_force_log_likelihood(&frame, &x, &params, &spec).unwrap();
        if slow == f64::NEG_INFINITY || fast == f64::NEG_INFINITY {
            zero_mismatch += usize::from(fast != slow);
        } else {
            worst = worst.max(rel_err(fast, slow));
        }
    }

    let mut stochastic = 0.0f64;
    for _ in 0..50 {
        let k = rng.random_range(2..=4usize);
        let params = ModelParams::new(
            SingleTargetModel::static_gaussian_variance(rng.random_range(0.3..3.0)).unwrap(),
            k,
            1.0,
            ClutterModel::none(),
        )
        .unwrap();
        let x: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..k).map(|_| rng.random_range(-3.0..3.0)).collect();
        let c = association_weights_cik(&ObservationFrame::new(y).unwrap(), &x, &params).unwrap();
        for i in 0..k {
            stochastic = stochastic.max((c[i].iter().sum::<f64>() - 1.0).abs());
            stochastic = stochastic.max((c.iter().map(|r| r[i]).sum::<f64>() - 1.0).abs());
        }
    }

    let mut combinatorics = true;
    for k in 0..=7 {
        let all = permutations(k);
        combinatorics &= BigUint::from(all.len()) == factorial(k);
        for alpha in 0..=k {
            let by_filter = all.iter().filter(|p| p.iter().enumerate().filter(|(i, v)| *i != **v).count() <= alpha).count();
            let listed: Vec<_> = enumerate_constrained(k, Bound::Finite(alpha), u64::MAX).unwrap().collect();
            let distinct: HashSet<Vec<usize>> = listed.iter().map(|p| p.as_slice().to_vec()).collect();
            let formula: BigUint = (0..=alpha).map(|i| binomial(k, i) * subfactorial(i)).sum();
            combinatorics &= count_constrained(k, Bound::Finite(alpha)) == BigUint::from(by_filter)
                && formula == BigUint::from(by_filter)
                && listed.len() == by_filter
                && distinct.len() == by_filter;
        }
    }
    rep.record(
        worst < 1e-10 && zero_mismatch == 0 && stochastic < 1e-12 && combinatorics,
        "oracle equivalence",
        format!(
            "likelihood max rel err {worst:.2e} over 50 instances ({zero_mismatch} zero-pattern mismatches); c_ik margin error {stochastic:.1e}; counts exact for k ≤ 7: {combinatorics}"
        ),
    );
}

fn scores(rep: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut worst = 0.0f64;
    let mut checked = 0;
    while checked < 20 {
        let (frame, x, params, spec) = random_instance(&mut rng);
        if log_perturbed_likelihood(&frame, &x, &params, &spec).unwrap() == f64::NEG_INFINITY {
            continue;
        }
        let c = score_conditional_expectation_identity_check(&[frame], &x, &params, &spec, 1e-5 * params.theta()).unwrap();
        worst = worst.max(c.gap / c.finite_difference.abs().max(1.0));
        checked += 1;
    }

    let params = ModelParams::new(
        SingleTargetModel::static_gaussian_variance(1.0).unwrap(),
        2,
        0.8,
        ClutterModel::uniform(1.0, 6.0).unwrap(),
    )
    .unwrap();
    let states = vec![-0.5, 0.5];
    let truth = GroundTruth::new(params.clone(), states.clone()).unwrap();
    let spec = PerturbationSpec::full();
    let n = 4000;
    let s: Vec<f64> = (0..n)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ r);
            let frames: Vec<ObservationFrame> =
                simulate_static(&truth, &spec, 1, &mut rng).unwrap().into_iter().map(|f| f.observed).collect();
            let regime = ScoreRegime::Static { states: states.clone() };
            score_fisher_identity(&frames, &params, &spec, &regime, LatentHandling::Exact, &mut rng).unwrap()
        })
        .collect();
    let mean = s.iter().sum::<f64>() / n as f64;
    let se = (s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64 / n as f64).sqrt();
    rep.record(
        worst < 1e-4 && mean.abs() <= 3.0 * se,
        "score correctness",
        format!("identity vs central difference max rel err {worst:.2e} (20 instances); mean score {mean:+.4}±{se:.4}"),
    );
}

fn estimation(rep: &mut Report, scale: f64) {
    let (rows, _) = run("consistency", json!({"with_association": false}), scale);
    let slope = find(&rows, "unperturbed-k1-slope", 100.0);
    let (rows, _) = run("normality", json!({}), scale);
    let ratio = rows.iter().find(|r| r.curve == "unperturbed" && r.y_name == "variance_ratio").expect("variance ratio row");
    let ok = (slope.y_value + 0.5).abs() <= 0.15 && (0.8..=1.25).contains(&ratio.y_value);
    rep.record(
        ok,
        "MLE consistency and asymptotic variance",
        format!(
            "log-log slope {:.3}±{:.3} (−0.5 ± 0.15); variance ratio {:.3} at n=2000 ([0.8, 1.25])",
            slope.y_value, slope.std_error, ratio.y_value
        ),
    );
}

fn main() {
    let scale: f64 = std::env::var("MTT_FISHER_ACCEPTANCE_SCALE").ok().map(|s| s.parse().expect("numeric scale")).unwrap_or(1.0);
    let strict = std::env::var("MTT_FISHER_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    println!("acceptance run: seed {SEED}, scale {scale}");
    let mut rep = Report { lines: Vec::new() };
    let start = Instant::now();
    false_alarm(&mut rep, scale);
    detection(&mut rep, scale);
    runtime_at_small_scale(&mut rep);
    association(&mut rep, scale);
    strictness(&mut rep, scale);
    special_scaling(&mut rep, scale);
    oracles(&mut rep);
    scores(&mut rep);
    estimation(&mut rep, scale);
    // nothing above touches the plotting scripts
    rep.record(true, "suite runs without the plotting module", format!("{:.1}s total", start.elapsed().as_secs_f64()));
    let failed: Vec<&str> = rep.lines.iter().filter(|l| !l.0).map(|l| l.1.as_str()).collect();
    println!("{} of {} criteria pass", rep.lines.len() - failed.len(), rep.lines.len());
    if strict && !failed.is_empty() {
        eprintln!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
