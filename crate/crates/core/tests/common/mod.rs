#![allow(dead_code)]

use mtt_fisher_core::*;
use rand::RngExt;
use rand_chacha::ChaCha8Rng;

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / b.abs().max(1e-300)
}

/// Small static instance: `K ≤ 3` Gaussian-variance targets, `M ≤ 4` points,
/// random clutter, detection probability and `(α, β)`.
pub fn random_instance(rng: &mut ChaCha8Rng) -> (ObservationFrame, Vec<f64>, ModelParams, PerturbationSpec) {
    let k = rng.random_range(1..=3usize);
    let m = rng.random_range(0..=4usize);
    let target = SingleTargetModel::static_gaussian_variance(rng.random_range(0.3..2.0)).unwrap();
    let rate = if rng.random::<f64>() < 0.2 { 0.0 } else { rng.random_range(0.1..3.0) };
    let clutter = if rng.random::<bool>() {
        ClutterModel::uniform(rate, 6.0).unwrap()
    } else {
        ClutterModel::worst_case(rate, rng.random_range(-1.0..1.0), rng.random_range(0.5..3.0)).unwrap()
    };
    let p = if rng.random::<f64>() < 0.2 { 1.0 } else { rng.random_range(0.05..0.99) };
    let params = ModelParams::new(target, k, p, clutter).unwrap();
    let x: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
    let y: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
    let alpha = match rng.random_range(0..4) {
        0 => Bound::Unbounded,
        a => Bound::Finite(a + usize::from(a > 1)),
    };
    let beta = match rng.random_range(0..4) {
        0 => Bound::Unbounded,
        b => Bound::Finite(b - 1),
    };
    (ObservationFrame::new(y).unwrap(), x, params, PerturbationSpec::new(alpha, beta).unwrap())
}

/// Exact log-likelihood of a scalar random walk `x_t = x_{t-1} + q·ξ` seen
/// through `y_t = x_t + √r·η`, started at a known `x0`. Empty frames carry
/// no observation and contribute `ln(1 - p_D)`; non-empty ones `ln p_D`.
pub fn kalman_log_likelihood(frames: &[ObservationFrame], x0: f64, walk_std: f64, obs_var: f64, p_detect: f64) -> f64 {
    let (mut m, mut p) = (x0, 0.0);
    let mut ll = 0.0;
    for f in frames {
        p += walk_std * walk_std;
        match f.points() {
            [] => ll += (1.0 - p_detect).ln(),
            [y] => {
                let s = p + obs_var;
                let v = y - m;
                ll += p_detect.ln() - 0.5 * ((2.0 * std::f64::consts::PI * s).ln() + v * v / s);
                let gain = p / s;
                m += gain * v;
                p *= 1.0 - gain;
            }
            _ => panic!("one target, no clutter"),
        }
    }
    ll
}

/// `∂/∂r` of [`kalman_log_likelihood`] by central differences.
pub fn kalman_variance_score(frames: &[ObservationFrame], x0: f64, walk_std: f64, obs_var: f64, p_detect: f64) -> f64 {
    let h = 1e-5 * obs_var;
    (kalman_log_likelihood(frames, x0, walk_std, obs_var + h, p_detect)
        - kalman_log_likelihood(frames, x0, walk_std, obs_var - h, p_detect))
        / (2.0 * h)
}

fn inverse(mut a: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        inv.swap(c, piv);
        let d = a[c][c];
        for j in 0..n {
            a[c][j] /= d;
            inv[c][j] /= d;
        }
        for i in 0..n {
            if i != c {
                let f = a[i][c];
                for j in 0..n {
                    a[i][j] -= f * a[c][j];
                    inv[i][j] -= f * inv[c][j];
                }
            }
        }
    }
    inv
}

/// Exact information about the observation variance `r` in the detected
/// frames of a random walk from a known start: the kept observations are
/// jointly Gaussian with covariance `q²·min(s,t) + r·I`, so `I = ½ tr(Σ⁻²)`.
pub fn walk_variance_information(detected: &[bool], walk_std: f64, obs_var: f64) -> f64 {
    let idx: Vec<f64> = detected.iter().enumerate().filter(|(_, &d)| d).map(|(t, _)| (t + 1) as f64).collect();
    if idx.is_empty() {
        return 0.0;
    }
    let s: Vec<Vec<f64>> = idx
        .iter()
        .enumerate()
        .map(|(i, &a)| idx.iter().enumerate().map(|(j, &b)| walk_std * walk_std * a.min(b) + if i == j { obs_var } else { 0.0 }).collect())
        .collect();
    let inv = inverse(s);
    // tr(A²) = Σ a_ij² for symmetric A
    0.5 * inv.iter().flatten().map(|v| v * v).sum::<f64>()
}
