//! Scalar maximum likelihood by golden-section search, and the consistency,
//! asymptotic-normality and likelihood-gap experiments built on it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fisher::par_replicates;
use crate::likelihood::{marginal_log_likelihood_sequence, FrameEngine, Integration, ObservationFrame};
use crate::model::{FreeParam, GroundTruth, ModelParams};
use crate::perm::PerturbationSpec;
use crate::simulate::simulate_sequence;
use crate::stats;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Outcome of [`maximize_loglik`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MleResult {
    pub theta_hat: f64,
    pub loglik_at_hat: f64,
    pub n: usize,
    /// Every `(θ, ℓ(θ))` evaluated, in order.
    pub evaluations: Vec<(f64, f64)>,
    /// Bracket `[a, b]` after each iteration.
    pub brackets: Vec<(f64, f64)>,
}

/// Objective settings shared by the experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct MleSettings {
    pub free: FreeParam,
    pub bounds: (f64, f64),
    pub tol: f64,
    pub integration: Integration,
}

impl MleSettings {
    /// Default bounds `[θ*/10, 10θ*]` for a scale parameter.
    pub fn scale(free: FreeParam, theta_star: f64, integration: Integration) -> Self {
        Self { free, bounds: (theta_star / 10.0, theta_star * 10.0), tol: 1e-4, integration }
    }

    /// Default bounds `[θ*-5, θ*+5]` for a location parameter.
    pub fn location(free: FreeParam, theta_star: f64, integration: Integration) -> Self {
        Self { free, bounds: (theta_star - 5.0, theta_star + 5.0), tol: 1e-4, integration }
    }
}

/// Log-likelihood of static frames at several parameter values; one engine
/// per value is cheap, so this only avoids re-validating frames.
fn objective(
    frames: &[ObservationFrame],
    template: &ModelParams,
    spec: &PerturbationSpec,
    settings: &MleSettings,
    value: f64,
) -> Result<f64> {
    let params = template.with_free(settings.free, value)?;
    match &settings.integration {
        Integration::ExactStatic { states } => {
            let mut engine = FrameEngine::new(&params, spec)?;
            let mut total = 0.0;
            for f in frames {
                total += engine.evaluate(f.points(), states, false)?;
            }
            Ok(total)
        }
        // fixed seed inside: common random numbers across parameter values
        mc => marginal_log_likelihood_sequence(frames, &params, spec, mc),
    }
}

/// Golden-section maximization of `ℓ(θ)` over `settings.bounds` to interval
/// width `settings.tol`. The result is never worse than either endpoint.
pub fn maximize_loglik(
    frames: &[ObservationFrame],
    template: &ModelParams,
    spec: &PerturbationSpec,
    settings: &MleSettings,
) -> Result<MleResult> {
    if frames.is_empty() {
        return Err(Error::NoData);
    }
    // refuses restricted coordinates before any work
    template.with_free(settings.free, template.free_value(settings.free))?;
    let (mut a, mut b) = settings.bounds;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Config(format!("invalid bounds [{a}, {b}]")));
    }
    let mut evaluations = Vec::new();
    let mut brackets = vec![(a, b)];
    let eval = |v: f64, evaluations: &mut Vec<(f64, f64)>| -> Result<f64> {
        let f = match objective(frames, template, spec, settings, v) {
            Ok(f) if f.is_nan() => f64::NEG_INFINITY,
            Ok(f) => f,
            Err(Error::ParameterDomain(_)) => f64::NEG_INFINITY,
            Err(e) => return Err(e),
        };
        evaluations.push((v, f));
        Ok(f)
    };
    let fa = eval(a, &mut evaluations)?;
    let fb = eval(b, &mut evaluations)?;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c, &mut evaluations)?;
    let mut fd = eval(d, &mut evaluations)?;
    while b - a > settings.tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c, &mut evaluations)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d, &mut evaluations)?;
        }
        brackets.push((a, b));
    }
    let mid = 0.5 * (a + b);
    let fm = eval(mid, &mut evaluations)?;
    let best = [(mid, fm), (c, fc), (d, fd), (settings.bounds.0, fa), (settings.bounds.1, fb)]
        .into_iter()
        .fold((f64::NAN, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc });
    if best.1 == f64::NEG_INFINITY {
        return Err(Error::DegenerateData("log-likelihood is -∞ over the whole bracket".into()));
    }
    Ok(MleResult { theta_hat: best.0, loglik_at_hat: best.1, n: frames.len(), evaluations, brackets })
}

fn simulate_observed(truth: &GroundTruth, spec: &PerturbationSpec, n: usize, seed: u64, ids: &[u64]) -> Result<Vec<ObservationFrame>> {
    let mut rng = crate::rng::stream(seed, ids);
    Ok(simulate_sequence(truth, spec, n, &mut rng)?.into_iter().map(|f| f.observed).collect())
}

/// One row of the consistency table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyRow {
    pub n: usize,
    pub mean_abs_error: f64,
    pub sd_abs_error: f64,
    pub replicates: usize,
}

/// Mean absolute estimation error per sequence length.
pub fn consistency_experiment(
    truth: &GroundTruth,
    spec: &PerturbationSpec,
    settings: &MleSettings,
    n_grid: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<Vec<ConsistencyRow>> {
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("n grid must be strictly increasing".into()));
    }
    let theta_star = truth.params().free_value(settings.free);
    n_grid
        .iter()
        .map(|&n| {
            let errs = par_replicates(replicates, |r| {
                let frames = simulate_observed(truth, spec, n, seed, &[0xc0, n as u64, r as u64])?;
                Ok((maximize_loglik(&frames, truth.params(), spec, settings)?.theta_hat - theta_star).abs())
            })?;
            let sd = if errs.len() > 1 { stats::variance(&errs).sqrt() } else { 0.0 };
            Ok(ConsistencyRow { n, mean_abs_error: stats::mean(&errs), sd_abs_error: sd, replicates })
        })
        .collect()
}

/// Log-log slope of mean error against `n`, with its standard error.
pub fn consistency_slope(rows: &[ConsistencyRow]) -> (f64, f64) {
    let x: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.mean_abs_error.ln()).collect();
    stats::ols_slope(&x, &y)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalityReport {
    pub n: usize,
    pub replicates: usize,
    /// `Var[√n(θ̂ - θ*)] · Î`; 1 under asymptotic efficiency.
    pub variance_ratio: f64,
    pub bias: f64,
    pub bias_std_error: f64,
    pub anderson_darling: f64,
    pub normality_p_value: f64,
}

/// Spread of `√n(θ̂ - θ*)` against the inverse Fisher information `1/Î`
/// (`fisher` is per frame).
pub fn normality_experiment(
    truth: &GroundTruth,
    spec: &PerturbationSpec,
    settings: &MleSettings,
    n: usize,
    replicates: usize,
    fisher: f64,
    seed: u64,
) -> Result<NormalityReport> {
    if replicates < 8 {
        return Err(Error::Config("normality needs at least 8 replicates".into()));
    }
    let theta_star = truth.params().free_value(settings.free);
    let z = par_replicates(replicates, |r| {
        let frames = simulate_observed(truth, spec, n, seed, &[0x40, r as u64])?;
        Ok((n as f64).sqrt() * (maximize_loglik(&frames, truth.params(), spec, settings)?.theta_hat - theta_star))
    })?;
    let var = stats::variance(&z);
    let (a2, p) = stats::anderson_darling_normal(&z);
    let sqrt_n = (n as f64).sqrt();
    Ok(NormalityReport {
        n,
        replicates,
        variance_ratio: var * fisher,
        bias: stats::mean(&z) / sqrt_n,
        bias_std_error: var.sqrt() / sqrt_n / (replicates as f64).sqrt(),
        anderson_darling: a2,
        normality_p_value: p,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRow {
    pub theta: f64,
    /// `(1/n) ln[p_θ(y)/p_θ*(y)]`.
    pub gap: f64,
    pub std_error: f64,
}

/// Normalized log-likelihood ratio against the truth over `theta_grid`, on
/// one simulated data set of `n` static frames.
pub fn likelihood_gap_experiment(
    truth: &GroundTruth,
    spec: &PerturbationSpec,
    free: FreeParam,
    theta_grid: &[f64],
    n: usize,
    seed: u64,
) -> Result<Vec<GapRow>> {
    let params = truth.params();
    if !params.target().is_static() {
        return Err(Error::Config("likelihood gap is computed for static targets".into()));
    }
    let frames = simulate_observed(truth, spec, n, seed, &[0x9a])?;
    let states = truth.initial_states();
    let per_frame = |p: &ModelParams| -> Result<Vec<f64>> {
        let mut engine = FrameEngine::new(p, spec)?;
        frames.iter().map(|f| engine.evaluate(f.points(), states, false)).collect()
    };
    let reference = per_frame(params)?;
    theta_grid
        .iter()
        .map(|&theta| {
            let lp = per_frame(&params.with_free(free, theta)?)?;
            let d: Vec<f64> = lp.iter().zip(&reference).map(|(a, b)| a - b).collect();
            let gap = stats::mean(&d);
            let se = if d.len() > 1 { (stats::variance(&d) / d.len() as f64).sqrt() } else { 0.0 };
            Ok(GapRow { theta, gap, std_error: if se.is_nan() { 0.0 } else { se } })
        })
        .collect()
}

/// Curvature `2·c₂` of a quadratic fit to the gap curve; near `θ*` it
/// approximates `-I(θ*)`.
pub fn gap_curvature(rows: &[GapRow]) -> f64 {
    let x: Vec<f64> = rows.iter().map(|r| r.theta).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.gap).collect();
    2.0 * stats::quadratic_fit(&x, &y)[2]
}
