//! Information-loss curves.

use rand::RngExt;
use serde::{Deserialize, Serialize};

use super::{check, check_grid, scaled, ResultRow, Rows, MIN_OUTER};
use crate::error::Result;
use crate::fisher::{information_loss_mc, par_replicates, summarize_paired, FisherExperiment, InformationLossReport};
use crate::likelihood::{particle, ObservationFrame};
use crate::model::{
    window_radius, ClutterModel, FreeParameter, GroundTruth, ModelParams, Observation, SingleTargetModel,
    SpecialEpsilonLikelihood, Transition,
};
use crate::perm::{Bound, PerturbationSpec};
use crate::rng::stream;
use crate::simulate::simulate_sequence;
use crate::stats;

/// Association samples per frame when exact enumeration does not fit.
const INNER_SAMPLES: usize = 1000;

/// `τ(i - (K+1)/2)` for `i = 1..K`: `K` targets centred on 0 with spacing `τ`.
pub fn centered_states(num_targets: usize, tau: f64) -> Vec<f64> {
    let mid = (num_targets as f64 + 1.0) / 2.0;
    (1..=num_targets).map(|i| tau * (i as f64 - mid)).collect()
}

/// Static targets observed through `N(x, variance)` with θ = variance.
pub fn gaussian_variance_truth(
    variance: f64,
    states: Vec<f64>,
    p_detect: f64,
    clutter: ClutterModel,
) -> Result<GroundTruth> {
    let target = SingleTargetModel::static_gaussian_variance(variance)?;
    GroundTruth::new(ModelParams::new(target, states.len(), p_detect, clutter)?, states)
}

/// Relative loss of static, always detected, clutter-free Gaussian targets
/// at `states` under association radius `alpha`.
pub fn association_loss(
    variance: f64,
    states: Vec<f64>,
    alpha: Bound,
    runs: usize,
    seed: u64,
) -> Result<InformationLossReport> {
    let k = states.len();
    let truth = gaussian_variance_truth(variance, states, 1.0, ClutterModel::none())?;
    let baseline = k as f64 / (2.0 * variance * variance);
    let spec = PerturbationSpec::new(alpha, Bound::Finite(0))?;
    information_loss_mc(&truth, &spec, FisherExperiment::Static { frames: 1 }, runs, INNER_SAMPLES, Some(baseline), seed)
}

/// Relative loss of one static target at 0 among Poisson clutter.
pub fn false_alarm_loss(variance: f64, clutter: ClutterModel, runs: usize, seed: u64) -> Result<InformationLossReport> {
    let truth = gaussian_variance_truth(variance, vec![0.0], 1.0, clutter)?;
    let spec = PerturbationSpec::new(Bound::Unbounded, Bound::Finite(0))?;
    let baseline = 1.0 / (2.0 * variance * variance);
    information_loss_mc(&truth, &spec, FisherExperiment::Static { frames: 1 }, runs, INNER_SAMPLES, Some(baseline), seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FalseAlarmConfig {
    /// Clutter rates λ.
    pub rates: Vec<f64>,
    pub samples: usize,
    /// True observation variance θ*.
    pub variance: f64,
    /// Half-widths `a` of the uniform clutter curves `U([-a, a])`.
    pub uniform_half_widths: Vec<f64>,
}

impl Default for FalseAlarmConfig {
    fn default() -> Self {
        Self {
            // quarter-decade grid from 0.1 to 100
            rates: (0..13).map(|i| 10f64.powf((i as f64 - 4.0) / 4.0)).collect(),
            samples: 500_000,
            variance: 1.0,
            uniform_half_widths: vec![5.0, 10.0, 25.0, 50.0, 100.0],
        }
    }
}

impl FalseAlarmConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        check_grid("rates", &self.rates, |r| r >= 0.0 && r.is_finite())?;
        check(self.samples >= MIN_OUTER, format!("samples must be at least {MIN_OUTER}"))?;
        check(self.variance > 0.0 && self.variance.is_finite(), "variance must be positive")?;
        check(self.uniform_half_widths.iter().all(|&a| a > 0.0 && a.is_finite()), "half widths must be positive")
    }

    pub(crate) fn run(&self, seed: u64, scale: f64) -> Result<Vec<ResultRow>> {
        let n = scaled(self.samples, scale, MIN_OUTER);
        let mut rows = Rows::new("false-alarm", seed);
        for &rate in &self.rates {
            let clutter = ClutterModel::worst_case(rate, 0.0, self.variance)?;
            let r = false_alarm_loss(self.variance, clutter, n, seed)?;
            rows.push("worst-case", "lambda", rate, "relative_loss", r.relative_loss, r.relative_std_error, n);
        }
        for &a in &self.uniform_half_widths {
            let curve = format!("uniform-a{a}");
            for &rate in &self.rates {
                let r = false_alarm_loss(self.variance, ClutterModel::uniform(rate, a)?, n, seed)?;
                rows.push(&curve, "lambda", rate, "relative_loss", r.relative_loss, r.relative_std_error, n);
            }
        }
        Ok(rows.finish())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssociationConfig {
    pub num_targets: usize,
    /// Spacing τ between consecutive targets.
    pub taus: Vec<f64>,
    pub alphas: Vec<Bound>,
    pub runs: usize,
    pub variance: f64,
}

impl Default for AssociationConfig {
    fn default() -> Self {
        Self {
            num_targets: 5,
            taus: vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0],
            alphas: vec![
                Bound::Finite(1),
                Bound::Finite(2),
                Bound::Finite(3),
                Bound::Finite(4),
                Bound::Finite(5),
                Bound::Unbounded,
            ],
            runs: 10_000,
            variance: 1.0,
        }
    }
}

impl AssociationConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        check(self.num_targets >= 1, "num_targets must be at least 1")?;
        check_grid("taus", &self.taus, |t| t >= 0.0 && t.is_finite())?;
        check(!self.alphas.is_empty(), "alphas must not be empty")?;
        check(!self.alphas.contains(&Bound::Finite(0)), "alpha must be at least 1")?;
        check(self.runs >= MIN_OUTER, format!("runs must be at least {MIN_OUTER}"))?;
        check(self.variance > 0.0 && self.variance.is_finite(), "variance must be positive")
    }

    pub(crate) fn run(&self, seed: u64, scale: f64) -> Result<Vec<ResultRow>> {
        let n = scaled(self.runs, scale, MIN_OUTER);
        let mut rows = Rows::new("association-tau-alpha", seed);
        for &alpha in &self.alphas {
            let curve = format!("alpha={alpha}");
            for &tau in &self.taus {
                let r = association_loss(self.variance, centered_states(self.num_targets, tau), alpha, n, seed)?;
                rows.push(&curve, "tau", tau, "relative_loss", r.relative_loss, r.relative_std_error, n);
            }
        }
        Ok(rows.finish())
    }
}

/// How the observation space of the windowed likelihood depends on `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpaceMode {
    /// Fixed at the extent needed for the largest `K`.
    Constant,
    /// Grows with `K` so each target keeps the same share of the space.
    Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumTargetsSpecialConfig {
    pub max_targets: usize,
    pub runs: usize,
    pub epsilon: f64,
    /// Distance between consecutive window centres.
    pub spacing: f64,
    /// Gap between the outermost windows and the ends of the space.
    pub margin: f64,
    pub modes: Vec<SpaceMode>,
}

impl Default for NumTargetsSpecialConfig {
    fn default() -> Self {
        Self {
            max_targets: 10,
            runs: 100_000,
            epsilon: 0.1,
            spacing: 4.0,
            margin: 0.01,
            modes: vec![SpaceMode::Constant, SpaceMode::Adaptive],
        }
    }
}

/// Windowed ε-likelihood for `k` targets at `spacing·(i-1)`, in a space
/// sized for `extent_targets` targets.
pub fn special_truth(
    k: usize,
    extent_targets: usize,
    epsilon: f64,
    spacing: f64,
    margin: f64,
) -> Result<GroundTruth> {
    let r = window_radius(epsilon);
    let centers: Vec<f64> = (0..k).map(|i| spacing * i as f64).collect();
    let low = -r - margin;
    let high = spacing * (extent_targets.max(1) - 1) as f64 + r + margin;
    let lik = SpecialEpsilonLikelihood::new(epsilon, centers.clone(), low, high)?;
    let target = SingleTargetModel::new(Transition::Static, Observation::Special(lik), FreeParameter::ObservationShift)?;
    GroundTruth::new(ModelParams::new(target, k, 1.0, ClutterModel::none())?, centers)
}

impl NumTargetsSpecialConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        check(self.max_targets >= 1, "max_targets must be at least 1")?;
        check(self.runs >= MIN_OUTER, format!("runs must be at least {MIN_OUTER}"))?;
        check(self.epsilon > 0.0 && self.epsilon < 1.0, "epsilon must lie in (0, 1)")?;
        check(self.margin > 0.0 && self.margin.is_finite(), "margin must be positive")?;
        check(
            self.spacing > 2.0 * window_radius(self.epsilon) && self.spacing.is_finite(),
            "spacing must exceed the window diameter",
        )?;
        check(!self.modes.is_empty(), "modes must not be empty")
    }

    pub(crate) fn run(&self, seed: u64, scale: f64) -> Result<Vec<ResultRow>> {
        let n = scaled(self.runs, scale, MIN_OUTER);
        let spec = PerturbationSpec::new(Bound::Unbounded, Bound::Finite(0))?;
        let mut rows = Rows::new("num-targets-special", seed);
        for &mode in &self.modes {
            let curve = match mode {
                SpaceMode::Constant => "constant",
                SpaceMode::Adaptive => "adaptive",
            };
            let mut pts = Vec::new();
            for k in 1..=self.max_targets {
                let extent = if mode == SpaceMode::Constant { self.max_targets } else { k };
                let truth = special_truth(k, extent, self.epsilon, self.spacing, self.margin)?;
                let baseline = k as f64 * truth.params().target().analytic_static_fisher().expect("window Fisher");
                let r = information_loss_mc(
                    &truth,
                    &spec,
                    FisherExperiment::Static { frames: 1 },
                    n,
                    INNER_SAMPLES,
                    Some(baseline),
                    seed,
                )?;
                rows.push(curve, "num_targets", k as f64, "relative_loss", r.relative_loss, r.relative_std_error, n);
                pts.push((k as f64, r.relative_loss, r.relative_std_error));
            }
            let fit: Vec<_> = pts.into_iter().filter(|p| p.0 >= 2.0).collect();
            if fit.len() >= 3 {
                let (slope, se) = loss_slope(&fit);
                rows.push(&format!("{curve}-slope"), "min_targets", 2.0, "slope", slope, se, n);
            }
        }
        Ok(rows.finish())
    }
}

/// Weighted least-squares slope of `(x, y, se)` points; ordinary least
/// squares when some error is zero.
pub fn loss_slope(points: &[(f64, f64, f64)]) -> (f64, f64) {
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let se: Vec<f64> = points.iter().map(|p| p.2).collect();
    if se.iter().all(|&s| s > 0.0) {
        stats::wls_slope(&x, &y, &se)
    } else {
        stats::ols_slope(&x, &y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumTargetsAssocConfig {
    pub max_targets: usize,
    pub tau: f64,
    pub alpha: Bound,
    pub runs: usize,
    pub variance: f64,
}

impl Default for NumTargetsAssocConfig {
    fn default() -> Self {
        Self { max_targets: 10, tau: 1.0, alpha: Bound::Unbounded, runs: 10_000, variance: 1.0 }
    }
}

impl NumTargetsAssocConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        check(self.max_targets >= 1 && self.max_targets <= 16, "max_targets must lie in 1..=16")?;
        check(self.tau >= 0.0 && self.tau.is_finite(), "tau must be non-negative")?;
        check(self.alpha != Bound::Finite(0), "alpha must be at least 1")?;
        check(self.runs >= MIN_OUTER, format!("runs must be at least {MIN_OUTER}"))?;
        check(self.variance > 0.0 && self.variance.is_finite(), "variance must be positive")
    }

    pub(crate) fn run(&self, seed: u64, scale: f64) -> Result<Vec<ResultRow>> {
        let n = scaled(self.runs, scale, MIN_OUTER);
        let mut rows = Rows::new("num-targets-assoc", seed);
        for k in 1..=self.max_targets {
            let r = association_loss(self.variance, centered_states(k, self.tau), self.alpha, n, seed)?;
            rows.push("monte-carlo", "num_targets", k as f64, "relative_loss", r.relative_loss, r.relative_std_error, n);
        }
        Ok(rows.finish())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionFailureConfig {
    pub p_detect: Vec<f64>,
    pub steps: usize,
    /// Particles per filter run.
    pub particles: usize,
    /// Simulated trajectories.
    pub outer: usize,
    pub walk_std: f64,
    pub obs_variance: f64,
    pub initial_state: f64,
}

impl Default for DetectionFailureConfig {
    fn default() -> Self {
        Self {
            p_detect: (1..=9).map(|i| i as f64 / 10.0).collect(),
            steps: 50,
            particles: 1000,
            outer: 10_000,
            walk_std: 0.1,
            obs_variance: 1.0,
            initial_state: 0.0,
        }
    }
}

impl DetectionFailureConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        check_grid("p_detect", &self.p_detect, |p| p > 0.0 && p <= 1.0)?;
        check(self.steps >= 1, "steps must be at least 1")?;
        check(self.particles >= 100, "particles must be at least 100")?;
        check(self.outer >= MIN_OUTER, format!("outer must be at least {MIN_OUTER}"))?;
        check(self.walk_std > 0.0 && self.walk_std.is_finite(), "walk_std must be positive")?;
        check(self.obs_variance > 0.0 && self.obs_variance.is_finite(), "obs_variance must be positive")?;
        check(self.initial_state.is_finite(), "initial_state must be finite")
    }

    /// One report per detection probability, in grid order.
    pub fn reports(&self, seed: u64, scale: f64) -> Result<Vec<InformationLossReport>> {
        let outer = scaled(self.outer, scale, MIN_OUTER);
        let target = SingleTargetModel::random_walk(self.walk_std, self.obs_variance, FreeParameter::ObservationVariance)?;
        let clean = ModelParams::new(target.clone(), 1, 1.0, ClutterModel::none())?
            .restrict_no_clutter()
            .restrict_perfect_detection();
        let truth = GroundTruth::new(clean.clone(), vec![self.initial_state])?;
        let thinned: Vec<ModelParams> = self
            .p_detect
            .iter()
            .map(|&p| Ok(ModelParams::new(target.clone(), 1, p, ClutterModel::none())?.restrict_no_clutter()))
            .collect::<Result<_>>()?;
        let spec = PerturbationSpec::new(Bound::Finite(1), Bound::Unbounded)?;
        let init = [self.initial_state];
        // One trajectory per replicate feeds every p_D: target i of frame t is
        // detected iff u_t < p_D, and every filter reuses the same particle stream.
        let per_rep = par_replicates(outer, |r| {
            let r = r as u64;
            let mut rng = stream(seed, &[0xdf, r]);
            let frames: Vec<ObservationFrame> = simulate_sequence(&truth, &PerturbationSpec::unperturbed(), self.steps, &mut rng)?
                .into_iter()
                .map(|f| f.observed)
                .collect();
            let mut urng = stream(seed, &[0xdf, r, 1]);
            let u: Vec<f64> = (0..self.steps).map(|_| urng.random::<f64>()).collect();
            let su = particle::run(&frames, &init, &clean, &PerturbationSpec::unperturbed(), self.particles, &mut stream(seed, &[0xdf, r, 2]))?.score;
            thinned
                .iter()
                .map(|params| {
                    let kept: Vec<ObservationFrame> = frames
                        .iter()
                        .zip(&u)
                        .map(|(f, &ut)| if ut < params.p_detect() { f.clone() } else { ObservationFrame::empty() })
                        .collect();
                    let sp = particle::run(&kept, &init, params, &spec, self.particles, &mut stream(seed, &[0xdf, r, 2]))?.score;
                    Ok((su, sp))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        Ok((0..self.p_detect.len())
            .map(|j| {
                let pairs: Vec<(f64, f64)> = per_rep.iter().map(|v| v[j]).collect();
                summarize_paired(&pairs, self.steps as f64, None, spec)
            })
            .collect())
    }

    pub(crate) fn run(&self, seed: u64, scale: f64) -> Result<Vec<ResultRow>> {
        let reports = self.reports(seed, scale)?;
        let mut rows = Rows::new("detection-failure", seed);
        for (&p, r) in self.p_detect.iter().zip(&reports) {
            rows.push("monte-carlo", "p_detect", p, "relative_loss", r.relative_loss, r.relative_std_error, r.n_samples);
        }
        Ok(rows.finish())
    }
}
