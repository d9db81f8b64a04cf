//! Multi-target frame likelihoods, the known-association joint density and
//! the marginal likelihood of a frame sequence.

pub(crate) mod assoc;
pub mod brute;
pub mod particle;

use std::ops::Deref;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{ln_poisson, log_sum_exp};
use crate::model::ModelParams;
use crate::perm::{Bound, DetectionMask, DetectionMaskLaw, PerturbationSpec};

use assoc::{MatchingBuffers, Marginals};

/// Largest `N_M^α · |B_β|` summed explicitly when `α < M`.
pub const ASSOCIATION_ENUMERATION_CAP: u64 = 1_000_000;

/// Observation points of one time step. May be empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObservationFrame {
    points: Vec<f64>,
}

impl ObservationFrame {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if let Some(p) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("observation {p} is not finite ({})", points[p])));
        }
        Ok(Self { points })
    }

    pub fn empty() -> Self {
        Self { points: Vec::new() }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Joint state of the `K` targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiTargetState {
    states: Vec<f64>,
}

impl MultiTargetState {
    pub fn new(states: Vec<f64>) -> Result<Self> {
        if states.iter().any(|x| !x.is_finite()) {
            return Err(Error::Data("non-finite target state".into()));
        }
        Ok(Self { states })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.states
    }
}

impl Deref for MultiTargetState {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.states
    }
}

/// Log-likelihood of a frame plus posterior association marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePosterior {
    pub log_likelihood: f64,
    num_targets: usize,
    num_points: usize,
    assoc: Vec<f64>,
    clutter: Vec<f64>,
}

impl FramePosterior {
    /// `P(target i generated point k | y)`.
    pub fn assoc(&self, target: usize, point: usize) -> f64 {
        self.assoc[target * self.num_points + point]
    }

    /// `P(point k is clutter | y)`.
    pub fn clutter(&self, point: usize) -> f64 {
        self.clutter[point]
    }

    /// `P(target i detected | y)`.
    pub fn detection(&self, target: usize) -> f64 {
        (0..self.num_points).map(|k| self.assoc(target, k)).sum()
    }

    pub fn num_targets(&self) -> usize {
        self.num_targets
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    /// The `K×M` association matrix, one row per target.
    pub fn assoc_matrix(&self) -> Vec<Vec<f64>> {
        self.assoc.chunks(self.num_points.max(1)).take(self.num_targets).map(|r| r.to_vec()).collect()
    }
}

enum Method {
    /// `α ≥ M`: matching dynamic program.
    Matching,
    /// `α < M` and the hypothesis count fits the cap.
    Enumerate,
    /// `α < M`, too many hypotheses.
    TooLarge,
}

/// Reusable frame evaluator for one `(params, spec)` pair.
pub(crate) struct FrameEngine<'a> {
    params: &'a ModelParams,
    spec: PerturbationSpec,
    law: DetectionMaskLaw,
    masks: Option<Vec<DetectionMask>>,
    weights: Vec<Option<Vec<f64>>>,
    ln_g: Vec<f64>,
    ln_c: Vec<f64>,
    bufs: MatchingBuffers,
    assoc: Vec<f64>,
    clutter: Vec<f64>,
    m: usize,
}

impl<'a> FrameEngine<'a> {
    pub(crate) fn new(params: &'a ModelParams, spec: &PerturbationSpec) -> Result<Self> {
        Ok(Self {
            params,
            spec: *spec,
            law: DetectionMaskLaw::new(params.num_targets(), params.p_detect(), spec.beta)?,
            masks: None,
            weights: Vec::new(),
            ln_g: Vec::new(),
            ln_c: Vec::new(),
            bufs: MatchingBuffers::default(),
            assoc: Vec::new(),
            clutter: Vec::new(),
            m: 0,
        })
    }

    fn method(&self, m: usize) -> Method {
        match self.spec.alpha {
            Bound::Finite(a) if a < m => {
                if assoc::enumeration_size(m, self.spec.alpha, &self.law) <= ASSOCIATION_ENUMERATION_CAP as f64 {
                    Method::Enumerate
                } else {
                    Method::TooLarge
                }
            }
            _ => Method::Matching,
        }
    }

    pub(crate) fn exact_feasible(&self, m: usize) -> bool {
        !matches!(self.method(m), Method::TooLarge)
    }

    fn fill(&mut self, y: &[f64], x: &[f64]) -> Result<()> {
        let k = self.params.num_targets();
        if x.len() != k {
            return Err(Error::Dimension(format!("{} states for {} targets", x.len(), k)));
        }
        let m = y.len();
        self.m = m;
        let target = self.params.target();
        self.ln_g.clear();
        for &xi in x {
            self.ln_g.extend(y.iter().map(|&yk| target.ln_g(yk, xi)));
        }
        self.ln_c.clear();
        if self.params.clutter_rate() == 0.0 {
            // irrelevant terms; kept at zero mass so they cannot dominate scaling
            self.ln_c.resize(m, f64::NEG_INFINITY);
        } else {
            let clutter = self.params.clutter();
            self.ln_c.extend(y.iter().map(|&yk| clutter.ln_pdf(yk)));
        }
        self.assoc.clear();
        self.assoc.resize(k * m, 0.0);
        self.clutter.clear();
        self.clutter.resize(m, 0.0);
        Ok(())
    }

    fn weights(&mut self, m: usize) -> &[f64] {
        if self.weights.len() <= m {
            self.weights.resize(m + 1, None);
        }
        if self.weights[m].is_none() {
            self.weights[m] = Some(assoc::matching_weights(&self.law, self.params.clutter_rate(), m));
        }
        self.weights[m].as_deref().expect("filled above")
    }

    /// Exact log-likelihood; fills the posterior marginals when asked.
    pub(crate) fn evaluate(&mut self, y: &[f64], x: &[f64], with_posterior: bool) -> Result<f64> {
        self.fill(y, x)?;
        let m = y.len();
        let k = self.params.num_targets();
        match self.method(m) {
            Method::Matching => {
                self.weights(m);
                let ln_w = self.weights[m].as_deref().expect("cached");
                let marg = with_posterior.then_some(Marginals { assoc: &mut self.assoc, clutter: &mut self.clutter });
                Ok(assoc::matching(k, m, &self.ln_g, &self.ln_c, ln_w, &mut self.bufs, marg))
            }
            Method::Enumerate => {
                if self.masks.is_none() {
                    self.masks = Some(self.law.support());
                }
                let marg = with_posterior.then_some(Marginals { assoc: &mut self.assoc, clutter: &mut self.clutter });
                assoc::enumerate(
                    m,
                    self.spec.alpha,
                    &self.law,
                    self.masks.as_deref().expect("filled above"),
                    self.params.clutter_rate(),
                    &self.ln_g,
                    &self.ln_c,
                    ASSOCIATION_ENUMERATION_CAP,
                    marg,
                )
            }
            Method::TooLarge => Err(Error::Resource(format!(
                "exact association sum for M = {m}, α = {} exceeds {} hypotheses; use latent Monte Carlo",
                self.spec.alpha, ASSOCIATION_ENUMERATION_CAP
            ))),
        }
    }

    /// Exact where feasible, otherwise self-normalized importance sampling
    /// with `samples` draws from the association prior.
    pub(crate) fn evaluate_or_sample<R: Rng + ?Sized>(
        &mut self,
        y: &[f64],
        x: &[f64],
        samples: usize,
        rng: &mut R,
    ) -> Result<f64> {
        if self.exact_feasible(y.len()) {
            return self.evaluate(y, x, true);
        }
        self.fill(y, x)?;
        assoc::sample_posterior(
            y.len(),
            self.spec.alpha,
            &self.law,
            self.params.clutter_rate(),
            &self.ln_g,
            &self.ln_c,
            samples,
            rng,
            Marginals { assoc: &mut self.assoc, clutter: &mut self.clutter },
        )
    }

    /// `E[Σ_{matched (i,k)} ∂_θ ln g(y_k | x_i) | y]` from the last posterior.
    pub(crate) fn expected_score(&self, y: &[f64], x: &[f64]) -> f64 {
        let m = self.m;
        let target = self.params.target();
        let mut s = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            for (kk, &yk) in y.iter().enumerate() {
                let p = self.assoc[i * m + kk];
                if p > 0.0 {
                    s += p * target.score_g(yk, xi);
                }
            }
        }
        s
    }

    pub(crate) fn posterior(&self, log_likelihood: f64) -> FramePosterior {
        FramePosterior {
            log_likelihood,
            num_targets: self.params.num_targets(),
            num_points: self.m,
            assoc: self.assoc.clone(),
            clutter: self.clutter.clone(),
        }
    }
}

/// `ln g_θ(y | x)` of the full model: unrestricted detections and a uniform
/// association over `Sym(M)`.
pub fn log_multi_likelihood(frame: &ObservationFrame, x: &[f64], params: &ModelParams) -> Result<f64> {
    log_perturbed_likelihood(frame, x, params, &PerturbationSpec::full())
}

/// `ln` of the density of `Y^{α,β}` given the target states.
pub fn log_perturbed_likelihood(
    frame: &ObservationFrame,
    x: &[f64],
    params: &ModelParams,
    spec: &PerturbationSpec,
) -> Result<f64> {
    FrameEngine::new(params, spec)?.evaluate(frame.points(), x, false)
}

/// Log-likelihood and posterior association marginals of one frame.
pub fn frame_posterior(
    frame: &ObservationFrame,
    x: &[f64],
    params: &ModelParams,
    spec: &PerturbationSpec,
) -> Result<FramePosterior> {
    let mut engine = FrameEngine::new(params, spec)?;
    let ll = engine.evaluate(frame.points(), x, true)?;
    Ok(engine.posterior(ll))
}

/// Two-term form for a single target:
/// `(1-p_D) Po_λ(m) Π p_ψ + (p_D/m) Σ_i g(y_i|x) Po_λ(m-1) Π_{j≠i} p_ψ`.
pub fn log_multi_likelihood_k1(frame: &ObservationFrame, x: f64, params: &ModelParams) -> Result<f64> {
    if params.num_targets() != 1 {
        return Err(Error::Config(format!("single-target formula used with K = {}", params.num_targets())));
    }
    let y = frame.points();
    let m = y.len();
    let p = params.p_detect();
    let rate = params.clutter_rate();
    let ln_c: Vec<f64> = y.iter().map(|&v| params.clutter().ln_pdf(v)).collect();
    let mut terms = Vec::with_capacity(m + 1);
    if p < 1.0 {
        terms.push((1.0 - p).ln() + ln_poisson(rate, m) + ln_c.iter().sum::<f64>());
    }
    if m > 0 {
        let ln_head = p.ln() - (m as f64).ln() + ln_poisson(rate, m - 1);
        for i in 0..m {
            let rest: f64 = ln_c.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, c)| *c).sum();
            terms.push(ln_head + params.target().ln_g(y[i], x) + rest);
        }
    }
    Ok(log_sum_exp(&terms))
}

/// Joint log-density of frames and a state trajectory when every target is
/// detected and the association is the identity: target `i` produced point
/// `i`, the remaining `M_t - K` points are clutter.
///
/// `trajectory[0]` is the initial state `x_0`; `trajectory[t]` pairs with
/// `frames[t-1]`.
pub fn log_joint_known_association(
    frames: &[ObservationFrame],
    trajectory: &[MultiTargetState],
    params: &ModelParams,
) -> Result<f64> {
    let k = params.num_targets();
    if trajectory.len() != frames.len() + 1 {
        return Err(Error::Dimension(format!(
            "trajectory has {} states for {} frames (expected frames + 1)",
            trajectory.len(),
            frames.len()
        )));
    }
    if let Some(bad) = trajectory.iter().find(|s| s.len() != k) {
        return Err(Error::Dimension(format!("{} states for {k} targets", bad.len())));
    }
    let target = params.target();
    let mut total = 0.0;
    for (t, frame) in frames.iter().enumerate() {
        let y = frame.points();
        if y.len() < k {
            return Err(Error::ModelViolation(format!(
                "frame {t} has {} points but all {k} targets are detected",
                y.len()
            )));
        }
        let (prev, cur) = (&trajectory[t], &trajectory[t + 1]);
        for i in 0..k {
            total += target.ln_f(cur[i], prev[i]) + target.ln_g(y[i], cur[i]);
        }
        total += ln_poisson(params.clutter_rate(), y.len() - k);
        if params.clutter_rate() > 0.0 {
            total += y[k..].iter().map(|&v| params.clutter().ln_pdf(v)).sum::<f64>();
        }
    }
    Ok(total)
}

/// How the target states are integrated out of a frame sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum Integration {
    /// Targets sit at these states in every frame.
    ExactStatic { states: Vec<f64> },
    /// Bootstrap particle filter from `initial` with `samples` particles.
    MonteCarlo { samples: usize, seed: u64, initial: Vec<f64> },
}

/// `ln p_θ(y_{1:n} | x_0)`.
pub fn marginal_log_likelihood_sequence(
    frames: &[ObservationFrame],
    params: &ModelParams,
    spec: &PerturbationSpec,
    integration: &Integration,
) -> Result<f64> {
    match integration {
        Integration::ExactStatic { states } => {
            let mut engine = FrameEngine::new(params, spec)?;
            let mut total = 0.0;
            for f in frames {
                total += engine.evaluate(f.points(), states, false)?;
                if total == f64::NEG_INFINITY {
                    break;
                }
            }
            Ok(total)
        }
        Integration::MonteCarlo { samples, seed, initial } => {
            if *samples < 100 {
                return Err(Error::Config(format!("need at least 100 particles, got {samples}")));
            }
            if frames.is_empty() {
                return Ok(0.0);
            }
            let mut rng = crate::rng::stream(*seed, &[0x7061_7274]);
            Ok(particle::run(frames, initial, params, spec, *samples, &mut rng)?.log_likelihood)
        }
    }
}
