//! Single-target model families, clutter models and the multi-target
//! parameter vector `(θ, K, p_D, λ, ψ)`.
//!
//! The state and observation spaces are the real line. Exactly one scalar of
//! the single-target model is "the" parameter θ used for differentiation and
//! estimation; [`FreeParameter`] selects which one.

use rand::{Rng, RngExt};
use rand_distr::StandardNormal;

use crate::error::{domain, Error, Result};
use crate::fisher::FisherEstimate;
use crate::math::{ln_normal_pdf, normal_cdf, LN_SQRT_2PI};

/// Markov kernel `f_θ(x | x')` of a single target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transition {
    /// The target never moves. Treated as a point mass, so `ln f = 0` on the
    /// diagonal.
    Static,
    /// Gaussian random walk `x = x' + std·ξ`.
    RandomWalk { std: f64 },
}

/// Observation density `g_θ(y | x)` of a single target.
#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    /// `N(y; x + shift, variance)`.
    Gaussian { variance: f64, shift: f64 },
    /// Windowed Gaussian with an ε-mass spread uniformly outside the window;
    /// the window displacement `m` is the parameter.
    Special(SpecialEpsilonLikelihood),
}

/// Which scalar of the single-target model plays the role of θ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreeParameter {
    ObservationVariance,
    ObservationShift,
    TransitionStd,
}

/// Single-target Markov transition plus observation likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleTargetModel {
    transition: Transition,
    observation: Observation,
    free: FreeParameter,
}

impl SingleTargetModel {
    pub fn new(transition: Transition, observation: Observation, free: FreeParameter) -> Result<Self> {
        match transition {
            Transition::RandomWalk { std } if !(std > 0.0 && std.is_finite()) => {
                return domain(format!("random-walk std must be positive, got {std}"))
            }
            _ => {}
        }
        if let Observation::Gaussian { variance, shift } = observation {
            if !(variance > 0.0 && variance.is_finite()) || !shift.is_finite() {
                return domain(format!("invalid Gaussian observation (variance {variance}, shift {shift})"));
            }
        }
        let compatible = matches!(
            (&observation, free, transition),
            (Observation::Gaussian { .. }, FreeParameter::ObservationVariance, _)
                | (Observation::Gaussian { .. }, FreeParameter::ObservationShift, _)
                | (Observation::Special(_), FreeParameter::ObservationShift, _)
                | (_, FreeParameter::TransitionStd, Transition::RandomWalk { .. })
        );
        if !compatible {
            return Err(Error::Config(format!(
                "free parameter {free:?} is not defined for this model"
            )));
        }
        Ok(Self { transition, observation, free })
    }

    /// Static target observed through `N(x, variance)`, θ = variance.
    pub fn static_gaussian_variance(variance: f64) -> Result<Self> {
        Self::new(
            Transition::Static,
            Observation::Gaussian { variance, shift: 0.0 },
            FreeParameter::ObservationVariance,
        )
    }

    /// Static target observed through `N(x + shift, variance)`, θ = shift.
    pub fn static_gaussian_shift(shift: f64, variance: f64) -> Result<Self> {
        Self::new(
            Transition::Static,
            Observation::Gaussian { variance, shift },
            FreeParameter::ObservationShift,
        )
    }

    /// Random walk with linear-Gaussian observations.
    pub fn random_walk(std: f64, obs_variance: f64, free: FreeParameter) -> Result<Self> {
        Self::new(
            Transition::RandomWalk { std },
            Observation::Gaussian { variance: obs_variance, shift: 0.0 },
            free,
        )
    }

    pub fn transition(&self) -> Transition {
        self.transition
    }

    pub fn observation(&self) -> &Observation {
        &self.observation
    }

    pub fn free_parameter(&self) -> FreeParameter {
        self.free
    }

    pub fn is_static(&self) -> bool {
        self.transition == Transition::Static
    }

    /// Current value of the designated parameter.
    pub fn theta(&self) -> f64 {
        match (self.free, &self.observation, self.transition) {
            (FreeParameter::ObservationVariance, Observation::Gaussian { variance, .. }, _) => *variance,
            (FreeParameter::ObservationShift, Observation::Gaussian { shift, .. }, _) => *shift,
            (FreeParameter::ObservationShift, Observation::Special(s), _) => s.displacement,
            (FreeParameter::TransitionStd, _, Transition::RandomWalk { std }) => std,
            _ => unreachable!("validated in constructor"),
        }
    }

    /// Copy of the model with the designated parameter replaced by `theta`.
    pub fn at(&self, theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return domain(format!("non-finite parameter {theta}"));
        }
        let mut out = self.clone();
        match (self.free, &mut out.observation, &mut out.transition) {
            (FreeParameter::ObservationVariance, Observation::Gaussian { variance, .. }, _) => {
                if theta <= 0.0 {
                    return domain(format!("observation variance must be positive, got {theta}"));
                }
                *variance = theta;
            }
            (FreeParameter::ObservationShift, Observation::Gaussian { shift, .. }, _) => *shift = theta,
            (FreeParameter::ObservationShift, Observation::Special(s), _) => {
                *s = s.with_displacement(theta)?;
            }
            (FreeParameter::TransitionStd, _, Transition::RandomWalk { std }) => {
                if theta <= 0.0 {
                    return domain(format!("random-walk std must be positive, got {theta}"));
                }
                *std = theta;
            }
            _ => unreachable!("validated in constructor"),
        }
        Ok(out)
    }

    /// `ln f(x | x_prev)` at the model's own parameter.
    pub fn ln_f(&self, x: f64, x_prev: f64) -> f64 {
        match self.transition {
            Transition::Static => {
                if x == x_prev {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            Transition::RandomWalk { std } => ln_normal_pdf(x, x_prev, std * std),
        }
    }

    /// `∂θ ln f(x | x_prev)`.
    pub fn score_f(&self, x: f64, x_prev: f64) -> f64 {
        match (self.free, self.transition) {
            (FreeParameter::TransitionStd, Transition::RandomWalk { std }) => {
                let z = (x - x_prev) / std;
                (z * z - 1.0) / std
            }
            _ => 0.0,
        }
    }

    /// `ln g(y | x)` at the model's own parameter.
    pub fn ln_g(&self, y: f64, x: f64) -> f64 {
        match &self.observation {
            Observation::Gaussian { variance, shift } => ln_normal_pdf(y, x + shift, *variance),
            Observation::Special(s) => s.ln_density(y, x),
        }
    }

    /// `∂θ ln g(y | x)`.
    pub fn score_g(&self, y: f64, x: f64) -> f64 {
        match (self.free, &self.observation) {
            (FreeParameter::ObservationVariance, Observation::Gaussian { variance, shift }) => {
                let r = y - x - shift;
                (r * r - variance) / (2.0 * variance * variance)
            }
            (FreeParameter::ObservationShift, Observation::Gaussian { variance, shift }) => {
                (y - x - shift) / variance
            }
            (FreeParameter::ObservationShift, Observation::Special(s)) => s.score(y, x),
            _ => 0.0,
        }
    }

    pub fn sample_transition<R: Rng + ?Sized>(&self, x_prev: f64, rng: &mut R) -> f64 {
        match self.transition {
            Transition::Static => x_prev,
            Transition::RandomWalk { std } => {
                let z: f64 = rng.sample(StandardNormal);
                x_prev + std * z
            }
        }
    }

    pub fn sample_observation<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> f64 {
        match &self.observation {
            Observation::Gaussian { variance, shift } => {
                let z: f64 = rng.sample(StandardNormal);
                x + shift + variance.sqrt() * z
            }
            Observation::Special(s) => s.sample(x, rng),
        }
    }

    /// Closed-form per-observation Fisher information of `g` for a static
    /// target, when the family has one.
    pub fn analytic_static_fisher(&self) -> Option<f64> {
        match (self.free, &self.observation) {
            (FreeParameter::ObservationVariance, Observation::Gaussian { variance, .. }) => {
                Some(1.0 / (2.0 * variance * variance))
            }
            (FreeParameter::ObservationShift, Observation::Gaussian { variance, .. }) => Some(1.0 / variance),
            (FreeParameter::ObservationShift, Observation::Special(s)) => Some(s.window_fisher()),
            (FreeParameter::TransitionStd, _) if self.is_static() => Some(0.0),
            _ => None,
        }
    }
}

/// `ln f_θ(x | x_prev)`.
pub fn log_f(model: &SingleTargetModel, x: f64, x_prev: f64, theta: f64) -> Result<f64> {
    Ok(model.at(theta)?.ln_f(x, x_prev))
}

/// `ln g_θ(y | x)`.
pub fn log_g(model: &SingleTargetModel, y: f64, x: f64, theta: f64) -> Result<f64> {
    Ok(model.at(theta)?.ln_g(y, x))
}

/// `∂θ ln g_θ(y | x)`.
pub fn score_g(model: &SingleTargetModel, y: f64, x: f64, theta: f64) -> Result<f64> {
    Ok(model.at(theta)?.score_g(y, x))
}

/// Observation likelihood that is `N(y; x + m, 1)` on the window
/// `B = (x + m - r, x + m + r)` and spreads the remaining mass ε uniformly
/// over the rest of the bounded observation space `[low, high]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecialEpsilonLikelihood {
    epsilon: f64,
    radius: f64,
    low: f64,
    high: f64,
    centers: Vec<f64>,
    displacement: f64,
}

impl SpecialEpsilonLikelihood {
    /// Builds the likelihood for targets at `centers`. Rejects overlapping
    /// windows and windows that leave `[low, high]`.
    pub fn new(epsilon: f64, centers: Vec<f64>, low: f64, high: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return domain(format!("epsilon must lie in (0, 1), got {epsilon}"));
        }
        if !(low < high) {
            return domain(format!("empty observation space [{low}, {high}]"));
        }
        if centers.is_empty() {
            return domain("at least one target centre is required");
        }
        let radius = window_radius(epsilon);
        let mut sorted = centers.clone();
        sorted.sort_by(f64::total_cmp);
        for pair in sorted.windows(2) {
            if pair[1] - pair[0] < 2.0 * radius {
                return domain(format!(
                    "windows around {} and {} overlap (radius {radius:.6})",
                    pair[0], pair[1]
                ));
            }
        }
        let out = Self { epsilon, radius, low, high, centers, displacement: 0.0 };
        out.check_windows(0.0)?;
        if high - low - 2.0 * radius <= 0.0 {
            return domain("observation space leaves no room outside the window");
        }
        Ok(out)
    }

    fn check_windows(&self, m: f64) -> Result<()> {
        for &c in &self.centers {
            if c + m - self.radius < self.low || c + m + self.radius > self.high {
                return domain(format!("window around {c} with displacement {m} leaves the observation space"));
            }
        }
        Ok(())
    }

    pub fn with_displacement(&self, m: f64) -> Result<Self> {
        self.check_windows(m)?;
        Ok(Self { displacement: m, ..self.clone() })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.low, self.high)
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn displacement(&self) -> f64 {
        self.displacement
    }

    fn outside_ln_density(&self) -> f64 {
        (self.epsilon / (self.high - self.low - 2.0 * self.radius)).ln()
    }

    pub fn in_window(&self, y: f64, x: f64) -> bool {
        (y - x - self.displacement).abs() < self.radius
    }

    pub fn ln_density(&self, y: f64, x: f64) -> f64 {
        if y < self.low || y > self.high {
            f64::NEG_INFINITY
        } else if self.in_window(y, x) {
            ln_normal_pdf(y, x + self.displacement, 1.0)
        } else {
            self.outside_ln_density()
        }
    }

    /// Pointwise derivative in the displacement; zero outside the window.
    pub fn score(&self, y: f64, x: f64) -> f64 {
        if self.in_window(y, x) {
            y - x - self.displacement
        } else {
            0.0
        }
    }

    /// `E[score²] = ∫_{-r}^{r} z² φ(z) dz = (1 - ε) - 2rφ(r)`.
    pub fn window_fisher(&self) -> f64 {
        let r = self.radius;
        (1.0 - self.epsilon) - 2.0 * r * (-LN_SQRT_2PI - 0.5 * r * r).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> f64 {
        let centre = x + self.displacement;
        if rng.random::<f64>() < 1.0 - self.epsilon {
            loop {
                let z: f64 = rng.sample(StandardNormal);
                if z.abs() < self.radius {
                    return centre + z;
                }
            }
        }
        let left = (centre - self.radius) - self.low;
        let u = rng.random::<f64>() * (self.high - self.low - 2.0 * self.radius);
        if u < left {
            self.low + u
        } else {
            self.low + u + 2.0 * self.radius
        }
    }
}

/// Half-width `r` with `P(|Z| < r) = 1 - ε` for a standard normal `Z`,
/// found by bisection to an absolute tolerance of 1e-12.
pub fn window_radius(epsilon: f64) -> f64 {
    let target = 1.0 - epsilon;
    let (mut lo, mut hi) = (0.0_f64, 40.0_f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if 2.0 * normal_cdf(mid) - 1.0 < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Spatial law `p_ψ` of false alarms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClutterDensity {
    Gaussian { mean: f64, variance: f64 },
    Uniform { low: f64, high: f64 },
}

/// Poisson clutter: count `~ Po(rate)`, locations i.i.d. from `density`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClutterModel {
    rate: f64,
    density: ClutterDensity,
}

impl ClutterModel {
    pub fn new(rate: f64, density: ClutterDensity) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return domain(format!("clutter rate must be finite and non-negative, got {rate}"));
        }
        match density {
            ClutterDensity::Gaussian { variance, mean } if !(variance > 0.0) || !mean.is_finite() => {
                return domain("Gaussian clutter needs a positive variance")
            }
            ClutterDensity::Uniform { low, high } if !(low < high) => {
                return domain(format!("empty uniform clutter support [{low}, {high}]"))
            }
            _ => {}
        }
        Ok(Self { rate, density })
    }

    /// No false alarms. The density is never evaluated.
    pub fn none() -> Self {
        Self { rate: 0.0, density: ClutterDensity::Uniform { low: 0.0, high: 1.0 } }
    }

    /// Clutter distributed like a target observation at `x` with the given
    /// variance, which makes clutter and target indistinguishable.
    pub fn worst_case(rate: f64, x: f64, variance: f64) -> Result<Self> {
        Self::new(rate, ClutterDensity::Gaussian { mean: x, variance })
    }

    pub fn uniform(rate: f64, half_width: f64) -> Result<Self> {
        Self::new(rate, ClutterDensity::Uniform { low: -half_width, high: half_width })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn density(&self) -> ClutterDensity {
        self.density
    }

    pub fn with_rate(&self, rate: f64) -> Result<Self> {
        Self::new(rate, self.density)
    }

    pub fn ln_pdf(&self, y: f64) -> f64 {
        match self.density {
            ClutterDensity::Gaussian { mean, variance } => ln_normal_pdf(y, mean, variance),
            ClutterDensity::Uniform { low, high } => {
                if y < low || y > high {
                    f64::NEG_INFINITY
                } else {
                    -(high - low).ln()
                }
            }
        }
    }

    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.density {
            ClutterDensity::Gaussian { mean, variance } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + variance.sqrt() * z
            }
            ClutterDensity::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
        }
    }

    pub fn sample_count<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_poisson(self.rate, rng)
    }
}

/// Poisson variate by sequential inversion for small rates and the
/// `rand_distr` sampler otherwise.
pub fn sample_poisson<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> usize {
    if rate <= 0.0 {
        return 0;
    }
    if rate < 30.0 {
        let u: f64 = rng.random();
        let mut p = (-rate).exp();
        let mut cdf = p;
        let mut k = 0usize;
        while u > cdf && k < 10_000 {
            k += 1;
            p *= rate / k as f64;
            cdf += p;
        }
        return k;
    }
    let dist = rand_distr::Poisson::new(rate).expect("positive finite rate");
    let v: f64 = rng.sample(dist);
    v as usize
}

/// Parameters that are pinned to a special value outside their natural domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Restrictions {
    /// λ is fixed at 0.
    pub no_clutter: bool,
    /// p_D is fixed at 1.
    pub perfect_detection: bool,
}

/// Scalars an optimizer may move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreeParam {
    Theta,
    DetectionProbability,
    ClutterRate,
}

/// The multi-target parameter `(θ, K, p_D, λ, ψ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    target: SingleTargetModel,
    num_targets: usize,
    p_detect: f64,
    clutter: ClutterModel,
    restrictions: Restrictions,
}

impl ModelParams {
    pub fn new(target: SingleTargetModel, num_targets: usize, p_detect: f64, clutter: ClutterModel) -> Result<Self> {
        if num_targets == 0 {
            return domain("at least one target is required");
        }
        if !(p_detect > 0.0 && p_detect <= 1.0) {
            return domain(format!("detection probability must lie in (0, 1], got {p_detect}"));
        }
        Ok(Self { target, num_targets, p_detect, clutter, restrictions: Restrictions::default() })
    }

    /// Pins λ = 0.
    pub fn restrict_no_clutter(mut self) -> Self {
        self.clutter = ClutterModel::new(0.0, self.clutter.density).expect("zero rate is valid");
        self.restrictions.no_clutter = true;
        self
    }

    /// Pins p_D = 1.
    pub fn restrict_perfect_detection(mut self) -> Self {
        self.p_detect = 1.0;
        self.restrictions.perfect_detection = true;
        self
    }

    pub fn target(&self) -> &SingleTargetModel {
        &self.target
    }

    pub fn num_targets(&self) -> usize {
        self.num_targets
    }

    pub fn p_detect(&self) -> f64 {
        self.p_detect
    }

    pub fn clutter(&self) -> &ClutterModel {
        &self.clutter
    }

    pub fn clutter_rate(&self) -> f64 {
        self.clutter.rate
    }

    pub fn restrictions(&self) -> Restrictions {
        self.restrictions
    }

    pub fn theta(&self) -> f64 {
        self.target.theta()
    }

    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        Ok(Self { target: self.target.at(theta)?, ..self.clone() })
    }

    pub fn with_target(&self, target: SingleTargetModel) -> Self {
        Self { target, ..self.clone() }
    }

    pub fn with_clutter(&self, clutter: ClutterModel) -> Result<Self> {
        if self.restrictions.no_clutter && clutter.rate != 0.0 {
            return Err(Error::Config("λ is restricted to 0".into()));
        }
        Ok(Self { clutter, ..self.clone() })
    }

    pub fn free_value(&self, which: FreeParam) -> f64 {
        match which {
            FreeParam::Theta => self.theta(),
            FreeParam::DetectionProbability => self.p_detect,
            FreeParam::ClutterRate => self.clutter.rate,
        }
    }

    /// Moves one free scalar. Restricted coordinates are refused.
    pub fn with_free(&self, which: FreeParam, value: f64) -> Result<Self> {
        match which {
            FreeParam::Theta => self.with_theta(value),
            FreeParam::DetectionProbability => {
                if self.restrictions.perfect_detection {
                    return Err(Error::Config("p_D is restricted to 1".into()));
                }
                if !(value > 0.0 && value <= 1.0) {
                    return domain(format!("detection probability must lie in (0, 1], got {value}"));
                }
                Ok(Self { p_detect: value, ..self.clone() })
            }
            FreeParam::ClutterRate => {
                if self.restrictions.no_clutter {
                    return Err(Error::Config("λ is restricted to 0".into()));
                }
                Ok(Self { clutter: self.clutter.with_rate(value)?, ..self.clone() })
            }
        }
    }
}

/// True parameter plus initial target states; read only by the simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    params: ModelParams,
    initial_states: Vec<f64>,
}

impl GroundTruth {
    pub fn new(params: ModelParams, initial_states: Vec<f64>) -> Result<Self> {
        if initial_states.len() != params.num_targets() {
            return Err(Error::Dimension(format!(
                "{} initial states for {} targets",
                initial_states.len(),
                params.num_targets()
            )));
        }
        if initial_states.iter().any(|x| !x.is_finite()) {
            return Err(Error::Data("non-finite initial state".into()));
        }
        Ok(Self { params, initial_states })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn initial_states(&self) -> &[f64] {
        &self.initial_states
    }

    pub fn with_params(&self, params: ModelParams) -> Result<Self> {
        Self::new(params, self.initial_states.clone())
    }
}

/// Monte Carlo sample count and seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
}

/// How the single-target Fisher information is integrated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FisherRegime {
    /// Fixed state, i.i.d. observations.
    IidStatic { state: f64 },
    /// Trajectories of `steps` steps started at `initial`; the score is the
    /// particle estimate with `particles` particles. Reported per time step.
    Hmm { initial: f64, steps: usize, particles: usize },
}

/// Fisher information `I(θ*)` of a single, always-detected target.
pub fn single_target_fisher(
    model: &SingleTargetModel,
    theta_star: f64,
    regime: FisherRegime,
    mc: McConfig,
) -> Result<FisherEstimate> {
    if mc.samples < 2 {
        return Err(Error::Config(format!("need at least 2 Monte Carlo samples, got {}", mc.samples)));
    }
    let model = model.at(theta_star)?;
    match regime {
        FisherRegime::IidStatic { state } => {
            let scores: Vec<f64> = crate::fisher::par_replicates(mc.samples, |r| {
                let mut rng = crate::rng::stream(mc.seed, &[0x5717, r as u64]);
                let y = model.sample_observation(state, &mut rng);
                Ok(model.score_g(y, state))
            })?;
            Ok(FisherEstimate::from_scalar_scores(&scores, 1.0, "single-target iid-static"))
        }
        FisherRegime::Hmm { initial, steps, particles } => {
            if steps == 0 || particles < 2 {
                return Err(Error::Config("hmm regime needs steps ≥ 1 and particles ≥ 2".into()));
            }
            let params = ModelParams::new(model.clone(), 1, 1.0, ClutterModel::none())?
                .restrict_no_clutter()
                .restrict_perfect_detection();
            let truth = GroundTruth::new(params.clone(), vec![initial])?;
            let scores: Vec<f64> = crate::fisher::par_replicates(mc.samples, |r| {
                let mut rng = crate::rng::stream(mc.seed, &[0x4d4d, r as u64]);
                let frames = crate::simulate::simulate_sequence(
                    &truth,
                    &crate::perm::PerturbationSpec::unperturbed(),
                    steps,
                    &mut rng,
                )?;
                let observed: Vec<_> = frames.iter().map(|f| f.observed.clone()).collect();
                let est = crate::likelihood::particle::run(
                    &observed,
                    &[initial],
                    &params,
                    &crate::perm::PerturbationSpec::unperturbed(),
                    particles,
                    &mut rng,
                )?;
                Ok(est.score)
            })?;
            Ok(FisherEstimate::from_scalar_scores(&scores, steps as f64, "single-target hmm"))
        }
    }
}
