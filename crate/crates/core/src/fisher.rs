//! Fisher-identity scores, Monte Carlo Fisher information and information
//! loss, and the closed-form loss results.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::likelihood::{self, particle, FrameEngine, ObservationFrame};
use crate::math::ln_poisson;
use crate::model::{ClutterModel, GroundTruth, ModelParams};
use crate::perm::{Bound, PerturbationSpec};
use crate::simulate::{simulate_sequence, SimulatedFrame};
use crate::stats::{batch_means, DEFAULT_BATCHES};

/// Symmetric `dim×dim` Fisher information estimate, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherEstimate {
    pub dim: usize,
    pub values: Vec<f64>,
    pub std_error: Vec<f64>,
    pub n_samples: usize,
    pub label: String,
}

impl FisherEstimate {
    /// `mean(s²) / normalizer` with a batch-means standard error.
    pub fn from_scalar_scores(scores: &[f64], normalizer: f64, label: &str) -> Self {
        let sq: Vec<f64> = scores.iter().map(|s| s * s / normalizer).collect();
        let (m, se) = batch_means(&sq, DEFAULT_BATCHES);
        Self { dim: 1, values: vec![m], std_error: vec![se], n_samples: scores.len(), label: label.to_string() }
    }

    /// `mean(s sᵗ) / normalizer` for vector scores.
    pub fn from_score_vectors(scores: &[Vec<f64>], normalizer: f64, label: &str) -> Result<Self> {
        let dim = scores.first().map_or(0, Vec::len);
        if scores.iter().any(|s| s.len() != dim) {
            return Err(Error::Dimension("score vectors of different lengths".into()));
        }
        let mut values = vec![0.0; dim * dim];
        let mut std_error = vec![0.0; dim * dim];
        for r in 0..dim {
            for c in r..dim {
                let prod: Vec<f64> = scores.iter().map(|s| s[r] * s[c] / normalizer).collect();
                let (m, se) = batch_means(&prod, DEFAULT_BATCHES);
                values[r * dim + c] = m;
                values[c * dim + r] = m;
                std_error[r * dim + c] = se;
                std_error[c * dim + r] = se;
            }
        }
        Ok(Self { dim, values, std_error, n_samples: scores.len(), label: label.to_string() })
    }

    pub fn scalar(&self) -> f64 {
        self.values[0]
    }

    pub fn scalar_std_error(&self) -> f64 {
        self.std_error[0]
    }
}

/// Runs `f(0..n)` on the worker pool and returns the results in index order.
pub fn par_replicates<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// How target states enter the score.
#[derive(Debug, Clone, PartialEq)]
pub enum ScoreRegime {
    /// Known static states.
    Static { states: Vec<f64> },
    /// Trajectories integrated by a particle filter from these initial states.
    Dynamic { initial: Vec<f64> },
}

/// Treatment of latent associations and trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatentHandling {
    /// Exact posterior over `(ς, D)`; static states only.
    Exact,
    /// Exact association posterior where the enumeration fits, otherwise
    /// `samples` prior draws; for dynamic regimes `samples` particles.
    MonteCarlo { samples: usize },
}

fn frame_score(engine: &mut FrameEngine<'_>, frame: &ObservationFrame, x: &[f64], t: usize) -> Result<f64> {
    let ll = engine.evaluate(frame.points(), x, true)?;
    if ll == f64::NEG_INFINITY {
        return Err(Error::InconsistentData(format!("frame {t} has zero likelihood under the model")));
    }
    Ok(engine.expected_score(frame.points(), x))
}

/// `∂_θ ln p_θ(y_{1:n})` as the posterior expectation of the complete-data
/// score over the latent detections, associations and trajectories.
pub fn score_fisher_identity<R: Rng + ?Sized>(
    frames: &[ObservationFrame],
    params: &ModelParams,
    spec: &PerturbationSpec,
    regime: &ScoreRegime,
    latent: LatentHandling,
    rng: &mut R,
) -> Result<f64> {
    match (regime, latent) {
        (ScoreRegime::Static { states }, LatentHandling::Exact) => {
            let mut engine = FrameEngine::new(params, spec)?;
            let mut s = 0.0;
            for (t, f) in frames.iter().enumerate() {
                s += frame_score(&mut engine, f, states, t)?;
            }
            Ok(s)
        }
        (ScoreRegime::Static { states }, LatentHandling::MonteCarlo { samples }) => {
            let mut engine = FrameEngine::new(params, spec)?;
            let mut s = 0.0;
            for (t, f) in frames.iter().enumerate() {
                let ll = engine.evaluate_or_sample(f.points(), states, samples, rng)?;
                if ll == f64::NEG_INFINITY {
                    return Err(Error::InconsistentData(format!("frame {t} has zero likelihood under the model")));
                }
                s += engine.expected_score(f.points(), states);
            }
            Ok(s)
        }
        (ScoreRegime::Dynamic { .. }, LatentHandling::Exact) => {
            Err(Error::Config("exact latent handling needs static targets".into()))
        }
        (ScoreRegime::Dynamic { initial }, LatentHandling::MonteCarlo { samples }) => {
            Ok(particle::run(frames, initial, params, spec, samples, rng)?.score)
        }
    }
}

/// `c_i(y) = (g(y_i|x)/p_ψ(y_i)) / Σ_j g(y_j|x)/p_ψ(y_j)` for one always
/// detected target among clutter.
///
/// A single point outside the clutter support must be the target and gets
/// weight 1; two or more such points cannot be explained by the model.
pub fn association_weights_ci(frame: &ObservationFrame, x: f64, params: &ModelParams) -> Result<Vec<f64>> {
    if params.num_targets() != 1 || params.p_detect() != 1.0 {
        return Err(Error::Config("c_i weights need one target with p_D = 1".into()));
    }
    let y = frame.points();
    let target = params.target();
    let outside: Vec<usize> = (0..y.len()).filter(|&i| params.clutter().ln_pdf(y[i]) == f64::NEG_INFINITY).collect();
    match outside.len() {
        0 => {}
        1 => {
            let mut w = vec![0.0; y.len()];
            w[outside[0]] = 1.0;
            if target.ln_g(y[outside[0]], x) == f64::NEG_INFINITY {
                return Err(Error::SupportViolation(format!("point {} has zero density under every source", outside[0])));
            }
            return Ok(w);
        }
        n => {
            return Err(Error::SupportViolation(format!(
                "{n} points lie outside the clutter support but only one target exists"
            )))
        }
    }
    let ln_r: Vec<f64> = y.iter().map(|&v| target.ln_g(v, x) - params.clutter().ln_pdf(v)).collect();
    let ln_z = crate::math::log_sum_exp(&ln_r);
    if ln_z == f64::NEG_INFINITY {
        return Err(Error::InconsistentData("no point can originate from the target".into()));
    }
    Ok(ln_r.iter().map(|r| (r - ln_z).exp()).collect())
}

/// `c_{i,k}(y)`: posterior probability that target `i` generated point `k`,
/// for `K` static, always detected targets without clutter.
pub fn association_weights_cik(frame: &ObservationFrame, states: &[f64], params: &ModelParams) -> Result<Vec<Vec<f64>>> {
    if params.p_detect() != 1.0 || params.clutter_rate() != 0.0 {
        return Err(Error::Config("c_ik weights need p_D = 1 and λ = 0".into()));
    }
    if frame.len() != params.num_targets() {
        return Err(Error::ModelViolation(format!(
            "{} points for {} always detected targets",
            frame.len(),
            params.num_targets()
        )));
    }
    let spec = PerturbationSpec { alpha: Bound::Unbounded, beta: Bound::Finite(0) };
    let post = likelihood::frame_posterior(frame, states, params, &spec)?;
    if post.log_likelihood == f64::NEG_INFINITY {
        return Err(Error::InconsistentData("all association hypotheses have zero weight".into()));
    }
    Ok(post.assoc_matrix())
}

/// Data-generating protocol for Monte Carlo Fisher estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FisherExperiment {
    /// `frames` independent frames of static targets per replicate.
    Static { frames: usize },
    /// One trajectory of `steps` frames per replicate.
    Hmm { steps: usize },
}

impl FisherExperiment {
    fn frames(&self) -> usize {
        match *self {
            FisherExperiment::Static { frames } => frames,
            FisherExperiment::Hmm { steps } => steps,
        }
    }
}

fn check_outer(mc_outer: usize) -> Result<()> {
    if mc_outer < 100 {
        return Err(Error::Config(format!("need at least 100 outer Monte Carlo samples, got {mc_outer}")));
    }
    Ok(())
}

/// `Î = mean(score²)` per frame over simulated replicates of the perturbed
/// model, with a batch-means standard error.
pub fn fisher_mc(
    truth: &GroundTruth,
    spec: &PerturbationSpec,
    experiment: FisherExperiment,
    mc_outer: usize,
    mc_inner: usize,
    seed: u64,
) -> Result<FisherEstimate> {
    check_outer(mc_outer)?;
    let n = experiment.frames();
    let params = truth.params();
    let scores = par_replicates(mc_outer, |r| {
        let mut rng = crate::rng::stream(seed, &[0xf15e, r as u64]);
        let frames = simulate_sequence(truth, spec, n, &mut rng)?;
        let observed: Vec<ObservationFrame> = frames.iter().map(|f| f.observed.clone()).collect();
        let regime = match experiment {
            FisherExperiment::Static { .. } => ScoreRegime::Static { states: truth.initial_states().to_vec() },
            FisherExperiment::Hmm { .. } => ScoreRegime::Dynamic { initial: truth.initial_states().to_vec() },
        };
        score_fisher_identity(&observed, params, spec, &regime, LatentHandling::MonteCarlo { samples: mc_inner }, &mut rng)
    })?;
    Ok(FisherEstimate::from_scalar_scores(&scores, n as f64, &format!("fisher α={} β={}", spec.alpha, spec.beta)))
}

/// Where a loss value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    MonteCarlo,
}

/// Known-association information `K·I(θ*)` versus the information left in the
/// perturbed observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InformationLossReport {
    pub baseline: f64,
    pub baseline_std_error: f64,
    pub perturbed: f64,
    pub loss: f64,
    pub loss_std_error: f64,
    pub relative_loss: f64,
    pub relative_std_error: f64,
    pub spec: PerturbationSpec,
    pub provenance: Provenance,
    pub n_samples: usize,
}

/// Summarizes paired per-replicate scores `(s_u, s_p)`: `s_u` from the
/// unperturbed data, `s_p` from the perturbed data built on the same latents.
///
/// Since `s_p = E[s_u | Y^{α,β}]`, `E[s_u² - s_p²]` is the loss and the
/// paired differences have far smaller variance than either square. With an
/// analytic `baseline` the relative loss is `mean(d)/baseline`; otherwise the
/// baseline is `mean(s_u²)` and the ratio's error comes from the delta method.
pub fn summarize_paired(
    pairs: &[(f64, f64)],
    normalizer: f64,
    baseline: Option<f64>,
    spec: PerturbationSpec,
) -> InformationLossReport {
    let d: Vec<f64> = pairs.iter().map(|(u, p)| (u * u - p * p) / normalizer).collect();
    let u: Vec<f64> = pairs.iter().map(|(u, _)| u * u / normalizer).collect();
    let (loss, loss_se) = batch_means(&d, DEFAULT_BATCHES);
    let (base, base_se, rel, rel_se) = match baseline {
        Some(b) => (b, 0.0, loss / b, loss_se / b),
        None => {
            let (ub, ub_se) = batch_means(&u, DEFAULT_BATCHES);
            let ratio = loss / ub;
            let resid: Vec<f64> = d.iter().zip(&u).map(|(di, ui)| (di - ratio * ui) / ub).collect();
            let (_, r_se) = batch_means(&resid, DEFAULT_BATCHES);
            (ub, ub_se, ratio, r_se)
        }
    };
    InformationLossReport {
        baseline: base,
        baseline_std_error: base_se,
        perturbed: base - loss,
        loss,
        loss_std_error: loss_se,
        relative_loss: rel,
        relative_std_error: rel_se,
        spec,
        provenance: Provenance::MonteCarlo,
        n_samples: pairs.len(),
    }
}

/// Model of the unperturbed observations `Y`: all targets detected, no
/// clutter, identity association.
pub fn unperturbed_params(params: &ModelParams) -> Result<ModelParams> {
    Ok(ModelParams::new(params.target().clone(), params.num_targets(), 1.0, ClutterModel::none())?
        .restrict_no_clutter()
        .restrict_perfect_detection())
}

/// Complete-data score of the unperturbed static frames.
pub fn unperturbed_static_score(frames: &[SimulatedFrame], params: &ModelParams) -> f64 {
    let target = params.target();
    frames
        .iter()
        .map(|f| {
            f.truth_observations
                .iter()
                .zip(f.truth_states.iter())
                .map(|(&y, &x)| target.score_g(y, x))
                .sum::<f64>()
        })
        .sum()
}

/// Paired scores for one replicate.
pub fn paired_scores(
    frames: &[SimulatedFrame],
    truth: &GroundTruth,
    spec: &PerturbationSpec,
    experiment: FisherExperiment,
    mc_inner: usize,
    rng_seed: (u64, u64),
) -> Result<(f64, f64)> {
    let params = truth.params();
    let observed: Vec<ObservationFrame> = frames.iter().map(|f| f.observed.clone()).collect();
    match experiment {
        FisherExperiment::Static { .. } => {
            let states = truth.initial_states().to_vec();
            let su = unperturbed_static_score(frames, params);
            let mut rng = crate::rng::stream(rng_seed.0, &[rng_seed.1, 1]);
            let sp = score_fisher_identity(
                &observed,
                params,
                spec,
                &ScoreRegime::Static { states },
                LatentHandling::MonteCarlo { samples: mc_inner },
                &mut rng,
            )?;
            Ok((su, sp))
        }
        FisherExperiment::Hmm { .. } => {
            let initial = truth.initial_states();
            let clean: Vec<ObservationFrame> = frames.iter().map(|f| f.unperturbed()).collect();
            let pu = unperturbed_params(params)?;
            // same particle stream for both filters to correlate their errors
            let mut rng = crate::rng::stream(rng_seed.0, &[rng_seed.1, 2]);
            let su = particle::run(&clean, initial, &pu, &PerturbationSpec::unperturbed(), mc_inner, &mut rng)?.score;
            let mut rng = crate::rng::stream(rng_seed.0, &[rng_seed.1, 2]);
            let sp = particle::run(&observed, initial, params, spec, mc_inner, &mut rng)?.score;
            Ok((su, sp))
        }
    }
}

/// Monte Carlo information loss of `Y^{α,β}` relative to known association.
/// `baseline` is the per-frame `K·I(θ*)` when known analytically.
pub fn information_loss_mc(
    truth: &GroundTruth,
    spec: &PerturbationSpec,
    experiment: FisherExperiment,
    mc_outer: usize,
    mc_inner: usize,
    baseline: Option<f64>,
    seed: u64,
) -> Result<InformationLossReport> {
    check_outer(mc_outer)?;
    let n = experiment.frames();
    let pairs = par_replicates(mc_outer, |r| {
        let mut rng = crate::rng::stream(seed, &[0x1055, r as u64]);
        let frames = simulate_sequence(truth, spec, n, &mut rng)?;
        paired_scores(&frames, truth, spec, experiment, mc_inner, (seed, r as u64))
    })?;
    Ok(summarize_paired(&pairs, n as f64, baseline, *spec))
}

/// `E[N/(N+1)]`, `N ~ Po(λ)`, by a truncated series: the relative loss of a
/// single target among worst-case clutter.
pub fn loss_false_alarm_worst_case(rate: f64) -> Result<f64> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return domain(format!("clutter rate must be finite and non-negative, got {rate}"));
    }
    if rate == 0.0 {
        return Ok(0.0);
    }
    // E[1/(N+1)]; stop once past the mode with terms below 1e-17
    let mut acc = 0.0;
    let mut k = 0usize;
    loop {
        let p = ln_poisson(rate, k).exp();
        acc += p / (k as f64 + 1.0);
        if k as f64 > rate && p < 1e-17 {
            break;
        }
        k += 1;
    }
    Ok(1.0 - acc)
}

/// `1 - (1 - e^{-λ})/λ`.
pub fn loss_false_alarm_closed_form(rate: f64) -> Result<f64> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return domain(format!("clutter rate must be finite and non-negative, got {rate}"));
    }
    if rate == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 + (-rate).exp_m1() / rate)
}

/// Loss `(1 - p_D)·K·I` for known association and unconstrained misses.
pub fn loss_detection_failure(p_detect: f64, num_targets: usize, single_fisher: f64) -> Result<InformationLossReport> {
    if !(p_detect > 0.0 && p_detect <= 1.0) {
        return domain(format!("detection probability must lie in (0, 1], got {p_detect}"));
    }
    if !(single_fisher >= 0.0) {
        return domain(format!("single-target information must be non-negative, got {single_fisher}"));
    }
    let baseline = num_targets as f64 * single_fisher;
    let loss = (1.0 - p_detect) * baseline;
    Ok(InformationLossReport {
        baseline,
        baseline_std_error: 0.0,
        perturbed: baseline - loss,
        loss,
        loss_std_error: 0.0,
        relative_loss: 1.0 - p_detect,
        relative_std_error: 0.0,
        spec: PerturbationSpec { alpha: Bound::Finite(1), beta: Bound::Unbounded },
        provenance: Provenance::ClosedForm,
        n_samples: 0,
    })
}

/// Information about `p_D` carried by the detection counts, `K/(p_D(1-p_D))`.
pub fn cardinality_information(p_detect: f64, num_targets: usize) -> Result<f64> {
    if !(p_detect > 0.0 && p_detect < 1.0) {
        return domain(format!("cardinality information diverges at p_D = {p_detect}"));
    }
    Ok(num_targets as f64 / (p_detect * (1.0 - p_detect)))
}

/// `I(θ*, K+N) = I(θ*, K) + p_D·N·I`: `N` extra targets that never enter the
/// association problem.
pub fn additivity_unperturbed_targets(
    report: &InformationLossReport,
    extra_targets: usize,
    p_detect: f64,
    single_fisher: f64,
) -> f64 {
    report.perturbed + p_detect * extra_targets as f64 * single_fisher
}

/// Both sides of the identity `∇ ln p(y') = E[∇ ln p(Y) | Y' = y']`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub identity_score: f64,
    pub finite_difference: f64,
    pub gap: f64,
}

/// Compares the Fisher-identity score of static frames with a central
/// difference of the marginal log-likelihood (step `h`).
pub fn score_conditional_expectation_identity_check(
    frames: &[ObservationFrame],
    states: &[f64],
    params: &ModelParams,
    spec: &PerturbationSpec,
    h: f64,
) -> Result<IdentityCheck> {
    let mut rng = crate::rng::stream(0, &[0]);
    let identity = score_fisher_identity(
        frames,
        params,
        spec,
        &ScoreRegime::Static { states: states.to_vec() },
        LatentHandling::Exact,
        &mut rng,
    )?;
    let integration = likelihood::Integration::ExactStatic { states: states.to_vec() };
    let theta = params.theta();
    let up = likelihood::marginal_log_likelihood_sequence(frames, &params.with_theta(theta + h)?, spec, &integration)?;
    let down = likelihood::marginal_log_likelihood_sequence(frames, &params.with_theta(theta - h)?, spec, &integration)?;
    let fd = (up - down) / (2.0 * h);
    Ok(IdentityCheck { identity_score: identity, finite_difference: fd, gap: (identity - fd).abs() })
}
