//! Bootstrap particle filter over the joint target state, returning the
//! marginal log-likelihood and a path-space estimate of the score.
//!
//! Each particle carries the running complete-data score of its ancestral
//! path, `Σ_t ∂_θ ln f(x_t | x_{t-1}) + E[∂_θ ln g | y_t, x_t]`, where the
//! inner expectation over associations is exact. The score estimate is the
//! weighted average of these sums at the final step.

use rand::{Rng, RngExt};

use crate::error::{Error, Result};
use crate::math::log_sum_exp;
use crate::model::ModelParams;
use crate::perm::PerturbationSpec;

use super::{FrameEngine, ObservationFrame};

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEstimate {
    pub log_likelihood: f64,
    pub score: f64,
    /// Smallest effective sample size seen before resampling.
    pub min_ess: f64,
    pub resamples: usize,
}

/// Filters `frames` from the known initial states.
pub fn run<R: Rng + ?Sized>(
    frames: &[ObservationFrame],
    initial: &[f64],
    params: &ModelParams,
    spec: &PerturbationSpec,
    particles: usize,
    rng: &mut R,
) -> Result<ParticleEstimate> {
    let k = params.num_targets();
    if initial.len() != k {
        return Err(Error::Dimension(format!("{} initial states for {k} targets", initial.len())));
    }
    if particles == 0 {
        return Err(Error::Config("particle count must be positive".into()));
    }
    let n = particles;
    let target = params.target();
    let moving = !target.is_static();
    let mut engine = FrameEngine::new(params, spec)?;

    let mut states: Vec<f64> = initial.iter().copied().cycle().take(n * k).collect();
    let mut scores = vec![0.0; n];
    let mut lw = vec![-(n as f64).ln(); n];
    let mut scratch_states = vec![0.0; n * k];
    let mut scratch_scores = vec![0.0; n];
    let mut log_likelihood = 0.0;
    let mut min_ess = n as f64;
    let mut resamples = 0;

    for (t, frame) in frames.iter().enumerate() {
        let y = frame.points();
        for p in 0..n {
            let x = &mut states[p * k..(p + 1) * k];
            if moving {
                for xi in x.iter_mut() {
                    let prev = *xi;
                    *xi = target.sample_transition(prev, rng);
                    scores[p] += target.score_f(*xi, prev);
                }
            }
            let ll = engine.evaluate(y, x, true)?;
            if ll > f64::NEG_INFINITY {
                scores[p] += engine.expected_score(y, x);
            }
            lw[p] += ll;
        }
        let total = log_sum_exp(&lw);
        if total == f64::NEG_INFINITY || total.is_nan() {
            return Err(Error::NumericalCollapse(format!(
                "all {n} particle weights vanished at frame {t} ({} points)",
                y.len()
            )));
        }
        // weights entering the step were normalized, so this is ln p(y_t | y_{1:t-1})
        log_likelihood += total;
        let mut sum_sq = 0.0;
        for w in lw.iter_mut() {
            *w -= total;
            let e = w.exp();
            sum_sq += e * e;
        }
        let ess = 1.0 / sum_sq;
        min_ess = min_ess.min(ess);
        if ess < 0.5 * n as f64 && t + 1 < frames.len() {
            systematic_resample(&lw, &states, &scores, k, &mut scratch_states, &mut scratch_scores, rng);
            std::mem::swap(&mut states, &mut scratch_states);
            std::mem::swap(&mut scores, &mut scratch_scores);
            lw.iter_mut().for_each(|w| *w = -(n as f64).ln());
            resamples += 1;
        }
    }
    let score = lw.iter().zip(&scores).map(|(w, s)| w.exp() * s).sum();
    Ok(ParticleEstimate { log_likelihood, score, min_ess, resamples })
}

fn systematic_resample<R: Rng + ?Sized>(
    lw: &[f64],
    states: &[f64],
    scores: &[f64],
    k: usize,
    out_states: &mut [f64],
    out_scores: &mut [f64],
    rng: &mut R,
) {
    let n = lw.len();
    let u0: f64 = rng.random();
    let mut cdf = lw[0].exp();
    let mut src = 0;
    for dst in 0..n {
        let u = (dst as f64 + u0) / n as f64;
        while cdf < u && src + 1 < n {
            src += 1;
            cdf += lw[src].exp();
        }
        out_states[dst * k..(dst + 1) * k].copy_from_slice(&states[src * k..(src + 1) * k]);
        out_scores[dst] = scores[src];
    }
}
