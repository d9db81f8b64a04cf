//! Synthetic data from the perturbed observation model
//! `Y^{α,β} = S_ς((R_D Y) ⊕ Ŷ)`, with every latent recorded.

use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::likelihood::{MultiTargetState, ObservationFrame};
use crate::model::{GroundTruth, ModelParams};
use crate::perm::{sample_uniform_constrained, ConstrainedPermutation, DetectionMask, DetectionMaskLaw, PerturbationSpec};

/// One simulated time step.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedFrame {
    pub observed: ObservationFrame,
    pub truth_states: MultiTargetState,
    /// Observation drawn for every target, detected or not, in target order.
    pub truth_observations: Vec<f64>,
    pub truth_mask: DetectionMask,
    pub truth_perm: ConstrainedPermutation,
    pub truth_clutter: Vec<f64>,
}

impl SimulatedFrame {
    pub fn truth_clutter_count(&self) -> usize {
        self.truth_clutter.len()
    }

    /// `S_ς((R_D y) ⊕ ŷ)` from the recorded latents.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut z = self.truth_mask.apply(&self.truth_observations);
        z.extend_from_slice(&self.truth_clutter);
        self.truth_perm.permute(&z)
    }

    /// The unperturbed frame: every target observation in target order.
    pub fn unperturbed(&self) -> ObservationFrame {
        ObservationFrame::new(self.truth_observations.clone()).expect("simulated values are finite")
    }
}

/// Draws one frame given the current target states.
pub fn simulate_frame<R: Rng + ?Sized>(
    params: &ModelParams,
    states: &[f64],
    law: &DetectionMaskLaw,
    spec: &PerturbationSpec,
    rng: &mut R,
) -> SimulatedFrame {
    let target = params.target();
    let observations: Vec<f64> = states.iter().map(|&x| target.sample_observation(x, rng)).collect();
    let mask = law.sample(rng);
    let clutter_count = params.clutter().sample_count(rng);
    let clutter: Vec<f64> = (0..clutter_count).map(|_| params.clutter().sample_point(rng)).collect();
    let size = mask.detected_count() + clutter_count;
    let perm = sample_uniform_constrained(size, spec.alpha, rng);
    let mut frame = SimulatedFrame {
        observed: ObservationFrame::empty(),
        truth_states: MultiTargetState::new(states.to_vec()).expect("finite states"),
        truth_observations: observations,
        truth_mask: mask,
        truth_perm: perm,
        truth_clutter: clutter,
    };
    frame.observed = ObservationFrame::new(frame.reconstruct()).expect("finite draws");
    frame
}

/// `n` frames; targets move independently under the transition kernel
/// starting from the ground-truth initial states.
pub fn simulate_sequence<R: Rng + ?Sized>(
    truth: &GroundTruth,
    spec: &PerturbationSpec,
    n: usize,
    rng: &mut R,
) -> Result<Vec<SimulatedFrame>> {
    if n == 0 {
        return Err(Error::Config("sequence length must be at least 1".into()));
    }
    let params = truth.params();
    let law = DetectionMaskLaw::new(params.num_targets(), params.p_detect(), spec.beta)?;
    let target = params.target();
    let mut states = truth.initial_states().to_vec();
    let mut frames = Vec::with_capacity(n);
    for _ in 0..n {
        if !target.is_static() {
            for x in states.iter_mut() {
                *x = target.sample_transition(*x, rng);
            }
        }
        frames.push(simulate_frame(params, &states, &law, spec, rng));
    }
    Ok(frames)
}

/// `n` frames of static targets at the ground-truth states.
pub fn simulate_static<R: Rng + ?Sized>(
    truth: &GroundTruth,
    spec: &PerturbationSpec,
    n: usize,
    rng: &mut R,
) -> Result<Vec<SimulatedFrame>> {
    if !truth.params().target().is_static() {
        return Err(Error::Config("simulate_static needs a static transition".into()));
    }
    simulate_sequence(truth, spec, n, rng)
}

#[derive(Serialize)]
struct FrameRecord<'a> {
    t: usize,
    observed: &'a [f64],
    truth: TruthRecord<'a>,
}

#[derive(Serialize)]
struct TruthRecord<'a> {
    states: &'a [f64],
    observations: &'a [f64],
    mask: Vec<u8>,
    perm: Vec<usize>,
    clutter: &'a [f64],
}

/// One JSON object per line; permutations are written 1-based.
pub fn write_jsonl<W: Write>(frames: &[SimulatedFrame], mut out: W) -> Result<()> {
    for (t, f) in frames.iter().enumerate() {
        let rec = FrameRecord {
            t: t + 1,
            observed: f.observed.points(),
            truth: TruthRecord {
                states: f.truth_states.as_slice(),
                observations: &f.truth_observations,
                mask: f.truth_mask.bits().iter().map(|&b| b as u8).collect(),
                perm: f.truth_perm.to_one_based(),
                clutter: &f.truth_clutter,
            },
        };
        let line = serde_json::to_string(&rec).map_err(|e| Error::Data(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| Error::Data(e.to_string()))?;
    }
    Ok(())
}
