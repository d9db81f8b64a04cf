//! Literal evaluation of the perturbed frame likelihood: every detection mask
//! in `B_β` times every permutation of `Sym(M)` within Hamming radius `α`.
//! Exponential cost; kept as a reference for the optimized evaluator.

use crate::error::{Error, Result};
use crate::math::{ln_poisson, log_sum_exp};
use crate::model::ModelParams;
use crate::perm::{Bound, PerturbationSpec};

use super::ObservationFrame;

/// Refuses frames with more points than this.
pub const BRUTE_FORCE_MAX_POINTS: usize = 8;

/// Heap's algorithm, independent of the library's constrained enumerator.
fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = vec![a.clone()];
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(a.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// Log-likelihood and the `K×M` posterior association matrix.
pub fn brute_force_posterior(
    frame: &ObservationFrame,
    x: &[f64],
    params: &ModelParams,
    spec: &PerturbationSpec,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let k = params.num_targets();
    let y = frame.points();
    let m = y.len();
    if x.len() != k {
        return Err(Error::Dimension(format!("{} states for {k} targets", x.len())));
    }
    if m > BRUTE_FORCE_MAX_POINTS || k > 16 {
        return Err(Error::Resource(format!("brute force refused for K = {k}, M = {m}")));
    }
    let p = params.p_detect();
    let max_missed = match spec.beta {
        Bound::Finite(b) => b,
        Bound::Unbounded => usize::MAX,
    };
    let masks: Vec<Vec<bool>> = (0..1usize << k)
        .map(|code| (0..k).map(|i| code >> i & 1 == 1).collect::<Vec<bool>>())
        .filter(|bits| bits.iter().filter(|b| !**b).count() <= max_missed)
        .collect();
    let mask_mass = |bits: &[bool]| -> f64 {
        bits.iter().map(|&b| if b { p } else { 1.0 - p }).product()
    };
    let norm: f64 = masks.iter().map(|b| mask_mass(b)).sum();

    let within = |perm: &[usize]| -> bool {
        let moved = perm.iter().enumerate().filter(|(i, v)| *i != **v).count();
        match spec.alpha {
            Bound::Finite(a) => moved <= a,
            Bound::Unbounded => true,
        }
    };
    let perms: Vec<Vec<usize>> = all_permutations(m).into_iter().filter(|s| within(s)).collect();
    let ln_uniform = -(perms.len() as f64).ln();

    let mut terms = Vec::new();
    let mut owners: Vec<Vec<Option<usize>>> = Vec::new();
    for bits in &masks {
        let mass = mask_mass(bits) / norm;
        if mass == 0.0 {
            continue;
        }
        let detected: Vec<usize> = (0..k).filter(|&i| bits[i]).collect();
        let j = detected.len();
        if j > m {
            continue;
        }
        let head = mass.ln() + ln_poisson(params.clutter_rate(), m - j) + ln_uniform;
        for perm in &perms {
            // position q holds slot perm[q] of (detected target observations ⊕ clutter)
            let mut t = head;
            let mut owner = vec![None; m];
            for q in 0..m {
                let slot = perm[q];
                if slot < j {
                    t += params.target().ln_g(y[q], x[detected[slot]]);
                    owner[q] = Some(detected[slot]);
                } else {
                    t += params.clutter().ln_pdf(y[q]);
                }
            }
            terms.push(t);
            owners.push(owner);
        }
    }
    let ln_z = log_sum_exp(&terms);
    let mut post = vec![vec![0.0; m]; k];
    if ln_z > f64::NEG_INFINITY {
        for (t, owner) in terms.iter().zip(&owners) {
            let w = (t - ln_z).exp();
            for (q, o) in owner.iter().enumerate() {
                if let Some(i) = o {
                    post[*i][q] += w;
                }
            }
        }
    }
    Ok((ln_z, post))
}

pub fn brute_force_log_likelihood(
    frame: &ObservationFrame,
    x: &[f64],
    params: &ModelParams,
    spec: &PerturbationSpec,
) -> Result<f64> {
    Ok(brute_force_posterior(frame, x, params, spec)?.0)
}
