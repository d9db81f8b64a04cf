//! Association-marginalized frame likelihood and posterior association
//! marginals.
//!
//! For a detection mask `d` with `j = |d|` detections and `ς` uniform on
//! `Sym(M)`, the observation at position `p` is slot `ς(p)` of
//! `(R_d y) ⊕ ŷ`. The product of densities only depends on which positions
//! receive the `j` target slots, i.e. on an ordered injection from the detected
//! targets into `{0..M-1}`; every injection is shared by `(M-j)!`
//! permutations. Hence
//!
//! ```text
//! (1/M!) Σ_ς Π_p h_{ς(p)}(y_p) = ((M-j)!/M!) Σ_inj Π g(y_inj(i) | x_i) Π_{unused p} p_ψ(y_p)
//! ```
//!
//! and summing over `d` as well turns `Σ_d Σ_inj` into a sum over partial
//! matchings between targets and observations, weighted by
//! `w_j = q^β(j) · Po_λ(M-j) · (M-j)!/M!`. The matchings are accumulated by a
//! dynamic program over subsets of targets (`O(M·K·2^K)`), and the posterior
//! marginals come from its reverse-mode adjoint.
//!
//! When `α < M` the uniform law lives on `A_M^α` only and the sum does not
//! factor; [`enumerate`] then sums over `(ς, d)` explicitly.

use rand::Rng;

use crate::error::{Error, Result};
use crate::math::{ln_poisson, log_sum_exp};
use crate::perm::{
    count_constrained, enumerate_constrained, sample_uniform_constrained, Bound, ConstrainedPermutation,
    DetectionMask, DetectionMaskLaw,
};

/// Scratch space for [`matching`]; reused across calls to avoid allocation.
#[derive(Debug, Default, Clone)]
pub(crate) struct MatchingBuffers {
    forward: Vec<f64>,
    scale: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    adj: Vec<f64>,
    adj_prev: Vec<f64>,
}

/// Output slots for posterior marginals (`assoc` is `K×M` row-major).
pub(crate) struct Marginals<'a> {
    pub assoc: &'a mut [f64],
    pub clutter: &'a mut [f64],
}

/// `ln Σ_T w_{|T|} F_M[T]` over partial matchings. `ln_g` is `K×M`
/// row-major, `ln_w` has `K+1` entries.
pub(crate) fn matching(
    k: usize,
    m: usize,
    ln_g: &[f64],
    ln_c: &[f64],
    ln_w: &[f64],
    bufs: &mut MatchingBuffers,
    marginals: Option<Marginals<'_>>,
) -> f64 {
    if k == 1 {
        return matching_single(m, ln_g, ln_c, ln_w, marginals);
    }
    let nsub = 1usize << k;
    bufs.forward.clear();
    bufs.forward.resize((m + 1) * nsub, 0.0);
    bufs.forward[0] = 1.0;
    bufs.scale.clear();
    bufs.a.clear();
    bufs.a.resize(m * k, 0.0);
    bufs.b.clear();
    bufs.b.resize(m, 0.0);

    let mut ln_total = 0.0;
    for col in 0..m {
        let mut s = ln_c[col];
        for i in 0..k {
            s = s.max(ln_g[i * m + col]);
        }
        if s == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        ln_total += s;
        for i in 0..k {
            bufs.a[col * k + i] = (ln_g[i * m + col] - s).exp();
        }
        let b = (ln_c[col] - s).exp();
        bufs.b[col] = b;

        let (prev, next) = bufs.forward.split_at_mut((col + 1) * nsub);
        let prev = &prev[col * nsub..];
        let next = &mut next[..nsub];
        let a = &bufs.a[col * k..col * k + k];
        let mut mx = 0.0f64;
        for t in 0..nsub {
            let mut v = prev[t] * b;
            let mut rest = t;
            while rest != 0 {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                v += prev[t ^ (1 << i)] * a[i];
            }
            next[t] = v;
            mx = mx.max(v);
        }
        if mx == 0.0 {
            return f64::NEG_INFINITY;
        }
        for v in next.iter_mut() {
            *v /= mx;
        }
        bufs.scale.push(mx);
        ln_total += mx.ln();
    }

    let last = &bufs.forward[m * nsub..];
    let terms: Vec<f64> = (0..nsub)
        .map(|t| {
            let f = last[t];
            if f > 0.0 {
                ln_w[t.count_ones() as usize] + f.ln()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let ln_scaled = log_sum_exp(&terms);
    if ln_scaled == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }

    if let Some(out) = marginals {
        out.assoc.iter_mut().for_each(|v| *v = 0.0);
        out.clutter.iter_mut().for_each(|v| *v = 0.0);
        // adjoint of F_M[T] is w_{|T|}/Z_scaled, zeroed where F_M[T] = 0
        bufs.adj.clear();
        bufs.adj.extend((0..nsub).map(|t| {
            if last[t] > 0.0 {
                (ln_w[t.count_ones() as usize] - ln_scaled).exp()
            } else {
                0.0
            }
        }));
        for col in (0..m).rev() {
            let prev = &bufs.forward[col * nsub..(col + 1) * nsub];
            let a = &bufs.a[col * k..col * k + k];
            let b = bufs.b[col];
            let inv = 1.0 / bufs.scale[col];
            bufs.adj_prev.clear();
            bufs.adj_prev.resize(nsub, 0.0);
            let mut clutter = 0.0;
            for t in 0..nsub {
                let fb = bufs.adj[t] * inv;
                if fb == 0.0 {
                    continue;
                }
                clutter += fb * prev[t] * b;
                bufs.adj_prev[t] += fb * b;
                let mut rest = t;
                while rest != 0 {
                    let i = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    let src = t ^ (1 << i);
                    out.assoc[i * m + col] += fb * prev[src] * a[i];
                    bufs.adj_prev[src] += fb * a[i];
                }
            }
            out.clutter[col] = clutter;
            for t in 0..nsub {
                if prev[t] == 0.0 {
                    bufs.adj_prev[t] = 0.0;
                }
            }
            std::mem::swap(&mut bufs.adj, &mut bufs.adj_prev);
        }
    }
    ln_scaled + ln_total
}

/// Closed form for one target:
/// `w_0 Π_p c_p + w_1 Σ_p g_p Π_{l≠p} c_l`.
fn matching_single(m: usize, ln_g: &[f64], ln_c: &[f64], ln_w: &[f64], marginals: Option<Marginals<'_>>) -> f64 {
    let mut zero_count = 0usize;
    let mut zero_at = 0usize;
    let mut ln_prod = 0.0;
    for (p, &c) in ln_c.iter().enumerate().take(m) {
        if c == f64::NEG_INFINITY {
            zero_count += 1;
            zero_at = p;
        } else {
            ln_prod += c;
        }
    }
    let without = |p: usize| -> f64 {
        match zero_count {
            0 => ln_prod - ln_c[p],
            1 if p == zero_at => ln_prod,
            _ => f64::NEG_INFINITY,
        }
    };
    let none = if zero_count == 0 { ln_w[0] + ln_prod } else { f64::NEG_INFINITY };
    let mut hi = none;
    for p in 0..m {
        hi = hi.max(ln_w[1] + ln_g[p] + without(p));
    }
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut sum = (none - hi).exp();
    for p in 0..m {
        sum += (ln_w[1] + ln_g[p] + without(p) - hi).exp();
    }
    let ln_z = hi + sum.ln();
    if let Some(out) = marginals {
        for p in 0..m {
            let v = (ln_w[1] + ln_g[p] + without(p) - ln_z).exp();
            out.assoc[p] = v;
            out.clutter[p] = 1.0 - v;
        }
    }
    ln_z
}

/// Log-weights `w_j`, `j = 0..=K`, for a frame of `m` points.
pub(crate) fn matching_weights(law: &DetectionMaskLaw, rate: f64, m: usize) -> Vec<f64> {
    let k = law.num_targets();
    (0..=k)
        .map(|j| {
            if j > m {
                f64::NEG_INFINITY
            } else {
                law.ln_pmf_count(j) + ln_poisson(rate, m - j) + crate::math::ln_factorial(m - j)
                    - crate::math::ln_factorial(m)
            }
        })
        .collect()
}

/// Number of `(ς, d)` terms an explicit sum would visit.
pub(crate) fn enumeration_size(m: usize, alpha: Bound, law: &DetectionMaskLaw) -> f64 {
    use num_traits::ToPrimitive;
    let masks = law.support_size() as f64;
    count_constrained(m, alpha).to_f64().unwrap_or(f64::INFINITY) * masks
}

fn slot_term(
    perm: &ConstrainedPermutation,
    detected: &[usize],
    m: usize,
    ln_g: &[f64],
    ln_c: &[f64],
) -> f64 {
    let j = detected.len();
    let mut t = 0.0;
    for p in 0..m {
        let slot = perm.image(p);
        t += if slot < j { ln_g[detected[slot] * m + p] } else { ln_c[p] };
        if t == f64::NEG_INFINITY {
            break;
        }
    }
    t
}

fn accumulate(
    perm: &ConstrainedPermutation,
    detected: &[usize],
    m: usize,
    weight: f64,
    out: &mut Marginals<'_>,
) {
    let j = detected.len();
    for p in 0..m {
        let slot = perm.image(p);
        if slot < j {
            out.assoc[detected[slot] * m + p] += weight;
        } else {
            out.clutter[p] += weight;
        }
    }
}

/// Explicit sum over `A_M^α × B_β` for `α < M`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn enumerate(
    m: usize,
    alpha: Bound,
    law: &DetectionMaskLaw,
    masks: &[DetectionMask],
    rate: f64,
    ln_g: &[f64],
    ln_c: &[f64],
    cap: u64,
    marginals: Option<Marginals<'_>>,
) -> Result<f64> {
    let size = enumeration_size(m, alpha, law);
    if size > cap as f64 {
        return Err(Error::Resource(format!(
            "{size:.3e} association hypotheses exceed the enumeration cap {cap}"
        )));
    }
    let perms: Vec<ConstrainedPermutation> = enumerate_constrained(m, alpha, cap)?.collect();
    let ln_n = (perms.len() as f64).ln();
    let mut terms = Vec::with_capacity(perms.len() * masks.len());
    let mut keys = Vec::with_capacity(perms.len() * masks.len());
    let detected: Vec<Vec<usize>> = masks.iter().map(|d| d.detected_indices()).collect();
    for (di, d) in masks.iter().enumerate() {
        let j = d.detected_count();
        if j > m {
            continue;
        }
        let base = law.ln_pmf_count(j) + ln_poisson(rate, m - j) - ln_n;
        if base == f64::NEG_INFINITY {
            continue;
        }
        for (pi, perm) in perms.iter().enumerate() {
            let t = base + slot_term(perm, &detected[di], m, ln_g, ln_c);
            if t > f64::NEG_INFINITY {
                terms.push(t);
                keys.push((di, pi));
            }
        }
    }
    let ln_z = log_sum_exp(&terms);
    if let Some(mut out) = marginals {
        out.assoc.iter_mut().for_each(|v| *v = 0.0);
        out.clutter.iter_mut().for_each(|v| *v = 0.0);
        if ln_z > f64::NEG_INFINITY {
            for (t, &(di, pi)) in terms.iter().zip(&keys) {
                accumulate(&perms[pi], &detected[di], m, (t - ln_z).exp(), &mut out);
            }
        }
    }
    Ok(ln_z)
}

/// Self-normalized importance sampling of the association posterior with the
/// prior `u_M^α × q^β` as proposal. Returns the log of the unbiased
/// likelihood estimate.
#[allow(clippy::too_many_arguments)]
pub(crate) fn sample_posterior<R: Rng + ?Sized>(
    m: usize,
    alpha: Bound,
    law: &DetectionMaskLaw,
    rate: f64,
    ln_g: &[f64],
    ln_c: &[f64],
    samples: usize,
    rng: &mut R,
    mut out: Marginals<'_>,
) -> Result<f64> {
    out.assoc.iter_mut().for_each(|v| *v = 0.0);
    out.clutter.iter_mut().for_each(|v| *v = 0.0);
    let mut draws = Vec::with_capacity(samples);
    let mut terms = Vec::with_capacity(samples);
    for _ in 0..samples {
        let d = law.sample(rng);
        let j = d.detected_count();
        let perm = sample_uniform_constrained(m, alpha, rng);
        let t = if j > m {
            f64::NEG_INFINITY
        } else {
            ln_poisson(rate, m - j) + slot_term(&perm, &d.detected_indices(), m, ln_g, ln_c)
        };
        terms.push(t);
        draws.push((d, perm));
    }
    let ln_sum = log_sum_exp(&terms);
    if ln_sum == f64::NEG_INFINITY {
        return Err(Error::InconsistentData(format!(
            "all {samples} sampled association hypotheses have zero weight"
        )));
    }
    for (t, (d, perm)) in terms.iter().zip(&draws) {
        if *t > f64::NEG_INFINITY {
            accumulate(perm, &d.detected_indices(), m, (t - ln_sum).exp(), &mut out);
        }
    }
    Ok(ln_sum - (samples as f64).ln())
}
