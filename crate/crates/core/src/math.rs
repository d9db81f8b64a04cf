//! Log-space numerics shared by the density and likelihood code.

use statrs::function::gamma::ln_gamma;

/// Log-densities are clamped here before exponentiation (smallest
/// subnormal-safe exponent for `f64`).
pub const LOG_FLOOR: f64 = -745.0;

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln Γ(n + 1)` for a count `n`.
pub fn ln_factorial(n: usize) -> f64 {
    if n < 2 {
        0.0
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// Poisson log-pmf. A zero rate is the point mass at zero.
pub fn ln_poisson(rate: f64, k: usize) -> f64 {
    if rate == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    k as f64 * rate.ln() - rate - ln_factorial(k)
}

/// `ln(n! / (n - k)!)`, the number of ordered injections of `k` items into `n`.
pub fn ln_falling_factorial(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(n - k)
}

pub fn ln_binomial(n: usize, k: usize) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Pairwise-stable `ln(e^a + e^b)`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln Σ exp(xᵢ)`; `-∞` for an empty slice or when every term is `-∞`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `exp` of a log-value clamped at [`LOG_FLOOR`].
#[inline]
pub fn exp_floor(x: f64) -> f64 {
    if x < LOG_FLOOR {
        0.0
    } else {
        x.exp()
    }
}

/// `ln(x^k)` with the convention `0^0 = 1`.
#[inline]
pub fn ln_pow(x: f64, k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * x.ln()
    }
}

#[inline]
pub fn ln_normal_pdf(y: f64, mean: f64, variance: f64) -> f64 {
    let z = y - mean;
    -LN_SQRT_2PI - 0.5 * variance.ln() - 0.5 * z * z / variance
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}
