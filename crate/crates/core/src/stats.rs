//! Small statistics helpers for Monte Carlo summaries and goodness-of-fit.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Number of batches used for batch-means standard errors.
pub const DEFAULT_BATCHES: usize = 20;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Mean and batch-means standard error. Falls back to the naive standard
/// error when there are fewer samples than batches.
pub fn batch_means(xs: &[f64], batches: usize) -> (f64, f64) {
    let n = xs.len();
    let m = mean(xs);
    if n < 2 {
        return (m, f64::NAN);
    }
    if n < 2 * batches || batches < 2 {
        return (m, (variance(xs) / n as f64).sqrt());
    }
    let size = n / batches;
    let batch: Vec<f64> = (0..batches).map(|b| mean(&xs[b * size..(b + 1) * size])).collect();
    // leftover samples (n mod batches) only enter the point estimate
    (m, (variance(&batch) / batches as f64).sqrt())
}

/// Pearson chi-square test of observed counts against cell probabilities.
/// Returns `(statistic, degrees of freedom, p-value)`.
pub fn chi_square_gof(counts: &[u64], probs: &[f64]) -> (f64, usize, f64) {
    assert_eq!(counts.len(), probs.len(), "one probability per cell");
    let n: u64 = counts.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&c, &p) in counts.iter().zip(probs) {
        if p <= 0.0 {
            continue;
        }
        let e = p * n as f64;
        stat += (c as f64 - e).powi(2) / e;
        cells += 1;
    }
    let df = cells.saturating_sub(1).max(1);
    let p = 1.0 - ChiSquared::new(df as f64).expect("positive df").cdf(stat);
    (stat, df, p)
}

/// Anderson–Darling test of normality with estimated mean and variance
/// (Stephens' small-sample correction). Returns `(A²*, p-value)`.
pub fn anderson_darling_normal(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert!(n >= 8, "Anderson-Darling needs at least 8 points");
    let m = mean(xs);
    let sd = variance(xs).sqrt();
    let mut z: Vec<f64> = xs.iter().map(|x| crate::math::normal_cdf((x - m) / sd)).collect();
    z.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let nf = n as f64;
    let eps = 1e-300;
    let s: f64 = (0..n)
        .map(|i| (2.0 * i as f64 + 1.0) * ((z[i].max(eps)).ln() + (1.0 - z[n - 1 - i]).max(eps).ln()))
        .sum();
    let a2 = -nf - s / nf;
    let a2s = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    let p = if a2s >= 0.6 {
        (1.2937 - 5.709 * a2s + 0.0186 * a2s * a2s).exp()
    } else if a2s >= 0.34 {
        (0.9177 - 4.279 * a2s - 1.38 * a2s * a2s).exp()
    } else if a2s >= 0.2 {
        1.0 - (-8.318 + 42.796 * a2s - 59.938 * a2s * a2s).exp()
    } else {
        1.0 - (-13.436 + 101.14 * a2s - 223.73 * a2s * a2s).exp()
    };
    (a2s, p.clamp(0.0, 1.0))
}

/// Ordinary least squares slope with its standard error.
pub fn ols_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    assert!(n >= 3, "slope needs at least 3 points");
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    (slope, (rss / (n - 2) as f64 / sxx).sqrt())
}

/// Weighted least squares slope (weights `1/se²`) and its standard error
/// from the supplied per-point errors.
pub fn wls_slope(x: &[f64], y: &[f64], se: &[f64]) -> (f64, f64) {
    let w: Vec<f64> = se.iter().map(|s| 1.0 / (s * s).max(1e-300)).collect();
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(&w).map(|(a, b)| b * (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).zip(&w).map(|((a, c), b)| b * (a - mx) * (c - my)).sum();
    (sxy / sxx, (1.0 / sxx).sqrt())
}

/// Least-squares fit `y ≈ c0 + c1 x + c2 x²`.
pub fn quadratic_fit(x: &[f64], y: &[f64]) -> [f64; 3] {
    let mut a = [[0.0f64; 4]; 3];
    for (&xi, &yi) in x.iter().zip(y) {
        let p = [1.0, xi, xi * xi];
        for r in 0..3 {
            for c in 0..3 {
                a[r][c] += p[r] * p[c];
            }
            a[r][3] += p[r] * yi;
        }
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()).unwrap();
        a.swap(col, piv);
        for r in 0..3 {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..4 {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    [a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]]
}
