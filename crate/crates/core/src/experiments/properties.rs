//! Structural properties of the information loss.

use rand::RngExt;
use serde::{Deserialize, Serialize};

use super::losses::{association_loss, centered_states};
use super::{check, check_grid, scaled, ResultRow, Rows, MIN_OUTER};
use crate::error::Result;
use crate::fisher::{additivity_unperturbed_targets, cardinality_information, par_replicates, FisherEstimate};
use crate::perm::Bound;
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropertySuiteConfig {
    pub runs: usize,
    pub variance: f64,
    /// Spacing of the crowded configurations.
    pub tau: f64,
    /// Spacing treated as "fully separated".
    pub separated_tau: f64,
    pub cardinality_p_detect: Vec<f64>,
    pub cardinality_targets: usize,
    /// Far-away targets added to a crowded pair in the additivity check.
    pub extra_targets: usize,
}

impl Default for PropertySuiteConfig {
    fn default() -> Self {
        Self {
            runs: 10_000,
            variance: 1.0,
            tau: 1.0,
            separated_tau: 100.0,
            cardinality_p_detect: vec![0.1, 0.5, 0.9],
            cardinality_targets: 1,
            extra_targets: 2,
        }
    }
}

/// Monte Carlo information about `p_D` in `K` Bernoulli detection indicators.
pub fn cardinality_information_mc(p_detect: f64, num_targets: usize, samples: usize, seed: u64) -> Result<FisherEstimate> {
    let scores = par_replicates(samples, |r| {
        let mut rng = stream(seed, &[0xca4d, r as u64]);
        Ok((0..num_targets)
            .map(|_| if rng.random::<f64>() < p_detect { 1.0 / p_detect } else { -1.0 / (1.0 - p_detect) })
            .sum::<f64>())
    })?;
    Ok(FisherEstimate::from_scalar_scores(&scores, 1.0, "cardinality"))
}

impl PropertySuiteConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        check(self.runs >= MIN_OUTER, format!("runs must be at least {MIN_OUTER}"))?;
        check(self.variance > 0.0 && self.variance.is_finite(), "variance must be positive")?;
        check(self.tau > 0.0 && self.tau.is_finite(), "tau must be positive")?;
        check(self.separated_tau > 0.0 && self.separated_tau.is_finite(), "separated_tau must be positive")?;
        check_grid("cardinality_p_detect", &self.cardinality_p_detect, |p| p > 0.0 && p < 1.0)?;
        check(self.cardinality_targets >= 1, "cardinality_targets must be at least 1")
    }

    pub(crate) fn run(&self, seed: u64, scale: f64) -> Result<Vec<ResultRow>> {
        let n = scaled(self.runs, scale, MIN_OUTER);
        let v = self.variance;
        let single = 1.0 / (2.0 * v * v);
        let mut rows = Rows::new("property-suite", seed);

        let mut pair = None;
        for alpha in [Bound::Finite(1), Bound::Unbounded] {
            let r = association_loss(v, centered_states(2, self.tau), alpha, n, seed)?;
            let x = if alpha == Bound::Unbounded { f64::INFINITY } else { 1.0 };
            rows.push("strictness-k2", "alpha", x, "relative_loss", r.relative_loss, r.relative_std_error, n);
            if alpha == Bound::Unbounded {
                pair = Some(r);
            }
        }

        let r = association_loss(v, centered_states(3, 0.0), Bound::Unbounded, n, seed)?;
        rows.push("identical-states-k3", "tau", 0.0, "relative_loss", r.relative_loss, r.relative_std_error, n);
        let r = association_loss(v, centered_states(3, self.separated_tau), Bound::Unbounded, n, seed)?;
        rows.push("separated-k3", "tau", self.separated_tau, "relative_loss", r.relative_loss, r.relative_std_error, n);

        for &p in &self.cardinality_p_detect {
            let k = self.cardinality_targets;
            let est = cardinality_information_mc(p, k, n, seed)?;
            rows.push("cardinality-mc", "p_detect", p, "information", est.scalar(), est.scalar_std_error(), n);
            rows.push("cardinality-formula", "p_detect", p, "information", cardinality_information(p, k)?, 0.0, 0);
        }

        if self.extra_targets > 0 {
            let pair = pair.expect("computed above");
            let predicted = additivity_unperturbed_targets(&pair, self.extra_targets, 1.0, single);
            let mut states = centered_states(2, self.tau);
            for j in 0..self.extra_targets {
                // alternate sides, far from the crowded pair and from each other
                let side = if j % 2 == 0 { 1.0 } else { -1.0 };
                states.push(side * self.separated_tau * (1 + j / 2) as f64);
            }
            let big = association_loss(v, states, Bound::Unbounded, n, seed)?;
            let x = self.extra_targets as f64;
            rows.push("additivity-predicted", "extra_targets", x, "information", predicted, pair.loss_std_error, n);
            rows.push("additivity-mc", "extra_targets", x, "information", big.perturbed, big.loss_std_error, n);
        }
        Ok(rows.finish())
    }
}
