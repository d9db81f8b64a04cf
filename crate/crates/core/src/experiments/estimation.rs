//! Maximum likelihood experiments on static targets.

use serde::{Deserialize, Serialize};

use super::losses::{centered_states, gaussian_variance_truth};
use super::{check, check_grid, scaled, ResultRow, Rows};
use crate::error::Result;
use crate::likelihood::Integration;
use crate::mle::{self, MleSettings};
use crate::model::{ClutterModel, FreeParam, GroundTruth};
use crate::perm::{Bound, PerturbationSpec};

/// Static Gaussian-variance truth and the settings that estimate θ from it.
fn variance_setup(variance: f64, states: Vec<f64>, p_detect: f64) -> Result<(GroundTruth, MleSettings)> {
    let truth = gaussian_variance_truth(variance, states.clone(), p_detect, ClutterModel::none())?;
    let settings = MleSettings::scale(FreeParam::Theta, variance, Integration::ExactStatic { states });
    Ok((truth, settings))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConsistencyConfig {
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub variance: f64,
    /// Also run two targets at spacing `tau` with full association uncertainty.
    pub with_association: bool,
    pub tau: f64,
}

impl Default for ConsistencyConfig {
    fn default() -> Self {
        Self { n_grid: vec![100, 400, 1600, 6400], replicates: 200, variance: 1.0, with_association: true, tau: 1.0 }
    }
}

impl ConsistencyConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        check(!self.n_grid.is_empty() && self.n_grid[0] >= 1, "n_grid must hold positive lengths")?;
        check(self.n_grid.windows(2).all(|w| w[0] < w[1]), "n_grid must be strictly increasing")?;
        check(self.replicates >= 1, "replicates must be at least 1")?;
        check(self.variance > 0.0 && self.variance.is_finite(), "variance must be positive")?;
        check(self.tau >= 0.0 && self.tau.is_finite(), "tau must be non-negative")
    }

    pub(crate) fn run(&self, seed: u64, scale: f64) -> Result<Vec<ResultRow>> {
        let reps = scaled(self.replicates, scale, 2);
        let mut rows = Rows::new("consistency", seed);
        let mut cases = vec![("unperturbed-k1", vec![0.0], PerturbationSpec::unperturbed())];
        if self.with_association {
            cases.push((
                "association-k2",
                centered_states(2, self.tau),
                PerturbationSpec::new(Bound::Unbounded, Bound::Finite(0))?,
            ));
        }
        for (curve, states, spec) in cases {
            let (truth, settings) = variance_setup(self.variance, states, 1.0)?;
            let table = mle::consistency_experiment(&truth, &spec, &settings, &self.n_grid, reps, seed)?;
            for r in &table {
                let se = r.sd_abs_error / (r.replicates as f64).sqrt();
                rows.push(curve, "n", r.n as f64, "mean_abs_error", r.mean_abs_error, se, r.replicates);
            }
            if table.len() >= 3 {
                let (slope, se) = mle::consistency_slope(&table);
                rows.push(&format!("{curve}-slope"), "n_min", self.n_grid[0] as f64, "log_log_slope", slope, se, reps);
            }
        }
        Ok(rows.finish())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalityConfig {
    pub n: usize,
    pub replicates: usize,
    pub variance: f64,
    /// Detection probability of the known-association, missed-detection case.
    pub p_detect: f64,
}

impl Default for NormalityConfig {
    fn default() -> Self {
        Self { n: 2000, replicates: 200, variance: 1.0, p_detect: 0.5 }
    }
}

impl NormalityConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        check(self.n >= 1, "n must be at least 1")?;
        check(self.replicates >= 8, "replicates must be at least 8")?;
        check(self.variance > 0.0 && self.variance.is_finite(), "variance must be positive")?;
        check(self.p_detect > 0.0 && self.p_detect <= 1.0, "p_detect must lie in (0, 1]")
    }

    /// Unperturbed report, then the report with misses at `p_detect`.
    pub fn reports(&self, seed: u64, scale: f64) -> Result<Vec<(String, mle::NormalityReport)>> {
        let reps = scaled(self.replicates, scale, 8);
        let fisher = 1.0 / (2.0 * self.variance * self.variance);
        let (truth, settings) = variance_setup(self.variance, vec![0.0], 1.0)?;
        let base = mle::normality_experiment(&truth, &PerturbationSpec::unperturbed(), &settings, self.n, reps, fisher, seed)?;
        let (truth, settings) = variance_setup(self.variance, vec![0.0], self.p_detect)?;
        let spec = PerturbationSpec::new(Bound::Finite(1), Bound::Unbounded)?;
        // frames are independent, so the per-frame information is exactly p_D·I
        let missed = mle::normality_experiment(&truth, &spec, &settings, self.n, reps, self.p_detect * fisher, seed)?;
        Ok(vec![("unperturbed".into(), base), (format!("missed-detections-p{}", self.p_detect), missed)])
    }

    pub(crate) fn run(&self, seed: u64, scale: f64) -> Result<Vec<ResultRow>> {
        let mut rows = Rows::new("normality", seed);
        for (curve, r) in self.reports(seed, scale)? {
            let n = r.n as f64;
            // chi-square approximation for a sample variance
            let ratio_se = r.variance_ratio * (2.0 / (r.replicates as f64 - 1.0)).sqrt();
            rows.push(&curve, "n", n, "variance_ratio", r.variance_ratio, ratio_se, r.replicates);
            rows.push(&curve, "n", n, "bias", r.bias, r.bias_std_error, r.replicates);
            rows.push(&curve, "n", n, "anderson_darling_p", r.normality_p_value, 0.0, r.replicates);
        }
        Ok(rows.finish())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LikelihoodGapConfig {
    pub thetas: Vec<f64>,
    pub n: usize,
    pub variance: f64,
    pub with_association: bool,
    pub tau: f64,
}

impl Default for LikelihoodGapConfig {
    fn default() -> Self {
        Self {
            thetas: (0..=8).map(|i| (80 + 5 * i) as f64 / 100.0).collect(),
            n: 2000,
            variance: 1.0,
            with_association: true,
            tau: 1.0,
        }
    }
}

impl LikelihoodGapConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        check_grid("thetas", &self.thetas, |t| t > 0.0 && t.is_finite())?;
        check(self.n >= 1, "n must be at least 1")?;
        check(self.variance > 0.0 && self.variance.is_finite(), "variance must be positive")?;
        check(self.tau >= 0.0 && self.tau.is_finite(), "tau must be non-negative")
    }

    pub(crate) fn run(&self, seed: u64, scale: f64) -> Result<Vec<ResultRow>> {
        let n = scaled(self.n, scale, 10);
        let mut rows = Rows::new("likelihood-gap", seed);
        let mut cases = vec![("unperturbed-k1", vec![0.0], PerturbationSpec::unperturbed())];
        if self.with_association {
            cases.push((
                "association-k2",
                centered_states(2, self.tau),
                PerturbationSpec::new(Bound::Unbounded, Bound::Finite(0))?,
            ));
        }
        for (curve, states, spec) in cases {
            let (truth, _) = variance_setup(self.variance, states, 1.0)?;
            let table = mle::likelihood_gap_experiment(&truth, &spec, FreeParam::Theta, &self.thetas, n, seed)?;
            for r in &table {
                rows.push(curve, "theta", r.theta, "normalized_log_ratio", r.gap, r.std_error, n);
            }
            if table.len() >= 3 {
                let c = mle::gap_curvature(&table);
                rows.push(&format!("{curve}-curvature"), "theta_star", self.variance, "curvature", c, 0.0, n);
            }
        }
        Ok(rows.finish())
    }
}
