//! Reproducible experiment protocols: information-loss curves, estimator
//! experiments and the property suite, all emitting long-format result rows.
//!
//! A configuration file is a JSON object with the keys `experiment` (id),
//! `seed` (mandatory), an optional `out` directory, and the experiment's own
//! fields. Omitted experiment fields take their defaults; unknown fields are
//! rejected.

mod estimation;
mod losses;
mod properties;

use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub use estimation::{ConsistencyConfig, LikelihoodGapConfig, NormalityConfig};
pub use losses::{
    AssociationConfig, DetectionFailureConfig, FalseAlarmConfig, NumTargetsAssocConfig, NumTargetsSpecialConfig,
};
pub use properties::PropertySuiteConfig;

/// Column order of `results.csv`.
pub const CSV_COLUMNS: [&str; 9] =
    ["experiment", "curve", "x_name", "x_value", "y_name", "y_value", "std_error", "n_samples", "seed"];

/// One grid point of one curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub curve: String,
    pub x_name: String,
    pub x_value: f64,
    pub y_name: String,
    pub y_value: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Writes rows as CSV with a header line in [`CSV_COLUMNS`] order.
pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(|e| Error::Data(e.to_string()))?;
    for r in rows {
        w.write_record([
            r.experiment.clone(),
            r.curve.clone(),
            r.x_name.clone(),
            fmt_f64(r.x_value),
            r.y_name.clone(),
            fmt_f64(r.y_value),
            fmt_f64(r.std_error),
            r.n_samples.to_string(),
            r.seed.to_string(),
        ])
        .map_err(|e| Error::Data(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Data(e.to_string()))
}

// shortest round-trip representation; "inf" for unbounded grid coordinates
fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

/// Collects rows for one experiment run.
pub(crate) struct Rows {
    experiment: &'static str,
    seed: u64,
    rows: Vec<ResultRow>,
}

impl Rows {
    pub(crate) fn new(experiment: &'static str, seed: u64) -> Self {
        Self { experiment, seed, rows: Vec::new() }
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn push(&mut self, curve: &str, x_name: &str, x: f64, y_name: &str, y: f64, se: f64, n: usize) {
        self.rows.push(ResultRow {
            experiment: self.experiment.to_string(),
            curve: curve.to_string(),
            x_name: x_name.to_string(),
            x_value: x,
            y_name: y_name.to_string(),
            y_value: y,
            std_error: se,
            n_samples: n,
            seed: self.seed,
        });
    }

    pub(crate) fn finish(self) -> Vec<ResultRow> {
        self.rows
    }
}

/// Scales a Monte Carlo count, never going below `floor`.
pub fn scaled(n: usize, scale: f64, floor: usize) -> usize {
    ((n as f64 * scale).round() as usize).max(floor)
}

/// Smallest outer sample count the Monte Carlo estimators accept.
pub const MIN_OUTER: usize = 100;

/// Catalog entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentInfo {
    pub id: &'static str,
    pub description: &'static str,
}

pub const EXPERIMENT_IDS: [&str; 9] = [
    "false-alarm",
    "association-tau-alpha",
    "num-targets-special",
    "num-targets-assoc",
    "detection-failure",
    "consistency",
    "normality",
    "likelihood-gap",
    "property-suite",
];

pub fn catalog() -> Vec<ExperimentInfo> {
    let desc = |id: &str| match id {
        "false-alarm" => "relative loss vs clutter rate, worst-case and uniform clutter",
        "association-tau-alpha" => "relative loss of five static targets vs separation for each association radius",
        "num-targets-special" => "relative loss vs number of targets under the windowed ε-likelihood",
        "num-targets-assoc" => "relative loss vs number of targets with full association uncertainty",
        "detection-failure" => "relative loss vs detection probability for a random-walk target",
        "consistency" => "mean MLE error vs sequence length with its log-log slope",
        "normality" => "variance of the scaled MLE error against the inverse Fisher information",
        "likelihood-gap" => "normalized log-likelihood ratio against the true parameter",
        "property-suite" => "loss strictness, zero-loss extremes, cardinality information and additivity",
        _ => unreachable!(),
    };
    EXPERIMENT_IDS.iter().map(|&id| ExperimentInfo { id, description: desc(id) }).collect()
}

/// Experiment-specific settings.
#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentSettings {
    FalseAlarm(FalseAlarmConfig),
    AssociationTauAlpha(AssociationConfig),
    NumTargetsSpecial(NumTargetsSpecialConfig),
    NumTargetsAssoc(NumTargetsAssocConfig),
    DetectionFailure(DetectionFailureConfig),
    Consistency(ConsistencyConfig),
    Normality(NormalityConfig),
    LikelihoodGap(LikelihoodGapConfig),
    PropertySuite(PropertySuiteConfig),
}

fn decode<T: serde::de::DeserializeOwned>(id: &str, value: Value) -> Result<T> {
    serde_json::from_value(value).map_err(|e| Error::Config(format!("{id}: {e}")))
}

fn encode<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("configs serialize to JSON")
}

/// Parses the experiment-specific fields of `id`. `value` must be an object;
/// missing fields take their defaults.
pub fn parse_config(id: &str, value: Value) -> Result<ExperimentSettings> {
    let s = match id {
        "false-alarm" => ExperimentSettings::FalseAlarm(decode(id, value)?),
        "association-tau-alpha" => ExperimentSettings::AssociationTauAlpha(decode(id, value)?),
        "num-targets-special" => ExperimentSettings::NumTargetsSpecial(decode(id, value)?),
        "num-targets-assoc" => ExperimentSettings::NumTargetsAssoc(decode(id, value)?),
        "detection-failure" => ExperimentSettings::DetectionFailure(decode(id, value)?),
        "consistency" => ExperimentSettings::Consistency(decode(id, value)?),
        "normality" => ExperimentSettings::Normality(decode(id, value)?),
        "likelihood-gap" => ExperimentSettings::LikelihoodGap(decode(id, value)?),
        "property-suite" => ExperimentSettings::PropertySuite(decode(id, value)?),
        other => return Err(Error::Config(format!("unknown experiment id {other:?}"))),
    };
    s.validate()?;
    Ok(s)
}

/// Defaults for `id`.
pub fn default_settings(id: &str) -> Result<ExperimentSettings> {
    parse_config(id, Value::Object(Map::new()))
}

impl ExperimentSettings {
    pub fn id(&self) -> &'static str {
        match self {
            Self::FalseAlarm(_) => "false-alarm",
            Self::AssociationTauAlpha(_) => "association-tau-alpha",
            Self::NumTargetsSpecial(_) => "num-targets-special",
            Self::NumTargetsAssoc(_) => "num-targets-assoc",
            Self::DetectionFailure(_) => "detection-failure",
            Self::Consistency(_) => "consistency",
            Self::Normality(_) => "normality",
            Self::LikelihoodGap(_) => "likelihood-gap",
            Self::PropertySuite(_) => "property-suite",
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Self::FalseAlarm(c) => encode(c),
            Self::AssociationTauAlpha(c) => encode(c),
            Self::NumTargetsSpecial(c) => encode(c),
            Self::NumTargetsAssoc(c) => encode(c),
            Self::DetectionFailure(c) => encode(c),
            Self::Consistency(c) => encode(c),
            Self::Normality(c) => encode(c),
            Self::LikelihoodGap(c) => encode(c),
            Self::PropertySuite(c) => encode(c),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::FalseAlarm(c) => c.validate(),
            Self::AssociationTauAlpha(c) => c.validate(),
            Self::NumTargetsSpecial(c) => c.validate(),
            Self::NumTargetsAssoc(c) => c.validate(),
            Self::DetectionFailure(c) => c.validate(),
            Self::Consistency(c) => c.validate(),
            Self::Normality(c) => c.validate(),
            Self::LikelihoodGap(c) => c.validate(),
            Self::PropertySuite(c) => c.validate(),
        }
    }

    /// Runs the experiment. `scale` multiplies every Monte Carlo count.
    pub fn run(&self, seed: u64, scale: f64) -> Result<Vec<ResultRow>> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Config(format!("scale must be positive, got {scale}")));
        }
        match self {
            Self::FalseAlarm(c) => c.run(seed, scale),
            Self::AssociationTauAlpha(c) => c.run(seed, scale),
            Self::NumTargetsSpecial(c) => c.run(seed, scale),
            Self::NumTargetsAssoc(c) => c.run(seed, scale),
            Self::DetectionFailure(c) => c.run(seed, scale),
            Self::Consistency(c) => c.run(seed, scale),
            Self::Normality(c) => c.run(seed, scale),
            Self::LikelihoodGap(c) => c.run(seed, scale),
            Self::PropertySuite(c) => c.run(seed, scale),
        }
    }
}

/// A complete experiment configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out: Option<String>,
    pub settings: ExperimentSettings,
}

impl ExperimentConfig {
    pub fn from_json(value: Value) -> Result<Self> {
        let Value::Object(mut map) = value else {
            return Err(Error::Config("configuration must be a JSON object".into()));
        };
        let id = match map.remove("experiment") {
            Some(Value::String(s)) => s,
            Some(_) => return Err(Error::Config("experiment id must be a string".into())),
            None => return Err(Error::Config("experiment id required".into())),
        };
        let seed = match map.remove("seed") {
            Some(v) => v.as_u64().ok_or_else(|| Error::Config("seed must be a non-negative integer".into()))?,
            None => {
                // an unknown id is the more useful message
                if !EXPERIMENT_IDS.contains(&id.as_str()) {
                    return Err(Error::Config(format!("unknown experiment id {id:?}")));
                }
                return Err(Error::Config("seed required".into()));
            }
        };
        let out = match map.remove("out") {
            Some(Value::String(s)) => Some(s),
            Some(Value::Null) | None => None,
            Some(_) => return Err(Error::Config("out must be a string".into())),
        };
        let settings = parse_config(&id, Value::Object(map))?;
        Ok(Self { seed, out, settings })
    }

    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON: {e}")))?;
        Self::from_json(v)
    }

    /// Full configuration with every default resolved.
    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        map.insert("experiment".into(), Value::String(self.settings.id().into()));
        map.insert("seed".into(), Value::from(self.seed));
        if let Some(o) = &self.out {
            map.insert("out".into(), Value::String(o.clone()));
        }
        if let Value::Object(fields) = self.settings.to_json() {
            map.extend(fields);
        }
        Value::Object(map)
    }

    pub fn run(&self, scale: f64) -> Result<Vec<ResultRow>> {
        self.settings.run(self.seed, scale)
    }
}

pub(crate) fn check(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Config(msg.into()))
    }
}

pub(crate) fn check_grid(name: &str, grid: &[f64], ok: impl Fn(f64) -> bool) -> Result<()> {
    check(!grid.is_empty(), format!("{name} must not be empty"))?;
    check(grid.iter().all(|&v| ok(v)), format!("{name} contains an invalid value"))
}
