//! End-to-end runs with reproducible reports.
//!
//! Every experiment takes a JSON config (unknown keys rejected, missing keys
//! filled from defaults and echoed back), derives all randomness from the
//! config seed, and returns an [`ExperimentReport`] whose verdict follows
//! from the recorded metrics and thresholds.

mod hausdorff;
mod hemisphere;
mod perturbed;
mod semi;
mod stable;
#[cfg(test)]
mod tests;

use std::collections::BTreeMap;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};

pub use hausdorff::{run_hausdorff_filling, HausdorffConfig, HausdorffMetric};
pub use hemisphere::{run_hemisphere, HemisphereConfig};
pub use perturbed::{run_perturbed_filling, Base, PerturbedConfig};
pub use semi::{run_semi_ellipticity, SemiEllipticityConfig, SemiMode};
pub use stable::{run_stable_norm, stable_norm_estimate, StableNormConfig, StableNormEstimate, TorusMetric};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    /// The effective config, defaults included.
    pub config: serde_json::Value,
    pub seed: u64,
    pub metrics: BTreeMap<String, f64>,
    pub thresholds: BTreeMap<String, f64>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
    /// Plot data: named `(x, y)` series.
    pub series: BTreeMap<String, Vec<[f64; 2]>>,
    pub artifacts: Vec<String>,
}

impl ExperimentReport {
    pub(crate) fn new(name: &str, config: &impl Serialize, seed: u64) -> Result<ExperimentReport> {
        Ok(ExperimentReport {
            name: name.to_string(),
            config: serde_json::to_value(config)?,
            seed,
            metrics: BTreeMap::new(),
            thresholds: BTreeMap::new(),
            verdict: Verdict::Inconclusive,
            notes: Vec::new(),
            series: BTreeMap::new(),
            artifacts: Vec::new(),
        })
    }

    /// Non-finite values are stored as the largest finite magnitude so
    /// reports stay valid JSON.
    pub(crate) fn metric(&mut self, key: &str, value: f64) {
        let v = if value.is_nan() {
            f64::MAX
        } else if value.is_infinite() {
            f64::MAX.copysign(value)
        } else {
            value
        };
        self.metrics.insert(key.to_string(), v);
    }

    pub(crate) fn threshold(&mut self, key: &str, value: f64) {
        self.thresholds.insert(key.to_string(), value);
    }

    pub(crate) fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn metrics_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        for (k, v) in &self.metrics {
            out.push_str(&format!("{k},{v:.17e}\n"));
        }
        out
    }
}

/// Name and one-line description of every registered experiment.
pub const EXPERIMENTS: &[(&str, &str)] = &[
    ("perturbed_filling", "filling minimality of a perturbed Euclidean or hyperbolic disc"),
    ("hemisphere", "area of disc fillings of the circle with antipodal distance at least pi"),
    ("semi_ellipticity", "subadditivity of the Holmes-Thompson 2-density on simple bivectors"),
    ("hausdorff_filling", "Hausdorff area of metrics dominating the Euclidean boundary distances"),
    ("stable_norm", "asymptotic volume of a periodic plane against the stable-norm bound"),
];

fn parse<T: DeserializeOwned + Default>(config: &serde_json::Value) -> Result<T> {
    if config.is_null() {
        return Ok(T::default());
    }
    serde_json::from_value(config.clone()).map_err(|e| Error::Parse(e.to_string()))
}

/// Effective default config of a registered experiment.
pub fn default_config(name: &str) -> Result<serde_json::Value> {
    Ok(match name {
        "perturbed_filling" => serde_json::to_value(PerturbedConfig::default())?,
        "hemisphere" => serde_json::to_value(HemisphereConfig::default())?,
        "semi_ellipticity" => serde_json::to_value(SemiEllipticityConfig::default())?,
        "hausdorff_filling" => serde_json::to_value(HausdorffConfig::default())?,
        "stable_norm" => serde_json::to_value(StableNormConfig::default())?,
        other => return Err(Error::Argument(format!("unknown experiment {other:?}"))),
    })
}

/// Runs a registered experiment from a JSON config; `null` means defaults.
pub fn run_experiment(name: &str, config: &serde_json::Value) -> Result<ExperimentReport> {
    match name {
        "perturbed_filling" => run_perturbed_filling(&parse(config)?),
        "hemisphere" => run_hemisphere(&parse(config)?),
        "semi_ellipticity" => run_semi_ellipticity(&parse(config)?),
        "hausdorff_filling" => run_hausdorff_filling(&parse(config)?),
        "stable_norm" => run_stable_norm(&parse(config)?),
        other => Err(Error::Argument(format!("unknown experiment {other:?}"))),
    }
}

/// Seed for trial `k` of a run.
pub(crate) fn trial_seed(seed: u64, k: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(k.wrapping_mul(0xbf58_476d_1ce4_e5b9))
}
