//! Disc fillings of the circle whose antipodal boundary points stay at
//! distance at least `pi`, compared with the round hemisphere.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{trial_seed, ExperimentReport, Verdict};
use crate::error::Result;
use crate::metricfield::graph::Graph;
use crate::metricfield::{band_limited_waves, MetricField, Wave};
use crate::surface::disc_volume;
use crate::util::rng;

use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HemisphereConfig {
    pub seed: u64,
    /// Constrained competitors; families alternate conformal and tensor.
    pub trials: usize,
    /// Extra competitors uniformly shrunk below the constraint, which the
    /// gate must discard.
    pub shrunk_trials: usize,
    /// Boundary nodes; antipodal pairs are `(i, i + p / 2)`.
    pub p: usize,
    pub graph_spacing: f64,
    pub graph_reach: i32,
    pub quad_order: usize,
    /// Largest amplitude of the conformal exponent.
    pub conformal_amp: f64,
    /// Largest size of the tensor perturbation.
    pub tensor_eps: f64,
    pub waves: usize,
    /// Relative tolerance of the competitor comparison.
    pub tol_rel: f64,
    /// Relative tolerance of the round area against `2 pi`.
    pub round_tol: f64,
    /// Antipodal entries must be at least `pi - antipodal_tol`.
    pub antipodal_tol: f64,
    pub shrink: f64,
}

impl Default for HemisphereConfig {
    fn default() -> Self {
        HemisphereConfig {
            seed: 1,
            trials: 100,
            shrunk_trials: 4,
            p: 32,
            graph_spacing: 1.0 / 24.0,
            graph_reach: 5,
            quad_order: 48,
            conformal_amp: 0.4,
            tensor_eps: 0.3,
            waves: 6,
            tol_rel: 0.02,
            round_tol: 0.01,
            antipodal_tol: 1e-9,
            shrink: 0.9,
        }
    }
}

/// Smallest and largest graph distance between antipodal boundary nodes.
fn antipodal_range(field: &MetricField, cfg: &HemisphereConfig) -> Result<(f64, f64)> {
    let graph = Graph::build(&field.model, 2, field.radius, cfg.graph_spacing, cfg.graph_reach)?;
    let nodes = field.boundary_nodes(cfg.p);
    let half = cfg.p / 2;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..half {
        let tree = graph.tree(&field.model, &nodes[i])?;
        let d = graph.route(&field.model, &tree, &nodes[i + half])?.0;
        lo = lo.min(d);
        hi = hi.max(d);
    }
    Ok((lo, hi))
}

fn constant_factor(log_scale: f64) -> Wave {
    Wave { amp: log_scale, freq: [0.0; 3], phase: 0.0 }
}

pub fn run_hemisphere(cfg: &HemisphereConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("hemisphere", cfg, cfg.seed)?;
    report.threshold("tol_rel", cfg.tol_rel);
    report.threshold("round_tol", cfg.round_tol);
    report.threshold("antipodal_tol", cfg.antipodal_tol);
    if cfg.p < 2 || cfg.p % 2 != 0 {
        return Err(crate::Error::Argument("p must be an even number of boundary nodes".into()));
    }
    let round = MetricField::sphere_cap(2, 0.5 * PI)?;
    let round_area = disc_volume(&round, cfg.quad_order)?;
    report.metric("round.area", round_area);
    report.metric("round.area_ratio", round_area / (2.0 * PI));
    // graph paths are real curves; their excess over pi calibrates the
    // antipodal estimate
    let (_, round_d) = antipodal_range(&round, cfg)?;
    report.metric("round.graph_bias", round_d / PI - 1.0);

    let max_freq = 2.0 * PI;
    let mut accepted = Vec::new();
    let mut discarded = 0usize;
    let mut generator_failed = 0usize;
    let mut margin = f64::INFINITY;
    for k in 0..cfg.trials + cfg.shrunk_trials {
        let seed = trial_seed(cfg.seed, k as u64);
        let mut g = rng(seed, 0x6e51);
        let shrunk = k >= cfg.trials;
        let raw = if k % 2 == 0 || shrunk {
            let amp = g.random_range(0.0..cfg.conformal_amp);
            let mut waves = band_limited_waves(2, cfg.waves, max_freq, seed, 1);
            for w in waves.iter_mut() {
                w.amp *= amp;
            }
            round.conformal(waves)
        } else {
            round.perturbed(g.random_range(0.0..cfg.tensor_eps), seed)
        };
        let raw = match raw {
            Ok(f) => f,
            Err(_) => {
                generator_failed += 1;
                continue;
            }
        };
        // rescale so the shortest antipodal entry is exactly pi; shrunk
        // competitors are instead scaled below it
        let d = antipodal_range(&raw, cfg)?.0;
        let factor = if shrunk { cfg.shrink * PI / d } else { PI / d };
        let competitor = raw.conformal(vec![constant_factor(factor.ln())])?;
        let d_check = antipodal_range(&competitor, cfg)?.0;
        if d_check < PI - cfg.antipodal_tol * PI {
            discarded += 1;
            continue;
        }
        margin = margin.min(d_check - PI);
        let area = disc_volume(&competitor, cfg.quad_order)?;
        report.series.entry("competitor_area".into()).or_default().push([k as f64, area]);
        accepted.push(area);
    }
    report.metric("trials.accepted", accepted.len() as f64);
    report.metric("trials.discarded", discarded as f64);
    report.metric("trials.generator_failed", generator_failed as f64);
    let round_ok = (round_area / (2.0 * PI) - 1.0).abs() <= cfg.round_tol;
    if accepted.is_empty() {
        report.note("no competitor passed the antipodal gate");
        return Ok(report);
    }
    let min = accepted.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = accepted.iter().sum::<f64>() / accepted.len() as f64;
    report.metric("antipodal.margin_min", margin);
    report.metric("area.min", min);
    report.metric("area.mean", mean);
    report.metric("area.min_ratio", min / (2.0 * PI));
    report.threshold("area.min_ratio", 1.0 - cfg.tol_rel);
    report.note("antipodal distances are graph path lengths, which bound the true distances from above");
    report.verdict = if round_ok && min >= 2.0 * PI * (1.0 - cfg.tol_rel) { Verdict::Pass } else { Verdict::Fail };
    Ok(report)
}
