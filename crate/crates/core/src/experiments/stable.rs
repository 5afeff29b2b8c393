//! Stable norm and asymptotic volume of a `Z^2`-periodic metric on the
//! plane.

use serde::{Deserialize, Serialize};

use super::{ExperimentReport, Verdict};
use crate::error::{Error, Result};
use crate::metricfield::graph::Graph;
use crate::metricfield::{periodic_waves, DistanceOptions, DistanceSolver, MetricField, Model};
use crate::normspace::polytope::{hull_2d, polygon_area};
use crate::normspace::{john_ellipsoid, Ellipsoid, Norm, JOHN_TOL};

use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TorusMetric {
    /// Constant tensor, row-major.
    Flat { matrix: Vec<f64> },
    /// `exp(2 psi) delta` with `psi` a seeded periodic wave sum of sup norm
    /// at most `amp`.
    Conformal { amp: f64, waves: usize, max_mode: i32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StableNormConfig {
    pub metric: TorusMetric,
    pub seed: u64,
    pub k_max: usize,
    /// Directions are the primitive lattice vectors of sup norm at most this.
    pub directions: i32,
    /// Radius of the metric ball, in periods.
    pub asvol_radius: f64,
    pub spacing: f64,
    pub graph_reach: i32,
    /// Flat case: `|bound / pi - 1|` must stay below this.
    pub bound_tol: f64,
    pub ratio_lo: f64,
    pub ratio_hi: f64,
    /// Non-flat case: empirical volume must reach `bound (1 - tol)`.
    pub tol: f64,
    /// Allowed increase of `d(0, K v) / K` in `K`.
    pub monotone_tol: f64,
}

impl Default for StableNormConfig {
    fn default() -> Self {
        StableNormConfig {
            metric: TorusMetric::Flat { matrix: vec![1.0, 0.0, 0.0, 1.0] },
            seed: 1,
            k_max: 8,
            directions: 6,
            asvol_radius: 8.0,
            spacing: 0.125,
            graph_reach: 8,
            bound_tol: 0.02,
            ratio_lo: 0.98,
            ratio_hi: 1.05,
            tol: 0.02,
            monotone_tol: 1e-6,
        }
    }
}

impl StableNormConfig {
    fn field(&self) -> Result<MetricField> {
        match &self.metric {
            TorusMetric::Flat { matrix } => MetricField::periodic(2, Model::Constant { matrix: matrix.clone() }),
            TorusMetric::Conformal { amp, waves, max_mode } => {
                let mut ws = periodic_waves(2, *waves, *max_mode, self.seed, 0x70a5);
                // wave sums are normalised so that sum |amp| <= 1
                for w in ws.iter_mut() {
                    w.amp *= amp;
                }
                MetricField::periodic(2, Model::identity(2))?.conformal(ws)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StableNormEstimate {
    pub directions: Vec<[i64; 2]>,
    pub ks: Vec<usize>,
    /// `values[d][k] = d(0, ks[k] v_d) / ks[k]`.
    pub values: Vec<Vec<f64>>,
    /// Vertices of the unit ball `B` of the extrapolated norm.
    pub norm_polygon: Vec<[f64; 2]>,
    pub ball_area: f64,
    pub john_ellipse: Ellipsoid,
    pub asvol_lower_bound: f64,
    /// Largest relative increase of `values[d]` along `ks`.
    pub max_increase: f64,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 { a.abs() } else { gcd(b, a % b) }
}

/// One primitive vector per `+-` pair with sup norm at most `reach`.
fn primitive_directions(reach: i32) -> Vec<[i64; 2]> {
    let r = reach as i64;
    let mut out = Vec::new();
    for a in -r..=r {
        for b in -r..=r {
            if (a, b) > (0, 0) && gcd(a, b) == 1 {
                out.push([a, b]);
            }
        }
    }
    out
}

/// Stable norm by `d(0, K v) / K` for `K = 1, 2, 4, ..., k_max`.
pub fn stable_norm_estimate(field: &MetricField, k_max: usize, directions: i32) -> Result<StableNormEstimate> {
    if k_max < 4 {
        return Err(Error::Argument("k_max must be at least 4".into()));
    }
    if !field.model.is_periodic() || field.radius.is_finite() || field.dim != 2 {
        return Err(Error::Argument("stable norm needs a Z^2-periodic planar field".into()));
    }
    let solver = DistanceSolver::new(field, DistanceOptions::default())?;
    let dirs = primitive_directions(directions);
    let mut ks = vec![1usize];
    while 2 * ks.last().unwrap() <= k_max {
        ks.push(2 * ks.last().unwrap());
    }
    let mut values = Vec::with_capacity(dirs.len());
    let mut max_increase = 0.0f64;
    for v in &dirs {
        let mut row = Vec::with_capacity(ks.len());
        for &k in &ks {
            let target = [k as f64 * v[0] as f64, k as f64 * v[1] as f64];
            let g = solver.shoot_chord(&[0.0, 0.0], &target)?;
            row.push(g.length / k as f64);
        }
        for w in row.windows(2) {
            max_increase = max_increase.max(w[1] / w[0] - 1.0);
        }
        values.push(row);
    }
    let mut points = Vec::with_capacity(2 * dirs.len());
    for (v, row) in dirs.iter().zip(&values) {
        let norm = *row.last().unwrap();
        let p = [v[0] as f64 / norm, v[1] as f64 / norm];
        points.push(p);
        points.push([-p[0], -p[1]]);
    }
    let polygon = hull_2d(&points);
    let ball_area = polygon_area(&polygon);
    // facets of B: covectors f with f.p = f.q = 1 on each edge
    let facets: Vec<Vec<f64>> = (0..polygon.len())
        .map(|i| {
            let (p, q) = (polygon[i], polygon[(i + 1) % polygon.len()]);
            let det = p[0] * q[1] - p[1] * q[0];
            vec![(q[1] - p[1]) / det, (p[0] - q[0]) / det]
        })
        .collect();
    let norm = Norm::polytope_from_rows(&facets)?;
    let john = john_ellipsoid(&norm, JOHN_TOL)?;
    Ok(StableNormEstimate {
        directions: dirs,
        ks,
        values,
        asvol_lower_bound: ball_area / john.volume * PI,
        norm_polygon: polygon,
        ball_area,
        john_ellipse: john,
        max_increase,
    })
}

pub fn run_stable_norm(cfg: &StableNormConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("stable_norm", cfg, cfg.seed)?;
    let field = cfg.field()?;
    let est = match stable_norm_estimate(&field, cfg.k_max, cfg.directions) {
        Ok(e) => e,
        Err(e) if e.is_solver() => {
            report.note(format!("lift solver failed: {e}"));
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    report.metric("bound", est.asvol_lower_bound);
    report.metric("bound_over_pi", est.asvol_lower_bound / PI);
    report.metric("norm_ball_area", est.ball_area);
    report.metric("john_area", est.john_ellipse.volume);
    report.metric("max_increase", est.max_increase);
    report.threshold("monotone_tol", cfg.monotone_tol);
    for (v, row) in est.directions.iter().zip(&est.values) {
        report.series.insert(
            format!("norm.{}_{}", v[0], v[1]),
            est.ks.iter().zip(row).map(|(&k, &d)| [k as f64, d]).collect(),
        );
    }
    if est.max_increase > cfg.monotone_tol {
        report.note("d(0, Kv)/K increased along K beyond tolerance; shooting found a non-minimal geodesic");
    }

    // empirical AsVol: graph ball about the origin; the graph must contain
    // B_R, which lies inside the stable-norm ball of radius R plus the
    // extrapolation slack
    let r = cfg.asvol_radius;
    let inradius = est
        .norm_polygon
        .iter()
        .map(|p| p[0].hypot(p[1]))
        .fold(f64::INFINITY, f64::min);
    let graph_radius = 1.1 * r / inradius + 1.0;
    let graph = Graph::build(&field.model, 2, graph_radius, cfg.spacing, cfg.graph_reach)?;
    let tree = graph.tree(&field.model, &[0.0, 0.0])?;
    let cell = cfg.spacing * cfg.spacing;
    let radii: Vec<f64> = (1..=r.floor() as usize).map(|k| k as f64).chain([r]).collect();
    let mut vols = vec![0.0; radii.len()];
    for (node, &d) in graph.nodes().iter().zip(tree.distances()) {
        let w = cell * field.volume_element(&node[..2])?;
        for (v, &rad) in vols.iter_mut().zip(&radii) {
            if d <= rad {
                *v += w;
            }
        }
    }
    let edge_hit = graph
        .nodes()
        .iter()
        .zip(tree.distances())
        .any(|(n, &d)| d <= r && n[0].hypot(n[1]) > graph_radius - cfg.graph_reach as f64 * cfg.spacing);
    if edge_hit {
        report.note("the metric ball reaches the edge of the graph");
    }
    report.series.insert(
        "asvol".into(),
        radii.iter().zip(&vols).map(|(&rad, &v)| [rad, v / (rad * rad)]).collect(),
    );
    let empirical = vols.last().copied().unwrap_or(0.0) / (r * r);
    let ratio = empirical / est.asvol_lower_bound;
    report.metric("asvol_empirical", empirical);
    report.metric("ratio", ratio);
    report.note(format!("asymptotic volume estimated by vol(B_R)/R^2 at R = {r}"));
    let flat = matches!(cfg.metric, TorusMetric::Flat { .. });
    report.verdict = if flat {
        report.threshold("bound_tol", cfg.bound_tol);
        report.threshold("ratio_lo", cfg.ratio_lo);
        report.threshold("ratio_hi", cfg.ratio_hi);
        let ok = (est.asvol_lower_bound / PI - 1.0).abs() <= cfg.bound_tol && ratio >= cfg.ratio_lo && ratio <= cfg.ratio_hi;
        if ok { Verdict::Pass } else { Verdict::Fail }
    } else {
        report.threshold("tol", cfg.tol);
        if empirical >= est.asvol_lower_bound * (1.0 - cfg.tol) { Verdict::Pass } else { Verdict::Fail }
    };
    if edge_hit {
        report.verdict = Verdict::Inconclusive;
    }
    Ok(report)
}
