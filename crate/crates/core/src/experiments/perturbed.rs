//! Filling minimality for perturbations of the flat and hyperbolic disc.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{trial_seed, ExperimentReport, Verdict};
use crate::error::Result;
use crate::metricfield::{boundary_distance_table, simplicity_check, DistanceOptions, MetricField};
use crate::normspace::{AreaDensity, DensityDef};
use crate::represent::SampledSphere;
use crate::surface::{
    embed_filling, embed_points, jitter_free_vertices, minimize_filling, surface_area, OptimizerConfig, PlanarMesh,
    Representation, SimplicialSurface,
};
use crate::util::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Base {
    Euclidean,
    Hyperbolic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbedConfig {
    pub base: Base,
    pub eps: f64,
    pub seed: u64,
    /// Chart radius; 1 for the flat base and 0.5 for the hyperbolic one
    /// when absent.
    pub radius: Option<f64>,
    pub mesh_cells: usize,
    /// Quadrature nodes of the ambient `L^inf(S)`.
    pub m: usize,
    /// Boundary nodes of the Lipschitz check on the boundary table.
    pub p: usize,
    pub competitors: usize,
    /// `<,>_e`-length of the jitter applied to free vertices.
    pub jitter: f64,
    /// Amplitude of the interior warp of remeshed starts, relative to the
    /// radius.
    pub warp: f64,
    pub tol_rel: f64,
    pub simplicity_samples: usize,
    pub density: DensityDef,
    /// A failed run is repeated once at doubled resolution and halved
    /// tolerance, and that run decides.
    pub rerun_on_fail: bool,
    pub optimizer: OptimizerConfig,
}

impl Default for PerturbedConfig {
    fn default() -> Self {
        PerturbedConfig {
            base: Base::Euclidean,
            eps: 0.0,
            seed: 1,
            radius: None,
            mesh_cells: 400,
            m: 128,
            p: 32,
            competitors: 5,
            jitter: 0.1,
            warp: 0.15,
            tol_rel: 0.01,
            simplicity_samples: 100,
            density: DensityDef::Loewner,
            rerun_on_fail: true,
            optimizer: OptimizerConfig::default(),
        }
    }
}

impl PerturbedConfig {
    fn radius(&self) -> f64 {
        self.radius.unwrap_or(match self.base {
            Base::Euclidean => 1.0,
            Base::Hyperbolic => 0.5,
        })
    }

    fn field(&self) -> Result<MetricField> {
        let base = match self.base {
            Base::Euclidean => MetricField::euclidean(2, self.radius())?,
            Base::Hyperbolic => MetricField::hyperbolic(2, self.radius())?,
        };
        base.perturbed(self.eps, self.seed)
    }

    fn representation(&self) -> Representation {
        match (self.eps > 0.0, self.base) {
            (true, _) => Representation::Hyperplane,
            (false, Base::Euclidean) => Representation::BusemannEuclidean,
            (false, Base::Hyperbolic) => Representation::Hyperbolic,
        }
    }
}

/// Smooth displacement of the disc of radius `r` vanishing on its boundary.
fn warp_mesh(mesh: &PlanarMesh, r: f64, amp: f64, seed: u64) -> PlanarMesh {
    let mut g = rng(seed, 0x3a7f);
    let k: [f64; 4] = std::array::from_fn(|_| g.random_range(0.5..2.0) * std::f64::consts::PI / r);
    let ph: [f64; 4] = std::array::from_fn(|_| g.random_range(0.0..std::f64::consts::TAU));
    let points = mesh
        .points
        .iter()
        .zip(&mesh.boundary)
        .map(|(p, &b)| {
            if b {
                return *p;
            }
            let bump = (1.0 - (p[0] * p[0] + p[1] * p[1]) / (r * r)).max(0.0);
            // bump times a wave of slope at most 2 pi / r keeps the map
            // injective for amp below about 0.15
            let dx = amp * r * bump * (k[0] * p[1] + ph[0]).sin() * (k[1] * p[0] + ph[1]).cos() / 2.0;
            let dy = amp * r * bump * (k[2] * p[0] + ph[2]).sin() * (k[3] * p[1] + ph[3]).cos() / 2.0;
            [p[0] + dx, p[1] + dy]
        })
        .collect();
    PlanarMesh { points, ..mesh.clone() }
}

pub fn run_perturbed_filling(cfg: &PerturbedConfig) -> Result<ExperimentReport> {
    let mut report = single_run(cfg)?;
    if report.verdict == Verdict::Fail && cfg.rerun_on_fail {
        let fine = PerturbedConfig {
            mesh_cells: 2 * cfg.mesh_cells,
            m: 2 * cfg.m,
            tol_rel: 0.5 * cfg.tol_rel,
            rerun_on_fail: false,
            ..cfg.clone()
        };
        let rerun = single_run(&fine)?;
        report.note(format!(
            "default resolution failed; rerun with {} cells, m = {}, tol_rel = {} gave {:?}",
            fine.mesh_cells, fine.m, fine.tol_rel, rerun.verdict
        ));
        for (k, v) in &rerun.metrics {
            report.metric(&format!("rerun.{k}"), *v);
        }
        report.threshold("rerun.tol_rel", fine.tol_rel);
        report.verdict = rerun.verdict;
    }
    Ok(report)
}

fn single_run(cfg: &PerturbedConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("perturbed_filling", cfg, cfg.seed)?;
    report.threshold("tol_rel", cfg.tol_rel);
    report.note("evidence at desk scale: the size of the admissible neighbourhood of the base metric is not quantified");
    let field = cfg.field()?;
    let r = cfg.radius();

    let gate = simplicity_check(&field, cfg.simplicity_samples, cfg.seed)?;
    report.metric("simplicity.boundary_convexity", gate.boundary_convexity);
    report.metric("simplicity.worst_multiplicity", gate.worst_multiplicity as f64);
    report.metric("simplicity.worst_excess", gate.worst_excess);
    if !gate.is_simple() {
        report.note(format!("simplicity gate failed: {}", serde_json::to_string(&gate)?));
        return Ok(report);
    }
    if !gate.extension_certified {
        report.note("conjugate points were searched inside the domain only");
    }

    let sphere = SampledSphere::circle(cfg.m)?;
    let rep = cfg.representation();
    let mesh = PlanarMesh::disc(r, cfg.mesh_cells)?;
    let filling = embed_filling(&field, &mesh, rep, &sphere)?;
    report.metric("volume.disc", filling.disc_volume);
    report.metric("volume.mesh", filling.mesh_volume);

    // the representation is 1-Lipschitz; record how close to isometric it
    // is on the boundary
    let table = boundary_distance_table(&field, cfg.p, DistanceOptions::default())?;
    let nodes: Vec<[f64; 2]> = table.nodes.iter().map(|v| [v[0], v[1]]).collect();
    let images = embed_points(&field, &nodes, rep, &sphere)?;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..cfg.p {
        for j in i + 1..cfg.p {
            let q = images[i].sup_distance(&images[j]) / table.get(i, j);
            lo = lo.min(q);
            hi = hi.max(q);
        }
    }
    report.metric("boundary.lipschitz_min", lo);
    report.metric("boundary.lipschitz_max", hi);

    let density = AreaDensity::new(cfg.density);
    let phi = surface_area(&filling.surface, &density);
    report.metric("area.phi", phi.total);
    report.metric("area.phi_slivers", phi.slivers as f64);
    // linear cells over a curved image carry an O(h) excess
    report.metric("area.phi_excess", phi.total / filling.mesh_volume - 1.0);

    let mut min_area = phi.total;
    for k in 0..cfg.competitors {
        let seed = trial_seed(cfg.seed, k as u64);
        let start: SimplicialSurface = if k % 2 == 0 {
            jitter_free_vertices(&filling.surface, cfg.jitter, seed)
        } else {
            let warped = warp_mesh(&mesh, r, cfg.warp, seed);
            let vertices = embed_points(&field, &warped.points, rep, &sphere)?;
            let remeshed = SimplicialSurface { vertices, ..filling.surface.clone() };
            jitter_free_vertices(&remeshed, 0.25 * cfg.jitter, seed)
        };
        let (_, trace) = minimize_filling(&start, &density, &cfg.optimizer, seed);
        let first = trace[0].area;
        let last = trace.last().map(|t| t.area).unwrap_or(first);
        report.metric(&format!("competitor.{k}.start"), first);
        report.metric(&format!("competitor.{k}.final"), last);
        report.series.insert(
            format!("competitor.{k}"),
            trace.iter().map(|t| [t.iteration as f64, t.area]).collect(),
        );
        min_area = min_area.min(last);
    }
    let reference = filling.mesh_volume;
    report.metric("area.min", min_area);
    report.metric("area.min_ratio", min_area / reference);
    report.threshold("area.min_ratio", 1.0 - cfg.tol_rel);
    report.verdict = if min_area >= reference * (1.0 - cfg.tol_rel) { Verdict::Pass } else { Verdict::Fail };
    Ok(report)
}
