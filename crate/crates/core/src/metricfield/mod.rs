//! Riemannian metric fields on disc domains.
//!
//! A [`MetricField`] couples a tensor [`Model`] with a domain: the closed
//! chart ball of radius `R` centered at the origin (unbounded for periodic
//! fields). Geodesics come from [`geodesic_shoot`]; two-point distances from
//! a [`DistanceSolver`] that shoots from graph-seeded initial velocities.

pub mod distance;
pub mod geodesic;
pub mod graph;
pub mod model;
pub mod simplicity;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use distance::{fan, DistanceOptions, DistanceSolver, Geodesic};
pub use model::{band_limited_waves, periodic_waves, Grid, Jet, Model, Wave};
pub use simplicity::{simplicity_check, SimplicityOptions, SimplicityReport};

/// Default collar kept between a hyperbolic domain and the ideal boundary.
pub const DEFAULT_COLLAR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Euclidean,
    Hyperbolic,
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    pub dim: usize,
    /// Domain radius in the chart; infinite for periodic lifts.
    pub radius: f64,
    /// Lattice spacing of the sampled representation.
    pub h: f64,
    pub collar: f64,
    pub kind: FieldKind,
    pub model: Model,
}

impl MetricField {
    fn new(dim: usize, radius: f64, kind: FieldKind, model: Model) -> Result<MetricField> {
        if !(2..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !(radius > 0.0) {
            return Err(Error::Argument("domain radius must be positive".into()));
        }
        let h = if radius.is_finite() { radius / 32.0 } else { 1.0 / 32.0 };
        let f = MetricField { dim, radius, h, collar: DEFAULT_COLLAR, kind, model };
        let chart = f.model.chart_radius();
        let room = if matches!(f.model, Model::Sampled(_)) { 0.0 } else { f.collar };
        if radius.is_finite() && chart.is_finite() && radius > chart - room + 1e-12 {
            return Err(Error::Argument(format!(
                "domain radius {radius} leaves no collar inside the chart of radius {}",
                f.model.chart_radius()
            )));
        }
        Ok(f)
    }

    pub fn euclidean(dim: usize, radius: f64) -> Result<MetricField> {
        MetricField::new(dim, radius, FieldKind::Euclidean, Model::identity(dim))
    }

    /// Constant tensor `A` (row-major).
    pub fn constant(dim: usize, matrix: Vec<f64>, radius: f64) -> Result<MetricField> {
        if matrix.len() != dim * dim {
            return Err(Error::Dimension { expected: dim * dim, got: matrix.len() });
        }
        let f = MetricField::new(dim, radius, FieldKind::Custom, Model::Constant { matrix })?;
        f.check_spd()?;
        Ok(f)
    }

    /// Poincare-ball hyperbolic metric on the chart disc of radius `radius < 1`.
    pub fn hyperbolic(dim: usize, radius: f64) -> Result<MetricField> {
        MetricField::new(dim, radius, FieldKind::Hyperbolic, Model::Hyperbolic)
    }

    /// Round unit sphere: the geodesic ball of radius `rho` about the
    /// north pole, in the stereographic chart (chart radius `tan(rho / 2)`).
    pub fn sphere_cap(dim: usize, rho: f64) -> Result<MetricField> {
        if !(rho > 0.0 && rho < std::f64::consts::PI) {
            return Err(Error::Argument("cap radius must lie in (0, pi)".into()));
        }
        MetricField::new(dim, (0.5 * rho).tan(), FieldKind::Custom, Model::Sphere)
    }

    pub fn custom(dim: usize, radius: f64, model: Model) -> Result<MetricField> {
        let f = MetricField::new(dim, radius, FieldKind::Custom, model)?;
        f.check_spd()?;
        Ok(f)
    }

    /// Z^n-periodic field on the whole chart (lift of a flat-torus metric).
    pub fn periodic(dim: usize, model: Model) -> Result<MetricField> {
        if !model.is_periodic() {
            return Err(Error::Argument("model is not periodic under integer translations".into()));
        }
        let f = MetricField::new(dim, f64::INFINITY, FieldKind::Custom, model)?;
        f.check_spd()?;
        Ok(f)
    }

    /// `g + eps * s(x) * h(x)` with `h` a seeded band-limited symmetric
    /// tensor field (sup norm of `h` and its first two derivatives at most
    /// one once the frequency budget is accounted) and `s` the mean diagonal
    /// of `g`.
    pub fn perturbed(&self, eps: f64, seed: u64) -> Result<MetricField> {
        if !(eps >= 0.0) {
            return Err(Error::Argument("perturbation size must be nonnegative".into()));
        }
        if eps == 0.0 {
            return Ok(self.clone());
        }
        let n = self.dim;
        let comps = n * (n + 1) / 2;
        let max_freq = std::f64::consts::PI / self.radius.min(1.0);
        let components = (0..comps as u64).map(|c| band_limited_waves(n, 6, max_freq, seed, c)).collect();
        let model = Model::Perturbed { base: Box::new(self.model.clone()), eps, components };
        let mut f = self.clone();
        f.kind = FieldKind::Custom;
        f.model = model;
        f.check_spd()?;
        Ok(f)
    }

    /// `exp(2 psi) g` for a wave sum `psi`.
    pub fn conformal(&self, waves: Vec<Wave>) -> Result<MetricField> {
        let mut f = self.clone();
        f.kind = FieldKind::Custom;
        f.model = Model::Conformal { base: Box::new(self.model.clone()), waves };
        f.check_spd()?;
        Ok(f)
    }

    pub fn jet(&self, x: &[f64]) -> Result<Jet> {
        if x.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: x.len() });
        }
        self.model.jet(x, self.dim)
    }

    /// Row-major tensor at `x`.
    pub fn tensor(&self, x: &[f64]) -> Result<Vec<f64>> {
        let j = self.jet(x)?;
        Ok((0..self.dim).flat_map(|a| (0..self.dim).map(move |b| j.g[a][b])).collect())
    }

    pub fn norm(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        Ok(self.jet(x)?.norm(v))
    }

    /// `sqrt(det g)`.
    pub fn volume_element(&self, x: &[f64]) -> Result<f64> {
        let j = self.jet(x)?;
        Ok(model::det(&j.g, self.dim).sqrt())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        radius_of(x) < self.radius
    }

    pub(crate) fn check_closed(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: x.len() });
        }
        if radius_of(x) > self.radius * (1.0 + 1e-12) {
            return Err(Error::OutsideDomain(x.to_vec()));
        }
        Ok(())
    }

    /// Radius of the warm-start graph lattice.
    pub(crate) fn graph_radius(&self) -> f64 {
        if self.radius.is_finite() { self.radius } else { 4.0 }
    }

    /// Chart radius beyond which shooting gives up.
    pub(crate) fn flight_limit(&self) -> f64 {
        let c = self.model.chart_radius();
        if c.is_finite() { c * (1.0 - 1e-6) } else { f64::INFINITY }
    }

    /// Minimum eigenvalue over the sampling lattice inside the domain.
    pub fn min_eigenvalue(&self) -> Result<(f64, Vec<f64>)> {
        let r = self.graph_radius();
        let k = (r / self.h).floor() as i64;
        let mut worst = (f64::INFINITY, vec![0.0; self.dim]);
        let zs: Vec<i64> = if self.dim == 3 { (-k..=k).step_by(2).collect() } else { vec![0] };
        for &c in &zs {
            for b in -k..=k {
                for a in -k..=k {
                    let x: Vec<f64> = [a, b, c][..self.dim].iter().map(|i| *i as f64 * self.h).collect();
                    if radius_of(&x) > r {
                        continue;
                    }
                    let j = self.model.jet(&x, self.dim)?;
                    let e = model::min_eigenvalue(&j.g, self.dim);
                    if e < worst.0 {
                        worst = (e, x);
                    }
                }
            }
        }
        Ok(worst)
    }

    pub fn check_spd(&self) -> Result<()> {
        let (e, x) = self.min_eigenvalue()?;
        if !(e > 0.0) {
            return Err(Error::NotPositiveDefinite { point: x, min_eig: e });
        }
        Ok(())
    }

    /// Boundary point at parameter `theta` (2D) or the `i`-th node of a
    /// Fibonacci sphere of `p` points (3D).
    pub fn boundary_nodes(&self, p: usize) -> Vec<Vec<f64>> {
        match self.dim {
            2 => (0..p)
                .map(|i| {
                    let t = std::f64::consts::TAU * i as f64 / p as f64;
                    vec![self.radius * t.cos(), self.radius * t.sin()]
                })
                .collect(),
            _ => fan(3, p).into_iter().map(|d| d.iter().map(|c| c * self.radius).collect()).collect(),
        }
    }
}

pub(crate) fn radius_of(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Sampled geodesic.
#[derive(Debug, Clone, Serialize)]
pub struct GeodesicPath {
    pub points: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    /// Parameter increment between samples.
    pub dt: f64,
    /// Riemannian length `T |v|_g` of the integrated segment.
    pub length: f64,
    /// Set if the path stopped on leaving the domain.
    pub exited: bool,
}

/// Integrates the geodesic with initial data `(x, v)` over parameter time
/// `T`, with `ceil(T |v|_g / step)` RK4 steps.
pub fn geodesic_shoot(field: &MetricField, x: &[f64], v: &[f64], t: f64, step: f64) -> Result<GeodesicPath> {
    let n = field.dim;
    if !field.contains(x) {
        return Err(Error::Argument(format!("start point {x:?} is not interior to the domain")));
    }
    if v.len() != n {
        return Err(Error::Dimension { expected: n, got: v.len() });
    }
    if !(step > 0.0 && t >= 0.0) || v.iter().all(|c| *c == 0.0) {
        return Err(Error::Argument("shooting needs step > 0, T >= 0 and v != 0".into()));
    }
    let speed = field.norm(x, v)?;
    let steps = ((t * speed / step).ceil() as usize).max(1);
    let dt = t / steps as f64;
    let mut s = geodesic::initial_state(&field.model, n, x, v)?;
    let mut points = vec![x.to_vec()];
    let mut velocities = vec![v.to_vec()];
    let mut exited = false;
    let mut taken = 0;
    for _ in 0..steps {
        s = geodesic::rk4_step(&field.model, n, &s, dt)?;
        taken += 1;
        let vel = geodesic::velocity(&field.model, n, &s)?;
        points.push(s.x[..n].to_vec());
        velocities.push(vel[..n].to_vec());
        if radius_of(&s.x[..n]) > field.radius {
            exited = true;
            break;
        }
    }
    Ok(GeodesicPath { points, velocities, dt, length: speed * dt * taken as f64, exited })
}

/// Geodesic distance and the sampled minimizing path.
pub fn distance(field: &MetricField, x: &[f64], y: &[f64], tol: f64) -> Result<(f64, Vec<Vec<f64>>)> {
    let opts = DistanceOptions { tol, ..DistanceOptions::default() };
    let solver = DistanceSolver::new(field, opts)?;
    let g = solver.distance(x, y)?;
    if g.length == 0.0 {
        return Ok((0.0, vec![x.to_vec()]));
    }
    let path = geodesic::fly(&field.model, field.dim, x, &g.velocity, g.steps, field.flight_limit(), true)?;
    Ok((g.length, path.path.iter().map(|p| p[..field.dim].to_vec()).collect()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryDistanceTable {
    /// Boundary angle of each node (2D) or node index (3D).
    pub parameters: Vec<f64>,
    /// Riemannian arc length of the boundary up to each node (2D only).
    pub arc_lengths: Vec<f64>,
    pub nodes: Vec<Vec<f64>>,
    /// Row-major `p x p`.
    pub values: Vec<f64>,
    /// `|d(i, j) - d(j, i)|` before symmetrization, row-major.
    pub discrepancy: Vec<f64>,
    /// Shooting residuals, row-major.
    pub residuals: Vec<f64>,
}

impl BoundaryDistanceTable {
    pub fn size(&self) -> usize {
        self.parameters.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size() + j]
    }

    pub fn to_csv(&self) -> String {
        let p = self.size();
        let mut out = String::from("theta");
        for t in &self.parameters {
            out.push_str(&format!(",{t:.12}"));
        }
        out.push('\n');
        for i in 0..p {
            out.push_str(&format!("{:.12}", self.parameters[i]));
            for j in 0..p {
                out.push_str(&format!(",{:.12}", self.get(i, j)));
            }
            out.push('\n');
        }
        out
    }

    /// Largest violation of `d(i, k) <= d(i, j) + d(j, k)` over all triples.
    pub fn triangle_violation(&self) -> f64 {
        let p = self.size();
        let mut worst = 0.0f64;
        for i in 0..p {
            for j in 0..p {
                for k in 0..p {
                    worst = worst.max(self.get(i, k) - self.get(i, j) - self.get(j, k));
                }
            }
        }
        worst
    }
}

/// Boundary distance function sampled at `p` nodes uniform in angle.
/// Each unordered pair is solved in both directions and averaged; the
/// reduction order is fixed so results do not depend on scheduling.
pub fn boundary_distance_table(field: &MetricField, p: usize, opts: DistanceOptions) -> Result<BoundaryDistanceTable> {
    if p < 8 {
        return Err(Error::Argument(format!("boundary table needs p >= 8, got {p}")));
    }
    if !field.radius.is_finite() {
        return Err(Error::Argument("boundary table needs a bounded domain".into()));
    }
    field.check_spd()?;
    let solver = DistanceSolver::new(field, opts)?;
    let nodes = field.boundary_nodes(p);
    let rows: Vec<Result<Vec<(f64, f64)>>> = (0..p)
        .into_par_iter()
        .map(|i| {
            let tree = solver.tree(&nodes[i])?;
            (0..p)
                .map(|j| {
                    if i == j {
                        return Ok((0.0, 0.0));
                    }
                    let g = solver.distance_with_tree(&tree, &nodes[i], &nodes[j])?;
                    Ok((g.length, g.residual))
                })
                .collect()
        })
        .collect();
    let mut raw = Vec::with_capacity(p);
    for r in rows {
        raw.push(r?);
    }
    let mut values = vec![0.0; p * p];
    let mut discrepancy = vec![0.0; p * p];
    let mut residuals = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..p {
            values[i * p + j] = 0.5 * (raw[i][j].0 + raw[j][i].0);
            discrepancy[i * p + j] = (raw[i][j].0 - raw[j][i].0).abs();
            residuals[i * p + j] = raw[i][j].1;
        }
    }
    let parameters: Vec<f64> = match field.dim {
        2 => (0..p).map(|i| std::f64::consts::TAU * i as f64 / p as f64).collect(),
        _ => (0..p).map(|i| i as f64).collect(),
    };
    let arc_lengths = if field.dim == 2 { boundary_arc_lengths(field, &parameters)? } else { vec![] };
    Ok(BoundaryDistanceTable { parameters, arc_lengths, nodes, values, discrepancy, residuals })
}

fn boundary_arc_lengths(field: &MetricField, params: &[f64]) -> Result<Vec<f64>> {
    let (xs, ws) = crate::util::gauss_legendre(8);
    let r = field.radius;
    let mut out = vec![0.0];
    for w in params.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut s = 0.0;
        for (t, wt) in xs.iter().zip(&ws) {
            let th = 0.5 * (a + b) + 0.5 * (b - a) * t;
            let x = [r * th.cos(), r * th.sin()];
            let v = [-r * th.sin(), r * th.cos()];
            s += 0.5 * (b - a) * wt * field.norm(&x, &v)?;
        }
        out.push(out.last().unwrap() + s);
    }
    Ok(out)
}

/// JSON form `{dim, R, h, kind, nodes}`; `nodes` holds row-major tensors on
/// the lattice `-R - 2h + i h`, first coordinate fastest. Custom fields also
/// carry their analytic `model` when they have one.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldJson {
    pub dim: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    pub h: f64,
    pub kind: FieldKind,
    #[serde(default)]
    pub collar: Option<f64>,
    #[serde(default)]
    pub nodes: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<Model>,
}

impl MetricField {
    fn lattice(&self) -> (f64, usize) {
        let r = if self.radius.is_finite() { self.radius } else { 1.0 };
        let lo = -r - 2.0 * self.h;
        let count = ((2.0 * r + 4.0 * self.h) / self.h).round() as usize + 1;
        (lo, count)
    }

    pub fn to_json(&self) -> Result<FieldJson> {
        let (lo, count) = self.lattice();
        let grid = match &self.model {
            Model::Sampled(g) => g.clone(),
            m => Grid::sample(m, self.dim, lo, self.h, count).or_else(|_| {
                // points beyond the chart (hyperbolic corners) are clamped
                let mut g = Grid { dim: self.dim, lo, h: self.h, count, tensors: Vec::new() };
                for idx in 0..count.pow(self.dim as u32) {
                    let x = Grid::node(self.dim, lo, self.h, count, idx);
                    let r = radius_of(&x);
                    let lim = self.model.chart_radius() * (1.0 - 1e-3);
                    let y: Vec<f64> = if r > lim { x.iter().map(|c| c * lim / r).collect() } else { x };
                    g.tensors.push(self.model.jet(&y, self.dim).map(|j| {
                        (0..self.dim).flat_map(|a| (0..self.dim).map(move |b| j.g[a][b])).collect()
                    })?);
                }
                Ok::<Grid, Error>(g)
            })?,
        };
        let model = match (&self.kind, &self.model) {
            (FieldKind::Custom, Model::Sampled(_)) => None,
            (FieldKind::Custom, m) => Some(m.clone()),
            _ => None,
        };
        Ok(FieldJson { dim: self.dim, radius: self.radius, h: self.h, kind: self.kind, collar: Some(self.collar), nodes: grid.tensors, model })
    }

    pub fn from_json(j: &FieldJson) -> Result<MetricField> {
        let mut f = match j.kind {
            FieldKind::Euclidean => MetricField::euclidean(j.dim, j.radius)?,
            FieldKind::Hyperbolic => MetricField::hyperbolic(j.dim, j.radius)?,
            FieldKind::Custom => match &j.model {
                Some(m) if j.radius.is_infinite() => MetricField::periodic(j.dim, m.clone())?,
                Some(m) => MetricField::custom(j.dim, j.radius, m.clone())?,
                None => {
                    if !(j.h > 0.0) {
                        return Err(Error::Parse("field needs h > 0".into()));
                    }
                    let lo = -j.radius - 2.0 * j.h;
                    let count = ((2.0 * j.radius + 4.0 * j.h) / j.h).round() as usize + 1;
                    if j.nodes.len() != count.pow(j.dim as u32) || j.nodes.iter().any(|t| t.len() != j.dim * j.dim) {
                        return Err(Error::Parse(format!(
                            "expected {} row-major {}x{} tensors for R = {} and h = {}",
                            count.pow(j.dim as u32),
                            j.dim,
                            j.dim,
                            j.radius,
                            j.h
                        )));
                    }
                    let grid = Grid { dim: j.dim, lo, h: j.h, count, tensors: j.nodes.clone() };
                    MetricField::custom(j.dim, j.radius, Model::Sampled(grid))?
                }
            },
        };
        if j.h > 0.0 {
            f.h = j.h;
        }
        if let Some(c) = j.collar {
            f.collar = c;
        }
        Ok(f)
    }

    pub fn from_json_str(s: &str) -> Result<MetricField> {
        let j: FieldJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        MetricField::from_json(&j)
    }
}

#[cfg(test)]
mod tests;
