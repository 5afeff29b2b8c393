//! Two-point geodesic problems by Newton shooting with graph warm starts.

use serde::{Deserialize, Serialize};

use super::geodesic::{fly, radius};
use super::graph::{Graph, Tree};
use super::model::Vec3;
use super::MetricField;
use crate::error::{Error, Result};
use crate::util::solve_small;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistanceOptions {
    /// Endpoint miss allowed in the chart.
    pub tol: f64,
    /// Arc-length step of the integrator.
    pub step: f64,
    /// Number of fan directions tried after the graph and chord starts.
    pub starts: usize,
    /// Lattice spacing of the warm-start graph as a fraction of the radius.
    pub graph_spacing: f64,
    pub graph_reach: i32,
    pub max_newton: usize,
}

impl Default for DistanceOptions {
    fn default() -> Self {
        DistanceOptions { tol: 1e-10, step: 0.02, starts: 32, graph_spacing: 1.0 / 16.0, graph_reach: 3, max_newton: 40 }
    }
}

/// A converged connecting geodesic.
#[derive(Debug, Clone, Serialize)]
pub struct Geodesic {
    pub length: f64,
    /// Initial chart velocity for unit parameter time.
    pub velocity: Vec<f64>,
    pub residual: f64,
    pub max_radius: f64,
    pub steps: usize,
}

/// Shooting solver bound to one field; owns the warm-start graph.
pub struct DistanceSolver<'a> {
    field: &'a MetricField,
    graph: Graph,
    pub opts: DistanceOptions,
}

impl<'a> DistanceSolver<'a> {
    pub fn new(field: &'a MetricField, opts: DistanceOptions) -> Result<DistanceSolver<'a>> {
        if !(opts.tol > 0.0 && opts.step > 0.0) {
            return Err(Error::Argument("tol and step must be positive".into()));
        }
        let r = field.graph_radius();
        let graph = Graph::build(&field.model, field.dim, r, r * opts.graph_spacing, opts.graph_reach)?;
        Ok(DistanceSolver { field, graph, opts })
    }

    pub fn field(&self) -> &MetricField {
        self.field
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn tree(&self, x: &[f64]) -> Result<Tree> {
        self.graph.tree(&self.field.model, x)
    }

    /// Graph distance and polyline.
    pub fn graph_route(&self, tree: &Tree, y: &[f64]) -> Result<(f64, Vec<Vec3>)> {
        self.graph.route(&self.field.model, tree, y)
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<Geodesic> {
        let tree = self.tree(x)?;
        self.distance_with_tree(&tree, x, y)
    }

    /// Minimal connecting geodesic. Starts are tried in the order graph,
    /// chord, fan; the first converged shot no longer than the graph route
    /// is accepted.
    pub fn distance_with_tree(&self, tree: &Tree, x: &[f64], y: &[f64]) -> Result<Geodesic> {
        let n = self.field.dim;
        self.field.check_closed(x)?;
        self.field.check_closed(y)?;
        if (0..n).all(|i| x[i] == y[i]) {
            return Ok(Geodesic { length: 0.0, velocity: vec![0.0; n], residual: 0.0, max_radius: radius(&pad(x), n), steps: 0 });
        }
        let (lg, path) = self.graph_route(tree, y)?;
        let accept = lg * (1.0 + 1e-9) + 1e-9;
        let mut best: Option<Geodesic> = None;
        let mut best_residual = f64::INFINITY;
        for v0 in self.starts(x, y, lg, &path)? {
            match self.newton(x, y, &v0, lg) {
                Ok(g) => {
                    if g.length <= accept {
                        return Ok(g);
                    }
                    if best.as_ref().is_none_or(|b| g.length < b.length) {
                        best = Some(g);
                    }
                }
                Err(r) => best_residual = best_residual.min(r),
            }
        }
        // every converged shot was longer than the graph route
        best.ok_or(Error::NonConvergence { from: x[..n].to_vec(), to: y[..n].to_vec(), residual: best_residual })
    }

    /// Newton shooting from the chord start alone, without the graph. Used
    /// where endpoints lie beyond the warm-start lattice.
    pub fn shoot_chord(&self, x: &[f64], y: &[f64]) -> Result<Geodesic> {
        let n = self.field.dim;
        let chord: Vec<f64> = (0..n).map(|i| y[i] - x[i]).collect();
        let hint = self.field.model.jet(x, n)?.norm(&chord);
        self.newton(x, y, &chord, hint)
            .map_err(|residual| Error::NonConvergence { from: x[..n].to_vec(), to: y[..n].to_vec(), residual })
    }

    /// All distinct converged geodesics from the fan at lengths `L` and `2L`
    /// (exhaustive mode), sorted by length.
    pub fn all_geodesics(&self, x: &[f64], y: &[f64]) -> Result<Vec<Geodesic>> {
        let tree = self.tree(x)?;
        let (lg, path) = self.graph_route(&tree, y)?;
        let mut found: Vec<Geodesic> = Vec::new();
        let mut starts = self.starts(x, y, lg, &path)?;
        let doubled: Vec<Vec<f64>> = starts.iter().map(|v| v.iter().map(|c| 2.0 * c).collect()).collect();
        starts.extend(doubled);
        for v0 in starts {
            if let Ok(g) = self.newton(x, y, &v0, lg) {
                let dup = found.iter().any(|f| {
                    let d: f64 = f.velocity.iter().zip(&g.velocity).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    d <= 1e-6 * (1.0 + g.length)
                });
                if !dup {
                    found.push(g);
                }
            }
        }
        found.sort_by(|a, b| a.length.total_cmp(&b.length));
        Ok(found)
    }

    fn starts(&self, x: &[f64], y: &[f64], lg: f64, path: &[Vec3]) -> Result<Vec<Vec<f64>>> {
        let n = self.field.dim;
        let jet = self.field.model.jet(x, n)?;
        let scale = |d: &[f64]| -> Vec<f64> {
            let l = jet.norm(d);
            d.iter().map(|c| c * lg / l).collect()
        };
        let mut out = Vec::new();
        // graph start: aim at the route point about a quarter of the way
        let target = path.len().saturating_sub(1).min(((path.len() as f64) * 0.25).ceil() as usize).max(1);
        let p = path[target.min(path.len() - 1)];
        let d: Vec<f64> = (0..n).map(|i| p[i] - x[i]).collect();
        if d.iter().any(|c| *c != 0.0) {
            out.push(scale(&d));
        }
        let chord: Vec<f64> = (0..n).map(|i| y[i] - x[i]).collect();
        out.push(scale(&chord));
        for dir in fan(n, self.opts.starts) {
            out.push(scale(&dir));
        }
        Ok(out)
    }

    /// Newton iteration on the initial velocity with a forward-difference
    /// Jacobian. The step count is frozen from the length estimate.
    fn newton(&self, x: &[f64], y: &[f64], v0: &[f64], length_hint: f64) -> std::result::Result<Geodesic, f64> {
        let n = self.field.dim;
        let model = &self.field.model;
        let limit = self.field.flight_limit();
        let steps = ((length_hint / self.opts.step).ceil() as usize).max(4);
        let miss = |v: &[f64]| -> std::result::Result<(Vec<f64>, f64), ()> {
            let f = fly(model, n, x, v, steps, limit, false).map_err(|_| ())?;
            let r: Vec<f64> = (0..n).map(|i| f.end[i] - y[i]).collect();
            Ok((r, f.max_radius))
        };
        let mut v = v0.to_vec();
        let (mut r, mut maxr) = miss(&v).map_err(|_| f64::INFINITY)?;
        let mut res = norm(&r);
        let scale = 1.0 + norm(&v);
        for _ in 0..self.opts.max_newton {
            if res <= self.opts.tol {
                break;
            }
            let h = 1e-7 * scale;
            let mut jac = vec![0.0; n * n];
            for c in 0..n {
                let mut vp = v.clone();
                vp[c] += h;
                let (rp, _) = miss(&vp).map_err(|_| res)?;
                for i in 0..n {
                    jac[i * n + c] = (rp[i] - r[i]) / h;
                }
            }
            let neg: Vec<f64> = r.iter().map(|e| -e).collect();
            let dv = solve_small(&jac, &neg, n).ok_or(res)?;
            let mut t = 1.0;
            let mut improved = false;
            for _ in 0..12 {
                let cand: Vec<f64> = (0..n).map(|i| v[i] + t * dv[i]).collect();
                if let Ok((rc, mc)) = miss(&cand) {
                    let rn = norm(&rc);
                    if rn < res {
                        v = cand;
                        r = rc;
                        res = rn;
                        maxr = mc;
                        improved = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !improved {
                break;
            }
        }
        if res > self.opts.tol {
            return Err(res);
        }
        let length = model.jet(x, n).map_err(|_| res)?.norm(&v);
        Ok(Geodesic { length, velocity: v, residual: res, max_radius: maxr, steps })
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn pad(x: &[f64]) -> Vec3 {
    let mut p = [0.0; 3];
    p[..x.len().min(3)].copy_from_slice(&x[..x.len().min(3)]);
    p
}

/// Evenly spread unit directions: a circle in 2D, a Fibonacci sphere in 3D.
pub fn fan(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        2 => (0..count)
            .map(|k| {
                let t = std::f64::consts::TAU * (k as f64 + 0.5) / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let t = golden * k as f64;
                    vec![r * t.cos(), r * t.sin(), z]
                })
                .collect()
        }
    }
}
