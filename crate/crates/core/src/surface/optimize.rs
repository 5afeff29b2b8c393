//! Two-phase filling-area descent.

use std::collections::VecDeque;

use rand::seq::index::sample;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cell_area, surface_area, uniform_e_weights, weighted_cell_area, CellArea, SimplicialSurface};
use crate::normspace::AreaDensity;
use crate::represent::EmbeddingVector;
use crate::util::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    /// Quasi-Newton iterations on the `<,>_e`-area.
    pub iterations: usize,
    pub memory: usize,
    /// True area is checked every this many iterations.
    pub check_every: usize,
    pub gradient_tol: f64,
    /// Phase A stops once a check window lowers the true area by less than
    /// this fraction.
    pub stall_tol: f64,
    /// Backtracking halvings before the line search gives up.
    pub line_search: usize,
    pub pattern_levels: usize,
    pub pattern_factor: f64,
    /// First pattern step as a fraction of the mean sup-norm edge length.
    pub pattern_step: f64,
    /// Coordinates probed per free vertex and level.
    pub pattern_coords: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            iterations: 500,
            memory: 8,
            check_every: 25,
            gradient_tol: 1e-12,
            stall_tol: 1e-10,
            line_search: 20,
            pattern_levels: 6,
            pattern_factor: 0.5,
            pattern_step: 0.05,
            pattern_coords: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub area: f64,
    pub step: f64,
    pub slivers: usize,
}

impl TraceRow {
    pub fn csv(rows: &[TraceRow]) -> String {
        let mut out = String::from("iteration,area,step,slivers\n");
        for r in rows {
            out.push_str(&format!("{},{:.15e},{:.6e},{}\n", r.iteration, r.area, r.step, r.slivers));
        }
        out
    }
}

struct State<'a> {
    vertices: Vec<Vec<f64>>,
    cells: &'a [Vec<usize>],
    free: Vec<usize>,
    e: Vec<f64>,
}

impl State<'_> {
    fn pack(&self) -> Vec<f64> {
        self.free.iter().flat_map(|&i| self.vertices[i].iter().copied()).collect()
    }

    fn unpack(&mut self, x: &[f64]) {
        let m = self.e.len();
        for (slot, &i) in self.free.iter().enumerate() {
            self.vertices[i].copy_from_slice(&x[slot * m..(slot + 1) * m]);
        }
    }

    /// Surrogate area and its gradient in packed coordinates.
    fn objective(&mut self, x: &[f64], slot_of: &[Option<usize>]) -> (f64, Vec<f64>) {
        self.unpack(x);
        let m = self.e.len();
        let parts: Vec<(f64, Vec<(usize, Vec<f64>)>)> = self
            .cells
            .par_iter()
            .map(|c| {
                let verts: Vec<&[f64]> = c.iter().map(|&i| self.vertices[i].as_slice()).collect();
                let mut g = vec![vec![0.0; m]; c.len()];
                let a = weighted_cell_area(&verts, &self.e, Some(&mut g));
                (a, c.iter().copied().zip(g).collect())
            })
            .collect();
        let mut grad = vec![0.0; x.len()];
        let mut total = 0.0;
        for (a, gs) in parts {
            total += a;
            for (v, g) in gs {
                if let Some(slot) = slot_of[v] {
                    for k in 0..m {
                        grad[slot * m + k] += g[k];
                    }
                }
            }
        }
        (total, grad)
    }

    fn surface(&self, template: &SimplicialSurface) -> SimplicialSurface {
        SimplicialSurface {
            vertices: self.vertices.iter().cloned().map(EmbeddingVector::new).collect(),
            ..template.clone()
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mean_edge(surface: &SimplicialSurface) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for c in &surface.cells {
        for i in 1..c.len() {
            total += surface.vertices[c[i]].sup_distance(&surface.vertices[c[0]]);
            count += 1;
        }
    }
    if count == 0 { 0.0 } else { total / count as f64 }
}

/// Phase A runs limited-memory BFGS on the `<,>_e`-area with exact
/// gradients, keeping only checkpoints whose true area did not increase.
/// Phase B then polishes the true area by coordinate pattern search with a
/// geometric step schedule, re-evaluating only the cells around a probed
/// vertex.
pub fn minimize_filling(
    surface: &SimplicialSurface,
    def: &AreaDensity,
    cfg: &OptimizerConfig,
    seed: u64,
) -> (SimplicialSurface, Vec<TraceRow>) {
    let start = surface_area(surface, def);
    let mut trace = vec![TraceRow { iteration: 0, area: start.total, step: 0.0, slivers: start.slivers }];
    if surface.free_count() == 0 || surface.cells.is_empty() || cfg.iterations == 0 {
        return (surface.clone(), trace);
    }
    let m = surface.ambient_dim;
    let free: Vec<usize> = (0..surface.vertices.len()).filter(|&i| !surface.fixed[i]).collect();
    let mut slot_of = vec![None; surface.vertices.len()];
    for (s, &i) in free.iter().enumerate() {
        slot_of[i] = Some(s);
    }
    let mut state = State {
        vertices: surface.vertices.iter().map(|v| v.values.clone()).collect(),
        cells: &surface.cells,
        free,
        e: uniform_e_weights(surface.dim(), m),
    };
    let scale = mean_edge(surface).max(1e-12);

    // phase A
    let mut x = state.pack();
    let mut accepted = x.clone();
    let mut accepted_area = start.total;
    let (mut f, mut g) = state.objective(&x, &slot_of);
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iteration = 0usize;
    let mut last_step = 0.0;
    let mut stop = false;
    while iteration < cfg.iterations && !stop {
        iteration += 1;
        let gmax = g.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        if gmax <= cfg.gradient_tol * (1.0 + f) {
            stop = true;
        } else {
            // two-loop recursion
            let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
            let mut alphas = Vec::with_capacity(memory.len());
            for (s, y, rho) in memory.iter().rev() {
                let a = rho * dot(s, &d);
                for (di, yi) in d.iter_mut().zip(y) {
                    *di -= a * yi;
                }
                alphas.push(a);
            }
            if let Some((s, y, _)) = memory.back() {
                let gamma = dot(s, y) / dot(y, y);
                d.iter_mut().for_each(|v| *v *= gamma);
            } else {
                let t0 = (0.1 * scale / gmax).min(1.0);
                d.iter_mut().for_each(|v| *v *= t0);
            }
            for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
                let b = rho * dot(y, &d);
                for (di, si) in d.iter_mut().zip(s) {
                    *di += (a - b) * si;
                }
            }
            let mut slope = dot(&g, &d);
            if !(slope < 0.0) {
                memory.clear();
                d = g.iter().map(|v| -v * (0.1 * scale / gmax).min(1.0)).collect();
                slope = dot(&g, &d);
            }
            let mut t = 1.0;
            let mut moved = false;
            for _ in 0..cfg.line_search.max(1) {
                let cand: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
                let (fc, gc) = state.objective(&cand, &slot_of);
                if fc <= f + 1e-4 * t * slope {
                    let s: Vec<f64> = cand.iter().zip(&x).map(|(a, b)| a - b).collect();
                    let y: Vec<f64> = gc.iter().zip(&g).map(|(a, b)| a - b).collect();
                    let sy = dot(&s, &y);
                    if sy > 1e-16 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
                        memory.push_back((s, y, 1.0 / sy));
                        if memory.len() > cfg.memory.max(1) {
                            memory.pop_front();
                        }
                    }
                    last_step = t * d.iter().fold(0.0f64, |s, v| s.max(v.abs()));
                    x = cand;
                    f = fc;
                    g = gc;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                stop = true;
            }
        }
        if stop || iteration % cfg.check_every.max(1) == 0 || iteration == cfg.iterations {
            state.unpack(&x);
            let area = surface_area(&state.surface(surface), def);
            if area.total <= accepted_area {
                if accepted_area - area.total < cfg.stall_tol * area.total {
                    stop = true;
                }
                accepted_area = area.total;
                accepted.clone_from(&x);
                trace.push(TraceRow { iteration, area: area.total, step: last_step, slivers: area.slivers });
            } else {
                stop = true;
            }
        }
    }
    state.unpack(&accepted);

    // phase B
    let mut incident = vec![Vec::new(); surface.vertices.len()];
    for (ci, c) in surface.cells.iter().enumerate() {
        for &v in c {
            incident[v].push(ci);
        }
    }
    let current = state.surface(surface);
    let mut cache: Vec<CellArea> = surface_area(&current, def).per_cell;
    let mut vertices: Vec<EmbeddingVector> = current.vertices;
    let mut r = rng(seed, 0x5eed);
    let coords = cfg.pattern_coords.min(m).max(1);
    let mut step = cfg.pattern_step * scale;
    let eval = |vertices: &[EmbeddingVector], ci: usize| -> CellArea {
        let verts: Vec<&EmbeddingVector> = surface.cells[ci].iter().map(|&i| &vertices[i]).collect();
        cell_area(&verts, def).unwrap_or(CellArea { density: 0.0, reference: 0.0, area: 0.0, degenerate: true })
    };
    for level in 0..cfg.pattern_levels {
        let total: f64 = cache.iter().map(|c| c.area).sum();
        for &v in &state.free {
            for k in sample(&mut r, m, coords).into_iter() {
                let old: f64 = incident[v].iter().map(|&ci| cache[ci].area).sum();
                let original = vertices[v].values[k];
                let mut improved = false;
                for sign in [1.0, -1.0] {
                    let mut values = vertices[v].values.clone();
                    values[k] = original + sign * step;
                    vertices[v] = EmbeddingVector::new(values);
                    let fresh: Vec<CellArea> = incident[v].iter().map(|&ci| eval(&vertices, ci)).collect();
                    let new: f64 = fresh.iter().map(|c| c.area).sum();
                    if new < old - 1e-14 * total {
                        for (&ci, c) in incident[v].iter().zip(fresh) {
                            cache[ci] = c;
                        }
                        improved = true;
                        break;
                    }
                }
                if !improved {
                    let mut values = vertices[v].values.clone();
                    values[k] = original;
                    vertices[v] = EmbeddingVector::new(values);
                }
            }
        }
        let area: f64 = cache.iter().map(|c| c.area).sum();
        let slivers = cache.iter().filter(|c| c.degenerate).count();
        trace.push(TraceRow { iteration: iteration + level + 1, area, step, slivers });
        step *= cfg.pattern_factor;
    }
    let result = SimplicialSurface { vertices, ..surface.clone() };
    (result, trace)
}

/// Adds to every free vertex a random vector of `<,>_e`-length `size`
/// (equal-weight quadrature).
pub fn jitter_free_vertices(surface: &SimplicialSurface, size: f64, seed: u64) -> SimplicialSurface {
    let m = surface.ambient_dim;
    let e = uniform_e_weights(surface.dim(), m);
    let mut r = rng(seed, 0x7177e5);
    let vertices = surface
        .vertices
        .iter()
        .zip(&surface.fixed)
        .map(|(v, &fixed)| {
            if fixed {
                return v.clone();
            }
            let dir: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut r)).collect();
            let len = dir.iter().zip(&e).map(|(d, w)| w * d * d).sum::<f64>().sqrt();
            EmbeddingVector::new(v.values.iter().zip(&dir).map(|(a, d)| a + size * d / len).collect())
        })
        .collect();
    SimplicialSurface { vertices, ..surface.clone() }
}
