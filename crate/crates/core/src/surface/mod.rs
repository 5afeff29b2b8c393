//! Simplicial surfaces in a sampled `L^inf(S)` and their Finsler areas.

mod mesh;
mod optimize;
#[cfg(test)]
mod tests;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metricfield::{DistanceOptions, DistanceSolver, MetricField};
use crate::normspace::{induced_norm, planar_density, volume_density, AreaDensity, DensityDef};
use crate::represent::{
    bdr_embed_with, busemann_embed_euclidean, busemann_embed_hyperbolic, EmbeddingVector, HyperplaneMap,
    HyperplaneOptions, SampledSphere,
};
use crate::util::{det_small, gauss_legendre, solve_small};

pub use mesh::{signed_area, PlanarMesh};
pub use optimize::{jitter_free_vertices, minimize_filling, OptimizerConfig, TraceRow};

/// Edge Gram determinants below this count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialSurface {
    pub ambient_dim: usize,
    pub vertices: Vec<EmbeddingVector>,
    /// Each cell lists `n + 1` vertex indices.
    pub cells: Vec<Vec<usize>>,
    /// Fixed (boundary) vertices.
    pub fixed: Vec<bool>,
}

impl SimplicialSurface {
    pub fn new(vertices: Vec<EmbeddingVector>, cells: Vec<Vec<usize>>, fixed: Vec<bool>) -> Result<SimplicialSurface> {
        let m = vertices.first().map(|v| v.len()).unwrap_or(0);
        if vertices.iter().any(|v| v.len() != m) {
            return Err(Error::Argument("vertices have mixed ambient dimensions".into()));
        }
        if fixed.len() != vertices.len() {
            return Err(Error::Argument(format!("{} fixed flags for {} vertices", fixed.len(), vertices.len())));
        }
        let k = cells.first().map(|c| c.len()).unwrap_or(3);
        if !(3..=4).contains(&k) {
            return Err(Error::UnsupportedDimension(k.saturating_sub(1)));
        }
        for c in &cells {
            if c.len() != k || c.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::Argument(format!("invalid cell {c:?}")));
            }
        }
        Ok(SimplicialSurface { ambient_dim: m, vertices, cells, fixed })
    }

    /// Cell dimension `n`.
    pub fn dim(&self) -> usize {
        self.cells.first().map(|c| c.len() - 1).unwrap_or(2)
    }

    pub fn free_count(&self) -> usize {
        self.fixed.iter().filter(|f| !**f).count()
    }

    pub fn map_vertices(&self, f: impl Fn(&EmbeddingVector) -> EmbeddingVector) -> SimplicialSurface {
        SimplicialSurface { vertices: self.vertices.iter().map(f).collect(), ..self.clone() }
    }

    pub fn scaled(&self, t: f64) -> SimplicialSurface {
        self.map_vertices(|v| v.scale(t))
    }

    pub fn disjoint_union(&self, other: &SimplicialSurface) -> Result<SimplicialSurface> {
        let shift = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.extend(other.vertices.iter().cloned());
        let mut cells = self.cells.clone();
        cells.extend(other.cells.iter().map(|c| c.iter().map(|i| i + shift).collect()));
        let mut fixed = self.fixed.clone();
        fixed.extend(&other.fixed);
        SimplicialSurface::new(vertices, cells, fixed)
    }

    pub fn to_json(&self) -> SurfaceJson {
        SurfaceJson {
            m: self.ambient_dim,
            vertices: self.vertices.iter().map(|v| v.values.clone()).collect(),
            cells: self.cells.clone(),
            fixed: self.fixed.clone(),
        }
    }

    pub fn from_json(j: &SurfaceJson) -> Result<SimplicialSurface> {
        let s = SimplicialSurface::new(
            j.vertices.iter().cloned().map(EmbeddingVector::new).collect(),
            j.cells.clone(),
            j.fixed.clone(),
        )?;
        if s.ambient_dim != j.m && !s.vertices.is_empty() {
            return Err(Error::Dimension { expected: j.m, got: s.ambient_dim });
        }
        Ok(s)
    }

    pub fn from_json_str(text: &str) -> Result<SimplicialSurface> {
        SimplicialSurface::from_json(&serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceJson {
    pub m: usize,
    pub vertices: Vec<Vec<f64>>,
    pub cells: Vec<Vec<usize>>,
    pub fixed: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellArea {
    pub density: f64,
    /// Volume of the reference simplex in edge coordinates, `1/n!`.
    pub reference: f64,
    pub area: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaBreakdown {
    pub per_cell: Vec<CellArea>,
    pub total: f64,
    pub density_def: DensityDef,
    pub slivers: usize,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Edge Gram matrix `V^T V` (plain dot products) of a cell.
fn gram(edges: &[Vec<f64>]) -> Vec<f64> {
    let n = edges.len();
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let d: f64 = edges[i].iter().zip(&edges[j]).map(|(a, b)| a * b).sum();
            g[i * n + j] = d;
            g[j * n + i] = d;
        }
    }
    g
}

fn is_degenerate(edges: &[Vec<f64>]) -> bool {
    let n = edges.len();
    let g = gram(edges);
    let scale: f64 = (0..n).map(|i| g[i * n + i]).product();
    let d = det_small(&g, n);
    !(scale > 0.0) || d <= DEGENERACY_TOL * scale.max(DEGENERACY_TOL)
}

/// Finsler area of one simplex: the density of the restricted sup-norm in
/// edge coordinates times `1/n!`. Degenerate simplices give zero area and
/// set the flag.
pub fn cell_area(vertices: &[&EmbeddingVector], def: &AreaDensity) -> Result<CellArea> {
    let k = vertices.len();
    if !(3..=4).contains(&k) {
        return Err(Error::UnsupportedDimension(k.saturating_sub(1)));
    }
    let n = k - 1;
    let m = vertices[0].len();
    if vertices.iter().any(|v| v.len() != m) {
        return Err(Error::Argument("cell vertices have mixed ambient dimensions".into()));
    }
    let reference = 1.0 / factorial(n);
    let edges: Vec<Vec<f64>> =
        vertices[1..].iter().map(|v| v.values.iter().zip(&vertices[0].values).map(|(a, b)| a - b).collect()).collect();
    let zero = CellArea { density: 0.0, reference, area: 0.0, degenerate: true };
    if vertices.iter().any(|v| !v.sup_norm.is_finite()) {
        return Ok(CellArea { density: f64::INFINITY, reference, area: f64::INFINITY, degenerate: false });
    }
    if is_degenerate(&edges) {
        return Ok(zero);
    }
    let density = if n == 2 {
        let rows: Vec<[f64; 2]> = (0..m).map(|r| [edges[0][r], edges[1][r]]).collect();
        match planar_density(&rows, def) {
            Some(d) => d,
            None => return Ok(zero),
        }
    } else {
        let basis = nalgebra::DMatrix::from_fn(m, n, |r, c| edges[c][r]);
        match induced_norm(m, &basis).and_then(|norm| volume_density(&norm, *def)) {
            Ok(d) => d,
            Err(Error::DegenerateTangent { .. }) | Err(Error::UnboundedBall { .. }) => return Ok(zero),
            Err(e) => return Err(e),
        }
    };
    Ok(CellArea { density, reference, area: density * reference, degenerate: false })
}

pub(crate) fn cell_of<'a>(surface: &'a SimplicialSurface, cell: &[usize]) -> Vec<&'a EmbeddingVector> {
    cell.iter().map(|&i| &surface.vertices[i]).collect()
}

/// Cells are evaluated in parallel and summed in cell order.
pub fn surface_area(surface: &SimplicialSurface, def: &AreaDensity) -> AreaBreakdown {
    let per_cell: Vec<CellArea> = surface
        .cells
        .par_iter()
        .map(|c| {
            cell_area(&cell_of(surface, c), def)
                .unwrap_or(CellArea { density: 0.0, reference: 0.0, area: 0.0, degenerate: true })
        })
        .collect();
    let total = per_cell.iter().map(|c| c.area).sum();
    let slivers = per_cell.iter().filter(|c| c.degenerate).count();
    AreaBreakdown { per_cell, total, density_def: def.def, slivers }
}

/// Area of a cell for the inner product `<u, v> = sum_k e_k u_k v_k`,
/// together with its gradient with respect to each vertex.
pub(crate) fn weighted_cell_area(verts: &[&[f64]], e: &[f64], grad: Option<&mut [Vec<f64>]>) -> f64 {
    let n = verts.len() - 1;
    let m = e.len();
    let edges: Vec<Vec<f64>> = verts[1..].iter().map(|v| (0..m).map(|k| v[k] - verts[0][k]).collect()).collect();
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let d: f64 = (0..m).map(|k| e[k] * edges[i][k] * edges[j][k]).sum();
            g[i * n + j] = d;
            g[j * n + i] = d;
        }
    }
    let det = det_small(&g, n);
    let scale: f64 = (0..n).map(|i| g[i * n + i]).product();
    if !scale.is_finite() || det.is_nan() {
        return f64::INFINITY;
    }
    if !(det > DEGENERACY_TOL * scale.max(DEGENERACY_TOL)) {
        return 0.0;
    }
    let area = det.sqrt() / factorial(n);
    if let Some(grad) = grad {
        // d area / d e_i = area * sum_j G^{-1}_{ij} (e .* edge_j)
        let mut inv = vec![0.0; n * n];
        for j in 0..n {
            let mut unit = vec![0.0; n];
            unit[j] = 1.0;
            let col = solve_small(&g, &unit, n).unwrap_or(vec![0.0; n]);
            for i in 0..n {
                inv[i * n + j] = col[i];
            }
        }
        for slot in grad.iter_mut() {
            slot.iter_mut().for_each(|x| *x = 0.0);
        }
        for i in 0..n {
            for k in 0..m {
                let d: f64 = (0..n).map(|j| inv[i * n + j] * edges[j][k]).sum::<f64>() * e[k] * area;
                grad[i + 1][k] += d;
                grad[0][k] -= d;
            }
        }
    }
    area
}

/// `<,>_e`-area of the surface for the given quadrature.
pub fn e_area(surface: &SimplicialSurface, sphere: &SampledSphere) -> Result<f64> {
    if sphere.len() != surface.ambient_dim {
        return Err(Error::Dimension { expected: surface.ambient_dim, got: sphere.len() });
    }
    let e: Vec<f64> = sphere.weights.iter().map(|w| w * sphere.n as f64).collect();
    Ok(surface
        .cells
        .iter()
        .map(|c| {
            let verts: Vec<&[f64]> = c.iter().map(|&i| surface.vertices[i].values.as_slice()).collect();
            weighted_cell_area(&verts, &e, None)
        })
        .sum())
}

/// Weights of `<,>_e` for an equal-weight quadrature with `m` nodes on
/// `S^{n-1}`.
pub(crate) fn uniform_e_weights(n: usize, m: usize) -> Vec<f64> {
    vec![n as f64 / m as f64; m]
}

/// Planar disc triangulation mapped through `Phi_0`, boundary fixed.
pub fn flat_disc_surface(radius: f64, mesh_cells: usize, sphere: &SampledSphere) -> Result<SimplicialSurface> {
    if sphere.n != 2 {
        return Err(Error::Dimension { expected: 2, got: sphere.n });
    }
    let mesh = PlanarMesh::disc(radius, mesh_cells)?;
    surface_from_mesh(&mesh, |x| Ok(busemann_embed_euclidean(x, sphere)))
}

fn surface_from_mesh(
    mesh: &PlanarMesh,
    embed: impl Fn(&[f64]) -> Result<EmbeddingVector> + Sync,
) -> Result<SimplicialSurface> {
    let vertices: Vec<EmbeddingVector> = mesh.points.par_iter().map(|p| embed(p)).collect::<Result<_>>()?;
    SimplicialSurface::new(vertices, mesh.cells.iter().map(|c| c.to_vec()).collect(), mesh.boundary.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    /// Distances to boundary nodes, one per quadrature node.
    Bdr,
    BusemannEuclidean,
    /// Closed-form hyperbolic Busemann functions.
    Hyperbolic,
    /// Hit-length coordinates against flat or hyperbolic hyperplanes.
    Hyperplane,
}

impl std::str::FromStr for Representation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Representation> {
        match s {
            "bdr" => Ok(Representation::Bdr),
            "busemann_euclidean" => Ok(Representation::BusemannEuclidean),
            "hyperbolic" => Ok(Representation::Hyperbolic),
            "hyperplane" => Ok(Representation::Hyperplane),
            other => Err(Error::Parse(format!("unknown representation {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmbeddedFilling {
    pub surface: SimplicialSurface,
    pub representation: Representation,
    /// Riemannian volume of the whole disc `(D, g)`.
    pub disc_volume: f64,
    /// Riemannian volume of the triangulated polygon.
    pub mesh_volume: f64,
}

/// Maps a planar mesh of the domain into `L^inf(S)`. The bdr variant uses
/// one boundary node per quadrature node of `sphere`.
pub fn embed_filling(
    field: &MetricField,
    mesh: &PlanarMesh,
    embed: Representation,
    sphere: &SampledSphere,
) -> Result<EmbeddedFilling> {
    if field.dim != 2 {
        return Err(Error::UnsupportedDimension(field.dim));
    }
    let limit = field.radius * (1.0 + 1e-12);
    if let Some(p) = mesh.points.iter().find(|p| p[0].hypot(p[1]) > limit) {
        return Err(Error::OutsideDomain(p.to_vec()));
    }
    let vertices = embed_points(field, &mesh.points, embed, sphere)?;
    let surface = SimplicialSurface::new(vertices, mesh.cells.iter().map(|c| c.to_vec()).collect(), mesh.boundary.clone())?;
    Ok(EmbeddedFilling {
        surface,
        representation: embed,
        disc_volume: disc_volume(field, 48)?,
        mesh_volume: mesh_volume(field, mesh)?,
    })
}

/// Images of planar points under the chosen representation of `field`.
pub fn embed_points(
    field: &MetricField,
    points: &[[f64; 2]],
    embed: Representation,
    sphere: &SampledSphere,
) -> Result<Vec<EmbeddingVector>> {
    let run = |f: &(dyn Fn(&[f64]) -> Result<EmbeddingVector> + Sync)| points.par_iter().map(|p| f(p)).collect();
    match embed {
        Representation::BusemannEuclidean => run(&|x| Ok(busemann_embed_euclidean(x, sphere))),
        Representation::Hyperbolic => run(&|x| busemann_embed_hyperbolic(x, sphere)),
        Representation::Hyperplane => {
            let map = HyperplaneMap::new(field, sphere, HyperplaneOptions::default())?;
            run(&|x| map.embed(x))
        }
        Representation::Bdr => {
            let nodes = field.boundary_nodes(sphere.len());
            let solver = DistanceSolver::new(field, DistanceOptions::default())?;
            run(&|x| bdr_embed_with(&solver, x, &nodes))
        }
    }
}

/// `int_D sqrt(det g)` by Gauss–Legendre in the radius and the trapezoid
/// rule in angle (2D) or Gauss–Legendre in the polar cosine (3D).
pub fn disc_volume(field: &MetricField, order: usize) -> Result<f64> {
    let r_max = field.radius;
    if !r_max.is_finite() {
        return Err(Error::Argument("volume of an unbounded domain".into()));
    }
    let (xs, ws) = gauss_legendre(order);
    let turns = 4 * order;
    let mut total = 0.0;
    for (x, w) in xs.iter().zip(&ws) {
        let r = 0.5 * r_max * (x + 1.0);
        let wr = 0.5 * r_max * w;
        match field.dim {
            2 => {
                for j in 0..turns {
                    let t = std::f64::consts::TAU * j as f64 / turns as f64;
                    let p = [r * t.cos(), r * t.sin()];
                    total += wr * r * field.volume_element(&p)? * std::f64::consts::TAU / turns as f64;
                }
            }
            3 => {
                for (c, wc) in xs.iter().zip(&ws) {
                    let s = (1.0 - c * c).max(0.0).sqrt();
                    for j in 0..turns {
                        let t = std::f64::consts::TAU * j as f64 / turns as f64;
                        let p = [r * s * t.cos(), r * s * t.sin(), r * c];
                        total += wr * r * r * wc * field.volume_element(&p)? * std::f64::consts::TAU / turns as f64;
                    }
                }
            }
            d => return Err(Error::UnsupportedDimension(d)),
        }
    }
    Ok(total)
}

/// Riemannian area of the triangulated polygon, Duffy-collapsed
/// Gauss–Legendre on each triangle.
pub fn mesh_volume(field: &MetricField, mesh: &PlanarMesh) -> Result<f64> {
    let (xs, ws) = gauss_legendre(5);
    let per: Vec<f64> = mesh
        .cells
        .par_iter()
        .map(|c| {
            let (a, b, d) = (mesh.points[c[0]], mesh.points[c[1]], mesh.points[c[2]]);
            let jac = 2.0 * signed_area(&mesh.points, c).abs();
            let mut s = 0.0;
            for (u, wu) in xs.iter().zip(&ws) {
                let u = 0.5 * (u + 1.0);
                for (v, wv) in xs.iter().zip(&ws) {
                    let v = 0.5 * (v + 1.0);
                    let p = [
                        a[0] + u * (b[0] - a[0]) + u * v * (d[0] - b[0]),
                        a[1] + u * (b[1] - a[1]) + u * v * (d[1] - b[1]),
                    ];
                    s += 0.25 * wu * wv * u * field.volume_element(&p)?;
                }
            }
            Ok(s * jac)
        })
        .collect::<Result<_>>()?;
    Ok(per.iter().sum())
}
