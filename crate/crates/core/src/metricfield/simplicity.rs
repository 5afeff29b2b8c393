//! Numerical test of the three defining properties of a simple metric:
//! strictly convex boundary, absence of conjugate points, and minimality of
//! every geodesic segment.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::distance::{fan, DistanceOptions, DistanceSolver};
use super::geodesic::{initial_state, rk4_step, velocity, State};
use super::model::{min_eigenvalue, Mat3};
use super::{radius_of, MetricField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimplicityOptions {
    /// Geodesics integrated for the conjugate-point test.
    pub jacobi_geodesics: usize,
    /// Random boundary pairs for the multi-start minimality test.
    pub pairs: usize,
    pub step: f64,
    /// Relative length gap below which two connecting geodesics count as tied.
    pub tie_tol: f64,
    pub distance: DistanceOptions,
}

impl Default for SimplicityOptions {
    fn default() -> Self {
        SimplicityOptions {
            jacobi_geodesics: 48,
            pairs: 16,
            step: 0.01,
            tie_tol: 1e-6,
            distance: DistanceOptions { starts: 16, ..DistanceOptions::default() },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConjugatePoint {
    pub start: Vec<f64>,
    pub direction: Vec<f64>,
    pub arc_length: f64,
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimplicityReport {
    pub samples: usize,
    pub seed: u64,
    /// Smallest second fundamental form eigenvalue (inward normal) over the
    /// boundary samples.
    pub boundary_convexity: f64,
    pub conjugate_point_free: bool,
    pub conjugate_point: Option<ConjugatePoint>,
    pub minimizing: bool,
    /// Two distinct connecting geodesics were found with lengths tied
    /// within `tie_tol`.
    pub minimality_inconclusive: bool,
    /// Largest number of distinct in-domain geodesics joining a sampled pair.
    pub worst_multiplicity: usize,
    /// Largest relative excess of a non-minimal in-domain geodesic.
    pub worst_excess: f64,
    /// Conjugate points are only searched inside the domain; the margin of
    /// a larger simple extension is not certified.
    pub extension_certified: bool,
}

impl SimplicityReport {
    pub fn is_simple(&self) -> bool {
        self.boundary_convexity > 0.0 && self.conjugate_point_free && self.minimizing
    }
}

pub fn simplicity_check(field: &MetricField, samples: usize, seed: u64) -> Result<SimplicityReport> {
    simplicity_check_with(field, samples, seed, SimplicityOptions::default())
}

pub fn simplicity_check_with(field: &MetricField, samples: usize, seed: u64, opts: SimplicityOptions) -> Result<SimplicityReport> {
    if samples < 100 {
        return Err(Error::Argument(format!("simplicity check needs at least 100 samples, got {samples}")));
    }
    if !field.radius.is_finite() {
        return Err(Error::Argument("simplicity check needs a bounded domain".into()));
    }
    let n = field.dim;
    let mut convexity = f64::INFINITY;
    for b in boundary_samples(field, samples, seed) {
        convexity = convexity.min(second_fundamental_form(field, &b)?);
    }

    let mut conjugate = None;
    let mut rng = crate::util::rng(seed, 1);
    for _ in 0..opts.jacobi_geodesics {
        let (start, dir) = inward_ray(field, &mut rng);
        if let Some(c) = jacobi_sign_change(field, &start, &dir, opts.step)? {
            conjugate = Some(c);
            break;
        }
    }

    let solver = DistanceSolver::new(field, opts.distance)?;
    let mut worst_multiplicity = 0;
    let mut worst_excess = 0.0f64;
    let mut inconclusive = false;
    let mut rng = crate::util::rng(seed, 2);
    let r = field.radius;
    for _ in 0..opts.pairs {
        let (a, b) = (random_boundary(n, r, &mut rng), random_boundary(n, r, &mut rng));
        if radius_of(&a.iter().zip(&b).map(|(p, q)| p - q).collect::<Vec<_>>()) < 1e-3 * r {
            continue;
        }
        let found = solver.all_geodesics(&a, &b)?;
        let inside: Vec<_> = found.iter().filter(|g| g.max_radius <= r * (1.0 + 1e-6)).collect();
        worst_multiplicity = worst_multiplicity.max(inside.len());
        if let (Some(first), true) = (inside.first(), inside.len() > 1) {
            for g in &inside[1..] {
                let excess = g.length / first.length - 1.0;
                if excess <= opts.tie_tol {
                    inconclusive = true;
                } else {
                    worst_excess = worst_excess.max(excess);
                }
            }
        }
    }

    Ok(SimplicityReport {
        samples,
        seed,
        boundary_convexity: convexity,
        conjugate_point_free: conjugate.is_none(),
        conjugate_point: conjugate,
        minimizing: worst_excess == 0.0,
        minimality_inconclusive: inconclusive,
        worst_multiplicity,
        worst_excess,
        extension_certified: false,
    })
}

fn boundary_samples(field: &MetricField, samples: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = crate::util::rng(seed, 0);
    let offset: f64 = rng.random_range(0.0..1.0);
    match field.dim {
        2 => (0..samples)
            .map(|i| {
                let t = std::f64::consts::TAU * (i as f64 + offset) / samples as f64;
                vec![field.radius * t.cos(), field.radius * t.sin()]
            })
            .collect(),
        _ => fan(3, samples).into_iter().map(|d| d.iter().map(|c| c * field.radius).collect()).collect(),
    }
}

fn random_boundary(n: usize, r: f64, rng: &mut impl Rng) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let l = radius_of(&v);
        if l > 1e-6 {
            return v.iter().map(|c| c * r / l).collect();
        }
    }
}

/// Second fundamental form of the sphere `|x| = R` with respect to the
/// inward normal, via the defining function `f = |x|^2`:
/// `II(T, T) = Hess_g f (T, T) / |grad f|_g` on g-unit tangent vectors.
/// Returns the smallest eigenvalue over the tangent space.
pub fn second_fundamental_form(field: &MetricField, x: &[f64]) -> Result<f64> {
    let n = field.dim;
    let jet = field.jet(x)?;
    let gamma = jet.christoffel().ok_or_else(|| Error::NotPositiveDefinite { point: x.to_vec(), min_eig: 0.0 })?;
    let inv = jet.inverse().unwrap();
    let df: Vec<f64> = x.iter().map(|c| 2.0 * c).collect();
    let grad_norm = (0..n).map(|i| (0..n).map(|j| inv[i][j] * df[i] * df[j]).sum::<f64>()).sum::<f64>().sqrt();
    let mut hess: Mat3 = [[0.0; 3]; 3];
    for i in 0..n {
        for j in 0..n {
            let delta = if i == j { 2.0 } else { 0.0 };
            hess[i][j] = delta - (0..n).map(|k| gamma[k][i][j] * df[k]).sum::<f64>();
        }
    }
    let basis = tangent_basis(&jet.g, x, n);
    let k = basis.len();
    let mut form: Mat3 = [[0.0; 3]; 3];
    for a in 0..k {
        for b in 0..k {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += basis[a][i] * hess[i][j] * basis[b][j];
                }
            }
            form[a][b] = s / grad_norm;
        }
    }
    Ok(min_eigenvalue(&form, k))
}

/// g-orthonormal basis of the Euclidean tangent plane `x^perp`.
fn tangent_basis(g: &Mat3, x: &[f64], n: usize) -> Vec<Vec<f64>> {
    let mut raw: Vec<Vec<f64>> = Vec::new();
    if n == 2 {
        raw.push(vec![-x[1], x[0]]);
    } else {
        let e = if x[0].abs() < 0.9 * radius_of(x) { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let u = cross(x, &e);
        let w = cross(x, &u);
        raw.push(u);
        raw.push(w);
    }
    let ip = |a: &[f64], b: &[f64]| (0..n).map(|i| (0..n).map(|j| a[i] * g[i][j] * b[j]).sum::<f64>()).sum::<f64>();
    let mut out: Vec<Vec<f64>> = Vec::new();
    for mut v in raw {
        for q in &out {
            let c = ip(&v, q);
            for i in 0..n {
                v[i] -= c * q[i];
            }
        }
        let l = ip(&v, &v).sqrt();
        out.push(v.iter().map(|c| c / l).collect());
    }
    out
}

fn cross(a: &[f64], b: &[f64]) -> Vec<f64> {
    vec![a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Random boundary start and an inward direction spread over the open
/// half-space of directions.
fn inward_ray(field: &MetricField, rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>) {
    let n = field.dim;
    let b = random_boundary(n, field.radius, rng);
    let inward: Vec<f64> = b.iter().map(|c| -c / field.radius).collect();
    loop {
        use rand_distr::{Distribution, StandardNormal};
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let l = radius_of(&v);
        let d: Vec<f64> = v.iter().map(|c| c / l).collect();
        let cos: f64 = d.iter().zip(&inward).map(|(p, q)| p * q).sum();
        if cos > 0.05 {
            // start slightly inside so the path is interior from the first step
            let start: Vec<f64> = b.iter().map(|c| c * (1.0 - 1e-9)).collect();
            return (start, d);
        }
    }
}

/// Integrates the geodesic from `start` with g-unit initial velocity along
/// `dir`, together with neighbouring geodesics whose initial directions are
/// rotated by `+-delta` in each normal direction. The Jacobi determinant is
/// the normal part of the central-difference variation fields; a sign
/// change marks a conjugate point.
pub fn jacobi_sign_change(field: &MetricField, start: &[f64], dir: &[f64], step: f64) -> Result<Option<ConjugatePoint>> {
    let n = field.dim;
    let jet = field.jet(start)?;
    let l = jet.norm(dir);
    let v: Vec<f64> = dir.iter().map(|c| c / l).collect();
    let normals: Vec<Vec<f64>> = {
        // g-orthonormal complement of v at the start
        let mut g = [[0.0; 3]; 3];
        g[..n].copy_from_slice(&jet.g[..n]);
        let ip = |a: &[f64], b: &[f64]| (0..n).map(|i| (0..n).map(|j| a[i] * g[i][j] * b[j]).sum::<f64>()).sum::<f64>();
        let mut out: Vec<Vec<f64>> = vec![v.clone()];
        for e in 0..n {
            let mut w = vec![0.0; n];
            w[e] = 1.0;
            for q in &out {
                let c = ip(&w, q);
                for i in 0..n {
                    w[i] -= c * q[i];
                }
            }
            let len = ip(&w, &w).sqrt();
            if len > 1e-6 && out.len() < n {
                out.push(w.iter().map(|c| c / len).collect());
            }
        }
        out.split_off(1)
    };
    let delta = 1e-5;
    let mut states = vec![initial_state(&field.model, n, start, &v)?];
    for w in &normals {
        for sgn in [1.0, -1.0] {
            let u: Vec<f64> = (0..n).map(|i| v[i] + sgn * delta * w[i]).collect();
            // keep unit speed so the variation is purely normal to first order
            let s = jet.norm(&u);
            let u: Vec<f64> = u.iter().map(|c| c / s).collect();
            states.push(initial_state(&field.model, n, start, &u)?);
        }
    }
    let max_steps = (4.0 * std::f64::consts::PI * field.radius.max(1.0) / step * 50.0) as usize;
    let mut sign = 0.0f64;
    for k in 1..=max_steps {
        for s in states.iter_mut() {
            *s = rk4_step(&field.model, n, s, step)?;
        }
        let c: &State = &states[0];
        if radius_of(&c.x[..n]) > field.radius {
            return Ok(None);
        }
        let t = velocity(&field.model, n, c)?;
        let mut cols: Vec<Vec<f64>> = vec![t[..n].to_vec()];
        for j in 0..normals.len() {
            let (p, m) = (&states[1 + 2 * j], &states[2 + 2 * j]);
            cols.push((0..n).map(|i| (p.x[i] - m.x[i]) / (2.0 * delta)).collect());
        }
        let d = if n == 2 {
            cols[0][0] * cols[1][1] - cols[0][1] * cols[1][0]
        } else {
            let c1 = cross(&cols[1], &cols[2]);
            cols[0].iter().zip(&c1).map(|(a, b)| a * b).sum()
        };
        if k >= 3 {
            if sign == 0.0 {
                sign = d.signum();
            } else if d.signum() != sign && d != 0.0 {
                return Ok(Some(ConjugatePoint {
                    start: start.to_vec(),
                    direction: v,
                    arc_length: k as f64 * step,
                    point: c.x[..n].to_vec(),
                }));
            }
        }
    }
    Ok(None)
}
