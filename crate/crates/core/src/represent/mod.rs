//! Distance-preserving maps into a sampled `L^inf(S)` and the projections
//! back onto flat and hyperbolic models.
//!
//! A [`SampledSphere`] discretizes the probability measure on the unit
//! sphere `S`; functions on `S` become [`EmbeddingVector`]s with one value
//! per node. The scalar product `<u, v>_e = n sum_k w_k u_k v_k` makes the
//! image `W` of the linear map `x -> <x, s_k>` isometric to `R^n`.

mod hyperplane;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metricfield::{DistanceSolver, MetricField};
use crate::util::dot;
pub use hyperplane::{HyperplaneMap, HyperplaneOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSphere {
    /// Ambient dimension `n`; the sphere is `S^{n-1}`.
    pub n: usize,
    pub nodes: Vec<Vec<f64>>,
    /// Probability weights, summing to one.
    pub weights: Vec<f64>,
}

impl SampledSphere {
    /// `m` equally spaced nodes on the circle, starting at angle zero.
    pub fn circle(m: usize) -> Result<SampledSphere> {
        if m < 3 {
            return Err(Error::Argument("circle quadrature needs at least 3 nodes".into()));
        }
        let nodes = (0..m)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / m as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
        Ok(SampledSphere { n: 2, nodes, weights: vec![1.0 / m as f64; m] })
    }

    /// Fibonacci points on `S^2` closed under the 48 signed coordinate
    /// permutations, so second moments are exact by symmetry. The node count
    /// is the smallest multiple of 48 that is at least `m`.
    pub fn sphere(m: usize) -> Result<SampledSphere> {
        if m == 0 {
            return Err(Error::Argument("sphere quadrature needs nodes".into()));
        }
        let base = m.div_ceil(48);
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let mut nodes = Vec::with_capacity(48 * base);
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        for k in 0..base {
            // seed points in the positive octant, off the symmetry planes
            let z = (k as f64 + 0.5) / base as f64;
            let r = (1.0 - z * z).sqrt();
            let t = (golden * k as f64).rem_euclid(std::f64::consts::FRAC_PI_2).clamp(1e-3, std::f64::consts::FRAC_PI_2 - 1e-3);
            let p = [r * t.cos(), r * t.sin(), z];
            for perm in &perms {
                for signs in 0..8 {
                    let v: Vec<f64> = (0..3)
                        .map(|i| if signs & (1 << i) != 0 { -p[perm[i]] } else { p[perm[i]] })
                        .collect();
                    nodes.push(v);
                }
            }
        }
        let m = nodes.len();
        Ok(SampledSphere { n: 3, nodes, weights: vec![1.0 / m as f64; m] })
    }

    /// Rows `s_1, ..., s_n, w`; rows are renormalized to unit length and
    /// weights to unit sum.
    pub fn from_csv(text: &str) -> Result<SampledSphere> {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals: std::result::Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse::<f64>()).collect();
            let vals = match vals {
                Ok(v) => v,
                Err(_) if i == 0 => continue,
                Err(e) => return Err(Error::Parse(format!("line {}: {e}", i + 1))),
            };
            if vals.len() < 3 {
                return Err(Error::Parse(format!("line {}: expected coordinates and a weight", i + 1)));
            }
            let (s, w) = vals.split_at(vals.len() - 1);
            let l = dot(s, s).sqrt();
            if !(l > 0.0) || !(w[0] > 0.0) {
                return Err(Error::Parse(format!("line {}: zero node or nonpositive weight", i + 1)));
            }
            nodes.push(s.iter().map(|c| c / l).collect::<Vec<f64>>());
            weights.push(w[0]);
        }
        let n = nodes.first().map(|v: &Vec<f64>| v.len()).ok_or_else(|| Error::Parse("no nodes".into()))?;
        if nodes.iter().any(|v| v.len() != n) {
            return Err(Error::Parse("inconsistent node dimension".into()));
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(SampledSphere { n, nodes, weights })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (s, w) in self.nodes.iter().zip(&self.weights) {
            let cells: Vec<String> = s.iter().chain(std::iter::once(w)).map(|c| format!("{c:.17e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Unnormalized measure of the sphere, `2 pi` or `4 pi`.
    pub fn measure(&self) -> f64 {
        self.n as f64 * crate::util::unit_ball_volume(self.n)
    }

    /// Largest deviation of `n sum_k w_k s_ki s_kj` from the identity.
    pub fn moment_error(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let q: f64 = self.nodes.iter().zip(&self.weights).map(|(s, w)| w * s[i] * s[j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((n as f64 * q - target).abs());
            }
        }
        worst
    }

    /// Largest angle between any direction and its nearest node (estimated
    /// on a dense probe set).
    pub fn covering_angle(&self) -> f64 {
        let probes = crate::metricfield::fan(self.n, 4096.max(16 * self.len()));
        probes
            .iter()
            .map(|p| {
                let c = self.nodes.iter().map(|s| dot(s, p)).fold(-1.0f64, f64::max);
                c.clamp(-1.0, 1.0).acos()
            })
            .fold(0.0, f64::max)
    }
}

/// A point of the sampled `L^inf(S)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
    pub sup_norm: f64,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> EmbeddingVector {
        let sup_norm = values.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        EmbeddingVector { values, sup_norm }
    }

    pub fn zeros(m: usize) -> EmbeddingVector {
        EmbeddingVector::new(vec![0.0; m])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn add(&self, o: &EmbeddingVector) -> EmbeddingVector {
        EmbeddingVector::new(self.values.iter().zip(&o.values).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, o: &EmbeddingVector) -> EmbeddingVector {
        EmbeddingVector::new(self.values.iter().zip(&o.values).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, t: f64) -> EmbeddingVector {
        EmbeddingVector::new(self.values.iter().map(|a| t * a).collect())
    }

    pub fn add_constant(&self, c: f64) -> EmbeddingVector {
        EmbeddingVector::new(self.values.iter().map(|a| a + c).collect())
    }

    pub fn sup_distance(&self, o: &EmbeddingVector) -> f64 {
        self.values.iter().zip(&o.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Boundary distance representation: coordinate `k` is `d(x, b_k)`.
pub fn bdr_embed(field: &MetricField, x: &[f64], boundary_nodes: &[Vec<f64>]) -> Result<EmbeddingVector> {
    let solver = DistanceSolver::new(field, Default::default())?;
    bdr_embed_with(&solver, x, boundary_nodes)
}

/// As [`bdr_embed`], reusing a solver (and its warm-start graph).
pub fn bdr_embed_with(solver: &DistanceSolver<'_>, x: &[f64], boundary_nodes: &[Vec<f64>]) -> Result<EmbeddingVector> {
    let tree = solver.tree(x)?;
    let values: Result<Vec<f64>> = boundary_nodes
        .iter()
        .map(|b| solver.distance_with_tree(&tree, x, b).map(|g| g.length))
        .collect();
    Ok(EmbeddingVector::new(values?))
}

/// Flat representation `x -> (<x, s_k>)_k`.
pub fn busemann_embed_euclidean(x: &[f64], sphere: &SampledSphere) -> EmbeddingVector {
    EmbeddingVector::new(sphere.nodes.iter().map(|s| dot(s, x)).collect())
}

/// Busemann function of the ray from the origin towards the ideal point `s`
/// in the Poincare ball: `ln(|x - s|^2 / (1 - |x|^2))`.
pub fn hyperbolic_busemann(x: &[f64], s: &[f64]) -> f64 {
    let d2: f64 = x.iter().zip(s).map(|(a, b)| (a - b).powi(2)).sum();
    (d2 / (1.0 - dot(x, x))).ln()
}

pub fn busemann_embed_hyperbolic(x: &[f64], sphere: &SampledSphere) -> Result<EmbeddingVector> {
    if x.len() != sphere.n {
        return Err(Error::Dimension { expected: sphere.n, got: x.len() });
    }
    if dot(x, x) >= 1.0 {
        return Err(Error::Chart(x.to_vec()));
    }
    Ok(EmbeddingVector::new(sphere.nodes.iter().map(|s| hyperbolic_busemann(x, s)).collect()))
}

/// `<u, v>_e = n sum_k w_k u_k v_k`.
pub fn scalar_product_e(u: &EmbeddingVector, v: &EmbeddingVector, sphere: &SampledSphere) -> Result<f64> {
    if u.len() != sphere.len() || v.len() != sphere.len() {
        return Err(Error::Argument(format!(
            "node count mismatch: {} and {} against {}",
            u.len(),
            v.len(),
            sphere.len()
        )));
    }
    Ok(sphere.n as f64 * sphere.weights.iter().zip(u.values.iter().zip(&v.values)).map(|(w, (a, b))| w * a * b).sum::<f64>())
}

pub fn norm_e(u: &EmbeddingVector, sphere: &SampledSphere) -> Result<f64> {
    Ok(scalar_product_e(u, u, sphere)?.max(0.0).sqrt())
}

/// `x_i = n sum_k w_k u_k s_ki`; `<,>_e`-orthogonal projection onto `W`
/// read in flat coordinates.
pub fn project_flat(u: &EmbeddingVector, sphere: &SampledSphere) -> Vec<f64> {
    let n = sphere.n;
    let mut x = vec![0.0; n];
    for ((s, w), v) in sphere.nodes.iter().zip(&sphere.weights).zip(&u.values) {
        for i in 0..n {
            x[i] += w * v * s[i];
        }
    }
    x.iter().map(|c| c * n as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperbolicProjectionOptions {
    pub max_iterations: usize,
    pub armijo: f64,
    /// Iterates beyond this chart radius count as divergence.
    pub collar: f64,
}

impl Default for HyperbolicProjectionOptions {
    fn default() -> Self {
        HyperbolicProjectionOptions { max_iterations: 200, armijo: 1e-4, collar: 1.0 - 1e-9 }
    }
}

/// Discretized `F_phi(x) = sum_k (w_k |S|) exp(-n phi_k) exp(B_k(x))` and the
/// gradient and Hessian of `log F_phi`.
fn log_f(phi: &EmbeddingVector, sphere: &SampledSphere, x: &[f64], shift: f64) -> (f64, Vec<f64>, Vec<f64>) {
    let n = sphere.n;
    let total = sphere.measure();
    let q = 1.0 - dot(x, x);
    // exp(B_k(x)) = |x - s_k|^2 / (1 - |x|^2), with the 1/q factor pulled out
    let mut s0 = 0.0;
    let mut s1 = vec![0.0; n];
    let mut s2 = 0.0;
    for ((s, w), p) in sphere.nodes.iter().zip(&sphere.weights).zip(&phi.values) {
        let c = w * total * (-(n as f64) * (p - shift)).exp();
        let d2: f64 = x.iter().zip(s).map(|(a, b)| (a - b).powi(2)).sum();
        s0 += c * d2;
        for i in 0..n {
            s1[i] += c * 2.0 * (x[i] - s[i]);
        }
        s2 += c * 2.0;
    }
    let value = s0.ln() - q.ln() - n as f64 * shift;
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n * n];
    for i in 0..n {
        grad[i] = s1[i] / s0 + 2.0 * x[i] / q;
        for j in 0..n {
            let delta = if i == j { 1.0 } else { 0.0 };
            hess[i * n + j] = s2 * delta / s0 - s1[i] * s1[j] / (s0 * s0) + 2.0 * delta / q + 4.0 * x[i] * x[j] / (q * q);
        }
    }
    (value, grad, hess)
}

/// Minimizer of `F_phi` by damped Newton from the origin. The stopping rule
/// uses the gradient of `log F_phi`, which is unchanged when a constant is
/// added to `phi`.
pub fn project_hyperbolic(phi: &EmbeddingVector, sphere: &SampledSphere, tol: f64) -> Result<Vec<f64>> {
    project_hyperbolic_with(phi, sphere, tol, HyperbolicProjectionOptions::default())
}

pub fn project_hyperbolic_with(phi: &EmbeddingVector, sphere: &SampledSphere, tol: f64, opts: HyperbolicProjectionOptions) -> Result<Vec<f64>> {
    if !(tol > 0.0) {
        return Err(Error::Argument("tolerance must be positive".into()));
    }
    if phi.len() != sphere.len() || phi.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("phi must be finite with one value per node".into()));
    }
    let n = sphere.n;
    // constant offset keeping exp(-n phi) in range
    let shift = phi.values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut x = vec![0.0; n];
    let (mut val, mut grad, mut hess) = log_f(phi, sphere, &x, shift);
    for _ in 0..opts.max_iterations {
        if dot(&grad, &grad).sqrt() <= tol {
            return Ok(x);
        }
        // shift the Hessian until it is positive definite
        let mut mu = 0.0;
        let dir = loop {
            let mut h = hess.clone();
            for i in 0..n {
                h[i * n + i] += mu;
            }
            let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
            if let Some(chol) = nalgebra::DMatrix::from_row_slice(n, n, &h).cholesky() {
                let d = chol.solve(&nalgebra::DVector::from_column_slice(&neg));
                break d.iter().copied().collect::<Vec<f64>>();
            }
            mu = if mu == 0.0 { 1e-8 * (1.0 + hess.iter().map(|v| v.abs()).fold(0.0, f64::max)) } else { 10.0 * mu };
        };
        let slope = dot(&grad, &dir);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            if dot(&cand, &cand).sqrt() < opts.collar {
                let (v, g, h) = log_f(phi, sphere, &cand, shift);
                let gn = dot(&g, &g).sqrt();
                // near convergence value changes drop below round-off; a full
                // step that shrinks the gradient is then accepted as well
                let flat = t == 1.0 && gn < dot(&grad, &grad).sqrt() && v <= val + 1e-13 * val.abs().max(1.0);
                if v.is_finite() && (v <= val + opts.armijo * t * slope || flat) {
                    x = cand;
                    val = v;
                    grad = g;
                    hess = h;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            if dot(&grad, &grad).sqrt() <= tol.max(1e-12) {
                return Ok(x);
            }
            return Err(Error::Divergence(x));
        }
    }
    if dot(&grad, &grad).sqrt() <= tol {
        Ok(x)
    } else {
        Err(Error::Divergence(x))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JacobianSample {
    /// Distance of the sample from the origin, `||u||_e`.
    pub radius: f64,
    pub jacobian: f64,
    /// `||u - P(u)||_e^2` with `P` the orthogonal projection onto `W`.
    pub residual2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JacobianFitReport {
    pub lambda: f64,
    pub samples: Vec<JacobianSample>,
    /// Largest `c` with `J <= 1 - c ||u - P(u)||_e^2` on every sample.
    pub fitted_c: f64,
    pub violations: usize,
    pub fd_tolerance: f64,
}

/// Shrinking retraction `P_lambda(u) = Pi(u) / (1 + lambda ||u - Pi(u)||_e^2)`
/// onto `W`, read in flat coordinates.
pub fn shrink_projection(u: &[f64], sphere: &SampledSphere, lambda: f64) -> Vec<f64> {
    let ev = EmbeddingVector::new(u.to_vec());
    let x = project_flat(&ev, sphere);
    let back = busemann_embed_euclidean(&x, sphere);
    let r2 = norm_e(&ev.sub(&back), sphere).unwrap().powi(2);
    x.iter().map(|c| c / (1.0 + lambda * r2)).collect()
}

/// Random samples of `J_n P_lambda` across the `<,>_e`-ball of the given
/// radius, with `lambda = n / (4 radius^2)`.
///
/// The maximal `n`-Jacobian is `sqrt(det(D D^T))` with `D` the central
/// difference derivative in a `<,>_e`-orthonormal basis of `R^m`.
pub fn jacobian_bound_probe(sphere: &SampledSphere, samples: usize, radius: f64, seed: u64) -> Result<JacobianFitReport> {
    if samples < 10 {
        return Err(Error::Argument("jacobian probe needs at least 10 samples".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::Argument("probe radius must be positive".into()));
    }
    let lambda = sphere.n as f64 / (4.0 * radius * radius);
    let fd_tolerance = 1e-7;
    let rows: Vec<JacobianSample> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            use rand::Rng;
            use rand_distr::{Distribution, StandardNormal};
            let mut rng = crate::util::rng(seed, i);
            let m = sphere.len();
            let mut u: Vec<f64> = (0..m)
                .map(|k| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z / (sphere.n as f64 * sphere.weights[k]).sqrt()
                })
                .collect();
            let l = norm_e(&EmbeddingVector::new(u.clone()), sphere).unwrap();
            let r = radius * rng.random_range(0.0..1.0f64);
            u.iter_mut().for_each(|c| *c *= r / l);
            probe_sample(sphere, &u, lambda)
        })
        .collect();
    Ok(fit_report(lambda, rows, fd_tolerance))
}

pub fn probe_sample(sphere: &SampledSphere, u: &[f64], lambda: f64) -> JacobianSample {
    let n = sphere.n;
    let m = sphere.len();
    let ev = EmbeddingVector::new(u.to_vec());
    let x = project_flat(&ev, sphere);
    let residual2 = norm_e(&ev.sub(&busemann_embed_euclidean(&x, sphere)), sphere).unwrap().powi(2);
    let scale = 1.0 + norm_e(&ev, sphere).unwrap();
    let h = 1e-5 * scale;
    let mut d = vec![0.0; n * m];
    let mut up = u.to_vec();
    for k in 0..m {
        let e = h / (n as f64 * sphere.weights[k]).sqrt();
        let orig = up[k];
        up[k] = orig + e;
        let p = shrink_projection(&up, sphere, lambda);
        up[k] = orig - e;
        let q = shrink_projection(&up, sphere, lambda);
        up[k] = orig;
        for i in 0..n {
            d[i * m + k] = (p[i] - q[i]) / (2.0 * h);
        }
    }
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            gram[i * n + j] = (0..m).map(|k| d[i * m + k] * d[j * m + k]).sum();
        }
    }
    let jacobian = crate::util::det_small(&gram, n).max(0.0).sqrt();
    JacobianSample { radius: norm_e(&ev, sphere).unwrap(), jacobian, residual2 }
}

pub fn fit_report(lambda: f64, samples: Vec<JacobianSample>, fd_tolerance: f64) -> JacobianFitReport {
    let violations = samples.iter().filter(|s| s.jacobian > 1.0 + fd_tolerance).count();
    let fitted_c = samples
        .iter()
        .filter(|s| s.residual2 > 1e-12)
        .map(|s| (1.0 - s.jacobian) / s.residual2)
        .fold(f64::INFINITY, f64::min);
    JacobianFitReport { lambda, samples, fitted_c, violations, fd_tolerance }
}

/// One CSV row per point: its coordinates followed by the `m` values.
pub fn embeddings_to_csv(points: &[Vec<f64>], vectors: &[EmbeddingVector]) -> String {
    let n = points.first().map(|p| p.len()).unwrap_or(0);
    let m = vectors.first().map(|v| v.len()).unwrap_or(0);
    let mut header: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    header.extend((0..m).map(|k| format!("v{k}")));
    let mut out = header.join(",");
    out.push('\n');
    for (p, v) in points.iter().zip(vectors) {
        let cells: Vec<String> = p.iter().chain(&v.values).map(|c| format!("{c:.12e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
