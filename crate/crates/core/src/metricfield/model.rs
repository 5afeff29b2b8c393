//! Closed-form and sampled metric tensors with first derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

pub type Vec3 = [f64; MAX_DIM];
pub type Mat3 = [[f64; MAX_DIM]; MAX_DIM];

/// Metric tensor and its first partial derivatives at a point.
/// `dg[k][i][j]` is `d g_ij / d x_k`. Entries beyond `n` are zero.
#[derive(Debug, Clone, Copy)]
pub struct Jet {
    pub n: usize,
    pub g: Mat3,
    pub dg: [Mat3; MAX_DIM],
}

impl Jet {
    fn zero(n: usize) -> Jet {
        Jet { n, g: [[0.0; 3]; 3], dg: [[[0.0; 3]; 3]; 3] }
    }

    fn scaled_identity(n: usize, s: f64, ds: Vec3) -> Jet {
        let mut j = Jet::zero(n);
        for i in 0..n {
            j.g[i][i] = s;
            for k in 0..n {
                j.dg[k][i][i] = ds[k];
            }
        }
        j
    }

    pub fn inverse(&self) -> Option<Mat3> {
        inverse(&self.g, self.n)
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        quad(&self.g, v, self.n).max(0.0).sqrt()
    }

    /// Christoffel symbols of the second kind, `gamma[k][i][j] = Gamma^k_ij`.
    pub fn christoffel(&self) -> Option<[Mat3; MAX_DIM]> {
        let inv = self.inverse()?;
        let n = self.n;
        let mut first = [[[0.0; 3]; 3]; 3];
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    first[l][i][j] = 0.5 * (self.dg[i][l][j] + self.dg[j][l][i] - self.dg[l][i][j]);
                }
            }
        }
        let mut out = [[[0.0; 3]; 3]; 3];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    out[k][i][j] = (0..n).map(|l| inv[k][l] * first[l][i][j]).sum();
                }
            }
        }
        Some(out)
    }
}

pub fn quad(a: &Mat3, v: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += v[i] * a[i][j] * v[j];
        }
    }
    s
}

pub fn inverse(a: &Mat3, n: usize) -> Option<Mat3> {
    let mut out = [[0.0; 3]; 3];
    match n {
        1 => {
            if a[0][0] == 0.0 {
                return None;
            }
            out[0][0] = 1.0 / a[0][0];
        }
        2 => {
            let d = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            if d == 0.0 || !d.is_finite() {
                return None;
            }
            out[0][0] = a[1][1] / d;
            out[1][1] = a[0][0] / d;
            out[0][1] = -a[0][1] / d;
            out[1][0] = -a[1][0] / d;
        }
        _ => {
            let d = det(a, 3);
            if d == 0.0 || !d.is_finite() {
                return None;
            }
            for i in 0..3 {
                for j in 0..3 {
                    let (i1, i2) = ((j + 1) % 3, (j + 2) % 3);
                    let (j1, j2) = ((i + 1) % 3, (i + 2) % 3);
                    out[i][j] = (a[i1][j1] * a[i2][j2] - a[i1][j2] * a[i2][j1]) / d;
                }
            }
        }
    }
    Some(out)
}

pub fn det(a: &Mat3, n: usize) -> f64 {
    match n {
        1 => a[0][0],
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        _ => {
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        }
    }
}

/// Smallest eigenvalue of a symmetric 2x2 or 3x3 matrix.
pub fn min_eigenvalue(a: &Mat3, n: usize) -> f64 {
    match n {
        1 => a[0][0],
        2 => {
            let tr = a[0][0] + a[1][1];
            let d = ((a[0][0] - a[1][1]).powi(2) + 4.0 * a[0][1] * a[1][0]).max(0.0).sqrt();
            0.5 * (tr - d)
        }
        _ => {
            let m = nalgebra::Matrix3::from_fn(|i, j| a[i][j]);
            m.symmetric_eigenvalues().min()
        }
    }
}

/// Scalar cosine wave `amp * cos(freq . x + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    pub amp: f64,
    pub freq: Vec3,
    pub phase: f64,
}

impl Wave {
    fn eval(&self, x: &[f64], n: usize) -> (f64, Vec3) {
        let arg: f64 = (0..n).map(|i| self.freq[i] * x[i]).sum::<f64>() + self.phase;
        let (s, c) = arg.sin_cos();
        let mut d = [0.0; 3];
        for i in 0..n {
            d[i] = -self.amp * s * self.freq[i];
        }
        (self.amp * c, d)
    }
}

pub fn wave_sum(waves: &[Wave], x: &[f64], n: usize) -> (f64, Vec3) {
    let mut v = 0.0;
    let mut d = [0.0; 3];
    for w in waves {
        let (a, b) = w.eval(x, n);
        v += a;
        for i in 0..n {
            d[i] += b[i];
        }
    }
    (v, d)
}

/// Grid samples of a tensor field with tensor-product cubic
/// (Catmull–Rom) interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub lo: f64,
    pub h: f64,
    pub count: usize,
    /// Row-major `n x n` tensors, node index with the first coordinate fastest.
    pub tensors: Vec<Vec<f64>>,
}

fn catmull_rom(t: f64) -> ([f64; 4], [f64; 4]) {
    let t2 = t * t;
    let t3 = t2 * t;
    (
        [
            0.5 * (-t3 + 2.0 * t2 - t),
            0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
            0.5 * (-3.0 * t3 + 4.0 * t2 + t),
            0.5 * (t3 - t2),
        ],
        [
            0.5 * (-3.0 * t2 + 4.0 * t - 1.0),
            0.5 * (9.0 * t2 - 10.0 * t),
            0.5 * (-9.0 * t2 + 8.0 * t + 1.0),
            0.5 * (3.0 * t2 - 2.0 * t),
        ],
    )
}

impl Grid {
    pub fn sample(model: &Model, dim: usize, lo: f64, h: f64, count: usize) -> Result<Grid> {
        let total = count.pow(dim as u32);
        let mut tensors = Vec::with_capacity(total);
        for idx in 0..total {
            let x = Self::node(dim, lo, h, count, idx);
            let j = model.jet(&x, dim)?;
            tensors.push((0..dim).flat_map(|a| (0..dim).map(move |b| (a, b))).map(|(a, b)| j.g[a][b]).collect());
        }
        Ok(Grid { dim, lo, h, count, tensors })
    }

    pub fn node(dim: usize, lo: f64, h: f64, count: usize, mut idx: usize) -> Vec<f64> {
        (0..dim)
            .map(|_| {
                let i = idx % count;
                idx /= count;
                lo + h * i as f64
            })
            .collect()
    }

    fn jet(&self, x: &[f64]) -> Result<Jet> {
        let n = self.dim;
        let mut base = [0usize; 3];
        let mut w = [[0.0; 4]; 3];
        let mut dw = [[0.0; 4]; 3];
        for a in 0..n {
            let u = (x[a] - self.lo) / self.h;
            let i = u.floor();
            if !(i >= 1.0 && (i as usize) + 2 < self.count) {
                return Err(Error::Collar(x.to_vec()));
            }
            base[a] = i as usize - 1;
            let (v, d) = catmull_rom(u - i);
            w[a] = v;
            dw[a] = d.map(|e| e / self.h);
        }
        let mut jet = Jet::zero(n);
        let stencil = 4usize.pow(n as u32);
        for s in 0..stencil {
            let mut off = [0usize; 3];
            let mut rem = s;
            for a in 0..n {
                off[a] = rem % 4;
                rem /= 4;
            }
            let mut idx = 0;
            let mut stride = 1;
            for a in 0..n {
                idx += (base[a] + off[a]) * stride;
                stride *= self.count;
            }
            let weight: f64 = (0..n).map(|a| w[a][off[a]]).product();
            let mut dweight = [0.0; 3];
            for k in 0..n {
                dweight[k] = (0..n).map(|a| if a == k { dw[a][off[a]] } else { w[a][off[a]] }).product();
            }
            let t = &self.tensors[idx];
            for i in 0..n {
                for j in 0..n {
                    let v = t[i * n + j];
                    jet.g[i][j] += weight * v;
                    for k in 0..n {
                        jet.dg[k][i][j] += dweight[k] * v;
                    }
                }
            }
        }
        Ok(jet)
    }
}

/// Analytic or sampled source of the metric tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Model {
    /// Constant tensor, row-major.
    Constant { matrix: Vec<f64> },
    /// Poincare ball, `4 delta / (1 - |x|^2)^2`, curvature -1.
    Hyperbolic,
    /// Round unit sphere in the stereographic chart, `4 delta / (1 + |x|^2)^2`.
    Sphere,
    /// `exp(2 psi) g_base` with `psi` a sum of waves.
    Conformal { base: Box<Model>, waves: Vec<Wave> },
    /// `g_base + eps * s(x) * h(x)` where `s = tr(g_base) / n` and `h` has one
    /// wave sum per upper-triangular component.
    Perturbed { base: Box<Model>, eps: f64, components: Vec<Vec<Wave>> },
    Sampled(Grid),
}

impl Model {
    pub fn identity(n: usize) -> Model {
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            m[i * n + i] = 1.0;
        }
        Model::Constant { matrix: m }
    }

    /// Largest chart radius at which the model is defined (infinite for
    /// models defined everywhere).
    pub fn chart_radius(&self) -> f64 {
        match self {
            Model::Hyperbolic => 1.0,
            Model::Conformal { base, .. } | Model::Perturbed { base, .. } => base.chart_radius(),
            Model::Sampled(g) => {
                let hi = g.lo + g.h * (g.count - 1) as f64;
                (-g.lo).min(hi) - g.h
            }
            _ => f64::INFINITY,
        }
    }

    pub fn jet(&self, x: &[f64], n: usize) -> Result<Jet> {
        let r2: f64 = x[..n].iter().map(|v| v * v).sum();
        match self {
            Model::Constant { matrix } => {
                let mut j = Jet::zero(n);
                for a in 0..n {
                    for b in 0..n {
                        j.g[a][b] = matrix[a * n + b];
                    }
                }
                Ok(j)
            }
            Model::Hyperbolic => {
                let q = 1.0 - r2;
                if q <= 1e-9 {
                    return Err(Error::Collar(x.to_vec()));
                }
                let s = 4.0 / (q * q);
                let mut ds = [0.0; 3];
                for k in 0..n {
                    ds[k] = 16.0 * x[k] / (q * q * q);
                }
                Ok(Jet::scaled_identity(n, s, ds))
            }
            Model::Sphere => {
                let q = 1.0 + r2;
                let s = 4.0 / (q * q);
                let mut ds = [0.0; 3];
                for k in 0..n {
                    ds[k] = -16.0 * x[k] / (q * q * q);
                }
                Ok(Jet::scaled_identity(n, s, ds))
            }
            Model::Conformal { base, waves } => {
                let b = base.jet(x, n)?;
                let (psi, dpsi) = wave_sum(waves, x, n);
                let e = (2.0 * psi).exp();
                let mut j = Jet::zero(n);
                for a in 0..n {
                    for c in 0..n {
                        j.g[a][c] = e * b.g[a][c];
                        for k in 0..n {
                            j.dg[k][a][c] = e * (2.0 * dpsi[k] * b.g[a][c] + b.dg[k][a][c]);
                        }
                    }
                }
                Ok(j)
            }
            Model::Perturbed { base, eps, components } => {
                let b = base.jet(x, n)?;
                let s: f64 = (0..n).map(|i| b.g[i][i]).sum::<f64>() / n as f64;
                let mut ds = [0.0; 3];
                for k in 0..n {
                    ds[k] = (0..n).map(|i| b.dg[k][i][i]).sum::<f64>() / n as f64;
                }
                let mut j = b;
                let mut c = 0;
                for a in 0..n {
                    for bb in a..n {
                        let (h, dh) = wave_sum(&components[c], x, n);
                        c += 1;
                        for (p, q) in [(a, bb), (bb, a)] {
                            j.g[p][q] += eps * s * h;
                            for k in 0..n {
                                j.dg[k][p][q] += eps * (ds[k] * h + s * dh[k]);
                            }
                            if a == bb {
                                break;
                            }
                        }
                    }
                }
                Ok(j)
            }
            Model::Sampled(g) => g.jet(x),
        }
    }

    /// True when the tensor is invariant under integer translations.
    pub fn is_periodic(&self) -> bool {
        let periodic = |ws: &[Wave]| {
            ws.iter().all(|w| {
                w.freq
                    .iter()
                    .all(|f| (f / std::f64::consts::TAU - (f / std::f64::consts::TAU).round()).abs() < 1e-12)
            })
        };
        match self {
            Model::Constant { .. } => true,
            Model::Conformal { base, waves } => base.is_periodic() && periodic(waves),
            Model::Perturbed { base, components, .. } => {
                base.is_periodic() && components.iter().all(|c| periodic(c))
            }
            _ => false,
        }
    }
}

/// Seeded band-limited waves with `sum |amp| (1 + |k| + |k|^2) = 1`, so the
/// sum and its first two derivatives are bounded by one in sup norm.
pub fn band_limited_waves(n: usize, count: usize, max_freq: f64, seed: u64, stream: u64) -> Vec<Wave> {
    use rand::Rng;
    let mut rng = crate::util::rng(seed, stream);
    let mut waves: Vec<Wave> = (0..count)
        .map(|_| {
            let mut freq = [0.0; 3];
            for f in freq.iter_mut().take(n) {
                *f = rng.random_range(-max_freq..max_freq);
            }
            Wave { amp: rng.random_range(-1.0..1.0), freq, phase: rng.random_range(0.0..std::f64::consts::TAU) }
        })
        .collect();
    normalize_waves(&mut waves);
    waves
}

/// Periodic variant: integer frequencies times `2 pi`, at most `max_mode`.
pub fn periodic_waves(n: usize, count: usize, max_mode: i32, seed: u64, stream: u64) -> Vec<Wave> {
    use rand::Rng;
    let mut rng = crate::util::rng(seed, stream);
    let mut waves: Vec<Wave> = (0..count)
        .map(|_| {
            let mut freq = [0.0; 3];
            loop {
                for f in freq.iter_mut().take(n) {
                    *f = std::f64::consts::TAU * rng.random_range(-max_mode..=max_mode) as f64;
                }
                if freq.iter().any(|f| *f != 0.0) {
                    break;
                }
            }
            Wave { amp: rng.random_range(-1.0..1.0), freq, phase: rng.random_range(0.0..std::f64::consts::TAU) }
        })
        .collect();
    normalize_waves(&mut waves);
    waves
}

fn normalize_waves(waves: &mut [Wave]) {
    let total: f64 = waves
        .iter()
        .map(|w| {
            let k = w.freq.iter().map(|f| f * f).sum::<f64>().sqrt();
            w.amp.abs() * (1.0 + k + k * k)
        })
        .sum();
    if total > 0.0 {
        for w in waves.iter_mut() {
            w.amp /= total;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(model: &Model, n: usize, x: &[f64]) {
        let j = model.jet(x, n).unwrap();
        let h = 1e-6;
        for k in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[k] += h;
            xm[k] -= h;
            let gp = model.jet(&xp, n).unwrap().g;
            let gm = model.jet(&xm, n).unwrap().g;
            for a in 0..n {
                for b in 0..n {
                    let fd = (gp[a][b] - gm[a][b]) / (2.0 * h);
                    assert!((fd - j.dg[k][a][b]).abs() < 1e-6 * (1.0 + fd.abs()), "{model:?} k={k}");
                }
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let waves = band_limited_waves(2, 5, 3.0, 7, 0);
        let comps: Vec<Vec<Wave>> = (0..3).map(|c| band_limited_waves(2, 4, 3.0, 7, c + 1)).collect();
        let models = [
            Model::Hyperbolic,
            Model::Sphere,
            Model::Conformal { base: Box::new(Model::Hyperbolic), waves: waves.clone() },
            Model::Perturbed { base: Box::new(Model::Sphere), eps: 0.1, components: comps },
        ];
        for m in &models {
            fd_check(m, 2, &[0.3, -0.2]);
        }
        let comps3: Vec<Vec<Wave>> = (0..6).map(|c| band_limited_waves(3, 3, 2.0, 9, c)).collect();
        fd_check(&Model::Perturbed { base: Box::new(Model::Hyperbolic), eps: 0.2, components: comps3 }, 3, &[0.1, 0.2, -0.3]);
    }

    #[test]
    fn grid_interpolation_reproduces_smooth_fields() {
        let m = Model::Sphere;
        let g = Grid::sample(&m, 2, -1.5, 0.05, 61).unwrap();
        let s = Model::Sampled(g);
        for x in [[0.1, 0.2], [-0.7, 0.33], [0.9, -0.9]] {
            let a = m.jet(&x, 2).unwrap();
            let b = s.jet(&x, 2).unwrap();
            assert!((a.g[0][0] - b.g[0][0]).abs() < 1e-4);
            assert!((a.dg[1][0][0] - b.dg[1][0][0]).abs() < 5e-2, "{} {}", a.dg[1][0][0], b.dg[1][0][0]);
            assert!(b.g[0][1].abs() < 1e-12);
        }
        assert!(matches!(s.jet(&[1.6, 0.0], 2), Err(Error::Collar(_))));
    }

    #[test]
    fn wave_budget_bounds_derivatives() {
        let w = band_limited_waves(2, 8, 5.0, 3, 0);
        let b: f64 = w
            .iter()
            .map(|w| {
                let k = (w.freq[0].powi(2) + w.freq[1].powi(2)).sqrt();
                w.amp.abs() * (1.0 + k + k * k)
            })
            .sum();
        assert!((b - 1.0).abs() < 1e-12);
        assert!(Model::Conformal { base: Box::new(Model::identity(2)), waves: periodic_waves(2, 4, 2, 1, 0) }.is_periodic());
    }

    #[test]
    fn inverse_and_eigen() {
        let a = [[2.0, 0.5, 0.1], [0.5, 1.0, 0.2], [0.1, 0.2, 3.0]];
        let inv = inverse(&a, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| a[i][k] * inv[k][j]).sum();
                assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        let b = [[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0; 3]];
        assert!((min_eigenvalue(&b, 2) - 1.0).abs() < 1e-14);
    }
}
