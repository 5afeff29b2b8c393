//! Maximum-volume inscribed ellipsoid of a symmetric polytope.
//!
//! For `B = {x : |a_k . x| <= 1}` the John ellipsoid is the polar of the
//! minimum-volume ellipsoid enclosing `{+-a_k}`. We run the Khachiyan
//! fixed-point iteration with Todd–Yildirim away steps on the design
//! weights `u` (the dual multipliers, `sum u = 1`), with
//! `M(u) = sum u_k a_k a_k^T` and `w_k = a_k^T M^{-1} a_k`.
//!
//! Weak duality bounds the log-determinant gap by `n ln(max_k w_k / n)`;
//! iteration stops once that certificate drops below the tolerance.
//! Weights are first taken from a log-barrier Newton solve of the primal
//! problem (maximize `log det A` subject to `a_k^T A a_k <= 1`), which
//! handles near-round polytopes where the fixed-point iteration crawls. The
//! returned ellipsoid `{x : x^T Q x <= 1}` uses `Q = max_k(w_k) M(u)`, which
//! is always inscribed in `B`.

use nalgebra::{DMatrix, DVector, SMatrix, SVector};

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 10_000;

/// Result of the solver: row-major shape matrix and the final certificate.
#[derive(Debug, Clone)]
pub struct JohnSolution {
    pub shape: Vec<f64>,
    pub gap: f64,
    pub iterations: usize,
}

pub fn solve(rows: &[Vec<f64>], dim: usize, tol: f64) -> Result<JohnSolution> {
    match dim {
        1 => {
            let a = rows.iter().fold(0.0f64, |s, r| s.max(r[0].abs()));
            Ok(JohnSolution { shape: vec![a * a], gap: 0.0, iterations: 0 })
        }
        2 => solve_fixed::<2>(rows, tol),
        3 => solve_fixed::<3>(rows, tol),
        4 => solve_fixed::<4>(rows, tol),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

pub fn solve_2d(rows: &[[f64; 2]], tol: f64) -> Result<JohnSolution> {
    let pts: Vec<SVector<f64, 2>> = rows.iter().map(|r| SVector::<f64, 2>::new(r[0], r[1])).collect();
    if pts.len() >= 2 {
        if let Some(sol) = planar_active_set(&pts, tol) {
            return Ok(sol);
        }
    }
    solve_points(&pts, tol)
}

/// Exact planar solve on working sets. The optimal design is supported on
/// two or three of the points, the ellipse through a support follows from
/// a linear solve, and a support is optimal when its weights are
/// nonnegative and the ellipse contains the rest.
fn planar_active_set(pts: &[SVector<f64, 2>], tol: f64) -> Option<JohnSolution> {
    let far = (0..pts.len()).max_by(|&a, &b| pts[a].norm_squared().total_cmp(&pts[b].norm_squared()))?;
    let dir = pts[far].normalize();
    let perp = |p: &SVector<f64, 2>| (p[0] * dir[1] - p[1] * dir[0]).abs();
    let second = (0..pts.len()).max_by(|&a, &b| perp(&pts[a]).total_cmp(&perp(&pts[b])))?;
    if !(perp(&pts[second]) > 0.0) {
        return None;
    }
    let mut set = vec![far, second];
    for _ in 0..32 {
        let sub: Vec<SVector<f64, 2>> = set.iter().map(|&k| pts[k]).collect();
        let a = small_enclosing(&sub)?;
        // M = A^{-1} / 2, so w_k = 2 x^T A x
        let w: Vec<f64> = pts.iter().map(|p| 2.0 * (p.transpose() * a * p)[0]).collect();
        let wmax = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let gap = 2.0 * (wmax / 2.0).max(1.0).ln();
        if gap <= tol {
            let m = a.try_inverse()? * 0.5;
            return Some(JohnSolution { shape: row_major(&(m * wmax)), gap, iterations: set.len() });
        }
        let mut order: Vec<usize> = (0..pts.len()).filter(|k| !set.contains(k)).collect();
        order.sort_by(|x, y| w[*y].total_cmp(&w[*x]));
        set.extend(order.into_iter().take(2).filter(|&k| w[k] > 2.0));
        if set.len() > 24 {
            return None;
        }
    }
    None
}

/// Minimum-area centered ellipse `{y : y^T A y <= 1}` enclosing a small
/// symmetric point set, by enumerating two- and three-point supports.
fn small_enclosing(pts: &[SVector<f64, 2>]) -> Option<SMatrix<f64, 2, 2>> {
    let slack = 1e-12;
    let contains = |a: &SMatrix<f64, 2, 2>| pts.iter().all(|p| (p.transpose() * a * p)[0] <= 1.0 + slack);
    let mut best: Option<(f64, SMatrix<f64, 2, 2>)> = None;
    let mut offer = |a: SMatrix<f64, 2, 2>| {
        let det = a.determinant();
        if a[(0, 0)] > 0.0 && det > 0.0 && contains(&a) && best.is_none_or(|(d, _)| det > d) {
            best = Some((det, a));
        }
    };
    let k = pts.len();
    for i in 0..k {
        for j in i + 1..k {
            let m = (pts[i] * pts[i].transpose() + pts[j] * pts[j].transpose()) * 0.5;
            if let Some(inv) = m.try_inverse() {
                offer(inv * 0.5);
            }
        }
    }
    for i in 0..k {
        for j in i + 1..k {
            for l in j + 1..k {
                let tri = [pts[i], pts[j], pts[l]];
                let rows = SMatrix::<f64, 3, 3>::from_fn(|r, c| {
                    let p = tri[r];
                    [p[0] * p[0], 2.0 * p[0] * p[1], p[1] * p[1]][c]
                });
                let Some(coef) = rows.lu().solve(&SVector::<f64, 3>::repeat(1.0)) else { continue };
                let a = SMatrix::<f64, 2, 2>::new(coef[0], coef[1], coef[1], coef[2]);
                let Some(inv) = a.try_inverse() else { continue };
                // weights with sum_i u_i x_i x_i^T = A^{-1} / 2
                let design = SMatrix::<f64, 3, 3>::from_fn(|r, c| {
                    let p = tri[c];
                    [p[0] * p[0], p[0] * p[1], p[1] * p[1]][r]
                });
                let target = SVector::<f64, 3>::new(inv[(0, 0)], inv[(0, 1)], inv[(1, 1)]) * 0.5;
                let Some(u) = design.lu().solve(&target) else { continue };
                if u.iter().all(|v| *v >= -1e-12) {
                    offer(a);
                }
            }
        }
    }
    best.map(|(_, a)| a)
}

fn solve_fixed<const D: usize>(rows: &[Vec<f64>], tol: f64) -> Result<JohnSolution> {
    let pts: Vec<SVector<f64, D>> = rows
        .iter()
        .filter(|r| r.iter().any(|v| *v != 0.0))
        .map(|r| SVector::<f64, D>::from_column_slice(r))
        .collect();
    solve_points(&pts, tol)
}

fn solve_points<const D: usize>(pts: &[SVector<f64, D>], tol: f64) -> Result<JohnSolution> {
    if pts.is_empty() {
        return Err(Error::UnboundedBall { rank: 0, dim: D });
    }
    if pts.len() <= SMALL {
        let start = barrier_weights(pts, 0.1 * tol);
        return khachiyan(pts, tol, start).map(|(sol, _)| sol);
    }
    active_set(pts, tol)
}

/// Working sets up to this size are solved directly.
const SMALL: usize = 16;

/// Solves on a small working set, certifies against every point and adds
/// the worst violators until the global certificate holds. Points outside
/// the working set carry zero weight, so the certificate is the same
/// weak-duality bound as for the full problem.
fn active_set<const D: usize>(pts: &[SVector<f64, D>], tol: f64) -> Result<JohnSolution> {
    let n = D as f64;
    let mut set: Vec<usize> = Vec::new();
    // seed with a spanning set: farthest point, then farthest from the span
    for _ in 0..D {
        let basis = orthonormal(&set.iter().map(|&j| pts[j]).collect::<Vec<_>>());
        let mut best = (0usize, -1.0f64);
        for (k, p) in pts.iter().enumerate() {
            let mut r = *p;
            for b in &basis {
                r -= b * b.dot(&r);
            }
            let d = r.norm_squared();
            if d > best.1 && !set.contains(&k) {
                best = (k, d);
            }
        }
        if best.1 <= 0.0 {
            return Err(Error::UnboundedBall { rank: set.len(), dim: D });
        }
        set.push(best.0);
    }
    let mut total_iterations = 0;
    let mut prev: Option<Vec<f64>> = None;
    for _ in 0..64 {
        let sub: Vec<SVector<f64, D>> = set.iter().map(|&k| pts[k]).collect();
        // warm start from the previous weights, new points entering at a small weight
        let start = prev.take().map(|mut u: Vec<f64>| {
            u.resize(sub.len(), 0.01);
            let total: f64 = u.iter().sum();
            u.iter().map(|v| v / total).collect()
        });
        let (sol, u) = match khachiyan(&sub, 0.5 * tol, start) {
            Ok(r) => r,
            Err(Error::Convergence { .. }) => break,
            Err(e) => return Err(e),
        };
        total_iterations += sol.iterations;
        prev = Some(u.clone());
        let mut mm = SMatrix::<f64, D, D>::zeros();
        for (p, uk) in sub.iter().zip(&u) {
            mm += p * p.transpose() * *uk;
        }
        let inv = match mm.try_inverse() {
            Some(i) => i,
            None => break,
        };
        let w: Vec<f64> = pts.iter().map(|p| (p.transpose() * inv * p)[0]).collect();
        let wmax = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let gap = n * (wmax / n).max(1.0).ln();
        if gap <= tol {
            return Ok(JohnSolution { shape: row_major(&(mm * wmax)), gap, iterations: total_iterations });
        }
        let mut order: Vec<usize> = (0..pts.len()).filter(|k| !set.contains(k)).collect();
        order.sort_by(|a, b| w[*b].total_cmp(&w[*a]));
        let added: Vec<usize> = order.into_iter().take(3).filter(|&k| w[k] > n).collect();
        if added.is_empty() {
            break;
        }
        set.extend(added);
    }
    let start = barrier_weights(pts, 0.1 * tol);
    khachiyan(pts, tol, start).map(|(sol, _)| sol)
}

fn orthonormal<const D: usize>(vs: &[SVector<f64, D>]) -> Vec<SVector<f64, D>> {
    let mut out: Vec<SVector<f64, D>> = Vec::new();
    for v in vs {
        let mut r = *v;
        for b in &out {
            r -= b * b.dot(&r);
        }
        let len = r.norm();
        if len > 0.0 {
            out.push(r / len);
        }
    }
    out
}

/// Symmetric basis `E_ii`, `E_ij + E_ji` of `D x D` matrices.
fn sym_basis<const D: usize>() -> Vec<SMatrix<f64, D, D>> {
    let mut out = Vec::new();
    for i in 0..D {
        for j in i..D {
            let mut e = SMatrix::<f64, D, D>::zeros();
            e[(i, j)] = 1.0;
            e[(j, i)] = 1.0;
            out.push(e);
        }
    }
    out
}

/// Central-path weights `1 / (t c_k)` from a barrier method on the shape
/// of the enclosing ellipsoid `{y : y^T A y <= 1}` of the points.
fn barrier_weights<const D: usize>(pts: &[SVector<f64, D>], tol: f64) -> Option<Vec<f64>> {
    let basis = sym_basis::<D>();
    let p = basis.len();
    let rmax = pts.iter().map(|x| x.norm_squared()).fold(0.0f64, f64::max);
    if !(rmax > 0.0) {
        return None;
    }
    let mut a = SMatrix::<f64, D, D>::identity() / (2.0 * rmax);
    // per-point features x^T E_k x
    let feats: Vec<Vec<f64>> =
        pts.iter().map(|x| basis.iter().map(|e| (x.transpose() * e * x)[0]).collect()).collect();
    let slack = |a: &SMatrix<f64, D, D>| -> Option<Vec<f64>> {
        let c: Vec<f64> = pts.iter().map(|x| 1.0 - (x.transpose() * a * x)[0]).collect();
        if c.iter().all(|v| *v > 0.0) { Some(c) } else { None }
    };
    let objective = |a: &SMatrix<f64, D, D>, c: &[f64], t: f64| -> f64 {
        let logdet: f64 = match a.cholesky() {
            Some(ch) => ch.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum(),
            None => return f64::INFINITY,
        };
        -t * logdet - c.iter().map(|v| v.ln()).sum::<f64>()
    };
    let m = pts.len() as f64;
    let mut t = 1.0;
    let target = m / (0.1 * tol.max(1e-14));
    loop {
        for _ in 0..60 {
            let c = slack(&a)?;
            let ainv = a.try_inverse()?;
            let mut g = DVector::<f64>::zeros(p);
            let mut h = DMatrix::<f64>::zeros(p, p);
            for k in 0..p {
                let ak = ainv * basis[k];
                g[k] = -t * ak.trace();
                for l in k..p {
                    let v = t * (ak * ainv * basis[l]).trace();
                    h[(k, l)] += v;
                }
            }
            for (f, ci) in feats.iter().zip(&c) {
                for k in 0..p {
                    g[k] += f[k] / ci;
                    for l in k..p {
                        h[(k, l)] += f[k] * f[l] / (ci * ci);
                    }
                }
            }
            for k in 0..p {
                for l in 0..k {
                    h[(k, l)] = h[(l, k)];
                }
            }
            let step = h.cholesky()?.solve(&(-&g));
            let decrement = -g.dot(&step);
            if decrement < 1e-12 {
                break;
            }
            let f0 = objective(&a, &c, t);
            let mut s = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let mut cand = a;
                for k in 0..p {
                    cand += basis[k] * (s * step[k]);
                }
                if cand.cholesky().is_some() {
                    if let Some(cc) = slack(&cand) {
                        if objective(&cand, &cc, t) <= f0 - 0.25 * s * decrement {
                            a = cand;
                            moved = true;
                            break;
                        }
                    }
                }
                s *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if t >= target {
            break;
        }
        t = (t * 10.0).min(target);
    }
    let c = slack(&a)?;
    let u: Vec<f64> = c.iter().map(|ci| 1.0 / (t * ci)).collect();
    let total: f64 = u.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return None;
    }
    Some(u.iter().map(|v| v / total).collect())
}

fn khachiyan<const D: usize>(
    pts: &[SVector<f64, D>],
    tol: f64,
    start: Option<Vec<f64>>,
) -> Result<(JohnSolution, Vec<f64>)> {
    let m = pts.len();
    let n = D as f64;
    let mut u = start.unwrap_or_else(|| vec![1.0 / m as f64; m]);
    let mut w = vec![0.0; m];
    let moment = |u: &[f64]| {
        let mut mm = SMatrix::<f64, D, D>::zeros();
        for (p, &uk) in pts.iter().zip(u) {
            if uk > 0.0 {
                mm += p * p.transpose() * uk;
            }
        }
        mm
    };
    let mut mm = moment(&u);
    let mut last_gap = f64::INFINITY;
    for it in 0..MAX_ITERATIONS {
        let inv = match mm.try_inverse() {
            Some(i) => i,
            None => return Err(Error::UnboundedBall { rank: D - 1, dim: D }),
        };
        let (mut jmax, mut wmax) = (0, f64::NEG_INFINITY);
        let (mut jmin, mut wmin) = (usize::MAX, f64::INFINITY);
        for (k, p) in pts.iter().enumerate() {
            let wk = (p.transpose() * inv * p)[0];
            w[k] = wk;
            if wk > wmax {
                wmax = wk;
                jmax = k;
            }
            if u[k] > 0.0 && wk < wmin {
                wmin = wk;
                jmin = k;
            }
        }
        let gap = n * (wmax / n).max(1.0).ln();
        last_gap = gap;
        if gap <= tol {
            let q = mm * wmax;
            return Ok((JohnSolution { shape: row_major(&q), gap, iterations: it }, u));
        }
        let up = wmax / n - 1.0;
        let down = 1.0 - wmin / n;
        if up >= down || jmin == usize::MAX || wmin <= 1.0 {
            let lambda = (wmax - n) / (n * (wmax - 1.0));
            for uk in u.iter_mut() {
                *uk *= 1.0 - lambda;
            }
            u[jmax] += lambda;
            mm = mm * (1.0 - lambda) + pts[jmax] * pts[jmax].transpose() * lambda;
        } else {
            // away step, clipped so the weight stays nonnegative
            let floor = -u[jmin] / (1.0 - u[jmin]);
            let lambda = ((wmin - n) / (n * (wmin - 1.0))).max(floor);
            for uk in u.iter_mut() {
                *uk *= 1.0 - lambda;
            }
            u[jmin] += lambda;
            if lambda == floor {
                u[jmin] = 0.0;
            }
            mm = mm * (1.0 - lambda) + pts[jmin] * pts[jmin].transpose() * lambda;
        }
        // rank-one updates drift; refresh periodically
        if it % 64 == 63 {
            mm = moment(&u);
        }
    }
    let inv = mm.try_inverse().unwrap_or_else(SMatrix::identity);
    let wmax = pts
        .iter()
        .map(|p| (p.transpose() * inv * p)[0])
        .fold(f64::NEG_INFINITY, f64::max);
    Err(Error::Convergence {
        iterations: MAX_ITERATIONS,
        gap: last_gap,
        last_shape: row_major(&(mm * wmax)),
    })
}

fn row_major<const D: usize>(q: &SMatrix<f64, D, D>) -> Vec<f64> {
    let mut out = Vec::with_capacity(D * D);
    for i in 0..D {
        for j in 0..D {
            out.push(q[(i, j)]);
        }
    }
    out
}
