//! Exact volumes of centrally symmetric polytopes in dimension <= 4.
//!
//! Balls are stored in the facet form `{x : |a_k . x| <= 1}`. In the plane
//! everything goes through the convex hull of `{+-a_k}` (the polar body);
//! higher dimensions use vertex enumeration plus Lasserre's recursion
//! `vol_d(P) = (1/d) sum_i h_i vol_{d-1}(F_i)`.

use crate::util::{dot, norm2, solve_small};

const EPS: f64 = 1e-12;

/// Counter-clockwise convex hull (Andrew's monotone chain), collinear points dropped.
pub fn hull_2d(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup_by(|a, b| (a[0] - b[0]).abs() < 1e-15 && (a[1] - b[1]).abs() < 1e-15);
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let scale = pts
        .iter()
        .fold(0.0f64, |s, p| s.max(p[0].abs()).max(p[1].abs()));
    let tol = 1e-14 * scale * scale;
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(pts.len() + 1);
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= tol {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= tol {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Shoelace area of a simple polygon given counter-clockwise.
pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        s += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * s
}

/// Planar symmetric polytope reduced to its irredundant description.
#[derive(Debug, Clone)]
pub struct Polygon2 {
    /// Vertices of the polar body `conv{+-a_k}`, counter-clockwise; these are
    /// exactly the irredundant facet covectors of the ball.
    pub polar: Vec<[f64; 2]>,
    /// Vertices of the ball, counter-clockwise.
    pub ball: Vec<[f64; 2]>,
}

impl Polygon2 {
    /// Returns `None` when the covectors do not span the plane.
    pub fn from_facets(rows: &[[f64; 2]]) -> Option<Polygon2> {
        let mut pts = Vec::with_capacity(2 * rows.len());
        for r in rows {
            if r[0] != 0.0 || r[1] != 0.0 {
                pts.push(*r);
                pts.push([-r[0], -r[1]]);
            }
        }
        let polar = hull_2d(&pts);
        if polar.len() < 3 || polygon_area(&polar) <= 0.0 {
            return None;
        }
        let n = polar.len();
        let mut ball = Vec::with_capacity(n);
        for i in 0..n {
            let p = polar[i];
            let q = polar[(i + 1) % n];
            let det = p[0] * q[1] - p[1] * q[0];
            if det.abs() < 1e-300 {
                return None;
            }
            // p.v = 1 and q.v = 1
            ball.push([(q[1] - p[1]) / det, (p[0] - q[0]) / det]);
        }
        Some(Polygon2 { polar, ball })
    }

    pub fn ball_area(&self) -> f64 {
        polygon_area(&self.ball)
    }

    pub fn polar_area(&self) -> f64 {
        polygon_area(&self.polar)
    }

    /// Largest `|det(b1, b2)|` over `b_i` in the polar body.
    pub fn max_polar_det(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, a) in self.polar.iter().enumerate() {
            for b in &self.polar[i + 1..] {
                best = best.max((a[0] * b[1] - a[1] * b[0]).abs());
            }
        }
        best
    }
}

/// Vertices of `{x : |a_k . x| <= 1}` for facet rows in `R^dim`.
pub fn ball_vertices(rows: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let rows: Vec<&Vec<f64>> = rows.iter().filter(|r| norm2(r) > EPS).collect();
    let m = rows.len();
    let mut out: Vec<Vec<f64>> = Vec::new();
    if m < dim {
        return out;
    }
    let mut idx: Vec<usize> = (0..dim).collect();
    let mut a = vec![0.0; dim * dim];
    loop {
        for (r, &k) in idx.iter().enumerate() {
            a[r * dim..(r + 1) * dim].copy_from_slice(rows[k]);
        }
        // first sign fixed, the negated vertex is added explicitly
        for mask in 0..(1usize << (dim - 1)) {
            let rhs: Vec<f64> = (0..dim)
                .map(|r| if r > 0 && mask & (1 << (r - 1)) != 0 { -1.0 } else { 1.0 })
                .collect();
            if let Some(x) = solve_small(&a, &rhs, dim) {
                let feasible = rows.iter().all(|r| dot(r, &x).abs() <= 1.0 + 1e-9);
                if feasible {
                    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
                    for v in [x, neg] {
                        let dup = out.iter().any(|w| {
                            w.iter().zip(&v).all(|(p, q)| (p - q).abs() <= 1e-9 * (1.0 + q.abs()))
                        });
                        if !dup {
                            out.push(v);
                        }
                    }
                }
            }
        }
        // next combination
        let mut i = dim;
        while i > 0 && idx[i - 1] == i - 1 + m - dim {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..dim {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Volume of the bounded polyhedron `{x : a_i . x <= b_i}` by Lasserre's recursion.
pub fn halfspace_volume(cons: &[(Vec<f64>, f64)], dim: usize) -> f64 {
    let normalized = match normalize(cons) {
        Some(c) => c,
        None => return 0.0,
    };
    lasserre(&normalized, dim)
}

fn normalize(cons: &[(Vec<f64>, f64)]) -> Option<Vec<(Vec<f64>, f64)>> {
    let mut out: Vec<(Vec<f64>, f64)> = Vec::with_capacity(cons.len());
    for (a, b) in cons {
        let n = norm2(a);
        if n < 1e-11 {
            if *b < -1e-11 {
                return None;
            }
            continue;
        }
        let a: Vec<f64> = a.iter().map(|v| v / n).collect();
        let b = b / n;
        let dup = out.iter().any(|(c, d)| {
            (d - b).abs() < 1e-10 && c.iter().zip(&a).all(|(p, q)| (p - q).abs() < 1e-10)
        });
        if !dup {
            out.push((a, b));
        }
    }
    Some(out)
}

fn lasserre(cons: &[(Vec<f64>, f64)], dim: usize) -> f64 {
    if dim == 1 {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (a, b) in cons {
            if a[0] > 0.0 {
                hi = hi.min(b / a[0]);
            } else {
                lo = lo.max(b / a[0]);
            }
        }
        return (hi - lo).max(0.0);
    }
    let mut total = 0.0;
    for (i, (ai, bi)) in cons.iter().enumerate() {
        if bi.abs() < 1e-300 {
            continue;
        }
        let basis = orthonormal_complement(ai);
        let x0: Vec<f64> = ai.iter().map(|v| v * bi).collect();
        let mut sub: Vec<(Vec<f64>, f64)> = Vec::with_capacity(cons.len() - 1);
        for (j, (aj, bj)) in cons.iter().enumerate() {
            if j == i {
                continue;
            }
            let proj: Vec<f64> = basis.iter().map(|u| dot(u, aj)).collect();
            sub.push((proj, bj - dot(aj, &x0)));
        }
        let facet = match normalize(&sub) {
            Some(c) => lasserre(&c, dim - 1),
            None => 0.0,
        };
        total += bi * facet;
    }
    total / dim as f64
}

/// Orthonormal basis of the hyperplane orthogonal to the unit vector `a`.
fn orthonormal_complement(a: &[f64]) -> Vec<Vec<f64>> {
    let d = a.len();
    let skip = (0..d)
        .max_by(|&i, &j| a[i].abs().total_cmp(&a[j].abs()))
        .unwrap();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d - 1);
    for e in (0..d).filter(|&e| e != skip) {
        let mut v = vec![0.0; d];
        v[e] = 1.0;
        let c = dot(&v, a);
        for k in 0..d {
            v[k] -= c * a[k];
        }
        for u in &basis {
            let c = dot(&v, u);
            for k in 0..d {
                v[k] -= c * u[k];
            }
        }
        let n = norm2(&v);
        for x in v.iter_mut() {
            *x /= n;
        }
        basis.push(v);
    }
    basis
}

/// Volume of `{x : |a_k . x| <= 1}`.
pub fn symmetric_ball_volume(rows: &[Vec<f64>], dim: usize) -> f64 {
    let mut cons = Vec::with_capacity(2 * rows.len());
    for r in rows {
        cons.push((r.clone(), 1.0));
        cons.push((r.iter().map(|v| -v).collect(), 1.0));
    }
    halfspace_volume(&cons, dim)
}

/// Volume of `conv{+-a_k}` via the vertex description of its polar.
pub fn symmetric_polar_volume(rows: &[Vec<f64>], dim: usize) -> f64 {
    let verts = ball_vertices(rows, dim);
    let cons: Vec<(Vec<f64>, f64)> = verts.into_iter().map(|v| (v, 1.0)).collect();
    halfspace_volume(&cons, dim)
}
