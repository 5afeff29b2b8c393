//! Hamiltonian geodesic flow with a fixed-step RK4 integrator.
//!
//! State is `(x, p)` with `H = p^T g^{-1} p / 2`, so `x' = g^{-1} p` and
//! `p_k' = v^T (d_k g) v / 2` with `v = x'`.

use super::model::{Model, Vec3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub(crate) struct State {
    pub x: Vec3,
    pub p: Vec3,
}

fn rhs(model: &Model, n: usize, s: &State) -> Result<(Vec3, Vec3)> {
    let j = model.jet(&s.x, n)?;
    let inv = j.inverse().ok_or_else(|| Error::NotPositiveDefinite { point: s.x[..n].to_vec(), min_eig: 0.0 })?;
    let mut v = [0.0; 3];
    for i in 0..n {
        v[i] = (0..n).map(|k| inv[i][k] * s.p[k]).sum();
    }
    let mut dp = [0.0; 3];
    for k in 0..n {
        let mut q = 0.0;
        for a in 0..n {
            for b in 0..n {
                q += v[a] * j.dg[k][a][b] * v[b];
            }
        }
        dp[k] = 0.5 * q;
    }
    Ok((v, dp))
}

fn axpy(n: usize, s: &State, h: f64, k: &(Vec3, Vec3)) -> State {
    let mut out = *s;
    for i in 0..n {
        out.x[i] += h * k.0[i];
        out.p[i] += h * k.1[i];
    }
    out
}

pub(crate) fn rk4_step(model: &Model, n: usize, s: &State, h: f64) -> Result<State> {
    let k1 = rhs(model, n, s)?;
    let k2 = rhs(model, n, &axpy(n, s, 0.5 * h, &k1))?;
    let k3 = rhs(model, n, &axpy(n, s, 0.5 * h, &k2))?;
    let k4 = rhs(model, n, &axpy(n, s, h, &k3))?;
    let mut out = *s;
    for i in 0..n {
        out.x[i] += h / 6.0 * (k1.0[i] + 2.0 * k2.0[i] + 2.0 * k3.0[i] + k4.0[i]);
        out.p[i] += h / 6.0 * (k1.1[i] + 2.0 * k2.1[i] + 2.0 * k3.1[i] + k4.1[i]);
    }
    Ok(out)
}

pub(crate) fn initial_state(model: &Model, n: usize, x: &[f64], v: &[f64]) -> Result<State> {
    let j = model.jet(x, n)?;
    let mut s = State { x: [0.0; 3], p: [0.0; 3] };
    for i in 0..n {
        s.x[i] = x[i];
        s.p[i] = (0..n).map(|k| j.g[i][k] * v[k]).sum();
    }
    Ok(s)
}

pub(crate) fn velocity(model: &Model, n: usize, s: &State) -> Result<Vec3> {
    Ok(rhs(model, n, s)?.0)
}

/// Outcome of integrating `steps` RK4 steps over unit parameter time.
#[derive(Debug, Clone)]
pub(crate) struct Flight {
    pub end: Vec3,
    /// Largest Euclidean chart radius visited.
    pub max_radius: f64,
    pub path: Vec<Vec3>,
}

/// `exp_x(v)` with `steps` fixed steps, optionally recording the path.
/// Leaving the ball of radius `limit` aborts with a collar error.
pub(crate) fn fly(model: &Model, n: usize, x: &[f64], v: &[f64], steps: usize, limit: f64, record: bool) -> Result<Flight> {
    let mut s = initial_state(model, n, x, v)?;
    let h = 1.0 / steps as f64;
    let mut max_radius = radius(&s.x, n);
    let mut path = Vec::new();
    if record {
        path.push(s.x);
    }
    for _ in 0..steps {
        s = rk4_step(model, n, &s, h)?;
        let r = radius(&s.x, n);
        if !r.is_finite() || r > limit {
            return Err(Error::Collar(s.x[..n].to_vec()));
        }
        max_radius = max_radius.max(r);
        if record {
            path.push(s.x);
        }
    }
    Ok(Flight { end: s.x, max_radius, path })
}

pub(crate) fn radius(x: &Vec3, n: usize) -> f64 {
    x[..n].iter().map(|v| v * v).sum::<f64>().sqrt()
}
