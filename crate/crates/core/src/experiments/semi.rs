//! Subadditivity of the Holmes–Thompson 2-density on simple bivectors of a
//! normed `R^4`.
//!
//! For a simple bivector `a ^ b` the density `sigma(a ^ b)` is the
//! Holmes–Thompson density of the norm restricted to `span(a, b)` in the
//! coordinates given by `(a, b)`, i.e. the Holmes–Thompson area of the
//! parallelogram. A convex extension to all of `Lambda^2` exists only if
//! `sigma(xi) <= sum sigma(eta_i)` whenever `xi = sum eta_i` with all terms
//! simple.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{trial_seed, ExperimentReport, Verdict};
use crate::error::{Error, Result};
use crate::normspace::{volume_density, DensityDef, Norm, NormJson};
use crate::util::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemiMode {
    /// Test the given norm.
    Control,
    /// Test seeded random polytope norms.
    Search,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SemiEllipticityConfig {
    pub seed: u64,
    pub mode: SemiMode,
    /// Norm of the control run; the Euclidean norm when absent.
    pub norm: Option<NormJson>,
    pub samples: usize,
    pub slack: f64,
    /// Search mode: number of random norms and facet pairs per norm.
    pub norms: usize,
    pub facets: usize,
    /// Also test three-term decompositions, which leave any 3-space.
    pub decompositions: bool,
    /// A certificate must survive recomputation with this slack.
    pub verify_slack: f64,
}

impl Default for SemiEllipticityConfig {
    fn default() -> Self {
        SemiEllipticityConfig {
            seed: 1,
            mode: SemiMode::Control,
            norm: None,
            samples: 10_000,
            slack: 1e-9,
            norms: 20,
            facets: 6,
            decompositions: true,
            verify_slack: 1e-7,
        }
    }
}

type V4 = [f64; 4];

/// Plucker coordinates `(12, 13, 14, 23, 24, 34)`.
fn wedge(a: &V4, b: &V4) -> [f64; 6] {
    let w = |i: usize, j: usize| a[i] * b[j] - a[j] * b[i];
    [w(0, 1), w(0, 2), w(0, 3), w(1, 2), w(1, 3), w(2, 3)]
}

/// `omega ^ omega` up to a factor two; zero exactly for simple bivectors.
fn plucker(w: &[f64; 6]) -> f64 {
    w[0] * w[5] - w[1] * w[4] + w[2] * w[3]
}

fn bnorm(w: &[f64; 6]) -> f64 {
    w.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A factorisation `omega = p ^ q` of a simple bivector.
fn factor(w: &[f64; 6]) -> Option<(V4, V4)> {
    // rows of the skew matrix span the plane
    let m = [
        [0.0, w[0], w[1], w[2]],
        [-w[0], 0.0, w[3], w[4]],
        [-w[1], -w[3], 0.0, w[5]],
        [-w[2], -w[4], -w[5], 0.0],
    ];
    let scale = bnorm(w);
    if scale == 0.0 {
        return None;
    }
    let mut rows: Vec<V4> = m.to_vec();
    rows.sort_by(|a, b| {
        let na: f64 = a.iter().map(|x| x * x).sum();
        let nb: f64 = b.iter().map(|x| x * x).sum();
        nb.total_cmp(&na)
    });
    let p = rows[0];
    let pp: f64 = p.iter().map(|x| x * x).sum();
    let mut best: Option<(V4, f64)> = None;
    for r in &rows[1..] {
        let t: f64 = r.iter().zip(&p).map(|(x, y)| x * y).sum::<f64>() / pp;
        let q: V4 = std::array::from_fn(|i| r[i] - t * p[i]);
        let nq: f64 = q.iter().map(|x| x * x).sum();
        if best.map_or(true, |b| nq > b.1) {
            best = Some((q, nq));
        }
    }
    let (q, _) = best?;
    let pq = wedge(&p, &q);
    let k = (0..6).max_by(|&i, &j| pq[i].abs().total_cmp(&pq[j].abs()))?;
    if pq[k] == 0.0 {
        return None;
    }
    let lambda = w[k] / pq[k];
    Some((p.map(|x| x * lambda), q))
}

/// Holmes–Thompson area of the parallelogram spanned by `a, b`.
fn sigma(norm: &Norm, a: &V4, b: &V4) -> Result<f64> {
    let len = |v: &V4| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let w = wedge(a, b);
    if bnorm(&w) <= 1e-14 * len(a) * len(b) || bnorm(&w) == 0.0 {
        return Ok(0.0);
    }
    let basis = DMatrix::from_fn(4, 2, |i, j| if j == 0 { a[i] } else { b[i] });
    match norm.restrict(&basis) {
        Ok(r) => volume_density(&r, DensityDef::HolmesThompson),
        Err(Error::DegenerateTangent { .. }) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Same quantity through an orthonormal basis of the plane times the
/// Euclidean area, as an independent recomputation.
fn sigma_orthonormal(norm: &Norm, a: &V4, b: &V4) -> Result<f64> {
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 {
        return Ok(0.0);
    }
    let e1: V4 = a.map(|x| x / na);
    let t: f64 = b.iter().zip(&e1).map(|(x, y)| x * y).sum();
    let r: V4 = std::array::from_fn(|i| b[i] - t * e1[i]);
    let nr: f64 = r.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nr <= 1e-14 * na {
        return Ok(0.0);
    }
    let e2: V4 = r.map(|x| x / nr);
    let basis = DMatrix::from_fn(4, 2, |i, j| if j == 0 { e1[i] } else { e2[i] });
    Ok(volume_density(&norm.restrict(&basis)?, DensityDef::HolmesThompson)? * na * nr)
}

fn gaussian(r: &mut impl Rng) -> V4 {
    std::array::from_fn(|_| StandardNormal.sample(r))
}

/// Random symmetric polytope norm with `facets` covector pairs.
fn random_norm(facets: usize, seed: u64) -> Result<Norm> {
    let mut r = rng(seed, 0x9017);
    let mut rows: Vec<Vec<f64>> = (0..4)
        .map(|i| {
            let mut v = vec![0.0; 4];
            v[i] = 1.0;
            v
        })
        .collect();
    for _ in 0..facets {
        let v = gaussian(&mut r);
        let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let s: f64 = r.random_range(0.8..2.0);
        rows.push(v.iter().map(|x| s * x / n).collect());
    }
    Norm::polytope_from_rows(&rows)
}

#[derive(Debug, Clone)]
struct Case {
    sum: (V4, V4),
    parts: Vec<(V4, V4)>,
}

/// `a ^ (b + c) = a ^ b + a ^ c`.
fn triple(r: &mut impl Rng) -> Case {
    let (a, b, c) = (gaussian(r), gaussian(r), gaussian(r));
    let bc: V4 = std::array::from_fn(|i| b[i] + c[i]);
    Case { sum: (a, bc), parts: vec![(a, b), (a, c)] }
}

/// `xi = eta_1 + t beta + rest` with `t` chosen so `rest` is simple.
fn decomposition(r: &mut impl Rng) -> Option<Case> {
    let (a, b) = (gaussian(r), gaussian(r));
    let (c, d) = (gaussian(r), gaussian(r));
    let (u, v) = (gaussian(r), gaussian(r));
    let xi = wedge(&a, &b);
    let eta = wedge(&c, &d);
    let beta = wedge(&u, &v);
    let w: [f64; 6] = std::array::from_fn(|i| xi[i] - eta[i]);
    // (w - t beta)^2 = w^2 - 2 t w.beta since beta is simple
    let cross = w[0] * beta[5] + w[5] * beta[0] - w[1] * beta[4] - w[4] * beta[1] + w[2] * beta[3] + w[3] * beta[2];
    if cross.abs() < 1e-6 {
        return None;
    }
    let t = plucker(&w) / cross;
    let rest: [f64; 6] = std::array::from_fn(|i| w[i] - t * beta[i]);
    let (p, q) = factor(&rest)?;
    // refuse factorisations that lose precision
    let back = wedge(&p, &q);
    let err = (0..6).map(|i| (back[i] - rest[i]).abs()).fold(0.0, f64::max);
    if err > 1e-10 * bnorm(&rest).max(1.0) {
        return None;
    }
    let tu: V4 = u.map(|x| x * t);
    Some(Case { sum: (a, b), parts: vec![(c, d), (tu, v), (p, q)] })
}

struct Tally {
    tested: usize,
    violations: usize,
    worst: f64,
    certificate: Option<(Case, f64)>,
}

fn probe(norm: &Norm, cases: impl Iterator<Item = Case>, slack: f64) -> Result<Tally> {
    let mut t = Tally { tested: 0, violations: 0, worst: 0.0, certificate: None };
    for case in cases {
        let lhs = sigma(norm, &case.sum.0, &case.sum.1)?;
        let mut rhs = 0.0;
        for (p, q) in &case.parts {
            rhs += sigma(norm, p, q)?;
        }
        t.tested += 1;
        if lhs > rhs + slack * rhs.max(lhs) {
            t.violations += 1;
        }
        if rhs > 0.0 {
            let ratio = lhs / rhs;
            if ratio > t.worst {
                t.worst = ratio;
                t.certificate = Some((case, ratio));
            }
        }
    }
    Ok(t)
}

/// Recomputes a certificate through the orthonormal path.
fn verify(norm: &Norm, case: &Case, slack: f64) -> Result<Option<f64>> {
    let lhs = sigma_orthonormal(norm, &case.sum.0, &case.sum.1)?;
    let mut rhs = 0.0;
    for (p, q) in &case.parts {
        rhs += sigma_orthonormal(norm, p, q)?;
    }
    Ok(if lhs > rhs * (1.0 + slack) { Some(lhs / rhs) } else { None })
}

pub fn run_semi_ellipticity(cfg: &SemiEllipticityConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("semi_ellipticity", cfg, cfg.seed)?;
    report.threshold("slack", cfg.slack);
    match cfg.mode {
        SemiMode::Control => {
            let norm = match &cfg.norm {
                Some(j) => Norm::from_json(j)?,
                None => Norm::identity(4),
            };
            if norm.dim() != 4 {
                return Err(Error::Dimension { expected: 4, got: norm.dim() });
            }
            // degenerate case: zeta = 0, xi = eta
            let mut r = rng(cfg.seed, 0x5e11);
            let (a, b) = (gaussian(&mut r), gaussian(&mut r));
            let eq = sigma(&norm, &a, &b)? - (sigma(&norm, &a, &b)? + sigma(&norm, &a, &[0.0; 4])?);
            report.metric("degenerate.defect", eq.abs());
            let cases = (0..cfg.samples).map(|_| triple(&mut r));
            let tally = probe(&norm, cases, cfg.slack)?;
            report.metric("samples", tally.tested as f64);
            report.metric("violations", tally.violations as f64);
            report.metric("worst_ratio", tally.worst);
            report.threshold("violations", 0.0);
            report.verdict = if tally.violations == 0 { Verdict::Pass } else { Verdict::Fail };
        }
        SemiMode::Search => {
            report.note("triples a^b + a^c lie in a 3-space; three-term decompositions are what can leave it");
            let mut worst = 0.0f64;
            let mut found = 0usize;
            let mut tested = 0usize;
            for k in 0..cfg.norms {
                let seed = trial_seed(cfg.seed, k as u64);
                let norm = random_norm(cfg.facets, seed)?;
                let mut r = rng(seed, 0x5e12);
                let per = cfg.samples / cfg.norms.max(1);
                let cases: Vec<Case> = (0..per)
                    .filter_map(|i| if cfg.decompositions && i % 2 == 1 { decomposition(&mut r) } else { Some(triple(&mut r)) })
                    .collect();
                let tally = probe(&norm, cases.into_iter(), cfg.slack)?;
                tested += tally.tested;
                report.series.entry("worst_ratio".into()).or_default().push([k as f64, tally.worst]);
                worst = worst.max(tally.worst);
                if let Some((case, _)) = tally.certificate.filter(|_| tally.violations > 0) {
                    if let Some(ratio) = verify(&norm, &case, cfg.verify_slack)? {
                        found += 1;
                        report.note(format!(
                            "verified certificate: norm {} ratio {ratio:.12}, facets {:?}, sum {:?}, parts {:?}",
                            k,
                            norm.to_json().facets,
                            case.sum,
                            case.parts
                        ));
                    }
                }
            }
            report.metric("samples", tested as f64);
            report.metric("worst_ratio", worst);
            report.metric("verified_certificates", found as f64);
            report.threshold("verify_slack", cfg.verify_slack);
            report.verdict = if found > 0 { Verdict::Pass } else { Verdict::Inconclusive };
        }
    }
    Ok(report)
}
