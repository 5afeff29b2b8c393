//! Finite-dimensional Banach norms and Finsler volume densities.
//!
//! A [`Norm`] is a centrally symmetric convex unit ball: a Euclidean
//! ellipsoid, an `l^p` ball, or a polytope `{x : |a_k . x| <= 1}`. The
//! densities in [`AreaDensity`] express a Finsler volume element as a
//! multiple of Lebesgue measure in the coordinates of the norm.

pub mod john;
pub mod polytope;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::{det_small, unit_ball_volume};

pub use john::{DEFAULT_TOL as JOHN_TOL, MAX_ITERATIONS as JOHN_MAX_ITERATIONS};
use polytope::Polygon2;

/// Number of sampled covector directions per coordinate plane used when a
/// smooth norm has to be replaced by a polytope.
pub const DEFAULT_DIRECTIONS_PER_PAIR: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum NormKind {
    /// `||x|| = sqrt(x^T A x)`.
    Euclidean(DMatrix<f64>),
    /// `||x|| = (sum |x_i|^p)^(1/p)`, `p >= 1` (infinite allowed).
    Lp(f64),
    /// `||x|| = max_k |a_k . x|`, one facet covector per row.
    Polytope(DMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Norm {
    dim: usize,
    kind: NormKind,
}

impl Norm {
    pub fn euclidean(matrix: DMatrix<f64>) -> Result<Norm> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n {
            return Err(Error::Argument("euclidean norm needs a square matrix".into()));
        }
        let asym = (&matrix - matrix.transpose()).amax();
        if asym > 1e-12 * matrix.amax().max(1.0) {
            return Err(Error::Argument("euclidean norm matrix is not symmetric".into()));
        }
        if matrix.clone().cholesky().is_none() {
            return Err(Error::Argument("euclidean norm matrix is not positive definite".into()));
        }
        Ok(Norm { dim: n, kind: NormKind::Euclidean(matrix) })
    }

    pub fn identity(dim: usize) -> Norm {
        Norm { dim, kind: NormKind::Euclidean(DMatrix::identity(dim, dim)) }
    }

    pub fn lp(dim: usize, p: f64) -> Result<Norm> {
        if dim == 0 || !(p >= 1.0) {
            return Err(Error::Argument(format!("lp norm needs dim >= 1 and p >= 1, got p = {p}")));
        }
        Ok(Norm { dim, kind: NormKind::Lp(p) })
    }

    /// Polytope norm from facet covectors (rows). Fails when the rows do not
    /// span, i.e. when the ball is unbounded.
    pub fn polytope(facets: DMatrix<f64>) -> Result<Norm> {
        let dim = facets.ncols();
        if dim == 0 || facets.nrows() == 0 {
            return Err(Error::Argument("polytope norm needs a nonempty facet list".into()));
        }
        if facets.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("facet covectors must be finite".into()));
        }
        let rank = numerical_rank(&facets);
        if rank < dim {
            return Err(Error::UnboundedBall { rank, dim });
        }
        Ok(Norm { dim, kind: NormKind::Polytope(facets) })
    }

    pub fn polytope_from_rows(rows: &[Vec<f64>]) -> Result<Norm> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Argument("facet rows have inconsistent lengths".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Norm::polytope(DMatrix::from_row_slice(rows.len(), dim, &flat))
    }

    /// Sup-norm ball `[-1, 1]^dim`.
    pub fn cube(dim: usize) -> Norm {
        Norm::polytope(DMatrix::identity(dim, dim)).expect("identity spans")
    }

    /// `l^1` ball, described by its `2^(dim-1)` facet pairs.
    pub fn cross_polytope(dim: usize) -> Norm {
        let rows: Vec<Vec<f64>> = (0..1usize << (dim - 1))
            .map(|mask| {
                (0..dim)
                    .map(|i| if i > 0 && mask & (1 << (i - 1)) != 0 { -1.0 } else { 1.0 })
                    .collect()
            })
            .collect();
        Norm::polytope_from_rows(&rows).expect("sign vectors span")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &NormKind {
        &self.kind
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: x.len() });
        }
        Ok(match &self.kind {
            NormKind::Euclidean(a) => {
                let mut s = 0.0;
                for i in 0..self.dim {
                    for j in 0..self.dim {
                        s += x[i] * a[(i, j)] * x[j];
                    }
                }
                s.max(0.0).sqrt()
            }
            NormKind::Lp(p) => {
                if p.is_infinite() {
                    x.iter().fold(0.0f64, |s, v| s.max(v.abs()))
                } else {
                    let scale = x.iter().fold(0.0f64, |s, v| s.max(v.abs()));
                    if scale == 0.0 {
                        0.0
                    } else {
                        scale * x.iter().map(|v| (v.abs() / scale).powf(*p)).sum::<f64>().powf(1.0 / p)
                    }
                }
            }
            NormKind::Polytope(f) => f
                .row_iter()
                .map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum::<f64>().abs())
                .fold(0.0f64, f64::max),
        })
    }

    /// The norm whose unit ball is `t * B`.
    pub fn scaled_ball(&self, t: f64) -> Norm {
        let kind = match &self.kind {
            NormKind::Euclidean(a) => NormKind::Euclidean(a / (t * t)),
            NormKind::Lp(_) => return self.to_polytope(DEFAULT_DIRECTIONS_PER_PAIR).scaled_ball(t),
            NormKind::Polytope(f) => NormKind::Polytope(f / t),
        };
        Norm { dim: self.dim, kind }
    }

    /// Norm whose unit ball is the polar body `B°`.
    pub fn polar(&self) -> Result<Norm> {
        match &self.kind {
            NormKind::Euclidean(a) => Norm::euclidean(
                a.clone()
                    .try_inverse()
                    .ok_or_else(|| Error::Argument("singular matrix".into()))?,
            ),
            NormKind::Lp(p) => Norm::lp(self.dim, dual_exponent(*p)),
            NormKind::Polytope(_) => {
                let rows = self.facet_rows();
                let verts = if self.dim == 2 {
                    let r2: Vec<[f64; 2]> = rows.iter().map(|r| [r[0], r[1]]).collect();
                    let poly = Polygon2::from_facets(&r2)
                        .ok_or(Error::UnboundedBall { rank: 1, dim: 2 })?;
                    poly.ball.iter().map(|v| v.to_vec()).collect()
                } else {
                    polytope::ball_vertices(&rows, self.dim)
                };
                Norm::polytope_from_rows(&verts)
            }
        }
    }

    /// Restriction of the norm to the column span of `basis` (`dim x k`),
    /// expressed in basis coordinates.
    pub fn restrict(&self, basis: &DMatrix<f64>) -> Result<Norm> {
        if basis.nrows() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: basis.nrows() });
        }
        let k = basis.ncols();
        if numerical_rank(basis) < k {
            return Err(Error::DegenerateTangent { rank: numerical_rank(basis), expected: k });
        }
        match &self.kind {
            NormKind::Euclidean(a) => Norm::euclidean(basis.transpose() * a * basis),
            NormKind::Lp(_) => self.to_polytope(DEFAULT_DIRECTIONS_PER_PAIR).restrict(basis),
            NormKind::Polytope(f) => Norm::polytope(f * basis),
        }
    }

    /// Facet-sampled outer polytope approximation (identity for polytopes).
    ///
    /// Each sampled covector direction is normalized by the dual norm so the
    /// facet supports the ball.
    pub fn to_polytope(&self, directions_per_pair: usize) -> Norm {
        if let NormKind::Polytope(_) = self.kind {
            return self.clone();
        }
        let dirs = sample_covectors(self.dim, directions_per_pair);
        let rows: Vec<Vec<f64>> = dirs
            .into_iter()
            .map(|a| {
                let d = self.dual_eval(&a);
                a.iter().map(|v| v / d).collect()
            })
            .collect();
        Norm::polytope_from_rows(&rows).expect("sampled covectors span")
    }

    fn dual_eval(&self, a: &[f64]) -> f64 {
        match &self.kind {
            NormKind::Euclidean(m) => {
                let inv = m.clone().try_inverse().expect("spd");
                let mut s = 0.0;
                for i in 0..self.dim {
                    for j in 0..self.dim {
                        s += a[i] * inv[(i, j)] * a[j];
                    }
                }
                s.sqrt()
            }
            NormKind::Lp(p) => Norm::lp(self.dim, dual_exponent(*p)).unwrap().eval(a).unwrap(),
            NormKind::Polytope(_) => unreachable!("polytopes are not sampled"),
        }
    }

    pub(crate) fn facet_rows(&self) -> Vec<Vec<f64>> {
        match &self.kind {
            NormKind::Polytope(f) => f
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
            _ => self.to_polytope(DEFAULT_DIRECTIONS_PER_PAIR).facet_rows(),
        }
    }

    /// Lebesgue volume of the unit ball.
    pub fn ball_volume(&self) -> Result<f64> {
        check_dim(self.dim)?;
        Ok(match &self.kind {
            NormKind::Euclidean(a) => unit_ball_volume(self.dim) / a.determinant().sqrt(),
            NormKind::Lp(p) => lp_ball_volume(self.dim, *p),
            NormKind::Polytope(_) => {
                let rows = self.facet_rows();
                if self.dim == 2 {
                    planar(&rows)?.ball_area()
                } else {
                    polytope::symmetric_ball_volume(&rows, self.dim)
                }
            }
        })
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if (1..=4).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

fn planar(rows: &[Vec<f64>]) -> Result<Polygon2> {
    let r2: Vec<[f64; 2]> = rows.iter().map(|r| [r[0], r[1]]).collect();
    Polygon2::from_facets(&r2).ok_or(Error::UnboundedBall { rank: 1, dim: 2 })
}

fn dual_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

fn lp_ball_volume(n: usize, p: f64) -> f64 {
    if p.is_infinite() {
        return 2f64.powi(n as i32);
    }
    let nf = n as f64;
    (2.0 * libm::tgamma(1.0 + 1.0 / p)).powf(nf) / libm::tgamma(1.0 + nf / p)
}

fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().fold(0.0f64, |s, v| s.max(*v));
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|v| **v > 1e-12 * max).count()
}

/// Deterministic covector directions covering one hemisphere.
fn sample_covectors(dim: usize, per_pair: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0]],
        2 => (0..per_pair)
            .map(|j| {
                let t = std::f64::consts::PI * j as f64 / per_pair as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            // golden-ratio lattice on the sphere, antipodal duplicates are harmless
            let pairs = dim * (dim - 1) / 2;
            let count = per_pair * pairs;
            let mut out = Vec::with_capacity(count + dim);
            for i in 0..dim {
                let mut e = vec![0.0; dim];
                e[i] = 1.0;
                out.push(e);
            }
            let mut rng = crate::util::rng(0x5eed_d1e5, dim as u64);
            use rand_distr::{Distribution, StandardNormal};
            while out.len() < count + dim {
                let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                let n = crate::util::norm2(&v);
                if n > 1e-6 {
                    out.push(v.iter().map(|x| x / n).collect());
                }
            }
            out
        }
    }
}

/// Ellipsoid `{x : x^T Q x <= 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    pub dim: usize,
    /// Shape matrix `Q`, row-major.
    pub shape: Vec<f64>,
    pub volume: f64,
}

impl Ellipsoid {
    pub fn from_shape(dim: usize, shape: Vec<f64>) -> Ellipsoid {
        let det = det_small(&shape, dim);
        let volume = unit_ball_volume(dim) / det.sqrt();
        Ellipsoid { dim, shape, volume }
    }

    pub fn shape_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.shape)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let q = self.shape_matrix();
        let v = nalgebra::DVector::from_column_slice(x);
        (v.transpose() * q * &v)[0] <= 1.0 + 1e-12
    }
}

/// Maximum-volume ellipsoid inscribed in the unit ball of `norm`.
///
/// For Euclidean norms this is the ball itself. Smooth `l^p` norms are
/// facet-sampled first.
pub fn john_ellipsoid(norm: &Norm, tol: f64) -> Result<Ellipsoid> {
    if !(tol > 0.0) {
        return Err(Error::Argument("tolerance must be positive".into()));
    }
    check_dim(norm.dim)?;
    match &norm.kind {
        NormKind::Euclidean(a) => {
            Ok(Ellipsoid::from_shape(norm.dim, a.transpose().iter().copied().collect()))
        }
        _ => {
            let rows = norm.facet_rows();
            let sol = if norm.dim == 2 {
                let poly = planar(&rows)?;
                john::solve_2d(&half_hull(&poly.polar), tol)?
            } else {
                john::solve(&rows, norm.dim, tol)?
            };
            Ok(Ellipsoid::from_shape(norm.dim, sol.shape))
        }
    }
}

/// One representative of each antipodal pair of hull vertices.
fn half_hull(polar: &[[f64; 2]]) -> Vec<[f64; 2]> {
    polar
        .iter()
        .filter(|p| p[1] > 0.0 || (p[1] == 0.0 && p[0] > 0.0))
        .copied()
        .collect()
}

/// Lebesgue volume of the polar body `B° = {y : y . x <= 1 for x in B}`.
pub fn polar_volume(norm: &Norm) -> Result<f64> {
    check_dim(norm.dim)?;
    Ok(match &norm.kind {
        NormKind::Euclidean(a) => unit_ball_volume(norm.dim) * a.determinant().sqrt(),
        NormKind::Lp(p) => lp_ball_volume(norm.dim, dual_exponent(*p)),
        NormKind::Polytope(_) => {
            let rows = norm.facet_rows();
            if norm.dim == 2 {
                planar(&rows)?.polar_area()
            } else {
                polytope::symmetric_polar_volume(&rows, norm.dim)
            }
        }
    })
}

/// The four normalizations of Finsler volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityDef {
    /// Unit ball has volume `omega_n`; equals the Hausdorff measure.
    Busemann,
    /// `vol(B°) / omega_n`.
    HolmesThompson,
    /// John ellipsoid of the unit ball has volume `omega_n`.
    Loewner,
    /// Minimal circumscribed parallelotope has volume `2^n`.
    Benson,
}

impl DensityDef {
    pub const ALL: [DensityDef; 4] = [
        DensityDef::Busemann,
        DensityDef::HolmesThompson,
        DensityDef::Loewner,
        DensityDef::Benson,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DensityDef::Busemann => "busemann",
            DensityDef::HolmesThompson => "holmes_thompson",
            DensityDef::Loewner => "loewner",
            DensityDef::Benson => "benson",
        }
    }
}

impl std::str::FromStr for DensityDef {
    type Err = Error;
    fn from_str(s: &str) -> Result<DensityDef> {
        match s {
            "busemann" => Ok(DensityDef::Busemann),
            "holmes_thompson" | "holmes-thompson" | "ht" => Ok(DensityDef::HolmesThompson),
            "loewner" => Ok(DensityDef::Loewner),
            "benson" | "mass*" => Ok(DensityDef::Benson),
            other => Err(Error::Parse(format!("unknown density definition `{other}`"))),
        }
    }
}

impl std::fmt::Display for DensityDef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A volume definition together with its normalization constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaDensity {
    pub def: DensityDef,
    /// `omega[k]` is the volume of the Euclidean unit `k`-ball, `k <= 4`.
    #[serde(skip, default = "omega_table")]
    pub omega: [f64; 5],
    pub john_tol: f64,
}

fn omega_table() -> [f64; 5] {
    [1.0, 2.0, std::f64::consts::PI, unit_ball_volume(3), unit_ball_volume(4)]
}

impl AreaDensity {
    pub fn new(def: DensityDef) -> AreaDensity {
        AreaDensity { def, omega: omega_table(), john_tol: JOHN_TOL }
    }
}

impl From<DensityDef> for AreaDensity {
    fn from(def: DensityDef) -> AreaDensity {
        AreaDensity::new(def)
    }
}

/// Density `sigma` of the Finsler volume element with respect to Lebesgue
/// measure in the coordinates of `norm`.
pub fn volume_density(norm: &Norm, def: impl Into<AreaDensity>) -> Result<f64> {
    let density = def.into();
    let n = norm.dim;
    check_dim(n)?;
    let omega = density.omega[n];
    if let NormKind::Euclidean(a) = &norm.kind {
        // every definition agrees with the Riemannian density
        return Ok(a.determinant().sqrt());
    }
    match density.def {
        DensityDef::Busemann => Ok(omega / norm.ball_volume()?),
        DensityDef::HolmesThompson => Ok(polar_volume(norm)? / omega),
        DensityDef::Loewner => Ok(omega / john_ellipsoid(norm, density.john_tol)?.volume),
        DensityDef::Benson => {
            // min parallelotope {|b_i . x| <= 1} around B has b_i in B°;
            // |det| is maximized at vertices of B° = conv{+-a_k}
            let rows = norm.facet_rows();
            if n == 2 {
                return Ok(planar(&rows)?.max_polar_det());
            }
            Ok(max_subset_det(&rows, n))
        }
    }
}

fn max_subset_det(rows: &[Vec<f64>], n: usize) -> f64 {
    let m = rows.len();
    let mut best = 0.0f64;
    let mut idx: Vec<usize> = (0..n).collect();
    let mut a = vec![0.0; n * n];
    loop {
        for (r, &k) in idx.iter().enumerate() {
            a[r * n..(r + 1) * n].copy_from_slice(&rows[k]);
        }
        best = best.max(det_small(&a, n).abs());
        let mut i = n;
        while i > 0 && idx[i - 1] == i - 1 + m - n {
            i -= 1;
        }
        if i == 0 {
            return best;
        }
        idx[i - 1] += 1;
        for j in i..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Density in the plane straight from facet rows, skipping the [`Norm`]
/// allocation. Degenerate rows (the ball is unbounded) give `None`.
pub fn planar_density(rows: &[[f64; 2]], density: &AreaDensity) -> Option<f64> {
    let poly = Polygon2::from_facets(rows)?;
    let omega = std::f64::consts::PI;
    Some(match density.def {
        DensityDef::Busemann => omega / poly.ball_area(),
        DensityDef::HolmesThompson => poly.polar_area() / omega,
        DensityDef::Loewner => {
            // an unconverged iterate is still inscribed, so it is a lower bound
            let shape = match john::solve_2d(&half_hull(&poly.polar), density.john_tol) {
                Ok(sol) => sol.shape,
                Err(Error::Convergence { last_shape, .. }) => last_shape,
                Err(_) => return None,
            };
            det_small(&shape, 2).sqrt()
        }
        DensityDef::Benson => poly.max_polar_det(),
    })
}

/// Restriction of the ambient sup-norm to the column span of `basis`
/// (`m x n`, full column rank), in basis coordinates: the ball is
/// `{c : |V_k . c| <= 1 for all rows k}`.
pub fn induced_norm(ambient_dim: usize, basis: &DMatrix<f64>) -> Result<Norm> {
    if basis.nrows() != ambient_dim {
        return Err(Error::Dimension { expected: ambient_dim, got: basis.nrows() });
    }
    let n = basis.ncols();
    let rank = numerical_rank(basis);
    if rank < n {
        return Err(Error::DegenerateTangent { rank, expected: n });
    }
    Norm::polytope(basis.clone())
}

pub fn norm_eval(norm: &Norm, x: &[f64]) -> Result<f64> {
    norm.eval(x)
}

/// JSON form `{"dim": n, "kind": "...", "facets": [[...]], "matrix": [[...]], "p": x}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormJson {
    pub dim: usize,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facets: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

impl Norm {
    pub fn to_json(&self) -> NormJson {
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            m.row_iter().map(|r| r.iter().copied().collect()).collect()
        };
        match &self.kind {
            NormKind::Euclidean(a) => NormJson {
                dim: self.dim,
                kind: "euclidean".into(),
                facets: None,
                matrix: Some(rows(a)),
                p: None,
            },
            NormKind::Lp(p) => NormJson {
                dim: self.dim,
                kind: "lp".into(),
                facets: None,
                matrix: None,
                p: Some(*p),
            },
            NormKind::Polytope(f) => NormJson {
                dim: self.dim,
                kind: "polytope".into(),
                facets: Some(rows(f)),
                matrix: None,
                p: None,
            },
        }
    }

    pub fn from_json(j: &NormJson) -> Result<Norm> {
        let norm = match j.kind.as_str() {
            "euclidean" => {
                let m = j
                    .matrix
                    .as_ref()
                    .ok_or_else(|| Error::Parse("euclidean norm needs `matrix`".into()))?;
                if m.len() != j.dim || m.iter().any(|r| r.len() != j.dim) {
                    return Err(Error::Parse("matrix shape does not match `dim`".into()));
                }
                let flat: Vec<f64> = m.iter().flatten().copied().collect();
                Norm::euclidean(DMatrix::from_row_slice(j.dim, j.dim, &flat))?
            }
            "lp" => Norm::lp(j.dim, j.p.ok_or_else(|| Error::Parse("lp norm needs `p`".into()))?)?,
            "polytope" => {
                let f = j
                    .facets
                    .as_ref()
                    .ok_or_else(|| Error::Parse("polytope norm needs `facets`".into()))?;
                if f.iter().any(|r| r.len() != j.dim) {
                    return Err(Error::Parse("facet length does not match `dim`".into()));
                }
                Norm::polytope_from_rows(f)?
            }
            other => return Err(Error::Parse(format!("unknown norm kind `{other}`"))),
        };
        Ok(norm)
    }

    pub fn from_json_str(s: &str) -> Result<Norm> {
        let j: NormJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Norm::from_json(&j)
    }
}

/// Serializable density report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityReport {
    pub definition: DensityDef,
    pub density: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ellipsoid: Option<Ellipsoid>,
}

pub fn density_report(norm: &Norm, def: DensityDef) -> Result<DensityReport> {
    let density = volume_density(norm, def)?;
    let ellipsoid = match def {
        DensityDef::Loewner => Some(john_ellipsoid(norm, JOHN_TOL)?),
        _ => None,
    };
    Ok(DensityReport { definition: def, density, ellipsoid })
}
