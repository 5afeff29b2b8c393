//! Representation by distances to far hypersurfaces, one per sphere node.
//!
//! For a flat base the hypersurface of node `s` is the line
//! `{<y, s> = -R_out}` and the coordinate is `d_g(x, H) - R_out`. For a
//! hyperbolic base it is the geodesic orthogonal to the ray towards `s` at
//! hyperbolic distance `T` from the origin, and the coordinate is
//! `d_g(x, H) - T`. Both reduce to the Busemann coordinates of the base
//! metric as the hypersurfaces recede (exactly so for the flat base).

use serde::{Deserialize, Serialize};

use super::{EmbeddingVector, SampledSphere};
use crate::error::{Error, Result};
use crate::metricfield::geodesic::{initial_state, rk4_step, State};
use crate::metricfield::{FieldKind, MetricField, Model};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperplaneOptions {
    /// Flat base: offset of the lines as a multiple of the domain radius.
    pub offset: f64,
    /// Hyperbolic base: distance of the hypersurfaces from the origin.
    pub depth: f64,
    pub step: f64,
    /// Largest angular correction accepted in a single search step.
    pub bracket: f64,
    pub angle_tol: f64,
}

impl Default for HyperplaneOptions {
    fn default() -> Self {
        HyperplaneOptions { offset: 1.5, depth: 3.0, step: 0.05, bracket: 0.5, angle_tol: 1e-7 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Surface {
    /// `<y, s> + offset = 0`, domain on the positive side.
    Line { offset: f64 },
    /// Circle with center `c s` and radius `rho`, domain outside.
    Circle { center: f64, rho: f64 },
}

pub struct HyperplaneMap<'a> {
    field: &'a MetricField,
    sphere: &'a SampledSphere,
    surface: Surface,
    shift: f64,
    opts: HyperplaneOptions,
}

fn base_kind(model: &Model) -> Option<FieldKind> {
    match model {
        Model::Constant { .. } => Some(FieldKind::Euclidean),
        Model::Hyperbolic => Some(FieldKind::Hyperbolic),
        Model::Perturbed { base, .. } | Model::Conformal { base, .. } => base_kind(base),
        _ => None,
    }
}

impl<'a> HyperplaneMap<'a> {
    pub fn new(field: &'a MetricField, sphere: &'a SampledSphere, opts: HyperplaneOptions) -> Result<HyperplaneMap<'a>> {
        if field.dim != 2 || sphere.n != 2 {
            return Err(Error::Argument("hyperplane representation is implemented in the plane".into()));
        }
        let (surface, shift) = match base_kind(&field.model) {
            Some(FieldKind::Euclidean) => {
                let r = opts.offset * field.radius;
                (Surface::Line { offset: r }, r)
            }
            Some(FieldKind::Hyperbolic) => {
                let rt = (0.5 * opts.depth).tanh();
                if rt <= field.radius {
                    return Err(Error::Argument("hypersurfaces must lie outside the domain".into()));
                }
                (Surface::Circle { center: (1.0 + rt * rt) / (2.0 * rt), rho: (1.0 - rt * rt) / (2.0 * rt) }, opts.depth)
            }
            _ => return Err(Error::Argument("hyperplane representation needs a flat or hyperbolic base".into())),
        };
        Ok(HyperplaneMap { field, sphere, surface, shift, opts })
    }

    /// Signed level function, positive on the domain side.
    fn level(&self, s: &[f64], y: &[f64]) -> f64 {
        match self.surface {
            Surface::Line { offset } => s[0] * y[0] + s[1] * y[1] + offset,
            Surface::Circle { center, rho } => {
                let d = ((y[0] - center * s[0]).powi(2) + (y[1] - center * s[1]).powi(2)).sqrt();
                d - rho
            }
        }
    }

    /// Direction at `x` of the base-metric perpendicular to the hypersurface.
    fn foot_direction(&self, x: &[f64], s: &[f64]) -> f64 {
        match self.surface {
            Surface::Line { .. } => (-s[1]).atan2(-s[0]),
            Surface::Circle { center, .. } => {
                // Move x to the origin by a disc isometry, whose differential
                // there is a positive multiple of the identity. The image
                // geodesic is then seen along the bisector of its ideal ends.
                let half = (1.0 / center).acos();
                let base = s[1].atan2(s[0]);
                let mobius = |t: f64| {
                    let (zr, zi) = (t.cos() - x[0], t.sin() - x[1]);
                    // 1 - conj(x) e^{it}
                    let (dr, di) = (1.0 - (x[0] * t.cos() + x[1] * t.sin()), -(x[0] * t.sin() - x[1] * t.cos()));
                    let q = dr * dr + di * di;
                    [(zr * dr + zi * di) / q, (zi * dr - zr * di) / q]
                };
                let (a, b) = (mobius(base - half), mobius(base + half));
                (a[1] + b[1]).atan2(a[0] + b[0])
            }
        }
    }

    /// Length of the unit-speed geodesic from `x` at angle `theta` until it
    /// meets the hypersurface of node `s`.
    fn hit_length(&self, x: &[f64], s: &[f64], theta: f64) -> Result<f64> {
        let model = &self.field.model;
        let jet = model.jet(x, 2)?;
        let d = [theta.cos(), theta.sin()];
        let l = jet.norm(&d);
        let v = [d[0] / l, d[1] / l];
        let mut st = initial_state(model, 2, x, &v)?;
        let h = self.opts.step;
        let max_steps = (100.0 * (self.shift + 1.0) / h) as usize;
        let mut f0 = self.level(s, &st.x);
        for k in 0..max_steps {
            let next = rk4_step(model, 2, &st, h)?;
            let f1 = self.level(s, &next.x);
            if f1 <= 0.0 {
                // secant refinement of the partial step
                let (mut a, mut fa, mut b, mut fb) = (0.0, f0, h, f1);
                let mut t = h * f0 / (f0 - f1);
                for _ in 0..30 {
                    let y: State = rk4_step(model, 2, &st, t)?;
                    let ft = self.level(s, &y.x);
                    if ft.abs() < 1e-14 || (b - a) < 1e-15 {
                        break;
                    }
                    if ft > 0.0 {
                        a = t;
                        fa = ft;
                    } else {
                        b = t;
                        fb = ft;
                    }
                    t = a + (b - a) * fa / (fa - fb);
                }
                return Ok(k as f64 * h + t);
            }
            st = next;
            f0 = f1;
        }
        Err(Error::NonConvergence { from: x.to_vec(), to: s.to_vec(), residual: f0 })
    }

    /// `d_g(x, H_s)`: minimum of the hit length over the shooting angle by
    /// successive parabolic steps from the base foot direction.
    pub fn coordinate(&self, x: &[f64], s: &[f64]) -> Result<f64> {
        let mut theta = self.foot_direction(x, s);
        let mut delta = 0.02;
        let mut f0 = self.hit_length(x, s, theta)?;
        // geodesics that miss the hypersurface and leave the chart count as
        // infinitely long
        let probe = |t: f64| match self.hit_length(x, s, t) {
            Err(Error::Collar(_) | Error::NonConvergence { .. }) => Ok(f64::INFINITY),
            other => other,
        };
        for _ in 0..60 {
            let fm = probe(theta - delta)?;
            let fp = probe(theta + delta)?;
            let t = if !(fm.is_finite() && fp.is_finite()) {
                if fm < f0 {
                    -delta
                } else if fp < f0 {
                    delta
                } else {
                    delta *= 0.25;
                    if delta < self.opts.angle_tol {
                        break;
                    }
                    continue;
                }
            } else {
                let curv = fm - 2.0 * f0 + fp;
                if curv > 0.0 {
                    (0.5 * delta * (fm - fp) / curv).clamp(-4.0 * delta, 4.0 * delta)
                } else if fm < fp {
                    -2.0 * delta
                } else {
                    2.0 * delta
                }
            };
            if t.abs() > self.opts.bracket {
                return Err(Error::NonConvergence { from: x.to_vec(), to: s.to_vec(), residual: t });
            }
            let cand = probe(theta + t)?;
            if cand <= f0 {
                theta += t;
                f0 = cand;
            }
            if t.abs() < self.opts.angle_tol {
                break;
            }
            delta = t.abs().clamp(1e-5, 0.02);
        }
        Ok(f0 - self.shift)
    }

    pub fn embed(&self, x: &[f64]) -> Result<EmbeddingVector> {
        if !(x.iter().map(|c| c * c).sum::<f64>().sqrt() <= self.field.radius * (1.0 + 1e-12)) {
            return Err(Error::OutsideDomain(x.to_vec()));
        }
        let values: Result<Vec<f64>> = self.sphere.nodes.iter().map(|s| self.coordinate(x, s)).collect();
        Ok(EmbeddingVector::new(values?))
    }
}
