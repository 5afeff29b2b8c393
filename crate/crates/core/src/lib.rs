//! Numerical laboratory for filling volumes and boundary rigidity.
//!
//! The crate is organised bottom-up:
//!
//! * [`normspace`] finite-dimensional norms, John ellipsoids and the four
//!   Finsler volume densities (Busemann, Holmes–Thompson, Loewner, Benson).
//! * [`metricfield`] Riemannian metrics on discs, geodesics, boundary
//!   distance tables and simplicity checks.
//! * [`represent`] distance-preserving maps into a sampled `L^inf(S)` and the
//!   area non-increasing projections back onto flat and hyperbolic models.
//! * [`surface`] simplicial surfaces in `L^inf(S)`, their Finsler areas and a
//!   filling-area minimizer.
//! * [`experiments`] end-to-end runs producing [`experiments::ExperimentReport`]s.

// negated comparisons reject NaN on purpose; index loops mirror the formulas
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod experiments;
pub mod metricfield;
pub mod normspace;
pub mod represent;
pub mod surface;

pub(crate) mod util;

pub use error::{Error, Result};
