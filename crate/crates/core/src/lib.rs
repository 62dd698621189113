//! Moments of the logarithmic derivative of characteristic polynomials over
//! the compact classical groups SO(2N), SO(2N+1) and USp(2N).
//!
//! The crate provides three independent routes to the same quantities and the
//! machinery to confront them:
//!
//! * [`ensembles`] and [`moments`]: Haar sampling of the groups and Monte
//!   Carlo estimation of moments of `Lambda'/Lambda(e^{-a/N})`.
//! * [`formulas`]: exact finite-N ensemble averages for SO(2N) and the
//!   asymptotic laws for all three groups.
//! * [`residue`] and [`matcalc`]: the exact rational contour-integral and
//!   determinant calculus behind the asymptotics, verified identity by
//!   identity.
//!
//! [`combinatorics`] supplies exact big-integer and big-rational arithmetic
//! for the latter two.

pub mod combinatorics;
pub mod error;
pub mod ensembles;
pub mod formulas;
pub mod matcalc;
pub mod moments;
pub mod residue;

pub use error::{Error, Result};
