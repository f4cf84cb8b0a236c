//! Dirac operators on metric graphs: secular functions, spectra, spectral
//! zeta functions and zeta-regularized determinants.
//!
//! Comparisons are often written `!(x > 0.0)` so that NaN falls into the
//! rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod contour;
pub mod determinant;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod quad;
pub mod secular;
pub mod selftest;
pub mod special;
pub mod spectrum;
pub mod zeta;

pub use error::{Error, Result};
pub use num_complex::Complex64;
