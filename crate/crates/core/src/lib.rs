//! Localization of complex eigenvalues of perturbed magnetic Dirac
//! operators near the spectral thresholds ±m.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod axial;
pub mod birman_schwinger;
pub mod config;
pub mod det_index;
pub mod dirac_op;
pub mod error;
pub mod landau;
pub mod linalg;
pub mod localization;
pub mod model;
pub mod quadrature;

pub use error::{Error, Result};
pub use faer::c64;
