//! Subwavelength resonances of a small, high-contrast acoustic inclusion.
//!
//! The crate covers the whole pipeline for the scalar transmission problem
//! across a closed surface: special functions, material parameters, modal
//! (sphere) resonance computation, complex root finding, a boundary element
//! discretisation for general shapes, scattered fields in the frequency
//! domain, and a numerical inverse Laplace transform for time-domain traces.
//!
//! Time convention is `exp(-i omega t)`; outgoing waves behave like
//! `exp(i k r) / r`, and resonances sit in the lower half plane.

// Checks such as `!(x > 0.0)` reject NaN together with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bem;
pub mod error;
pub mod fields;
pub mod medium;
pub mod modal;
pub mod rootfind;
pub mod specfun;
pub mod timedomain;

pub use error::{FprError, Result};
pub use num_complex::Complex64;
