//! Construction and numerical certification of (2+1)-dimensional
//! hydrodynamic-type systems that carry a scalar pseudopotential.
//!
//! The rational family is built from polynomial solutions of a flat linear
//! connection ([`rational`]), assembled into quasilinear systems
//! ([`assembly`]) and checked against the non-parametric pseudopotential
//! ([`pseudo`]). [`n2`] evaluates the two-component integrability conditions
//! and the closure of the pseudopotential chain; [`elliptic`] covers the
//! theta-function analogue. [`verifier`] drives batch runs and reports.

pub mod error;
pub mod linalg;
pub mod polyode;
pub mod rational;
pub mod assembly;
pub mod pseudo;
pub mod n2;
pub mod elliptic;
pub mod sampling;
pub mod verifier;

pub use error::{Error, Result};
