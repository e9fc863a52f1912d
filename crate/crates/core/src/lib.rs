//! Lee-Yang zeros of ferromagnetic Ising spin baths, located on the unit
//! circle and detected through the exact reduced dynamics of a probe spin
//! pair coupled to the bath magnetization.
//!
//! Module map:
//! - [`bath`]: couplings, exact sector weights, fugacity polynomial,
//!   transfer-matrix partition function for rings.
//! - [`zeros`]: unit-circle root finding with multiplicity clustering,
//!   zero times, product-form ratio, time-domain zero detection.
//! - [`probe`]: closed-form amplitude evolution, reduced density matrix
//!   assembly with bath coherence ratios, spin-spin correlators.
//! - [`entanglement`]: Wootters concurrence (general and closed-form
//!   branches), geometric entanglement measure.
//! - [`oracle`]: brute-force thermal-mixture references used by tests.

#![forbid(unsafe_code)]

pub mod bath;
pub mod entanglement;
pub mod error;
pub mod oracle;
pub mod probe;
pub mod zeros;

pub use error::{Error, Result};
pub use num_complex::Complex64;
