//! Resonant dipole-dipole interaction (RDDI) and entanglement of two
//! two-level atoms coupled through the guided modes of a waveguide whose
//! cutoff (or band edge) sits just above the atomic transition.
//!
//! The crate offers three independent routes to the atomic dynamics:
//!
//! * [`markov`]: decay rates, closed-form RDDI, interaction ranges and the
//!   ideal excitation-exchange evolution, with a numerical principal-value
//!   integral as a cross-check.
//! * [`nonmarkov`]: the exact near-cutoff amplitude obtained from the Laplace
//!   transform, expressed through five polynomial roots and the Faddeeva
//!   function.
//! * [`simulator`]: brute-force integration of the single-excitation
//!   Schrödinger equation over a discretized continuum of guided modes.
//!
//! [`entanglement`] turns amplitude traces into concurrence, and
//! [`scenario`] holds configuration, presets and run orchestration used by
//! the `rddi` binary.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod entanglement;
mod error;
pub mod markov;
pub mod nonmarkov;
pub mod poly;
pub mod quad;
pub mod scenario;
pub mod simulator;
pub mod special;
pub mod spectra;

pub use error::{Error, ErrorKind, Result};
pub use num_complex::Complex64;
