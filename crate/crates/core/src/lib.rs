//! Spectral and separation diagnostics for self-similar measures with overlaps.
//!
//! The crate computes `L^q`-spectra, multifractal (Legendre) spectra and
//! dimension estimates for self-similar measures generated by weighted
//! iterated function systems of similarities, together with exact
//! (number-field) and numeric finite-scale diagnostics for the separation
//! conditions (OSC / WSC / AWSC / ESC / WESC) that govern when the
//! multifractal formalism is valid.
//!
//! Module map:
//!
//! * [`algebra`] — exact arithmetic in a number field `Q(lambda)`, so that
//!   equality of composed similarity maps is decided exactly.
//! * [`ifs`] — weighted IFS model, validation, attractor bounds, sections
//!   `W_n` and separation-condition classification.
//! * [`spectrum`] — the spectrum function `T(q)`, the piecewise `tau` on
//!   `[0,1]`, the `min{q-1, T(q)}` branch for `q >= 1` and the Legendre
//!   transform with validity annotations.
//! * [`census`] — exact enumeration of word compositions with canonical-form
//!   deduplication and all finite-scale overlap diagnostics.
//! * [`dual`] — the conjugate-embedding dual affine system on `C^m` with its
//!   quantitative separation constants.
//! * [`empirical`] — dyadic discretization of the measure and empirical
//!   `tau` estimates used to validate the theory.
//! * [`config`] / [`report`] — run configuration and report assembly used by
//!   the command-line interface.

pub mod algebra;
pub mod census;
pub mod config;
pub mod dual;
pub mod empirical;
pub mod error;
pub mod ifs;
pub mod render;
pub mod report;
pub mod solve;
pub mod spectrum;
pub mod sweep;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
