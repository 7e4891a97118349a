//! Numerical toolkit for generalized convexity classes.
//!
//! The crate evaluates, certifies on grids, and refutes membership of real
//! functions of one variable in a family of convexity classes (ordinary
//! convexity, s-convexity in both senses, Godunova-Levin functions,
//! P-functions, and h-convexity for a user-supplied modulating function h),
//! and measures the companion geometry: h-chords, bent-chord tests,
//! modulus-of-continuity estimates, Holder fits, and limiting-curve metrics.
//!
//! Everything is sampling-based. A scan that finds no violation reports
//! `certified_on_grid`, which is evidence, not proof; a scan that finds a
//! violation reports a concrete witness that can be re-checked standalone.
//!
//! Modules:
//! - [`expr`]: parse and evaluate closed-form expressions in the variable `t`.
//! - [`classes`]: class residuals, h-chords, modulating-function property checks.
//! - [`certify`]: grid scans, witness refinement, equivalence and conjecture probes.
//! - [`continuity`]: control functions, h-continuity ratios, Holder fitting.
//! - [`limitcurve`]: height, arc length, and inclination of the limiting s-curve.


pub mod classes;

pub mod error;
pub mod expr;
pub mod limitcurve;
pub mod quad;
pub mod tolerance;

pub use error::{Error, EvalError, ParseError};
pub use expr::{EvalDomain, Expr};

/// Result alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
