//! Scale-aware violation thresholds.
//!
//! The defining inequalities of the convexity classes are exact; a sampled
//! residual only counts as a violation when it clears the floating-point
//! noise floor for the magnitudes involved.

/// Default absolute tolerance.
pub const DEFAULT_TOL_ABS: f64 = 1e-12;

/// Default relative tolerance.
pub const DEFAULT_TOL_REL: f64 = 1e-9;

/// Violation threshold: `tol_abs + tol_rel * (1 + max_abs)`, where `max_abs`
/// is the largest |f| observed while scanning.
pub fn tau(tol_abs: f64, tol_rel: f64, max_abs: f64) -> f64 {
    tol_abs + tol_rel * (1.0 + max_abs)
}

/// Threshold with the default tolerances.
pub fn default_tau(max_abs: f64) -> f64 {
    tau(DEFAULT_TOL_ABS, DEFAULT_TOL_REL, max_abs)
}
