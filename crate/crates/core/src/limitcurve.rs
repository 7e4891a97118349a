//! Metrics of the limiting s-curve f(lambda) = lambda^s X + (1-lambda)^s Y:
//! maximum height, arc length, and local inclination.
//!
//! X and Y play the roles of the function values at the two endpoints the
//! curve joins; for X = Y = 1 the maximum height is 2^(1-s) at lambda = 1/2.

use serde::Serialize;

use crate::error::Error;
use crate::quad::{adaptive_gk15, QuadResult};
use crate::Result;

fn check_s(s: f64) -> Result<()> {
    if s > 0.0 && s <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("s must lie in (0, 1], got {s}")))
    }
}

/// Curve value lambda^s X + (1-lambda)^s Y with 0^s = 0.
pub fn curve_value(s: f64, lambda: f64, x_val: f64, y_val: f64) -> Result<f64> {
    check_s(s)?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    Ok(lambda.powf(s) * x_val + (1.0 - lambda).powf(s) * y_val)
}

/// Maximum of the curve over [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeightMax {
    pub value: f64,
    pub argmax: f64,
}

/// Golden-section maximization of the curve (concave in lambda for s <= 1
/// and X, Y >= 0, so the search is safe). Interval tolerance 1e-12; the
/// endpoints and midpoint are checked as well.
pub fn height_max(s: f64, x_val: f64, y_val: f64) -> Result<HeightMax> {
    check_s(s)?;
    if x_val < 0.0 || y_val < 0.0 {
        return Err(Error::invalid("height_max needs X, Y >= 0"));
    }
    let f = |l: f64| l.powf(s) * x_val + (1.0 - l).powf(s) * y_val;

    const INVPHI: f64 = 0.618033988749894848;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > 1e-12 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
    }
    let interior = 0.5 * (a + b);

    let mut best = HeightMax { value: f(0.0), argmax: 0.0 };
    for cand in [0.5, 1.0, interior] {
        let v = f(cand);
        if v > best.value {
            best = HeightMax { value: v, argmax: cand };
        }
    }
    Ok(best)
}

/// Arc length of the curve with its quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveLength {
    pub length: f64,
    pub error_estimate: f64,
    pub converged: bool,
}

/// Arc length integral over lambda in [0, 1]:
///
/// ```text
/// L = int_0^1 sqrt(1 + (s lambda^(s-1) X - s (1-lambda)^(s-1) Y)^2) dlambda
/// ```
///
/// The integrand blows up like lambda^(s-1) at the endpoints for s < 1 but
/// stays integrable. The integral is split at 1/2 and each half is mapped by
/// lambda = u^(1/s) (mirrored on the right), which turns the integrand into
/// a bounded one; adaptive Gauss-Kronrod then integrates it to `tol`.
pub fn curve_length(s: f64, x_val: f64, y_val: f64, tol: f64) -> Result<CurveLength> {
    check_s(s)?;
    if tol <= 0.0 {
        return Err(Error::invalid("tol must be positive"));
    }
    if !x_val.is_finite() || !y_val.is_finite() {
        return Err(Error::invalid("X and Y must be finite"));
    }
    let upper = 2f64.powf(-s);
    let half = |a: f64, b: f64| -> QuadResult {
        adaptive_gk15(
            |u| substituted_speed(s, a, b, u),
            0.0,
            upper,
            tol / 2.0,
            4000,
        )
    };
    let left = half(x_val, y_val);
    let right = half(y_val, x_val);
    Ok(CurveLength {
        length: left.value + right.value,
        error_estimate: left.error_estimate + right.error_estimate,
        converged: left.converged && right.converged,
    })
}

/// Substituted arc-length integrand for the half nearest the endpoint whose
/// value is `a` (the other endpoint value is `b`):
///
/// ```text
/// phi(u) = (1/s) sqrt(u^(2(1-s)/s) + (s a - s b u^((1-s)/s) (1 - u^(1/s))^(s-1))^2)
/// ```
///
/// All exponents of u are non-negative for s in (0, 1], so nothing diverges
/// as u -> 0; the limit there is `a`.
fn substituted_speed(s: f64, a: f64, b: f64, u: f64) -> f64 {
    let e = (1.0 - s) / s;
    let ue = u.powf(e);
    let tail = (1.0 - u.powf(1.0 / s)).powf(s - 1.0);
    let core = s * a - s * b * ue * tail;
    (ue * ue + core * core).sqrt() / s
}

/// First derivative of the curve: s lambda^(s-1) X - s (1-lambda)^(s-1) Y.
///
/// For s < 1 this diverges at an endpoint whose coefficient is nonzero; that
/// case is reported as [`Error::Divergent`] with the sign of the infinity.
pub fn inclination(s: f64, lambda: f64, x_val: f64, y_val: f64) -> Result<f64> {
    check_s(s)?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    if s < 1.0 {
        if lambda == 0.0 {
            if x_val != 0.0 {
                return Err(Error::Divergent { at: 0.0, sign: x_val.signum() });
            }
            return Ok(-s * y_val);
        }
        if lambda == 1.0 {
            if y_val != 0.0 {
                return Err(Error::Divergent { at: 1.0, sign: -y_val.signum() });
            }
            return Ok(s * x_val);
        }
    }
    Ok(s * lambda.powf(s - 1.0) * x_val - s * (1.0 - lambda).powf(s - 1.0) * y_val)
}

/// Height, arc length, and bookkeeping for one (s, X, Y).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveMetrics {
    pub s: f64,
    #[serde(rename = "X")]
    pub fx: f64,
    #[serde(rename = "Y")]
    pub fy: f64,
    pub height_max: f64,
    pub height_argmax: f64,
    pub length: f64,
    pub quadrature_error_estimate: f64,
    pub length_converged: bool,
}

/// Compute all metrics of the limiting curve.
pub fn curve_metrics(s: f64, x_val: f64, y_val: f64, tol: f64) -> Result<CurveMetrics> {
    let h = height_max(s, x_val, y_val)?;
    let l = curve_length(s, x_val, y_val, tol)?;
    Ok(CurveMetrics {
        s,
        fx: x_val,
        fy: y_val,
        height_max: h.value,
        height_argmax: h.argmax,
        length: l.length,
        quadrature_error_estimate: l.error_estimate,
        length_converged: l.converged,
    })
}
