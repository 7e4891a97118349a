//! Convexity classes as residual functions, the h-chord, the bent-chord
//! geometric test, and modulating-function property checks.
//!
//! Every class is expressed as a residual: the upper bound of its defining
//! inequality minus the function value at the combination point. A residual
//! that is non-negative at a sample means the inequality holds there.

use serde::Serialize;

use crate::error::{Error, EvalError};
use crate::expr::{grid_points, EvalDomain, Expr};
use crate::tolerance;
use crate::Result;

// ---------------------------------------------------------------------------
// Modulating functions
// ---------------------------------------------------------------------------

/// Shape of a modulating function h.
#[derive(Debug, Clone, PartialEq)]
pub enum HKind {
    /// h(t) = t (ordinary convexity).
    Identity,
    /// h(t) = t^k.
    Power(f64),
    /// h(t) = 1/t (Godunova-Levin).
    Reciprocal,
    /// h(t) = 1 (P-functions).
    One,
    /// User-supplied expression in `t`.
    Custom(Expr),
}

/// The function h together with optionally cached sampled property flags.
///
/// The flags are evidence from sampling, never proof; they are produced by
/// [`h_property_check`] and each records its worst witness.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulatingFn {
    pub kind: HKind,
    pub flags: Option<Box<HPropertyReport>>,
}

impl ModulatingFn {
    pub fn identity() -> Self {
        Self::from_kind(HKind::Identity)
    }

    pub fn power(k: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::invalid("power exponent must be finite"));
        }
        Ok(Self::from_kind(HKind::Power(k)))
    }

    pub fn reciprocal() -> Self {
        Self::from_kind(HKind::Reciprocal)
    }

    pub fn one() -> Self {
        Self::from_kind(HKind::One)
    }

    pub fn custom(e: Expr) -> Self {
        Self::from_kind(HKind::Custom(e))
    }

    fn from_kind(kind: HKind) -> Self {
        ModulatingFn { kind, flags: None }
    }

    /// Parse the spec form accepted on the command line: `identity`,
    /// `power:<s>`, `reciprocal`, `one`, or `expr:<text>`.
    pub fn parse_spec(spec: &str) -> Result<Self> {
        let s = spec.trim();
        match s {
            "identity" => return Ok(Self::identity()),
            "reciprocal" => return Ok(Self::reciprocal()),
            "one" => return Ok(Self::one()),
            _ => {}
        }
        if let Some(arg) = s.strip_prefix("power:") {
            let k: f64 = arg
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("cannot parse power exponent `{arg}`")))?;
            return Self::power(k);
        }
        if let Some(text) = s.strip_prefix("expr:") {
            return Ok(Self::custom(crate::expr::parse(text)?));
        }
        Err(Error::invalid(format!(
            "unknown h spec `{spec}`; expected identity, power:<s>, reciprocal, one, or expr:<text>"
        )))
    }

    /// Canonical spec string, used when echoing configuration.
    pub fn describe(&self) -> String {
        match &self.kind {
            HKind::Identity => "identity".to_string(),
            HKind::Power(k) => format!("power:{k}"),
            HKind::Reciprocal => "reciprocal".to_string(),
            HKind::One => "one".to_string(),
            HKind::Custom(e) => format!("expr:{e}"),
        }
    }

    /// Evaluate h at `u`.
    pub fn eval(&self, u: f64) -> std::result::Result<f64, EvalError> {
        let err = |reason: &str| EvalError {
            node: self.describe(),
            t: u,
            reason: reason.to_string(),
        };
        let v = match &self.kind {
            HKind::Identity => u,
            HKind::Power(k) => {
                if u < 0.0 {
                    return Err(err("negative argument to a power h"));
                }
                if u == 0.0 && *k < 0.0 {
                    return Err(err("zero argument with a negative exponent"));
                }
                if u == 0.0 && *k == 0.0 {
                    1.0
                } else {
                    u.powf(*k)
                }
            }
            HKind::Reciprocal => {
                if u == 0.0 {
                    return Err(err("reciprocal h at zero"));
                }
                1.0 / u
            }
            HKind::One => 1.0,
            HKind::Custom(e) => return e.eval(u),
        };
        if !v.is_finite() {
            return Err(err("non-finite h value"));
        }
        Ok(v)
    }

    /// For h(t) = t^k with k <= -1 or k = 0 the chord geometry is
    /// inconclusive; returns the offending exponent. `reciprocal` is k = -1
    /// and `one` is k = 0.
    pub fn caution_exponent(&self) -> Option<f64> {
        match self.kind {
            HKind::Power(k) if k <= -1.0 || k == 0.0 => Some(k),
            HKind::Reciprocal => Some(-1.0),
            HKind::One => Some(0.0),
            _ => None,
        }
    }

    /// Attach sampled property flags.
    pub fn with_flags(mut self, grid: usize) -> Result<Self> {
        let report = h_property_check(&self, grid)?;
        self.flags = Some(Box::new(report));
        Ok(self)
    }
}

// ---------------------------------------------------------------------------
// Class specifications
// ---------------------------------------------------------------------------

/// One convexity class and its parameters.
///
/// Both first-sense variants realize the same constraint curve
/// alpha^s + beta^s = 1: the combination weights are (t, (1-t^s)^(1/s)) and
/// the bound weights (t^s, 1-t^s). They are kept as distinct tags because
/// they name different presentations of the class in reports.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassSpec {
    Convex,
    SConvexFirst { s: f64 },
    SConvexFirstPinheiro { s: f64 },
    SConvexSecond { s: f64 },
    GodunovaLevin,
    PFunction,
    HConvex(ModulatingFn),
    HConcave(ModulatingFn),
    HMidconvex(ModulatingFn),
    HMidconcave(ModulatingFn),
}

fn check_s(s: f64) -> Result<f64> {
    if s > 0.0 && s <= 1.0 {
        Ok(s)
    } else {
        Err(Error::invalid(format!("s must lie in (0, 1], got {s}")))
    }
}

impl ClassSpec {
    pub fn s_convex_first(s: f64) -> Result<Self> {
        Ok(ClassSpec::SConvexFirst { s: check_s(s)? })
    }

    pub fn s_convex_first_pinheiro(s: f64) -> Result<Self> {
        Ok(ClassSpec::SConvexFirstPinheiro { s: check_s(s)? })
    }

    pub fn s_convex_second(s: f64) -> Result<Self> {
        Ok(ClassSpec::SConvexSecond { s: check_s(s)? })
    }

    /// Parse a class name as accepted on the command line. The h-classes
    /// require `h` to be supplied.
    pub fn parse_spec(name: &str, h: Option<ModulatingFn>) -> Result<Self> {
        let need_h = |h: Option<ModulatingFn>| {
            h.ok_or_else(|| Error::invalid(format!("class `{name}` needs an h (--h)")))
        };
        let s_arg = |spec: &str, prefix: &str| -> Result<f64> {
            let arg = &spec[prefix.len()..];
            arg.trim()
                .parse()
                .map_err(|_| Error::invalid(format!("cannot parse s in `{spec}`")))
        };
        let n = name.trim();
        match n {
            "convex" => Ok(ClassSpec::Convex),
            "godunova-levin" => Ok(ClassSpec::GodunovaLevin),
            "p-function" => Ok(ClassSpec::PFunction),
            "hconvex" => Ok(ClassSpec::HConvex(need_h(h)?)),
            "hconcave" => Ok(ClassSpec::HConcave(need_h(h)?)),
            "hmidconvex" => Ok(ClassSpec::HMidconvex(need_h(h)?)),
            "hmidconcave" => Ok(ClassSpec::HMidconcave(need_h(h)?)),
            _ => {
                if n.starts_with("sconvex-first-pinheiro:") {
                    Self::s_convex_first_pinheiro(s_arg(n, "sconvex-first-pinheiro:")?)
                } else if n.starts_with("sconvex-first:") {
                    Self::s_convex_first(s_arg(n, "sconvex-first:")?)
                } else if n.starts_with("sconvex-second:") {
                    Self::s_convex_second(s_arg(n, "sconvex-second:")?)
                } else {
                    Err(Error::invalid(format!(
                        "unknown class `{name}`; expected convex, sconvex-first:<s>, \
                         sconvex-first-pinheiro:<s>, sconvex-second:<s>, godunova-levin, \
                         p-function, hconvex, hconcave, hmidconvex, or hmidconcave"
                    )))
                }
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ClassSpec::Convex => "convex".to_string(),
            ClassSpec::SConvexFirst { s } => format!("sconvex-first:{s}"),
            ClassSpec::SConvexFirstPinheiro { s } => format!("sconvex-first-pinheiro:{s}"),
            ClassSpec::SConvexSecond { s } => format!("sconvex-second:{s}"),
            ClassSpec::GodunovaLevin => "godunova-levin".to_string(),
            ClassSpec::PFunction => "p-function".to_string(),
            ClassSpec::HConvex(h) => format!("hconvex[h={}]", h.describe()),
            ClassSpec::HConcave(h) => format!("hconcave[h={}]", h.describe()),
            ClassSpec::HMidconvex(h) => format!("hmidconvex[h={}]", h.describe()),
            ClassSpec::HMidconcave(h) => format!("hmidconcave[h={}]", h.describe()),
        }
    }

    /// First-sense classes can push the combination point out of [x, y].
    pub fn is_first_sense(&self) -> bool {
        matches!(
            self,
            ClassSpec::SConvexFirst { .. } | ClassSpec::SConvexFirstPinheiro { .. }
        )
    }

    /// Classes whose defining inequality is reversed (lower bound).
    pub fn is_concave(&self) -> bool {
        matches!(self, ClassSpec::HConcave(_) | ClassSpec::HMidconcave(_))
    }

    /// Classes that compare against the midpoint only.
    pub fn is_midpoint(&self) -> bool {
        matches!(self, ClassSpec::HMidconvex(_) | ClassSpec::HMidconcave(_))
    }

    /// Combination parameter range: Godunova-Levin excludes the endpoints.
    pub fn open_t(&self) -> bool {
        matches!(self, ClassSpec::GodunovaLevin)
    }

    pub fn modulating(&self) -> Option<&ModulatingFn> {
        match self {
            ClassSpec::HConvex(h)
            | ClassSpec::HConcave(h)
            | ClassSpec::HMidconvex(h)
            | ClassSpec::HMidconcave(h) => Some(h),
            _ => None,
        }
    }

    /// Weights (w1, w2) of f(x) and f(y) in the class bound at parameter t.
    pub(crate) fn bound_weights(&self, t: f64) -> Result<(f64, f64)> {
        match self {
            ClassSpec::Convex => Ok((t, 1.0 - t)),
            ClassSpec::SConvexFirst { s } | ClassSpec::SConvexFirstPinheiro { s } => {
                let ts = t.powf(*s);
                Ok((ts, 1.0 - ts))
            }
            ClassSpec::SConvexSecond { s } => Ok((t.powf(*s), (1.0 - t).powf(*s))),
            ClassSpec::GodunovaLevin => {
                if t <= 0.0 || t >= 1.0 {
                    return Err(Error::precondition(format!(
                        "Godunova-Levin needs t strictly inside (0, 1), got {t}"
                    )));
                }
                Ok((1.0 / t, 1.0 / (1.0 - t)))
            }
            ClassSpec::PFunction => Ok((1.0, 1.0)),
            ClassSpec::HConvex(h) | ClassSpec::HConcave(h) => {
                Ok((h.eval(t)?, h.eval(1.0 - t)?))
            }
            ClassSpec::HMidconvex(h) | ClassSpec::HMidconcave(h) => {
                let w = h.eval(0.5)?;
                Ok((w, w))
            }
        }
    }

    /// Combination point at parameter t.
    pub(crate) fn combination_point(&self, x: f64, y: f64, t: f64) -> f64 {
        match self {
            ClassSpec::SConvexFirst { s } | ClassSpec::SConvexFirstPinheiro { s } => {
                let beta = (1.0 - t.powf(*s)).max(0.0).powf(1.0 / s);
                t * x + beta * y
            }
            ClassSpec::HMidconvex(_) | ClassSpec::HMidconcave(_) => 0.5 * (x + y),
            _ => t * x + (1.0 - t) * y,
        }
    }
}

// ---------------------------------------------------------------------------
// Residual samples
// ---------------------------------------------------------------------------

/// One evaluated sample of a class inequality.
///
/// `residual >= 0` iff the defining inequality holds at this sample; for the
/// concave classes the sign convention is flipped so that this stays true.
/// `in_domain = false` marks combination points that left the interval
/// spanned by x and y (and, when a domain is supplied, the declared domain
/// too) -- possible only for the first-sense classes and the raw-weight form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualSample {
    pub x: f64,
    pub y: f64,
    pub t: f64,
    pub combination_point: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub in_domain: bool,
}

/// Evaluate the residual of class `c` for `f` at endpoints (x, y) and
/// combination parameter `t`. `domain`, when given, widens the in-domain
/// check for first-sense combination points to the declared interval.
pub fn class_residual(
    f: &Expr,
    c: &ClassSpec,
    x: f64,
    y: f64,
    t: f64,
    domain: Option<&EvalDomain>,
) -> Result<ResidualSample> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::precondition(format!("t must lie in [0, 1], got {t}")));
    }
    let (w1, w2) = c.bound_weights(t)?;
    let point = c.combination_point(x, y, t);
    let in_domain = if c.is_first_sense() {
        let (lo, hi) = (x.min(y), x.max(y));
        (point >= lo && point <= hi) || domain.map_or(false, |d| d.contains(point))
    } else {
        true
    };
    let fx = f.eval(x)?;
    let fy = f.eval(y)?;
    let lhs = f.eval(point)?;
    let rhs = w1 * fx + w2 * fy;
    let residual = if c.is_concave() { lhs - rhs } else { rhs - lhs };
    Ok(ResidualSample {
        x,
        y,
        t: if c.is_midpoint() { 0.5 } else { t },
        combination_point: point,
        lhs,
        rhs,
        residual,
        in_domain,
    })
}

/// Midpoint residual h(1/2)[f(x) + f(y)] - f((x+y)/2).
pub fn midconvex_residual(f: &Expr, h: &ModulatingFn, x: f64, y: f64) -> Result<ResidualSample> {
    class_residual(f, &ClassSpec::HMidconvex(h.clone()), x, y, 0.5, None)
}

/// Local midpoint residual h(1/2)[f(x+p) + f(x-p)] - f(x) for p > 0.
pub fn local_midconvex_residual(f: &Expr, h: &ModulatingFn, x: f64, p: f64) -> Result<f64> {
    if p <= 0.0 {
        return Err(Error::precondition(format!("p must be positive, got {p}")));
    }
    let w = h.eval(0.5)?;
    Ok(w * (f.eval(x + p)? + f.eval(x - p)?) - f.eval(x)?)
}

/// Raw two-weight first-sense evaluation f(alpha x + beta y) against
/// alpha^s f(x) + beta^s f(y), with no constraint tying the weights.
///
/// `in_domain` is false when the combination point leaves [min(x,y),
/// max(x,y)]; the residual is still computed whenever f evaluates there.
/// The sample records alpha in the `t` slot.
pub fn first_sense_raw_residual(
    f: &Expr,
    s: f64,
    x: f64,
    y: f64,
    alpha: f64,
    beta: f64,
) -> Result<ResidualSample> {
    check_s(s)?;
    if alpha < 0.0 || beta < 0.0 {
        return Err(Error::precondition("weights must be non-negative".to_string()));
    }
    let point = alpha * x + beta * y;
    let in_domain = point >= x.min(y) && point <= x.max(y);
    let fx = f.eval(x)?;
    let fy = f.eval(y)?;
    let lhs = f.eval(point)?;
    let rhs = alpha.powf(s) * fx + beta.powf(s) * fy;
    Ok(ResidualSample {
        x,
        y,
        t: alpha,
        combination_point: point,
        lhs,
        rhs,
        residual: rhs - lhs,
        in_domain,
    })
}

// ---------------------------------------------------------------------------
// h-chord geometry
// ---------------------------------------------------------------------------

fn reject_caution(h: &ModulatingFn) -> Result<()> {
    match h.caution_exponent() {
        Some(k) => Err(Error::Caution { k }),
        None => Ok(()),
    }
}

fn h_at_chord(h: &ModulatingFn, u: f64) -> Result<f64> {
    h.eval(u).map_err(|e| {
        if u == 0.0 || u == 1.0 {
            Error::HEndpoint { at: u }
        } else {
            Error::Eval(e)
        }
    })
}

/// The h-chord L(t; h) = [f(y) - f(x)] h((t-x)/(y-x)) + f(x) joining the
/// graph points at x and y, evaluated at t in [x, y]. Requires x < y.
///
/// When h(0) = 0 and h(1) = 1 the chord agrees with f at both endpoints;
/// with the identity h it is the ordinary straight chord.
pub fn h_chord(f: &Expr, h: &ModulatingFn, x: f64, y: f64, t: f64) -> Result<f64> {
    reject_caution(h)?;
    if !(x < y) {
        return Err(Error::precondition(format!("need x < y, got x={x}, y={y}")));
    }
    if t < x || t > y {
        return Err(Error::precondition(format!(
            "chord parameter t={t} outside [{x}, {y}]"
        )));
    }
    let u = (t - x) / (y - x);
    let hu = h_at_chord(h, u)?;
    Ok((f.eval(y)? - f.eval(x)?) * hu + f.eval(x)?)
}

/// Outcome of the bent-chord test on a compact subinterval J.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BentChordResult {
    /// Largest L - f over the interior grid of J.
    pub sup_inner: f64,
    /// Largest L - f at the two endpoints of J.
    pub sup_boundary: f64,
    /// Where the interior supremum was attained.
    pub argmax_inner: f64,
    /// sup_inner >= sup_boundary - tau.
    pub pass: bool,
    pub tau: f64,
}

/// Bent-chord test: the graph of f lies below the h-chord over (x, y) in the
/// sup sense if the supremum of L - f over the interior of J dominates its
/// boundary values. `n` grid points are laid over J; the endpoints are
/// evaluated separately as the boundary.
pub fn bent_chord_test(
    f: &Expr,
    h: &ModulatingFn,
    j: &EvalDomain,
    outer: (f64, f64),
    n: usize,
) -> Result<BentChordResult> {
    reject_caution(h)?;
    let (x, y) = outer;
    if !(x < y) {
        return Err(Error::precondition(format!("need x < y, got x={x}, y={y}")));
    }
    if j.lo < x || j.hi > y {
        return Err(Error::precondition(format!(
            "J = {j} must sit inside the outer pair [{x}, {y}]"
        )));
    }
    if n < 3 {
        return Err(Error::invalid("bent-chord test needs n >= 3"));
    }
    let fx = f.eval(x)?;
    let fy = f.eval(y)?;
    let gap = |t: f64| -> Result<f64> {
        let u = (t - x) / (y - x);
        let l = (fy - fx) * h_at_chord(h, u)? + fx;
        Ok(l - f.eval(t)?)
    };
    let boundary_lo = gap(j.lo)?;
    let boundary_hi = gap(j.hi)?;
    let sup_boundary = boundary_lo.max(boundary_hi);

    let grid = grid_points(j.lo, j.hi, n);
    let mut sup_inner = f64::NEG_INFINITY;
    let mut argmax_inner = grid[1];
    let mut max_abs_f = fx.abs().max(fy.abs());
    for &t in &grid[1..n - 1] {
        let g = gap(t)?;
        max_abs_f = max_abs_f.max(f.eval(t)?.abs());
        if g > sup_inner {
            sup_inner = g;
            argmax_inner = t;
        }
    }
    let tau = tolerance::default_tau(max_abs_f);
    Ok(BentChordResult {
        sup_inner,
        sup_boundary,
        argmax_inner,
        pass: sup_inner >= sup_boundary - tau,
        tau,
    })
}

/// Which s-convexity sense a minimum-distance constant refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SConvexSense {
    First,
    Second,
}

/// Minimum domain-point distance constants: 2^-1 - 2^(-1/s) for the first
/// sense and 2^-s - 2^-1 for the second. Values may be negative for some s
/// and are returned as-is.
pub fn min_domain_distance(sense: SConvexSense, s: f64) -> Result<f64> {
    check_s(s)?;
    Ok(match sense {
        SConvexSense::First => 0.5 - 2f64.powf(-1.0 / s),
        SConvexSense::Second => 2f64.powf(-s) - 0.5,
    })
}

// ---------------------------------------------------------------------------
// Sampled property flags for h
// ---------------------------------------------------------------------------

/// Status of a sampled property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagStatus {
    Pass,
    Fail,
    Indeterminate,
}

/// One sampled property with its worst witness.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Flag {
    pub status: FlagStatus,
    /// Worst margin observed (sign convention: >= 0 passes).
    pub worst_margin: Option<f64>,
    /// Sample(s) where the worst margin occurred.
    pub witness: Option<Vec<f64>>,
}

impl Flag {
    fn indeterminate() -> Self {
        Flag {
            status: FlagStatus::Indeterminate,
            worst_margin: None,
            witness: None,
        }
    }

    fn from_worst(worst: f64, witness: Vec<f64>, slack: f64) -> Self {
        Flag {
            status: if worst >= -slack {
                FlagStatus::Pass
            } else {
                FlagStatus::Fail
            },
            worst_margin: Some(worst),
            witness: Some(witness),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == FlagStatus::Pass
    }
}

/// Sampled properties of a modulating function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HPropertyReport {
    pub grid: usize,
    pub pair_grid: usize,
    pub nonneg: Flag,
    pub nondecreasing: Flag,
    /// h(a) >= a on (0,1) (Jensen-side hypothesis).
    pub h_alpha_ge_alpha: Flag,
    /// h(a) + h(1-a) <= 1 on (0,1) (the alternative hypothesis).
    pub h_sum_le_one: Flag,
    /// h(ab) >= h(a) h(b) on a pair grid over (0,1)^2.
    pub supermultiplicative: Flag,
    /// h just inside 0 (1e-9 inset), if evaluable.
    pub h_at_zero_plus: Option<f64>,
    /// h at 1 (falling back to a 1e-9 inset), if evaluable.
    pub h_at_one: Option<f64>,
    /// Nondecreasing and h(0+) ~ 0.
    pub control_function: Flag,
}

/// Sample h over (0,1) (endpoints inset by one grid step) and fill every
/// property flag. Supermultiplicativity uses a pair grid of at most 33x33;
/// sampling can refute the two-variable property but never verify it.
/// Evaluation failures mark the affected flags indeterminate.
pub fn h_property_check(h: &ModulatingFn, grid: usize) -> Result<HPropertyReport> {
    if grid < 3 {
        return Err(Error::invalid("h_property_check needs grid >= 3"));
    }
    let alphas = EvalDomain::new(0.0, 1.0, true, true)?.grid(grid);
    let values: Vec<std::result::Result<f64, EvalError>> =
        alphas.iter().map(|&a| h.eval(a)).collect();

    let max_abs_h = values
        .iter()
        .filter_map(|v| v.as_ref().ok())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let slack = 1e-12 * (1.0 + max_abs_h);

    let scan = |margin: &dyn Fn(usize) -> Option<f64>| -> Flag {
        let mut worst: Option<(f64, f64)> = None;
        for (i, &a) in alphas.iter().enumerate() {
            match margin(i) {
                Some(m) => {
                    if worst.map_or(true, |(w, _)| m < w) {
                        worst = Some((m, a));
                    }
                }
                None => return Flag::indeterminate(),
            }
        }
        match worst {
            Some((m, a)) => Flag::from_worst(m, vec![a], slack),
            None => Flag::indeterminate(),
        }
    };

    let val = |i: usize| values[i].as_ref().ok().copied();

    let nonneg = scan(&|i| val(i));
    let nondecreasing = {
        let mut worst: Option<(f64, f64)> = None;
        let mut indet = false;
        for i in 0..alphas.len() - 1 {
            match (val(i), val(i + 1)) {
                (Some(a), Some(b)) => {
                    let m = b - a;
                    if worst.map_or(true, |(w, _)| m < w) {
                        worst = Some((m, alphas[i]));
                    }
                }
                _ => indet = true,
            }
        }
        if indet || worst.is_none() {
            Flag::indeterminate()
        } else {
            let (m, a) = worst.expect("present");
            Flag::from_worst(m, vec![a], slack)
        }
    };
    let h_alpha_ge_alpha = scan(&|i| val(i).map(|v| v - alphas[i]));
    let h_sum_le_one = {
        // mirror index: alphas are symmetric about 1/2
        let n = alphas.len();
        scan(&|i| match (val(i), val(n - 1 - i)) {
            (Some(a), Some(b)) => Some(1.0 - (a + b)),
            _ => None,
        })
    };

    let pair_grid = grid.min(33);
    let supermultiplicative = {
        let pts = EvalDomain::new(0.0, 1.0, true, true)?.grid(pair_grid);
        let mut worst: Option<(f64, Vec<f64>)> = None;
        let mut indet = false;
        'outer: for &a in &pts {
            for &b in &pts {
                let m = match (h.eval(a), h.eval(b), h.eval(a * b)) {
                    (Ok(ha), Ok(hb), Ok(hab)) => hab - ha * hb,
                    _ => {
                        indet = true;
                        break 'outer;
                    }
                };
                if worst.as_ref().map_or(true, |(w, _)| m < *w) {
                    worst = Some((m, vec![a, b]));
                }
            }
        }
        match (indet, worst) {
            (false, Some((m, w))) => Flag::from_worst(m, w, slack),
            _ => Flag::indeterminate(),
        }
    };

    let h_at_zero_plus = h.eval(1e-9).ok();
    let h_at_one = h.eval(1.0).or_else(|_| h.eval(1.0 - 1e-9)).ok();

    let control_function = match (&nondecreasing.status, h_at_zero_plus) {
        (FlagStatus::Indeterminate, _) | (_, None) => Flag::indeterminate(),
        (status, Some(h0)) => Flag {
            status: if *status == FlagStatus::Pass && h0 <= 1e-3 {
                FlagStatus::Pass
            } else {
                FlagStatus::Fail
            },
            worst_margin: Some(1e-3 - h0),
            witness: Some(vec![1e-9]),
        },
    };

    Ok(HPropertyReport {
        grid,
        pair_grid,
        nonneg,
        nondecreasing,
        h_alpha_ge_alpha,
        h_sum_le_one,
        supermultiplicative,
        h_at_zero_plus,
        h_at_one,
        control_function,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn f(text: &str) -> Expr {
        parse(text).unwrap()
    }

    #[test]
    fn convex_residual_parabola() {
        let s = class_residual(&f("t^2"), &ClassSpec::Convex, 0.0, 1.0, 0.5, None).unwrap();
        assert_eq!(s.combination_point, 0.5);
        assert_eq!(s.lhs, 0.25);
        assert_eq!(s.rhs, 0.5);
        assert_eq!(s.residual, 0.25);
        assert!(s.in_domain);
    }

    #[test]
    fn second_sense_residual() {
        let c = ClassSpec::s_convex_second(0.5).unwrap();
        let s = class_residual(&f("t^2"), &c, 0.0, 1.0, 0.5, None).unwrap();
        assert!((s.rhs - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((s.residual - (0.5f64.sqrt() - 0.25)).abs() < 1e-15);
    }

    #[test]
    fn godunova_levin_residual_and_precondition() {
        let s = class_residual(&f("1"), &ClassSpec::GodunovaLevin, 0.2, 0.8, 0.5, None).unwrap();
        assert_eq!(s.rhs, 4.0);
        assert_eq!(s.residual, 3.0);
        assert!(class_residual(&f("1"), &ClassSpec::GodunovaLevin, 0.2, 0.8, 0.0, None).is_err());
        assert!(class_residual(&f("1"), &ClassSpec::GodunovaLevin, 0.2, 0.8, 1.0, None).is_err());
    }

    #[test]
    fn first_sense_combination_can_leave_the_interval() {
        // weights alpha = t = 0.5, beta = (1 - 0.5^0.5)^2 for s = 0.5
        let c = ClassSpec::s_convex_first(0.5).unwrap();
        let s = class_residual(&f("t^2"), &c, 0.2, 0.8, 0.5, None).unwrap();
        let beta = (1.0 - 0.5f64.powf(0.5)).powf(2.0);
        assert!((s.combination_point - (0.1 + beta * 0.8)).abs() < 1e-15);
        assert!(s.combination_point < 0.2);
        assert!(!s.in_domain);
        // supplying a covering domain widens the check
        let d = EvalDomain::closed(0.0, 1.0).unwrap();
        let s = class_residual(&f("t^2"), &c, 0.2, 0.8, 0.5, Some(&d)).unwrap();
        assert!(s.in_domain);
    }

    #[test]
    fn pinheiro_raw_weights_example() {
        let s = first_sense_raw_residual(&f("t^2"), 0.5, 0.25, 0.25, 0.5, 1.0).unwrap();
        assert_eq!(s.combination_point, 0.375);
        assert!(!s.in_domain);
        // rhs = sqrt(0.5) * f(1/4) + 1 * f(1/4)
        let expect = 0.5f64.powf(0.5) * 0.0625 + 0.0625;
        assert!((s.rhs - expect).abs() < 1e-15);
    }

    #[test]
    fn midconvex_residuals() {
        let h = ModulatingFn::identity();
        let s = midconvex_residual(&f("t^2"), &h, 0.0, 1.0).unwrap();
        assert_eq!(s.residual, 0.25);
        assert_eq!(s.t, 0.5);

        let h = ModulatingFn::power(0.5).unwrap();
        let s = midconvex_residual(&f("t^2"), &h, 0.0, 1.0).unwrap();
        assert!((s.residual - (0.5f64.sqrt() - 0.25)).abs() < 1e-15);

        // affine equality case
        let h = ModulatingFn::identity();
        for (a, b) in [(0.1, 0.9), (0.25, 0.3), (0.0, 1.0)] {
            let s = midconvex_residual(&f("t"), &h, a, b).unwrap();
            assert!(s.residual.abs() < 1e-15);
        }
    }

    #[test]
    fn local_midconvex_residual_values() {
        let h = ModulatingFn::identity();
        let r = local_midconvex_residual(&f("t^2"), &h, 0.5, 0.1).unwrap();
        assert!((r - 0.01).abs() < 1e-15);
        let r = local_midconvex_residual(&f("t"), &h, 0.3, 0.05).unwrap();
        assert!(r.abs() < 1e-15);
        let r = local_midconvex_residual(&f("1-t^2"), &h, 0.5, 0.1).unwrap();
        assert!((r + 0.01).abs() < 1e-15);
        assert!(local_midconvex_residual(&f("t"), &h, 0.5, 0.0).is_err());
    }

    #[test]
    fn h_chord_values() {
        let id = ModulatingFn::identity();
        let l = h_chord(&f("t^2"), &id, 0.0, 1.0, 0.5).unwrap();
        assert_eq!(l, 0.5);
        let h = ModulatingFn::power(0.5).unwrap();
        let l = h_chord(&f("t^2"), &h, 0.0, 1.0, 0.25).unwrap();
        assert_eq!(l, 0.5);
    }

    #[test]
    fn h_chord_rejects_caution_exponents() {
        for h in [
            ModulatingFn::power(0.0).unwrap(),
            ModulatingFn::power(-1.0).unwrap(),
            ModulatingFn::power(-2.0).unwrap(),
            ModulatingFn::reciprocal(),
            ModulatingFn::one(),
        ] {
            assert!(matches!(
                h_chord(&f("t^2"), &h, 0.0, 1.0, 0.5),
                Err(Error::Caution { .. })
            ));
        }
        // k in (-1, 0) is allowed by the geometry
        let h = ModulatingFn::power(-0.5).unwrap();
        assert!(h_chord(&f("t^2"), &h, 0.0, 1.0, 0.5).is_ok());
    }

    #[test]
    fn h_chord_endpoint_agreement() {
        for h in [
            ModulatingFn::identity(),
            ModulatingFn::power(0.5).unwrap(),
            ModulatingFn::power(1.5).unwrap(),
        ] {
            for text in ["t^2", "exp(t)"] {
                let e = f(text);
                let (x, y) = (0.25, 0.75);
                let lx = h_chord(&e, &h, x, y, x).unwrap();
                let ly = h_chord(&e, &h, x, y, y).unwrap();
                assert!((lx - e.eval(x).unwrap()).abs() <= 1e-9);
                assert!((ly - e.eval(y).unwrap()).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn bent_chord_convex_passes_concave_fails() {
        let id = ModulatingFn::identity();
        let j = EvalDomain::closed(0.25, 0.75).unwrap();
        let r = bent_chord_test(&f("t^2"), &id, &j, (0.0, 1.0), 101).unwrap();
        assert!((r.sup_inner - 0.25).abs() < 1e-12);
        assert!((r.sup_boundary - 0.1875).abs() < 1e-12);
        assert!(r.pass);

        let j_full = EvalDomain::closed(0.0, 1.0).unwrap();
        let r = bent_chord_test(&f("t^2"), &id, &j_full, (0.0, 1.0), 101).unwrap();
        assert!((r.sup_inner - 0.25).abs() < 1e-12);
        assert!(r.sup_boundary.abs() < 1e-12);
        assert!(r.pass);

        // concave bump: the gap L - f peaks on the boundary of J
        let j = EvalDomain::closed(0.25, 0.75).unwrap();
        let r = bent_chord_test(&f("-(t-0.5)^2 + 1"), &id, &j, (0.0, 1.0), 101).unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn min_domain_distance_constants() {
        let v = min_domain_distance(SConvexSense::Second, 0.5).unwrap();
        assert!((v - (2f64.powf(-0.5) - 0.5)).abs() < 1e-15);
        assert!((v - 0.2071).abs() < 5e-5);
        let v = min_domain_distance(SConvexSense::First, 0.5).unwrap();
        assert_eq!(v, 0.25);
        let v = min_domain_distance(SConvexSense::Second, 1.0).unwrap();
        assert_eq!(v, 0.0);
        assert!(min_domain_distance(SConvexSense::First, 0.0).is_err());
        assert!(min_domain_distance(SConvexSense::First, 1.5).is_err());
    }

    #[test]
    fn h_property_flags_power_half() {
        let h = ModulatingFn::power(0.5).unwrap();
        let r = h_property_check(&h, 101).unwrap();
        assert!(r.nonneg.passed());
        assert!(r.nondecreasing.passed());
        assert!(r.h_alpha_ge_alpha.passed());
        assert!(r.supermultiplicative.passed());
        assert!(r.control_function.passed());
        // sqrt(a) + sqrt(1-a) > 1 on (0,1): the sum condition fails
        assert_eq!(r.h_sum_le_one.status, FlagStatus::Fail);
    }

    #[test]
    fn h_property_flags_identity_and_reciprocal() {
        let r = h_property_check(&ModulatingFn::identity(), 101).unwrap();
        assert!(r.h_alpha_ge_alpha.passed());
        assert!(r.h_sum_le_one.passed());
        assert!(r.supermultiplicative.passed());
        assert!(r.control_function.passed());

        let r = h_property_check(&ModulatingFn::reciprocal(), 101).unwrap();
        assert_eq!(r.nondecreasing.status, FlagStatus::Fail);
        assert_eq!(r.control_function.status, FlagStatus::Fail);
        assert!(r.h_alpha_ge_alpha.passed());
    }

    #[test]
    fn h_spec_parsing() {
        assert!(matches!(
            ModulatingFn::parse_spec("identity").unwrap().kind,
            HKind::Identity
        ));
        assert!(matches!(
            ModulatingFn::parse_spec("power:0.5").unwrap().kind,
            HKind::Power(k) if k == 0.5
        ));
        assert!(matches!(
            ModulatingFn::parse_spec("expr:t^2").unwrap().kind,
            HKind::Custom(_)
        ));
        assert!(ModulatingFn::parse_spec("power:zzz").is_err());
        assert!(ModulatingFn::parse_spec("nope").is_err());
    }

    #[test]
    fn class_spec_parsing() {
        assert!(matches!(
            ClassSpec::parse_spec("convex", None).unwrap(),
            ClassSpec::Convex
        ));
        assert!(matches!(
            ClassSpec::parse_spec("sconvex-second:0.5", None).unwrap(),
            ClassSpec::SConvexSecond { .. }
        ));
        assert!(ClassSpec::parse_spec("sconvex-second:2", None).is_err());
        assert!(ClassSpec::parse_spec("hconvex", None).is_err());
        assert!(ClassSpec::parse_spec(
            "hconvex",
            Some(ModulatingFn::identity())
        )
        .is_ok());
    }
}
