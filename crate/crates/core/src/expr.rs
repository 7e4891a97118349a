//! Closed-form expressions in one variable `t`.
//!
//! Grammar (EBNF):
//!
//! ```text
//! expr    = term   { ("+" | "-") term } ;
//! term    = factor { ("*" | "/") factor } ;
//! factor  = "-" factor | power ;
//! power   = atom [ "^" factor ] ;            (* right-associative *)
//! atom    = number | "t" | "pi" | "e"
//!         | func1 "(" expr ")"
//!         | func2 "(" expr "," expr ")"
//!         | "(" expr ")" ;
//! func1   = "sin" | "cos" | "exp" | "log" | "sqrt" | "abs" ;
//! func2   = "min" | "max" | "pow" ;
//! number  = digits [ "." digits ] [ ("e"|"E") ["+"|"-"] digits ] ;
//! ```
//!
//! `^` binds tightest and is right-associative (`2^3^2` is `2^(3^2)` = 512),
//! then unary minus (`-t^2` is `-(t^2)`), then `*` `/`, then `+` `-`.
//!
//! Evaluation is pure IEEE double precision. Points where a subexpression
//! leaves its real domain (log of a non-positive value, division by zero,
//! negative base with a non-integer exponent, any non-finite intermediate)
//! produce an [`EvalError`] carrying the offending subexpression and `t`.

use std::fmt;

use crate::error::{Error, EvalError, ParseError};

/// Unary function names.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func1 {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func1 {
    fn name(self) -> &'static str {
        match self {
            Func1::Sin => "sin",
            Func1::Cos => "cos",
            Func1::Exp => "exp",
            Func1::Log => "log",
            Func1::Sqrt => "sqrt",
            Func1::Abs => "abs",
        }
    }
}

/// Binary function names.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func2 {
    Min,
    Max,
    Pow,
}

impl Func2 {
    fn name(self) -> &'static str {
        match self {
            Func2::Min => "min",
            Func2::Max => "max",
            Func2::Pow => "pow",
        }
    }
}

/// Infix binary operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

/// Named constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedConst {
    Pi,
    E,
}

/// Parsed expression tree. Immutable after parsing; safe to share across
/// threads and evaluate concurrently.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Const(NamedConst),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call1(Func1, Box<Expr>),
    Call2(Func2, Box<Expr>, Box<Expr>),
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var => write!(f, "t"),
            Expr::Const(NamedConst::Pi) => write!(f, "pi"),
            Expr::Const(NamedConst::E) => write!(f, "e"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call1(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Call2(func, a, b) => write!(f, "{}({a}, {b})", func.name()),
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        parse(s)
    }
}

impl Expr {
    /// Evaluate at `t`. Deterministic: identical inputs give bit-identical
    /// results.
    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        let err = |node: &Expr, reason: &str| EvalError {
            node: node.to_string(),
            t,
            reason: reason.to_string(),
        };
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Var => t,
            Expr::Const(NamedConst::Pi) => std::f64::consts::PI,
            Expr::Const(NamedConst::E) => std::f64::consts::E,
            Expr::Neg(a) => -a.eval(t)?,
            Expr::Bin(op, a, b) => {
                let x = a.eval(t)?;
                let y = b.eval(t)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(err(self, "division by zero"));
                        }
                        x / y
                    }
                    BinOp::Pow => pow_checked(x, y).map_err(|reason| err(self, reason))?,
                }
            }
            Expr::Call1(func, a) => {
                let x = a.eval(t)?;
                match func {
                    Func1::Sin => x.sin(),
                    Func1::Cos => x.cos(),
                    Func1::Exp => x.exp(),
                    Func1::Log => {
                        if x <= 0.0 {
                            return Err(err(self, "log of a non-positive value"));
                        }
                        x.ln()
                    }
                    Func1::Sqrt => {
                        if x < 0.0 {
                            return Err(err(self, "square root of a negative value"));
                        }
                        x.sqrt()
                    }
                    Func1::Abs => x.abs(),
                }
            }
            Expr::Call2(func, a, b) => {
                let x = a.eval(t)?;
                let y = b.eval(t)?;
                match func {
                    Func2::Min => x.min(y),
                    Func2::Max => x.max(y),
                    Func2::Pow => pow_checked(x, y).map_err(|reason| err(self, reason))?,
                }
            }
        };
        if !v.is_finite() {
            return Err(err(self, "non-finite result"));
        }
        Ok(v)
    }
}

/// x^y with real-domain checks: negative base requires an integer exponent,
/// zero base a non-negative one. 0^0 is 1 by the usual pow convention.
fn pow_checked(x: f64, y: f64) -> Result<f64, &'static str> {
    if x < 0.0 && y.fract() != 0.0 {
        return Err("negative base with a non-integer exponent");
    }
    if x == 0.0 && y < 0.0 {
        return Err("zero base with a negative exponent");
    }
    Ok(x.powf(y))
}

/// A real interval with independently open endpoints.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EvalDomain {
    pub lo: f64,
    pub hi: f64,
    pub open_lo: bool,
    pub open_hi: bool,
}

impl EvalDomain {
    pub fn new(lo: f64, hi: f64, open_lo: bool, open_hi: bool) -> Result<Self, Error> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid("domain endpoints must be finite"));
        }
        if lo >= hi {
            return Err(Error::invalid(format!(
                "domain must satisfy lo < hi (got {lo}:{hi})"
            )));
        }
        Ok(EvalDomain {
            lo,
            hi,
            open_lo,
            open_hi,
        })
    }

    pub fn closed(lo: f64, hi: f64) -> Result<Self, Error> {
        Self::new(lo, hi, false, false)
    }

    pub fn contains(&self, x: f64) -> bool {
        let lo_ok = if self.open_lo { x > self.lo } else { x >= self.lo };
        let hi_ok = if self.open_hi { x < self.hi } else { x <= self.hi };
        lo_ok && hi_ok
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Whether the interval sits inside (0, inf). Violation is a hypothesis
    /// warning for the h-convexity setting, never a hard error.
    pub fn is_positive(&self) -> bool {
        self.lo > 0.0 || (self.lo == 0.0 && self.open_lo)
    }

    /// Uniform n-point grid. Open endpoints are inset by one grid step of the
    /// original interval, so e.g. (0,1) with n=11 samples [0.1, 0.9].
    pub fn grid(&self, n: usize) -> Vec<f64> {
        assert!(n >= 2, "grid needs at least two points");
        let step = self.width() / (n - 1) as f64;
        let lo = if self.open_lo { self.lo + step } else { self.lo };
        let hi = if self.open_hi { self.hi - step } else { self.hi };
        grid_points(lo, hi, n)
    }

    /// Parse the CLI form `lo:hi` with optional `(`/`[` and `)`/`]` wrappers
    /// marking open/closed endpoints; bare endpoints are closed.
    pub fn parse(text: &str) -> Result<Self, Error> {
        let s = text.trim();
        let bad = || Error::invalid(format!("cannot parse domain `{text}`; expected lo:hi, optionally wrapped like (lo:hi]"));
        let (open_lo, s) = match s.strip_prefix('(') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('[').unwrap_or(s)),
        };
        let (open_hi, s) = match s.strip_suffix(')') {
            Some(rest) => (true, rest),
            None => (false, s.strip_suffix(']').unwrap_or(s)),
        };
        let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        Self::new(lo, hi, open_lo, open_hi)
    }
}

impl fmt::Display for EvalDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}:{}{}",
            if self.open_lo { "(" } else { "[" },
            self.lo,
            self.hi,
            if self.open_hi { ")" } else { "]" },
        )
    }
}

/// Uniform grid with exact endpoints: index 0 is `lo`, index n-1 is `hi`.
pub fn grid_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let denom = (n - 1) as f64;
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                lo + (i as f64 * (hi - lo)) / denom
            }
        })
        .collect()
}

/// One point where evaluation failed during a domain sweep.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DomainViolation {
    pub t: f64,
    pub message: String,
}

/// Evaluate `e` on an n-point grid over `d` and return every failing point.
/// Failures are the payload, not an error.
pub fn check_domain(e: &Expr, d: &EvalDomain, n: usize) -> Result<Vec<DomainViolation>, Error> {
    if n < 2 {
        return Err(Error::invalid("check_domain needs n >= 2"));
    }
    Ok(d.grid(n)
        .into_iter()
        .filter_map(|t| match e.eval(t) {
            Ok(_) => None,
            Err(err) => Some(DomainViolation {
                t,
                message: err.to_string(),
            }),
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

/// Parse `text` into an [`Expr`].
pub fn parse(text: &str) -> Result<Expr, Error> {
    if text.trim().is_empty() {
        return Err(Error::invalid("expression is empty"));
    }
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.syntax("end of input or an operator").into());
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && (self.src[self.pos] as char).is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn found(&self) -> String {
        match self.src.get(self.pos) {
            Some(&c) => format!("`{}`", c as char),
            None => "end of input".to_string(),
        }
    }

    fn syntax(&self, expected: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            expected: expected.to_string(),
            found: self.found(),
        }
    }

    fn expect(&mut self, c: u8, expected: &str) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(expected))
        }
    }

    fn expr(&mut self) -> Result<Expr, Error> {
        let mut lhs = self.term()?;
        while let Some(c) = self.peek() {
            let op = match c {
                b'+' => BinOp::Add,
                b'-' => BinOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, Error> {
        let mut lhs = self.factor()?;
        while let Some(c) = self.peek() {
            let op = match c {
                b'*' => BinOp::Mul,
                b'/' => BinOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, Error> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, Error> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            // The exponent is a factor, so `2^3^2` nests right and `2^-3`
            // takes a signed exponent.
            let exponent = self.factor()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, Error> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')', "`)`")?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            _ => Err(self.syntax("a number, `t`, a constant, a function call, `(`, or `-`").into()),
        }
    }

    fn number(&mut self) -> Result<Expr, Error> {
        let start = self.pos;
        let mut saw_digit = false;
        while let Some(&c) = self.src.get(self.pos) {
            if c.is_ascii_digit() {
                saw_digit = true;
                self.pos += 1;
            } else if c == b'.' {
                self.pos += 1;
            } else {
                break;
            }
        }
        if !saw_digit {
            self.pos = start;
            return Err(self.syntax("a digit").into());
        }
        if let Some(&c) = self.src.get(self.pos) {
            if c == b'e' || c == b'E' {
                let mark = self.pos;
                self.pos += 1;
                if matches!(self.src.get(self.pos), Some(b'+') | Some(b'-')) {
                    self.pos += 1;
                }
                if matches!(self.src.get(self.pos), Some(c) if c.is_ascii_digit()) {
                    while matches!(self.src.get(self.pos), Some(c) if c.is_ascii_digit()) {
                        self.pos += 1;
                    }
                } else {
                    // `1e` followed by a non-digit: the `e` was not an
                    // exponent marker (it may be the constant in `2e`? no --
                    // treat as malformed to keep the grammar unambiguous).
                    self.pos = mark;
                }
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Expr::Num(v)),
            _ => Err(ParseError::Syntax {
                offset: start,
                expected: "a finite numeric literal".to_string(),
                found: format!("`{text}`"),
            }
            .into()),
        }
    }

    fn ident(&mut self) -> Result<Expr, Error> {
        let start = self.pos;
        while let Some(&c) = self.src.get(self.pos) {
            if c.is_ascii_alphanumeric() || c == b'_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        match name {
            "t" => Ok(Expr::Var),
            "pi" => Ok(Expr::Const(NamedConst::Pi)),
            "e" => Ok(Expr::Const(NamedConst::E)),
            "sin" | "cos" | "exp" | "log" | "sqrt" | "abs" => {
                let func = match name {
                    "sin" => Func1::Sin,
                    "cos" => Func1::Cos,
                    "exp" => Func1::Exp,
                    "log" => Func1::Log,
                    "sqrt" => Func1::Sqrt,
                    _ => Func1::Abs,
                };
                let args = self.args(name, start)?;
                if args.len() != 1 {
                    return Err(ParseError::Arity {
                        name: name.to_string(),
                        expected: 1,
                        got: args.len(),
                        offset: start,
                    }
                    .into());
                }
                let mut args = args;
                Ok(Expr::Call1(func, Box::new(args.pop().expect("one arg"))))
            }
            "min" | "max" | "pow" => {
                let func = match name {
                    "min" => Func2::Min,
                    "max" => Func2::Max,
                    _ => Func2::Pow,
                };
                let mut args = self.args(name, start)?;
                if args.len() != 2 {
                    return Err(ParseError::Arity {
                        name: name.to_string(),
                        expected: 2,
                        got: args.len(),
                        offset: start,
                    }
                    .into());
                }
                let b = args.pop().expect("two args");
                let a = args.pop().expect("two args");
                Ok(Expr::Call2(func, Box::new(a), Box::new(b)))
            }
            _ => Err(ParseError::UnknownIdentifier {
                name: name.to_string(),
                offset: start,
            }
            .into()),
        }
    }

    fn args(&mut self, _name: &str, _start: usize) -> Result<Vec<Expr>, Error> {
        self.expect(b'(', "`(` to open the argument list")?;
        let mut args = vec![self.expr()?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            args.push(self.expr()?);
        }
        self.expect(b')', "`,` or `)`")?;
        Ok(args)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(text: &str, t: f64) -> f64 {
        parse(text).unwrap().eval(t).unwrap()
    }

    #[test]
    fn arithmetic_and_precedence() {
        assert_eq!(ev("t^2 + 3*t", 2.0), 10.0);
        assert_eq!(ev("2^3^2", 0.0), 512.0);
        assert_eq!(ev("2*3+4", 0.0), 10.0);
        assert_eq!(ev("2+3*4", 0.0), 14.0);
        assert_eq!(ev("-t^2", 3.0), -9.0);
        assert_eq!(ev("2^-2", 0.0), 0.25);
        assert_eq!(ev("(1+2)*(3+4)", 0.0), 21.0);
        assert_eq!(ev("min(t, 1-t)", 0.75), 0.25);
        assert_eq!(ev("pow(t, 2)", 3.0), 9.0);
        assert_eq!(ev("abs(-t)", 2.5), 2.5);
    }

    #[test]
    fn constants() {
        assert_eq!(ev("pi", 0.0), std::f64::consts::PI);
        assert_eq!(ev("e", 0.0), std::f64::consts::E);
        assert_eq!(ev("exp(1)", 0.0), std::f64::consts::E);
    }

    #[test]
    fn sqrt_and_fractional_powers() {
        assert_eq!(ev("sqrt(t)", 0.25), 0.5);
        assert_eq!(ev("t^0.5", 0.5), 0.7071067811865476);
    }

    #[test]
    fn syntax_error_carries_offset() {
        match parse("t^^2") {
            Err(Error::Parse(ParseError::Syntax { offset, .. })) => assert_eq!(offset, 2),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier() {
        match parse("2*x") {
            Err(Error::Parse(ParseError::UnknownIdentifier { name, offset })) => {
                assert_eq!(name, "x");
                assert_eq!(offset, 2);
            }
            other => panic!("expected unknown identifier, got {other:?}"),
        }
    }

    #[test]
    fn arity_is_checked_at_parse_time() {
        assert!(matches!(
            parse("min(t)"),
            Err(Error::Parse(ParseError::Arity { expected: 2, got: 1, .. }))
        ));
        assert!(matches!(
            parse("sqrt(t, 2)"),
            Err(Error::Parse(ParseError::Arity { expected: 1, got: 2, .. }))
        ));
    }

    #[test]
    fn domain_errors() {
        let e = parse("1/t").unwrap();
        let err = e.eval(0.0).unwrap_err();
        assert!(err.reason.contains("division by zero"));
        assert_eq!(err.t, 0.0);

        assert!(parse("log(t)").unwrap().eval(0.0).is_err());
        assert!(parse("log(t)").unwrap().eval(-1.0).is_err());
        assert!(parse("sqrt(t)").unwrap().eval(-1e-12).is_err());
        assert!(parse("(-1)^t").unwrap().eval(0.5).is_err());
        assert!(parse("(-2)^t").unwrap().eval(3.0).is_ok());
        assert!(parse("exp(t)").unwrap().eval(1e4).is_err()); // overflow
    }

    #[test]
    fn check_domain_reports_failures() {
        let d = EvalDomain::closed(0.0, 1.0).unwrap();
        let v = check_domain(&parse("1/t").unwrap(), &d, 11).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].t, 0.0);

        let v = check_domain(&parse("t^2").unwrap(), &d, 11).unwrap();
        assert!(v.is_empty());

        let v = check_domain(&parse("log(t-0.5)").unwrap(), &d, 101).unwrap();
        assert_eq!(v.len(), 51);
        assert!(v.iter().all(|viol| viol.t <= 0.5));
    }

    #[test]
    fn open_endpoints_are_inset_one_step() {
        let d = EvalDomain::new(0.0, 1.0, true, true).unwrap();
        let g = d.grid(11);
        assert_eq!(g.len(), 11);
        assert!((g[0] - 0.1).abs() < 1e-15);
        assert!((g[10] - 0.9).abs() < 1e-15);
        // 1/t is now evaluable everywhere
        assert!(check_domain(&parse("1/t").unwrap(), &d, 11).unwrap().is_empty());
    }

    #[test]
    fn grid_hits_anchors_exactly() {
        let g = grid_points(0.0, 1.0, 101);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[25], 0.25);
        assert_eq!(g[50], 0.5);
        assert_eq!(g[100], 1.0);
    }

    #[test]
    fn domain_parse_forms() {
        let d = EvalDomain::parse("0:1").unwrap();
        assert_eq!((d.lo, d.hi, d.open_lo, d.open_hi), (0.0, 1.0, false, false));
        let d = EvalDomain::parse("(0:1)").unwrap();
        assert!(d.open_lo && d.open_hi);
        let d = EvalDomain::parse("[0.5:2)").unwrap();
        assert!(!d.open_lo && d.open_hi);
        assert!(EvalDomain::parse("1:0").is_err());
        assert!(EvalDomain::parse("nope").is_err());
    }

    #[test]
    fn positivity_flag() {
        assert!(EvalDomain::parse("(0:1]").unwrap().is_positive());
        assert!(!EvalDomain::parse("0:1").unwrap().is_positive());
        assert!(EvalDomain::parse("0.5:2").unwrap().is_positive());
    }
}
