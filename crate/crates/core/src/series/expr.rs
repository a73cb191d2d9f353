//! Closed-form rational expressions with half-integer powers.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use num_rational::Rational64;
use thiserror::Error;

use super::exact::ExactComplex;
use super::puiseux::{PuiseuxSeries, SeriesError, Truncation, Var};

/// Denominators smaller than this in modulus are treated as poles.
pub const DEFAULT_POLE_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("pole: denominator {0} evaluates to {1:e} in modulus")]
    Pole(String, f64),
    #[error("branch: half-power argument {0} = {1} is not a positive real")]
    Branch(String, Complex64),
    #[error("missing value for variable {0}")]
    MissingVariable(Var),
    #[error("half powers are only allowed on z-free subexpressions")]
    HalfPowerOfZ,
    #[error("half-power exponent must be odd, got {0}")]
    EvenHalfPower(i32),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("expansion did not reach the requested order for {0}")]
    Precision(Var),
}

#[derive(Clone, Debug, PartialEq)]
pub enum RationalExpr {
    Const(ExactComplex),
    Var(Var),
    Add(Box<RationalExpr>, Box<RationalExpr>),
    Sub(Box<RationalExpr>, Box<RationalExpr>),
    Mul(Box<RationalExpr>, Box<RationalExpr>),
    Div(Box<RationalExpr>, Box<RationalExpr>),
    Neg(Box<RationalExpr>),
    Pow(Box<RationalExpr>, i32),
    /// `base^(k/2)` with odd `k`.
    HalfPow(Box<RationalExpr>, i32),
}

use RationalExpr as E;

impl RationalExpr {
    pub fn int(n: i64) -> Self {
        E::Const(ExactComplex::from_int(n))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        E::Const(ExactComplex::from_ratio(n, d))
    }

    pub fn var(v: Var) -> Self {
        E::Var(v)
    }

    pub fn pow(self, n: i32) -> Self {
        E::Pow(Box::new(self), n)
    }

    pub fn half_pow(self, k: i32) -> Result<Self, ExprError> {
        if k % 2 == 0 {
            return Err(ExprError::EvenHalfPower(k));
        }
        if self.contains(Var::Z) {
            return Err(ExprError::HalfPowerOfZ);
        }
        Ok(E::HalfPow(Box::new(self), k))
    }

    pub fn contains(&self, v: Var) -> bool {
        match self {
            E::Const(_) => false,
            E::Var(w) => *w == v,
            E::Add(a, b) | E::Sub(a, b) | E::Mul(a, b) | E::Div(a, b) => a.contains(v) || b.contains(v),
            E::Neg(a) | E::Pow(a, _) | E::HalfPow(a, _) => a.contains(v),
        }
    }

    /// Replace every occurrence of `v` by `by`.
    pub fn substitute(&self, v: Var, by: &RationalExpr) -> RationalExpr {
        let s = |e: &RationalExpr| Box::new(e.substitute(v, by));
        match self {
            E::Const(_) => self.clone(),
            E::Var(w) if *w == v => by.clone(),
            E::Var(_) => self.clone(),
            E::Add(a, b) => E::Add(s(a), s(b)),
            E::Sub(a, b) => E::Sub(s(a), s(b)),
            E::Mul(a, b) => E::Mul(s(a), s(b)),
            E::Div(a, b) => E::Div(s(a), s(b)),
            E::Neg(a) => E::Neg(s(a)),
            E::Pow(a, n) => E::Pow(s(a), *n),
            E::HalfPow(a, k) => E::HalfPow(s(a), *k),
        }
    }

    /// Fold constant subexpressions and drop additive zeros and unit factors.
    ///
    /// A zero numerator absorbs its denominator, so use this for display rather
    /// than for pole detection.
    pub fn folded(&self) -> RationalExpr {
        let c = |e: &RationalExpr| match e {
            E::Const(k) => Some(k.clone()),
            _ => None,
        };
        let is = |e: &RationalExpr, k: i64| c(e).is_some_and(|v| v == ExactComplex::from_int(k));
        let b = |e: RationalExpr| Box::new(e);
        let neg = |e: RationalExpr| match e {
            E::Const(p) => E::Const(-p),
            E::Neg(inner) => *inner,
            e => E::Neg(Box::new(e)),
        };
        match self {
            E::Const(_) | E::Var(_) => self.clone(),
            E::Add(x, y) | E::Sub(x, y) => {
                let (x, y) = (x.folded(), y.folded());
                let sub = matches!(self, E::Sub(..));
                match (c(&x), c(&y)) {
                    (Some(p), Some(q)) => E::Const(if sub { &p - &q } else { &p + &q }),
                    _ if is(&y, 0) => x,
                    _ if is(&x, 0) => {
                        if sub {
                            neg(y)
                        } else {
                            y
                        }
                    }
                    _ if sub => E::Sub(b(x), b(y)),
                    _ => E::Add(b(x), b(y)),
                }
            }
            E::Mul(x, y) => {
                let (x, y) = (x.folded(), y.folded());
                match (c(&x), c(&y)) {
                    (Some(p), Some(q)) => E::Const(&p * &q),
                    _ if is(&x, 0) || is(&y, 0) => E::int(0),
                    _ if is(&x, 1) => y,
                    _ if is(&y, 1) => x,
                    _ if is(&x, -1) => neg(y),
                    _ if is(&y, -1) => neg(x),
                    _ => E::Mul(b(x), b(y)),
                }
            }
            E::Div(x, y) => {
                let (x, y) = (x.folded(), y.folded());
                match (c(&x), c(&y)) {
                    (Some(p), Some(q)) if !q.is_zero() => E::Const(p.checked_div(&q).expect("nonzero divisor")),
                    _ if is(&x, 0) && !is(&y, 0) => E::int(0),
                    _ if is(&y, 1) => x,
                    _ if is(&y, -1) => neg(x),
                    _ => E::Div(b(x), b(y)),
                }
            }
            E::Neg(x) => neg(x.folded()),
            E::Pow(x, n) => {
                let x = x.folded();
                match c(&x).and_then(|p| p.pow(*n as i64)) {
                    Some(v) => E::Const(v),
                    None if *n == 1 => x,
                    None => E::Pow(b(x), *n),
                }
            }
            E::HalfPow(x, k) => E::HalfPow(b(x.folded()), *k),
        }
    }

    /// Numerical value; `eps_pole` bounds denominators away from zero.
    pub fn eval(&self, point: &[(Var, Complex64)], eps_pole: f64) -> Result<Complex64, ExprError> {
        Ok(match self {
            E::Const(c) => c.to_complex64(),
            E::Var(v) => point.iter().find(|(w, _)| w == v).map(|(_, z)| *z).ok_or(ExprError::MissingVariable(*v))?,
            E::Add(a, b) => a.eval(point, eps_pole)? + b.eval(point, eps_pole)?,
            E::Sub(a, b) => a.eval(point, eps_pole)? - b.eval(point, eps_pole)?,
            E::Mul(a, b) => a.eval(point, eps_pole)? * b.eval(point, eps_pole)?,
            E::Div(a, b) => {
                let d = b.eval(point, eps_pole)?;
                if d.norm() < eps_pole {
                    return Err(ExprError::Pole(b.to_string(), d.norm()));
                }
                a.eval(point, eps_pole)? / d
            }
            E::Neg(a) => -a.eval(point, eps_pole)?,
            E::Pow(a, n) => {
                let v = a.eval(point, eps_pole)?;
                if *n < 0 && v.norm() < eps_pole {
                    return Err(ExprError::Pole(a.to_string(), v.norm()));
                }
                v.powi(*n)
            }
            E::HalfPow(a, k) => {
                let v = a.eval(point, eps_pole)?;
                if !(v.re > 0.0 && v.im.abs() <= 1e-12 * v.re) {
                    return Err(ExprError::Branch(a.to_string(), v));
                }
                Complex64::new(v.re.powf(*k as f64 / 2.0), 0.0)
            }
        })
    }

    /// Evaluate at real parameters with the default pole threshold.
    pub fn eval_real(&self, point: &[(Var, f64)]) -> Result<Complex64, ExprError> {
        let p: Vec<(Var, Complex64)> = point.iter().map(|(v, x)| (*v, Complex64::new(*x, 0.0))).collect();
        self.eval(&p, DEFAULT_POLE_EPS)
    }

    /// Expand as a Puiseux series at the given truncation (precision may fall short
    /// of the request when negative powers appear; see [`expand_to`](Self::expand_to)).
    pub fn expand(&self, order: &Truncation) -> Result<PuiseuxSeries, ExprError> {
        Ok(match self {
            E::Const(c) => PuiseuxSeries::constant(c.clone()),
            E::Var(v) => PuiseuxSeries::var(*v).truncate(order),
            E::Add(a, b) => a.expand(order)?.add(&b.expand(order)?),
            E::Sub(a, b) => a.expand(order)?.sub(&b.expand(order)?),
            E::Mul(a, b) => a.expand(order)?.mul(&b.expand(order)?).truncate(order),
            E::Div(a, b) => a.expand(order)?.mul(&b.expand(order)?.invert(order)?).truncate(order),
            E::Neg(a) => a.expand(order)?.neg(),
            E::Pow(a, n) => a.expand(order)?.pow(*n as i64, order)?,
            E::HalfPow(a, k) => a.expand(order)?.pow_ratio(Rational64::new(*k as i64, 2), order)?,
        })
    }

    /// Expand with extra internal precision until every requested order is fully known.
    pub fn expand_to(&self, order: &Truncation) -> Result<PuiseuxSeries, ExprError> {
        let mut pad = 0;
        loop {
            let s = self.expand(&order.padded(pad))?;
            let short = order.iter().find(|(v, o)| s.known_order(*v).is_some_and(|k| k < *o));
            match short {
                None => return Ok(s.truncate(order)),
                Some((v, _)) if pad > 64 => return Err(ExprError::Precision(v)),
                Some(_) => pad = if pad == 0 { 2 } else { pad * 2 },
            }
        }
    }
}

impl fmt::Display for RationalExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            E::Const(c) => write!(f, "{c}"),
            E::Var(v) => write!(f, "{v}"),
            E::Add(a, b) => write!(f, "({a} + {b})"),
            E::Sub(a, b) => write!(f, "({a} - {b})"),
            E::Mul(a, b) => write!(f, "{a}*{b}"),
            E::Div(a, b) => write!(f, "{a}/({b})"),
            E::Neg(a) => write!(f, "-{a}"),
            E::Pow(a, n) => write!(f, "({a})^{n}"),
            E::HalfPow(a, k) => write!(f, "({a})^({k}/2)"),
        }
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $variant:ident) => {
        impl $tr for RationalExpr {
            type Output = RationalExpr;
            fn $m(self, o: RationalExpr) -> RationalExpr {
                E::$variant(Box::new(self), Box::new(o))
            }
        }
        impl $tr<i64> for RationalExpr {
            type Output = RationalExpr;
            fn $m(self, o: i64) -> RationalExpr {
                E::$variant(Box::new(self), Box::new(E::int(o)))
            }
        }
        impl $tr<RationalExpr> for i64 {
            type Output = RationalExpr;
            fn $m(self, o: RationalExpr) -> RationalExpr {
                E::$variant(Box::new(E::int(self)), Box::new(o))
            }
        }
    };
}

binop!(Add, add, Add);
binop!(Sub, sub, Sub);
binop!(Mul, mul, Mul);
binop!(Div, div, Div);

impl Neg for RationalExpr {
    type Output = RationalExpr;
    fn neg(self) -> RationalExpr {
        E::Neg(Box::new(self))
    }
}
