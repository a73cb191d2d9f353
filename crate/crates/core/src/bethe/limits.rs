//! Series expansions of graded dimensions, Verlinde limits and asymptotics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::closed_forms::{self, SClass};
use crate::series::{ExprError, PuiseuxSeries, RationalExpr as E, Truncation, Var};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimitError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("limit element for {0} is not finite")]
    Divergent(&'static str),
    #[error("unknown manifold {0:?}")]
    UnknownManifold(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Manifold {
    S3,
    S2xS1,
    /// Sigma_g x S^1.
    SigmaG(u32),
}

impl std::str::FromStr for Manifold {
    type Err = LimitError;
    fn from_str(s: &str) -> Result<Self, LimitError> {
        match s {
            "S3" => Ok(Manifold::S3),
            "S2xS1" => Ok(Manifold::S2xS1),
            _ => s
                .strip_prefix("Sigma")
                .and_then(|g| g.parse().ok())
                .map(Manifold::SigmaG)
                .ok_or_else(|| LimitError::UnknownManifold(s.into())),
        }
    }
}

/// `sum_lambda m_lambda E_lambda^(1-g)` with the given multiplicities.
fn class_sum(elements: &[(SClass, E)], weight: impl Fn(SClass) -> i64, g: u32) -> E {
    let mut acc: Option<E> = None;
    for (c, e) in elements {
        let term = weight(*c) * e.clone().pow(1 - g as i32);
        acc = Some(match acc {
            None => term,
            Some(a) => a + term,
        });
    }
    acc.unwrap_or_else(|| E::int(0))
}

/// Closed form of the graded dimension on the slice y = x.
pub fn grdim_expr(m: Manifold) -> E {
    match m {
        Manifold::S3 => closed_forms::s3(),
        Manifold::S2xS1 => closed_forms::s2s1(),
        Manifold::SigmaG(g) => {
            let els: Vec<(SClass, E)> = SClass::ALL.iter().map(|c| (*c, closed_forms::selement(*c))).collect();
            class_sum(&els, |c| c.multiplicity() as i64, g)
        }
    }
}

/// Graded dimension expanded in t (and x where present) through `order`.
pub fn grdim_closed_form(m: Manifold, order: i64) -> Result<PuiseuxSeries, LimitError> {
    let trunc = match m {
        Manifold::S3 => Truncation::new().with(Var::T, order),
        _ => Truncation::new().with(Var::T, order).with(Var::X, order),
    };
    Ok(grdim_expr(m).expand_to(&trunc)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// x, y -> 0 with t fixed.
    R0,
    /// y, t -> 0 with x fixed.
    R2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitElement {
    pub class: SClass,
    /// Number of Weyl orbits (pairs z, 1/z) in the class.
    pub orbits: usize,
    pub expr: String,
    #[serde(skip)]
    pub rational: Option<E>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub regime: Regime,
    pub genus: u32,
    pub normalization: String,
    pub elements: Vec<LimitElement>,
    pub series: PuiseuxSeries,
}

/// Direct R = 2 limit of `S^2 (x / (y t))^{3/2}`.
pub fn r2_direct(class: SClass) -> E {
    let zero = E::int(0);
    closed_forms::sxyt_rational(class).substitute(Var::Y, &zero).substitute(Var::T, &zero)
}

fn check_finite(e: &E, var: Var, label: &'static str) -> Result<(), LimitError> {
    // a generic interior sample point detects poles introduced by the specialization
    for v in [0.3718, 0.6123] {
        e.eval(&[(var, Complex64::new(v, 0.0))], 1e-12).map_err(|_| LimitError::Divergent(label))?;
    }
    Ok(())
}

/// Limits of the S-matrix elements and the orbit-summed series in the surviving variable.
///
/// Sums run over the five Weyl orbits.  For R = 2 the reported elements are
/// normalized by `-(y t / x)^{3/2}` and the series by `(y t / x)^{3(g-1)/2}`.
pub fn limit_specialize(g: u32, regime: Regime, order: i64) -> Result<LimitReport, LimitError> {
    let (var, normalization) = match regime {
        Regime::R2 => (Var::X, "elements: S^2 / (-(y t / x)^(3/2)); series: (y t / x)^(3(g-1)/2) sum_orbits S^(2-2g)"),
        Regime::R0 => (Var::T, "none; series: sum_orbits S^(2-2g) at x = y = 0"),
    };
    let mut direct = Vec::new();
    let mut elements = Vec::new();
    for c in SClass::ALL {
        let d = match regime {
            Regime::R2 => r2_direct(c),
            Regime::R0 => closed_forms::selement(c).substitute(Var::X, &E::int(0)),
        };
        check_finite(&d, var, c.label())?;
        let shown = match regime {
            Regime::R2 => -d.clone(),
            Regime::R0 => d.clone(),
        };
        elements.push(LimitElement {
            class: c,
            orbits: c.multiplicity() / 2,
            expr: shown.folded().to_string(),
            rational: Some(shown),
        });
        direct.push((c, d));
    }
    let sum = class_sum(&direct, |c| (c.multiplicity() / 2) as i64, g);
    let series = sum.expand_to(&Truncation::new().with(var, order))?;
    Ok(LimitReport { regime, genus: g, normalization: normalization.into(), elements, series })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticPoint {
    pub eps: f64,
    pub value: f64,
    pub reference: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsReport {
    pub genus: u32,
    pub a: f64,
    pub b: f64,
    pub points: Vec<AsymptoticPoint>,
    /// |ratio - 1| at the smallest eps.
    pub deviation: f64,
}

/// Reference leading behaviour near x = t = 1.
pub fn asymptotic_reference(g: u32, x: f64, t: f64) -> f64 {
    match g {
        0 => 1.0 / ((1.0 - t) * (1.0 - t * x * x)),
        1 => 10.0,
        _ => 4.0 * (8.0 * (1.0 - t) / (1.0 - x)).powi(3 * g as i32 - 3),
    }
}

/// Ratio of the closed-form graded dimension (y = x) to its reference asymptotics
/// along (x, t) = (1 + a eps, 1 + b eps).
pub fn asymptotics_check(g: u32, a: f64, b: f64, eps: &[f64]) -> Result<AsymptoticsReport, LimitError> {
    let expr = grdim_expr(Manifold::SigmaG(g));
    let mut points = Vec::new();
    for &e in eps {
        let (x, t) = (1.0 + a * e, 1.0 + b * e);
        let value = expr.eval_real(&[(Var::X, x), (Var::T, t)])?.re;
        let reference = asymptotic_reference(g, x, t);
        points.push(AsymptoticPoint { eps: e, value, reference, ratio: value / reference });
    }
    let last = points.iter().min_by(|p, q| p.eps.total_cmp(&q.eps)).map(|p| (p.ratio - 1.0).abs()).unwrap_or(f64::NAN);
    Ok(AsymptoticsReport { genus: g, a, b, points, deviation: last })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::ExactComplex;
    use num_rational::Rational64;

    fn coeffs(s: &PuiseuxSeries, v: Var, n: i64) -> Vec<ExactComplex> {
        (0..=n).map(|k| s.coeff(&[(v, Rational64::from_integer(k))])).collect()
    }

    #[test]
    fn s3_series() {
        let s = grdim_closed_form(Manifold::S3, 6).unwrap();
        let want: Vec<ExactComplex> = [1, 0, 1, 0, 1, 0, 1].iter().map(|n| ExactComplex::from_int(*n)).collect();
        assert_eq!(coeffs(&s, Var::T, 6), want);
    }

    #[test]
    fn genus_zero_equals_s2s1() {
        let a = grdim_closed_form(Manifold::SigmaG(0), 8).unwrap();
        let b = grdim_closed_form(Manifold::S2xS1, 8).unwrap();
        assert_eq!(a, b);
        // 2 t^{3/2} (1 + t x^4 + t^2 + ...)
        let c = |e: &[(Var, i64, i64)]| {
            a.coeff(&e.iter().map(|(v, n, d)| (*v, Rational64::new(*n, *d))).collect::<Vec<_>>())
        };
        assert_eq!(c(&[(Var::T, 3, 2)]), ExactComplex::from_int(2));
        assert_eq!(c(&[(Var::T, 5, 2), (Var::X, 4, 1)]), ExactComplex::from_int(2));
        assert_eq!(c(&[(Var::T, 7, 2)]), ExactComplex::from_int(2));
    }

    #[test]
    fn genus_one_is_ten() {
        let s = grdim_closed_form(Manifold::SigmaG(1), 5).unwrap();
        assert_eq!(s.sorted_terms(), vec![(vec![Rational64::from_integer(0); 2], ExactComplex::from_int(10))]);
    }

    #[test]
    fn r2_genus2_series() {
        let rep = limit_specialize(2, Regime::R2, 5).unwrap();
        let want: Vec<ExactComplex> = [35, 75, 186, 274, 469, 597].iter().map(|n| ExactComplex::from_int(*n)).collect();
        assert_eq!(coeffs(&rep.series, Var::X, 5), want);
    }

    #[test]
    fn r2_elements_match_published_limits() {
        let rep = limit_specialize(2, Regime::R2, 2).unwrap();
        for el in &rep.elements {
            let r = closed_forms::verlinde_limit_reference(el.class);
            for k in 1..=10 {
                let xv = 0.05 + 0.09 * k as f64;
                let got = el.rational.as_ref().unwrap().eval_real(&[(Var::X, xv)]).unwrap();
                let want = r.eval_real(&[(Var::X, xv)]).unwrap();
                assert!((got - want).norm() <= 1e-12 * want.norm().max(1.0));
            }
        }
    }

    #[test]
    fn r0_s00_element() {
        let rep = limit_specialize(0, Regime::R0, 4).unwrap();
        let el = rep.elements[0].rational.clone().unwrap();
        let tv = 0.4_f64;
        let want = tv.powf(1.5) / ((1.0 - tv * tv) * (tv + 3.0));
        assert!((el.eval_real(&[(Var::T, tv)]).unwrap().re - want).abs() < 1e-14);
    }

    #[test]
    fn manifold_names() {
        assert_eq!("Sigma3".parse::<Manifold>().unwrap(), Manifold::SigmaG(3));
        assert!("T3".parse::<Manifold>().is_err());
    }
}
