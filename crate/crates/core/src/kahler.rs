//! Vafa-Witten partition functions of Kähler surfaces as exact q-series.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::{ExactComplex, PuiseuxSeries, SeriesError, Truncation, Var};

/// Exponent lattice (1/24)Z shared by every q-series.
pub const QSERIES_DENOMINATOR: i64 = 24;
pub const DEFAULT_ORDER: i64 = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KahlerError {
    #[error("n must be even and at least {min}, got {n}")]
    BadN { n: i64, min: i64 },
    #[error("truncation order must be at least 1, got {0}")]
    BadOrder(i64),
    #[error("unsupported topology: {0}")]
    UnsupportedTopology(String),
    #[error("Z(E(2)) has zero leading coefficient")]
    Division,
    #[error("could not reach q^{0} with exact padding")]
    Precision(i64),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasicClass {
    pub label: String,
    pub self_intersection: i64,
    /// [x'] . v
    pub pairing_v: i64,
    /// Whether the class reduces to zero, so that it matches the zero flux.
    pub reduces_to_zero: bool,
    pub sw: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KahlerTopology {
    pub chi: i64,
    pub sigma: i64,
    pub b1: i64,
    /// 't Hooft flux; only v = 0 is supported.
    pub v: i64,
    pub basic_classes: Vec<BasicClass>,
}

fn binomial(n: i64, k: i64) -> i64 {
    if k < 0 || k > n {
        return 0;
    }
    (0..k).fold(1i64, |acc, i| acc * (n - i) / (i + 1))
}

fn check_even(n: i64, min: i64) -> Result<(), KahlerError> {
    if n < min || n % 2 != 0 {
        return Err(KahlerError::BadN { n, min });
    }
    Ok(())
}

fn check_order(order: i64) -> Result<(), KahlerError> {
    if order < 1 {
        return Err(KahlerError::BadOrder(order));
    }
    Ok(())
}

/// Topology and SW data of the elliptic surface E(n).
pub fn sw_data_en(n: i64) -> Result<KahlerTopology, KahlerError> {
    check_even(n, 2)?;
    let basic_classes = (1..n)
        .map(|j| {
            let m = n - 2 * j;
            let sign = if j % 2 == 1 { 1 } else { -1 };
            BasicClass {
                label: match m {
                    0 => "0".into(),
                    1 => "F".into(),
                    -1 => "-F".into(),
                    _ => format!("{m}F"),
                },
                self_intersection: 0,
                pairing_v: 0,
                reduces_to_zero: m == 0,
                sw: sign * binomial(n - 2, j - 1),
            }
        })
        .collect();
    Ok(KahlerTopology { chi: 12 * n, sigma: -8 * n, b1: 0, v: 0, basic_classes })
}

/// Coefficients of prod_{k>=1} (1 - q^k)^24 through q^n.
fn eta_product(n: usize) -> Vec<BigInt> {
    let mut c = vec![BigInt::zero(); n + 1];
    c[0] = BigInt::one();
    for k in 1..=n {
        for _ in 0..24 {
            for i in (k..=n).rev() {
                let d = c[i - k].clone();
                c[i] -= d;
            }
        }
    }
    c
}

/// Coefficients c_0..c_n of q G(q) = 1 / prod (1 - q^k)^24.
fn g_coefficients(n: usize) -> Vec<BigInt> {
    let p = eta_product(n);
    let mut inv = vec![BigInt::zero(); n + 1];
    inv[0] = BigInt::one();
    for i in 1..=n {
        let mut s = BigInt::zero();
        for j in 1..=i {
            s -= &p[j] * &inv[i - j];
        }
        inv[i] = s;
    }
    inv
}

fn q_series(terms: impl IntoIterator<Item = (i64, BigInt)>, order: i64) -> PuiseuxSeries {
    let s = PuiseuxSeries::from_terms(
        &[Var::Q],
        terms
            .into_iter()
            .map(|(e, c)| (vec![Rational64::from_integer(e)], ExactComplex::real(BigRational::from_integer(c)))),
    );
    finish(&s, order)
}

fn lattice(s: &PuiseuxSeries) -> PuiseuxSeries {
    s.with_denominator(QSERIES_DENOMINATOR).expect("q-series exponents lie on (1/24)Z")
}

/// Move to the (1/24)Z lattice, then keep exponents up to q^order.
fn finish(s: &PuiseuxSeries, order: i64) -> PuiseuxSeries {
    lattice(s).truncate(&Truncation::new().with(Var::Q, order))
}

/// eta(q)^24 = q prod (1 - q^k)^24 through q^order.
pub fn eta24(order: i64) -> Result<PuiseuxSeries, KahlerError> {
    check_order(order)?;
    let c = eta_product(order as usize);
    Ok(q_series(c.into_iter().enumerate().map(|(k, c)| (k as i64 + 1, c)), order))
}

/// G(q) = 1 / eta^24 through q^order.
pub fn g_series(order: i64) -> Result<PuiseuxSeries, KahlerError> {
    check_order(order)?;
    let c = g_coefficients(order as usize + 1);
    Ok(q_series(c.into_iter().enumerate().map(|(k, c)| (k as i64 - 1, c)), order))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GArgument {
    Q,
    QSquared,
    SqrtQ,
    MinusSqrtQ,
}

/// G evaluated at q, q^2, q^{1/2} or -q^{1/2}, through q^order.
pub fn g_at(arg: GArgument, order: i64) -> Result<PuiseuxSeries, KahlerError> {
    check_order(order)?;
    let half = Rational64::new(1, 2);
    let s = match arg {
        GArgument::Q => return g_series(order),
        GArgument::QSquared => {
            g_series((order / 2).max(1))?.substitute_power(Var::Q, 1, Rational64::from_integer(2))?
        }
        GArgument::SqrtQ => g_series(2 * order + 1)?.substitute_power(Var::Q, 1, half)?,
        GArgument::MinusSqrtQ => g_series(2 * order + 1)?.substitute_power(Var::Q, -1, half)?,
    };
    Ok(finish(&s, order))
}

/// Run `f` at increasing internal orders until the result is known through q^order.
fn padded<F>(order: i64, start_pad: i64, f: F) -> Result<PuiseuxSeries, KahlerError>
where
    F: Fn(i64) -> Result<PuiseuxSeries, KahlerError>,
{
    let target = Rational64::from_integer(order);
    let mut pad = start_pad.max(2);
    for _ in 0..8 {
        let s = f(order + pad)?;
        if s.known_order(Var::Q).map_or(true, |k| k >= target) {
            return Ok(finish(&s, order));
        }
        pad *= 2;
    }
    Err(KahlerError::Precision(order))
}

fn quarter() -> ExactComplex {
    ExactComplex::from_ratio(1, 4)
}

fn half() -> ExactComplex {
    ExactComplex::from_ratio(1, 2)
}

/// (G(arg) / 4)^k at internal order `inner`.
fn g_power(arg: GArgument, k: i64, inner: i64) -> Result<PuiseuxSeries, KahlerError> {
    let t = Truncation::new().with(Var::Q, inner);
    Ok(g_at(arg, inner)?.scale(&quarter()).pow(k, &t)?)
}

/// The two pieces of the E(n)-type sum: the flux-matched term and the two G(±q^{1/2}) terms.
#[derive(Clone, Debug, PartialEq)]
pub struct KahlerParts {
    pub delta_part: PuiseuxSeries,
    pub sum_part: PuiseuxSeries,
}

fn validate(top: &KahlerTopology) -> Result<(i64, i64), KahlerError> {
    let unsupported = |m: String| Err(KahlerError::UnsupportedTopology(m));
    if top.v != 0 {
        return unsupported(format!("flux v = {} (only v = 0 is supported)", top.v));
    }
    if top.b1 < 0 || top.b1 > 1 {
        return unsupported(format!("b1 = {}", top.b1));
    }
    let theta = -2 * top.chi - 3 * top.sigma;
    if theta != 0 {
        return unsupported(format!("theta exponent -2 chi - 3 sigma = {theta} is nonzero"));
    }
    if let Some(c) = top.basic_classes.iter().find(|c| c.self_intersection != 0) {
        return unsupported(format!(
            "basic class {} has x'.x' = {} (theta exponent nonzero)",
            c.label, c.self_intersection
        ));
    }
    let s = top.chi + top.sigma;
    if s % 8 != 0 {
        return unsupported(format!("(chi + sigma) / 8 = {s}/8 is not an integer"));
    }
    Ok((s / 4, s / 8))
}

/// Both pieces of the sum, with the global factor 1/2 applied.
pub fn z_vw_kahler_parts(top: &KahlerTopology, order: i64) -> Result<KahlerParts, KahlerError> {
    check_order(order)?;
    let (sign_exp, k) = validate(top)?;
    let sign = if sign_exp.is_even() { 1 } else { -1 };
    // 2^{1 - b1} with b1 in {0, 1}
    let two_b = 2 - top.b1;
    let delta_sw: i64 = top.basic_classes.iter().filter(|c| c.reduces_to_zero).map(|c| c.sw).sum();
    let total_sw: i64 = top.basic_classes.iter().map(|c| c.sw).sum();
    let pad = 4 * k.abs() + 4;
    // pieces with a vanishing SW coefficient are exactly zero; skip their expansion
    let delta_part = if delta_sw == 0 {
        PuiseuxSeries::zero()
    } else {
        padded(order, pad, |inner| {
            let c = ExactComplex::from_int(sign * delta_sw) * half();
            Ok(g_power(GArgument::QSquared, k, inner)?.scale(&c))
        })?
    };
    let sum_part = if total_sw == 0 {
        PuiseuxSeries::zero()
    } else {
        padded(order, pad, |inner| {
            let c = ExactComplex::from_int(two_b * total_sw) * half();
            let a = g_power(GArgument::SqrtQ, k, inner)?;
            let b = g_power(GArgument::MinusSqrtQ, k, inner)?;
            Ok(a.add(&b).scale(&c))
        })?
    };
    Ok(KahlerParts { delta_part, sum_part })
}

/// Z_VW of a Kähler surface from its SW data, at v = 0 with the SU(2) factor 1/2.
pub fn z_vw_kahler(top: &KahlerTopology, order: i64) -> Result<PuiseuxSeries, KahlerError> {
    let p = z_vw_kahler_parts(top, order)?;
    Ok(lattice(&p.delta_part.add(&p.sum_part)))
}

/// Closed form of Z_VW(E(n)) for even n.
pub fn en_closed_form(n: i64, order: i64) -> Result<PuiseuxSeries, KahlerError> {
    check_even(n, 2)?;
    check_order(order)?;
    if n == 2 {
        let c = |a: i64, b: i64| ExactComplex::from_ratio(a, b);
        let s = g_at(GArgument::QSquared, order)?
            .scale(&c(1, 8))
            .add(&g_at(GArgument::SqrtQ, order)?.scale(&c(1, 4)))
            .add(&g_at(GArgument::MinusSqrtQ, order)?.scale(&c(1, 4)));
        return Ok(lattice(&s));
    }
    let h = n / 2;
    let sign = if (h + 1) % 2 == 0 { 1 } else { -1 };
    let c = ExactComplex::from_int(sign * binomial(n - 2, h - 1)) * half();
    padded(order, 2 * n + 4, |inner| Ok(g_power(GArgument::QSquared, h, inner)?.scale(&c)))
}

/// Sum of the SW invariants of E(n).
pub fn sw_sum(n: i64) -> Result<i64, KahlerError> {
    Ok(sw_data_en(n)?.basic_classes.iter().map(|c| c.sw).sum())
}

/// Leading exponent and coefficient of a q-series.
pub fn leading_term(s: &PuiseuxSeries) -> Option<(Rational64, ExactComplex)> {
    let v = s.valuation(Var::Q)?;
    Some((v, s.coeff(&[(Var::Q, v)])))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GluingReport {
    pub n: i64,
    pub order: i64,
    pub lhs: PuiseuxSeries,
    pub rhs: PuiseuxSeries,
    pub equal: bool,
    pub first_differing_exponent: Option<Rational64>,
}

/// Compare Z(E(n)) with the multiplicative prediction (Z(E(4)) / Z(E(2)))^{(n-2)/2} Z(E(2)).
pub fn gluing_check(n: i64, order: i64) -> Result<GluingReport, KahlerError> {
    check_even(n, 6)?;
    check_order(order)?;
    let lhs = z_vw_kahler(&sw_data_en(n)?, order)?;
    let rhs = padded(order, 4 * n, |inner| {
        let t = Truncation::new().with(Var::Q, inner);
        let z2 = z_vw_kahler(&sw_data_en(2)?, inner)?;
        let z4 = z_vw_kahler(&sw_data_en(4)?, inner)?;
        if leading_term(&z2).is_none() {
            return Err(KahlerError::Division);
        }
        let ratio = z4.mul(&z2.invert(&t)?).truncate(&t);
        Ok(ratio.pow((n - 2) / 2, &t)?.mul(&z2).truncate(&t))
    })?;
    let first = lhs.sub(&rhs).valuation(Var::Q);
    Ok(GluingReport { n, order, equal: first.is_none(), first_differing_exponent: first, lhs, rhs })
}

/// Whether every coefficient denominator is a power of two once factors shared with `extra` are removed.
pub fn denominators_are_dyadic(s: &PuiseuxSeries, extra: i64) -> bool {
    s.terms().all(|(_, c)| {
        let mut d = (c.re.denom() * c.im.denom()).abs();
        let e = BigInt::from(extra.abs().max(1));
        d = d.clone() / d.gcd(&e);
        while d.is_even() {
            d /= 2;
        }
        d.is_one()
    })
}
