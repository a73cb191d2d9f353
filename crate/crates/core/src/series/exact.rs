//! Exact complex rationals.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Shorthand for building `n/d` as a big rational.
pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Exact conversion of a finite float to a rational (every finite f64 is dyadic).
pub fn rational_from_f64(v: f64) -> Option<BigRational> {
    BigRational::from_float(v)
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    // to_f64 on BigRational divides the big integers with correct rounding
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Exact square root of a nonnegative rational, if it is a perfect square.
pub fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    if &(&n * &n) == r.numer() && &(&d * &d) == r.denom() {
        Some(BigRational::new(n, d))
    } else {
        None
    }
}

fn fmt_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn parse_rational(s: &str) -> Result<BigRational, String> {
    let s = s.trim();
    let parse_int = |t: &str| BigInt::from_str(t.trim()).map_err(|e| format!("bad integer {t:?}: {e}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let d = parse_int(d)?;
            if d.is_zero() {
                return Err("zero denominator".into());
            }
            Ok(BigRational::new(parse_int(n)?, d))
        }
        None => Ok(BigRational::from_integer(parse_int(s)?)),
    }
}

/// A complex number with exact rational real and imaginary parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct ExactComplex {
    pub re: BigRational,
    pub im: BigRational,
}

impl ExactComplex {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        ExactComplex { re, im }
    }

    pub fn real(re: BigRational) -> Self {
        ExactComplex { re, im: BigRational::zero() }
    }

    pub fn from_int(n: i64) -> Self {
        Self::real(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_ratio(n: i64, d: i64) -> Self {
        Self::real(rat(n, d))
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn i() -> Self {
        ExactComplex { re: BigRational::zero(), im: BigRational::one() }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        ExactComplex { re: self.re.clone(), im: -self.im.clone() }
    }

    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        if self.im.is_zero() {
            return Some(Self::real(self.re.recip()));
        }
        let n = self.norm_sqr();
        Some(ExactComplex { re: &self.re / &n, im: -(&self.im / &n) })
    }

    pub fn checked_div(&self, other: &Self) -> Option<Self> {
        other.inv().map(|v| self * &v)
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        ExactComplex { re: &self.re * r, im: &self.im * r }
    }

    pub fn pow(&self, n: i64) -> Option<Self> {
        let base = if n < 0 { self.inv()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &b;
            }
            b = &b * &b;
            e >>= 1;
        }
        Some(acc)
    }

    pub fn to_complex64(&self) -> Complex64 {
        Complex64::new(rational_to_f64(&self.re), rational_to_f64(&self.im))
    }

    pub fn from_complex64(z: Complex64) -> Option<Self> {
        Some(ExactComplex { re: rational_from_f64(z.re)?, im: rational_from_f64(z.im)? })
    }

    /// max(|re|, |im|) as a float, used for residual reporting.
    pub fn max_abs(&self) -> f64 {
        rational_to_f64(&self.re.abs()).max(rational_to_f64(&self.im.abs()))
    }

    /// The pair of strings used in JSON output.
    pub fn to_strings(&self) -> [String; 2] {
        [fmt_rational(&self.re), fmt_rational(&self.im)]
    }

    pub fn from_strings(re: &str, im: &str) -> Result<Self, String> {
        Ok(ExactComplex { re: parse_rational(re)?, im: parse_rational(im)? })
    }
}

impl fmt::Display for ExactComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", fmt_rational(&self.re))
        } else if self.re.is_zero() {
            if self.im.is_one() {
                write!(f, "i")
            } else if (-&self.im).is_one() {
                write!(f, "-i")
            } else {
                write!(f, "{} i", fmt_rational(&self.im))
            }
        } else {
            let sign = if self.im.is_negative() { '-' } else { '+' };
            write!(f, "({} {} {} i)", fmt_rational(&self.re), sign, fmt_rational(&self.im.abs()))
        }
    }
}

impl FromStr for ExactComplex {
    type Err = String;
    /// Accepts `a/b`, `i`, `a/b i` and `a/b + c/d i` forms (the Display output).
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim().trim_start_matches('(').trim_end_matches(')').trim();
        if let Some(body) = s.strip_suffix('i') {
            let body = body.trim_end();
            // split at the last binary +/- that is not a leading sign
            let bytes: Vec<char> = body.chars().collect();
            let mut split = None;
            for (k, c) in bytes.iter().enumerate().skip(1) {
                if (*c == '+' || *c == '-') && bytes[k - 1] == ' ' {
                    split = Some(k);
                }
            }
            let im_of = |t: &str| -> Result<BigRational, String> {
                let t = t.replace(' ', "");
                match t.as_str() {
                    "" | "+" => Ok(BigRational::one()),
                    "-" => Ok(-BigRational::one()),
                    _ => parse_rational(t.trim_start_matches('+')),
                }
            };
            match split {
                Some(k) => {
                    let re: String = bytes[..k].iter().collect();
                    let im: String = bytes[k..].iter().collect();
                    Ok(ExactComplex { re: parse_rational(&re)?, im: im_of(&im)? })
                }
                None => Ok(ExactComplex { re: BigRational::zero(), im: im_of(body)? }),
            }
        } else {
            Ok(Self::real(parse_rational(s)?))
        }
    }
}

impl Serialize for ExactComplex {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_strings().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExactComplex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [re, im] = <[String; 2]>::deserialize(d)?;
        ExactComplex::from_strings(&re, &im).map_err(serde::de::Error::custom)
    }
}

impl<'a> Add<&'a ExactComplex> for &'a ExactComplex {
    type Output = ExactComplex;
    fn add(self, o: &ExactComplex) -> ExactComplex {
        ExactComplex { re: &self.re + &o.re, im: &self.im + &o.im }
    }
}

impl<'a> Sub<&'a ExactComplex> for &'a ExactComplex {
    type Output = ExactComplex;
    fn sub(self, o: &ExactComplex) -> ExactComplex {
        ExactComplex { re: &self.re - &o.re, im: &self.im - &o.im }
    }
}

impl<'a> Mul<&'a ExactComplex> for &'a ExactComplex {
    type Output = ExactComplex;
    fn mul(self, o: &ExactComplex) -> ExactComplex {
        if self.im.is_zero() && o.im.is_zero() {
            return ExactComplex::real(&self.re * &o.re);
        }
        ExactComplex { re: &self.re * &o.re - &self.im * &o.im, im: &self.re * &o.im + &self.im * &o.re }
    }
}

impl Add for ExactComplex {
    type Output = ExactComplex;
    fn add(self, o: ExactComplex) -> ExactComplex {
        &self + &o
    }
}

impl Sub for ExactComplex {
    type Output = ExactComplex;
    fn sub(self, o: ExactComplex) -> ExactComplex {
        &self - &o
    }
}

impl Mul for ExactComplex {
    type Output = ExactComplex;
    fn mul(self, o: ExactComplex) -> ExactComplex {
        &self * &o
    }
}

impl Neg for ExactComplex {
    type Output = ExactComplex;
    fn neg(self) -> ExactComplex {
        ExactComplex { re: -self.re, im: -self.im }
    }
}

impl Neg for &ExactComplex {
    type Output = ExactComplex;
    fn neg(self) -> ExactComplex {
        ExactComplex { re: -&self.re, im: -&self.im }
    }
}

impl AddAssign<&ExactComplex> for ExactComplex {
    fn add_assign(&mut self, o: &ExactComplex) {
        self.re += &o.re;
        self.im += &o.im;
    }
}

impl SubAssign<&ExactComplex> for ExactComplex {
    fn sub_assign(&mut self, o: &ExactComplex) {
        self.re -= &o.re;
        self.im -= &o.im;
    }
}

impl From<i64> for ExactComplex {
    fn from(n: i64) -> Self {
        ExactComplex::from_int(n)
    }
}

impl From<BigRational> for ExactComplex {
    fn from(r: BigRational) -> Self {
        ExactComplex::real(r)
    }
}
