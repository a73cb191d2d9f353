//! Truncated multivariate Puiseux series with exact coefficients.
//!
//! Exponents of every variable live on a shared lattice `(1/D) Z`; they are
//! stored scaled by `D`.  Each variable may carry an exclusive cutoff: all
//! terms strictly below it are known, everything at or above it is unknown.
//! A variable without a cutoff is exact (polynomial or Laurent in it).

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use num_integer::Integer;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::exact::{rational_sqrt, ExactComplex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Var {
    T,
    X,
    Y,
    Q,
    Z,
    S,
}

impl Var {
    pub const ALL: [Var; 6] = [Var::T, Var::X, Var::Y, Var::Q, Var::Z, Var::S];

    pub fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::X => "x",
            Var::Y => "y",
            Var::Q => "q",
            Var::Z => "z",
            Var::S => "s",
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Var {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Var::ALL.iter().copied().find(|v| v.name() == s).ok_or_else(|| format!("unknown variable {s:?}"))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeriesError {
    #[error("series is identically zero at the requested truncation")]
    ZeroSeries,
    #[error("series has no componentwise-minimal term to factor out")]
    NoLeadingTerm,
    #[error("expansion does not terminate; variable(s) {0} need a truncation order")]
    NeedsTruncation(String),
    #[error("leading coefficient {coeff} has no exact power {power}")]
    IrrationalPower { coeff: String, power: String },
    #[error("sign flip in {var} -> -{var}^r needs integer exponents, found {exponent}")]
    NonIntegerExponent { var: Var, exponent: String },
    #[error("cannot set {0} = 0: negative exponent or unknown constant term")]
    SingularAtZero(Var),
    #[error("substitution power must be positive, got {0}")]
    BadPower(String),
    #[error("point does not assign variable {0}")]
    MissingVariable(Var),
    #[error("expansion did not terminate within {0} steps")]
    IterationLimit(usize),
    #[error("lattice 1/{to} does not refine 1/{from}")]
    Lattice { from: i64, to: i64 },
}

/// Requested precision: for each listed variable, the largest exponent kept (inclusive).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Truncation {
    orders: BTreeMap<Var, Rational64>,
}

impl Truncation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, v: Var, order: impl Into<Rational64>) -> Self {
        self.orders.insert(v, order.into());
        self
    }

    pub fn uniform(vars: &[Var], order: i64) -> Self {
        vars.iter().fold(Self::new(), |t, &v| t.with(v, order))
    }

    pub fn get(&self, v: Var) -> Option<Rational64> {
        self.orders.get(&v).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, Rational64)> + '_ {
        self.orders.iter().map(|(v, o)| (*v, *o))
    }

    /// Raise every order by `pad`.
    pub fn padded(&self, pad: i64) -> Self {
        Truncation { orders: self.orders.iter().map(|(v, o)| (*v, *o + pad)).collect() }
    }
}

const MAX_STEPS: usize = 100_000;

#[derive(Clone, Debug)]
pub struct PuiseuxSeries {
    vars: Vec<Var>,
    denom: i64,
    terms: BTreeMap<Vec<i64>, ExactComplex>,
    cutoff: Vec<Option<i64>>,
}

fn floor_scaled(r: Rational64, d: i64) -> i64 {
    (r * d).floor().to_integer()
}

impl PuiseuxSeries {
    pub fn zero() -> Self {
        PuiseuxSeries { vars: vec![], denom: 1, terms: BTreeMap::new(), cutoff: vec![] }
    }

    pub fn constant(c: ExactComplex) -> Self {
        let mut s = Self::zero();
        if !c.is_zero() {
            s.terms.insert(vec![], c);
        }
        s
    }

    pub fn one() -> Self {
        Self::constant(ExactComplex::one())
    }

    pub fn from_int(n: i64) -> Self {
        Self::constant(ExactComplex::from_int(n))
    }

    /// `c * prod v^e` for the listed variables.
    pub fn monomial(c: ExactComplex, exps: &[(Var, Rational64)]) -> Self {
        let mut vars: Vec<Var> = exps.iter().map(|(v, _)| *v).collect();
        vars.sort();
        vars.dedup();
        let denom = exps.iter().fold(1i64, |d, (_, e)| d.lcm(e.denom()));
        let mut key = vec![0i64; vars.len()];
        for (v, e) in exps {
            let k = vars.binary_search(v).unwrap();
            key[k] += (*e * denom).to_integer();
        }
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(key, c);
        }
        PuiseuxSeries { cutoff: vec![None; vars.len()], vars, denom, terms }
    }

    pub fn var(v: Var) -> Self {
        Self::monomial(ExactComplex::one(), &[(v, Rational64::one())])
    }

    /// Build from `(exponents, coefficient)` pairs over `vars`; exponents are real (unscaled).
    pub fn from_terms<I>(vars: &[Var], terms: I) -> Self
    where
        I: IntoIterator<Item = (Vec<Rational64>, ExactComplex)>,
    {
        let mut acc = Self::zero();
        let mut base = Self::zero();
        for v in vars {
            base = base.with_var(*v);
        }
        acc = acc.add(&base);
        for (e, c) in terms {
            let pairs: Vec<(Var, Rational64)> = vars.iter().copied().zip(e).collect();
            acc = acc.add(&Self::monomial(c, &pairs));
        }
        acc
    }

    pub fn variables(&self) -> &[Var] {
        &self.vars
    }

    pub fn denominator(&self) -> i64 {
        self.denom
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// No known nonzero term (the series may still carry cutoffs).
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        self.cutoff.iter().all(|c| c.is_none())
    }

    fn index(&self, v: Var) -> Option<usize> {
        self.vars.binary_search(&v).ok()
    }

    /// Exclusive cutoff of `v`, if any.
    pub fn cutoff(&self, v: Var) -> Option<Rational64> {
        self.index(v).and_then(|k| self.cutoff[k]).map(|c| Rational64::new(c, self.denom))
    }

    /// Largest exponent of `v` that is fully known, if truncated.
    pub fn known_order(&self, v: Var) -> Option<Rational64> {
        self.index(v).and_then(|k| self.cutoff[k]).map(|c| Rational64::new(c - 1, self.denom))
    }

    pub fn valuation(&self, v: Var) -> Option<Rational64> {
        let k = self.index(v)?;
        self.terms.keys().map(|e| e[k]).min().map(|m| Rational64::new(m, self.denom))
    }

    pub fn coeff(&self, exps: &[(Var, Rational64)]) -> ExactComplex {
        let mut key = vec![0i64; self.vars.len()];
        for (v, e) in exps {
            let scaled = *e * self.denom;
            if !scaled.is_integer() {
                return ExactComplex::zero();
            }
            match self.index(*v) {
                Some(k) => key[k] = scaled.to_integer(),
                None if e.is_zero() => {}
                None => return ExactComplex::zero(),
            }
        }
        self.terms.get(&key).cloned().unwrap_or_default()
    }

    /// Terms as (real exponents, coefficient), in storage order.
    pub fn terms(&self) -> impl Iterator<Item = (Vec<Rational64>, &ExactComplex)> + '_ {
        let d = self.denom;
        self.terms.iter().map(move |(e, c)| (e.iter().map(|x| Rational64::new(*x, d)).collect(), c))
    }

    /// Coefficients of a one-variable series keyed by exponent.
    pub fn univariate(&self, v: Var) -> BTreeMap<Rational64, ExactComplex> {
        let k = self.index(v);
        self.terms.iter().map(|(e, c)| (Rational64::new(k.map_or(0, |k| e[k]), self.denom), c.clone())).collect()
    }

    /// Add `v` to the variable list without changing the series.
    pub fn with_var(&self, v: Var) -> Self {
        if self.index(v).is_some() {
            return self.clone();
        }
        let mut vars = self.vars.clone();
        vars.push(v);
        vars.sort();
        self.relabel(&vars, self.denom)
    }

    /// Re-express on the exponent lattice (1/d)Z; fails unless every exponent lies on it.
    /// Cutoffs round up, since no coarse lattice point below the old cutoff is lost.
    pub fn with_denominator(&self, d: i64) -> Result<Self, SeriesError> {
        let err = SeriesError::Lattice { from: self.denom, to: d };
        if d <= 0 {
            return Err(err);
        }
        let l = self.denom.lcm(&d);
        let fine = self.relabel(&self.vars, l);
        let f = l / d;
        let on = |x: &i64| x % f == 0;
        if !fine.terms.keys().flatten().all(on) {
            return Err(err);
        }
        let terms = fine.terms.into_iter().map(|(e, c)| (e.into_iter().map(|x| x / f).collect(), c)).collect();
        let cutoff = fine.cutoff.into_iter().map(|c| c.map(|c| Integer::div_ceil(&c, &f))).collect();
        Ok(PuiseuxSeries { vars: fine.vars, denom: d, terms, cutoff })
    }

    fn relabel(&self, vars: &[Var], denom: i64) -> Self {
        debug_assert_eq!(denom % self.denom, 0);
        let f = denom / self.denom;
        let map: Vec<usize> = self.vars.iter().map(|v| vars.binary_search(v).unwrap()).collect();
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            let mut key = vec![0i64; vars.len()];
            for (i, x) in e.iter().enumerate() {
                key[map[i]] = x * f;
            }
            terms.insert(key, c.clone());
        }
        let mut cutoff = vec![None; vars.len()];
        for (i, c) in self.cutoff.iter().enumerate() {
            cutoff[map[i]] = c.map(|c| c * f);
        }
        PuiseuxSeries { vars: vars.to_vec(), denom, terms, cutoff }
    }

    fn aligned(&self, o: &Self) -> (Self, Self) {
        if self.vars == o.vars && self.denom == o.denom {
            return (self.clone(), o.clone());
        }
        let mut vars = self.vars.clone();
        vars.extend(o.vars.iter().copied());
        vars.sort();
        vars.dedup();
        let denom = self.denom.lcm(&o.denom);
        (self.relabel(&vars, denom), o.relabel(&vars, denom))
    }

    fn prune(&mut self) {
        let cut = self.cutoff.clone();
        self.terms.retain(|e, c| !c.is_zero() && e.iter().zip(&cut).all(|(x, c)| c.map_or(true, |c| *x < c)));
    }

    /// Impose the requested orders (inclusive), adding variables as needed.
    pub fn truncate(&self, order: &Truncation) -> Self {
        let mut s = self.clone();
        for (v, _) in order.iter() {
            s = s.with_var(v);
        }
        for (v, o) in order.iter() {
            let k = s.index(v).unwrap();
            let c = floor_scaled(o, s.denom) + 1;
            s.cutoff[k] = Some(s.cutoff[k].map_or(c, |old| old.min(c)));
        }
        s.prune();
        s
    }

    /// Impose an exclusive cutoff for one variable.
    pub fn with_cutoff(&self, v: Var, cut: Rational64) -> Self {
        let mut s = self.with_var(v);
        let d = s.denom.lcm(cut.denom());
        s = s.relabel(&s.vars.clone(), d);
        let k = s.index(v).unwrap();
        let c = (cut * d).to_integer();
        s.cutoff[k] = Some(s.cutoff[k].map_or(c, |old| old.min(c)));
        s.prune();
        s
    }

    pub fn add(&self, o: &Self) -> Self {
        let (mut a, b) = self.aligned(o);
        for (e, c) in b.terms {
            let entry = a.terms.entry(e).or_default();
            *entry += &c;
        }
        for (k, c) in b.cutoff.iter().enumerate() {
            if let Some(c) = c {
                a.cutoff[k] = Some(a.cutoff[k].map_or(*c, |x| x.min(*c)));
            }
        }
        a.prune();
        a
    }

    pub fn neg(&self) -> Self {
        let mut s = self.clone();
        for c in s.terms.values_mut() {
            *c = -&*c;
        }
        s
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn scale(&self, c: &ExactComplex) -> Self {
        let mut s = self.clone();
        for v in s.terms.values_mut() {
            *v = &*v * c;
        }
        s.prune();
        s
    }

    /// Lower bound on exponents of `k`, known part and omitted tail together.
    fn floor_exp(&self, k: usize) -> i64 {
        let m = self.terms.keys().map(|e| e[k]).min();
        match (m, self.cutoff[k]) {
            (Some(m), Some(c)) => m.min(c),
            (Some(m), None) => m,
            (None, Some(c)) => c,
            (None, None) => 0,
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let (a, b) = self.aligned(o);
        if (a.terms.is_empty() && a.is_exact()) || (b.terms.is_empty() && b.is_exact()) {
            return PuiseuxSeries { terms: BTreeMap::new(), cutoff: vec![None; a.vars.len()], ..a };
        }
        let n = a.vars.len();
        let mut cutoff = vec![None; n];
        for (k, slot) in cutoff.iter_mut().enumerate() {
            let ca = a.cutoff[k].map(|c| c + b.floor_exp(k));
            let cb = b.cutoff[k].map(|c| c + a.floor_exp(k));
            *slot = match (ca, cb) {
                (Some(x), Some(y)) => Some(x.min(y)),
                (x, y) => x.or(y),
            };
        }
        let mut terms: BTreeMap<Vec<i64>, ExactComplex> = BTreeMap::new();
        let mut key = vec![0i64; n];
        for (ea, ca) in &a.terms {
            'inner: for (eb, cb) in &b.terms {
                for k in 0..n {
                    key[k] = ea[k] + eb[k];
                    if let Some(c) = cutoff[k] {
                        if key[k] >= c {
                            continue 'inner;
                        }
                    }
                }
                let p = ca * cb;
                match terms.get_mut(&key) {
                    Some(v) => *v += &p,
                    None => {
                        terms.insert(key.clone(), p);
                    }
                }
            }
        }
        let mut s = PuiseuxSeries { vars: a.vars, denom: a.denom, terms, cutoff };
        s.prune();
        s
    }

    /// Split off the componentwise-minimal term: `self = c m (1 + u)`.
    fn factor_leading(&self) -> Result<(ExactComplex, Vec<i64>, Self), SeriesError> {
        let n = self.vars.len();
        let lead: Vec<i64> = (0..n).map(|k| self.terms.keys().map(|e| e[k]).min().unwrap()).collect();
        let c = self.terms.get(&lead).cloned().ok_or(SeriesError::NoLeadingTerm)?;
        let cinv = c.inv().ok_or(SeriesError::ZeroSeries)?;
        let mut u = PuiseuxSeries {
            vars: self.vars.clone(),
            denom: self.denom,
            terms: BTreeMap::new(),
            cutoff: self.cutoff.iter().enumerate().map(|(k, c)| c.map(|c| c - lead[k])).collect(),
        };
        for (e, v) in &self.terms {
            if *e == lead {
                continue;
            }
            let key: Vec<i64> = e.iter().zip(&lead).map(|(x, l)| x - l).collect();
            u.terms.insert(key, v * &cinv);
        }
        // every term of u must push some truncated variable upward
        let mut free = Vec::new();
        for e in u.terms.keys() {
            if !e.iter().enumerate().any(|(k, x)| *x > 0 && u.cutoff[k].is_some()) {
                for (k, x) in e.iter().enumerate() {
                    if *x > 0 && !free.contains(&self.vars[k]) {
                        free.push(self.vars[k]);
                    }
                }
            }
        }
        if !free.is_empty() {
            let names: Vec<&str> = free.iter().map(|v| v.name()).collect();
            return Err(SeriesError::NeedsTruncation(names.join(",")));
        }
        Ok((c, lead, u))
    }

    /// Impose the cutoffs of `o` (same layout) on `self`.
    fn capped_like(mut self, o: &Self) -> Self {
        debug_assert!(self.vars == o.vars && self.denom == o.denom);
        for (k, c) in o.cutoff.iter().enumerate() {
            if let Some(c) = c {
                self.cutoff[k] = Some(self.cutoff[k].map_or(*c, |x| x.min(*c)));
            }
        }
        self.prune();
        self
    }

    fn shifted(&self, shift: &[i64]) -> Self {
        let mut s = self.clone();
        s.terms =
            self.terms.iter().map(|(e, c)| (e.iter().zip(shift).map(|(x, d)| x + d).collect(), c.clone())).collect();
        s.cutoff = self.cutoff.iter().zip(shift).map(|(c, d)| c.map(|c| c + d)).collect();
        s
    }

    /// Multiplicative inverse to the requested truncation.
    pub fn invert(&self, order: &Truncation) -> Result<Self, SeriesError> {
        let a = self.truncate(order);
        if a.terms.is_empty() {
            return Err(SeriesError::ZeroSeries);
        }
        let (c, lead, u) = a.factor_leading()?;
        let minus_u = u.neg();
        // scaling by zero keeps the layout and cutoffs of u
        let mut acc = minus_u.scale(&ExactComplex::zero()).add(&PuiseuxSeries::one());
        let mut power = minus_u.clone();
        let mut steps = 0;
        while !power.terms.is_empty() {
            acc = acc.add(&power);
            power = power.mul(&minus_u).capped_like(&u);
            steps += 1;
            if steps > MAX_STEPS {
                return Err(SeriesError::IterationLimit(MAX_STEPS));
            }
        }
        let neg_lead: Vec<i64> = lead.iter().map(|x| -x).collect();
        let out = acc.shifted(&neg_lead).scale(&c.inv().unwrap());
        Ok(out.truncate(order))
    }

    pub fn pow(&self, n: i64, order: &Truncation) -> Result<Self, SeriesError> {
        let base = if n < 0 { self.invert(order)? } else { self.truncate(order) };
        let mut e = n.unsigned_abs();
        let mut acc = PuiseuxSeries::one();
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&b);
            }
            e >>= 1;
            if e > 0 {
                b = b.mul(&b);
            }
        }
        Ok(acc.truncate(order))
    }

    /// `self^(p/2)` (or any integer power) by the binomial series around the leading term.
    pub fn pow_ratio(&self, alpha: Rational64, order: &Truncation) -> Result<Self, SeriesError> {
        if alpha.is_integer() {
            return self.pow(alpha.to_integer(), order);
        }
        if *alpha.denom() != 2 {
            return Err(SeriesError::IrrationalPower { coeff: "*".into(), power: alpha.to_string() });
        }
        let a = self.truncate(order);
        if a.terms.is_empty() {
            return Err(SeriesError::ZeroSeries);
        }
        let (c, lead, u) = a.factor_leading()?;
        let irrational = || SeriesError::IrrationalPower { coeff: c.to_string(), power: alpha.to_string() };
        if !c.is_real() || !c.re.is_positive() {
            return Err(irrational());
        }
        let root = rational_sqrt(&c.re).ok_or_else(irrational)?;
        let c_alpha = ExactComplex::real(root).pow(*alpha.numer()).ok_or_else(irrational)?;
        // sum_j binom(alpha, j) u^j
        let alpha_big = BigRational::new((*alpha.numer()).into(), (*alpha.denom()).into());
        let mut acc = u.scale(&ExactComplex::zero()).add(&PuiseuxSeries::one());
        let mut power = u.clone();
        let mut binom = ExactComplex::real(alpha_big.clone());
        let mut j = 1i64;
        while !power.terms.is_empty() {
            acc = acc.add(&power.scale(&binom));
            power = power.mul(&u).capped_like(&u);
            let factor = (&alpha_big - BigRational::from_integer(j.into())) / BigRational::from_integer((j + 1).into());
            binom = binom.scale(&factor);
            j += 1;
            if j as usize > MAX_STEPS {
                return Err(SeriesError::IterationLimit(MAX_STEPS));
            }
        }
        // multiply by (c m)^alpha, doubling the lattice only when needed
        let p = *alpha.numer();
        let odd = lead.iter().any(|x| (x * p) % 2 != 0);
        let vars = acc.vars.clone();
        let mut out = if odd { acc.relabel(&vars, acc.denom * 2) } else { acc };
        let shift: Vec<i64> = lead.iter().map(|x| if odd { x * p } else { x * p / 2 }).collect();
        out = out.shifted(&shift).scale(&c_alpha);
        Ok(out.truncate(order))
    }

    /// `v -> sign * v^power`; a sign of -1 needs integer exponents of `v`.
    pub fn substitute_power(&self, v: Var, sign: i8, power: Rational64) -> Result<Self, SeriesError> {
        if !power.is_positive() {
            return Err(SeriesError::BadPower(power.to_string()));
        }
        let Some(k) = self.index(v) else {
            return Ok(self.clone());
        };
        let (p, q) = (*power.numer(), *power.denom());
        if sign < 0 {
            if let Some(e) = self.terms.keys().map(|e| e[k]).find(|x| x % self.denom != 0) {
                return Err(SeriesError::NonIntegerExponent {
                    var: v,
                    exponent: Rational64::new(e, self.denom).to_string(),
                });
            }
        }
        let mut out = PuiseuxSeries {
            vars: self.vars.clone(),
            denom: self.denom * q,
            terms: BTreeMap::new(),
            cutoff: vec![None; self.vars.len()],
        };
        for (e, c) in &self.terms {
            let key: Vec<i64> = e.iter().enumerate().map(|(i, x)| if i == k { x * p } else { x * q }).collect();
            let flip = sign < 0 && (e[k] / self.denom) % 2 != 0;
            out.terms.insert(key, if flip { -c } else { c.clone() });
        }
        for (i, c) in self.cutoff.iter().enumerate() {
            out.cutoff[i] = c.map(|c| if i == k { c * p } else { c * q });
        }
        out.prune();
        Ok(out)
    }

    /// Set `v = 0`, dropping it from the variable list.
    pub fn set_zero(&self, v: Var) -> Result<Self, SeriesError> {
        let Some(k) = self.index(v) else {
            return Ok(self.clone());
        };
        if self.terms.keys().any(|e| e[k] < 0) || self.cutoff[k].is_some_and(|c| c <= 0) {
            return Err(SeriesError::SingularAtZero(v));
        }
        let mut vars = self.vars.clone();
        vars.remove(k);
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            if e[k] == 0 {
                let mut key = e.clone();
                key.remove(k);
                terms.insert(key, c.clone());
            }
        }
        let mut cutoff = self.cutoff.clone();
        cutoff.remove(k);
        Ok(PuiseuxSeries { vars, denom: self.denom, terms, cutoff })
    }

    /// Numerical value of the known terms at a point (principal branch for fractional powers).
    pub fn eval(&self, point: &[(Var, Complex64)]) -> Result<Complex64, SeriesError> {
        let vals: Vec<Complex64> = self
            .vars
            .iter()
            .map(|v| point.iter().find(|(w, _)| w == v).map(|(_, z)| *z).ok_or(SeriesError::MissingVariable(*v)))
            .collect::<Result<_, _>>()?;
        let mut sum = Complex64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let mut m = c.to_complex64();
            for (x, z) in e.iter().zip(&vals) {
                if *x == 0 {
                    continue;
                }
                m *= if x % self.denom == 0 {
                    z.powi((x / self.denom) as i32)
                } else {
                    z.powf(*x as f64 / self.denom as f64)
                };
            }
            sum += m;
        }
        Ok(sum)
    }

    /// Known terms sorted by total exponent, then lexicographically.
    pub fn sorted_terms(&self) -> Vec<(Vec<Rational64>, ExactComplex)> {
        let mut v: Vec<(i64, Vec<i64>, ExactComplex)> =
            self.terms.iter().map(|(e, c)| (e.iter().sum(), e.clone(), c.clone())).collect();
        v.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
        v.into_iter().map(|(_, e, c)| (e.iter().map(|x| Rational64::new(*x, self.denom)).collect(), c)).collect()
    }

    /// Text form: one term per line, then one `O(...)` line per truncated variable.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (e, c) in self.sorted_terms() {
            out.push_str(&c.to_string());
            let mono: Vec<String> =
                self.vars.iter().zip(&e).filter(|(_, x)| !x.is_zero()).map(|(v, x)| format!("{v}^{{{x}}}")).collect();
            if !mono.is_empty() {
                out.push_str(" * ");
                out.push_str(&mono.join(" "));
            }
            out.push('\n');
        }
        if self.terms.is_empty() {
            out.push_str("0\n");
        }
        for (v, c) in self.vars.iter().zip(&self.cutoff) {
            if let Some(c) = c {
                out.push_str(&format!("O({v}^{{{}}})\n", Rational64::new(*c, self.denom)));
            }
        }
        out
    }

    pub fn to_json(&self) -> SeriesJson {
        SeriesJson {
            variables: self.vars.clone(),
            denominator: self.denom,
            terms: self.sorted_terms_scaled(),
            truncation: self.cutoff.clone(),
        }
    }

    fn sorted_terms_scaled(&self) -> Vec<(Vec<i64>, ExactComplex)> {
        let mut v: Vec<(Vec<i64>, ExactComplex)> = self.terms.iter().map(|(e, c)| (e.clone(), c.clone())).collect();
        v.sort_by_key(|(e, _)| (e.iter().sum::<i64>(), e.clone()));
        v
    }

    pub fn from_json(j: &SeriesJson) -> Result<Self, String> {
        let mut vars = j.variables.clone();
        vars.sort();
        vars.dedup();
        if vars != j.variables {
            return Err("variables must be distinct and in canonical order".into());
        }
        if j.denominator <= 0 || j.truncation.len() != vars.len() {
            return Err("bad denominator or truncation length".into());
        }
        let mut s = PuiseuxSeries { vars, denom: j.denominator, terms: BTreeMap::new(), cutoff: j.truncation.clone() };
        for (e, c) in &j.terms {
            if e.len() != s.vars.len() {
                return Err("exponent vector length mismatch".into());
            }
            s.terms.insert(e.clone(), c.clone());
        }
        s.prune();
        Ok(s)
    }
}

/// JSON shape: exponents are scaled by `denominator`; `truncation` holds exclusive scaled cutoffs.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SeriesJson {
    pub variables: Vec<Var>,
    pub denominator: i64,
    pub terms: Vec<(Vec<i64>, ExactComplex)>,
    pub truncation: Vec<Option<i64>>,
}

impl Serialize for PuiseuxSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for PuiseuxSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = SeriesJson::deserialize(d)?;
        PuiseuxSeries::from_json(&j).map_err(serde::de::Error::custom)
    }
}

impl PartialEq for PuiseuxSeries {
    fn eq(&self, o: &Self) -> bool {
        let (a, b) = self.aligned(o);
        let strip = |s: &PuiseuxSeries| -> (Vec<Option<i64>>, BTreeMap<Vec<i64>, ExactComplex>) {
            (s.cutoff.clone(), s.terms.clone())
        };
        // variables that are exact and absent from both sides compare equal
        strip(&a) == strip(&b)
    }
}

impl fmt::Display for PuiseuxSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl std::ops::Add for &PuiseuxSeries {
    type Output = PuiseuxSeries;
    fn add(self, o: &PuiseuxSeries) -> PuiseuxSeries {
        PuiseuxSeries::add(self, o)
    }
}

impl std::ops::Sub for &PuiseuxSeries {
    type Output = PuiseuxSeries;
    fn sub(self, o: &PuiseuxSeries) -> PuiseuxSeries {
        PuiseuxSeries::sub(self, o)
    }
}

impl std::ops::Mul for &PuiseuxSeries {
    type Output = PuiseuxSeries;
    fn mul(self, o: &PuiseuxSeries) -> PuiseuxSeries {
        PuiseuxSeries::mul(self, o)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    fn t() -> PuiseuxSeries {
        PuiseuxSeries::var(Var::T)
    }

    #[test]
    fn geometric_inverse() {
        let order = Truncation::new().with(Var::T, 6);
        let a = PuiseuxSeries::one().sub(&t().mul(&t()));
        let inv = a.invert(&order).unwrap();
        let want: Vec<(Vec<Rational64>, ExactComplex)> =
            (0..=3).map(|k| (vec![r(2 * k, 1)], ExactComplex::one())).collect();
        assert_eq!(inv.sorted_terms(), want);
        assert_eq!(inv.known_order(Var::T), Some(r(6, 1)));
        assert_eq!(a.mul(&inv), PuiseuxSeries::one().truncate(&order));
    }

    #[test]
    fn inverse_needs_truncation() {
        let a = PuiseuxSeries::one().sub(&PuiseuxSeries::var(Var::X));
        let err = a.invert(&Truncation::new().with(Var::T, 4)).unwrap_err();
        assert_eq!(err, SeriesError::NeedsTruncation("x".into()));
    }

    #[test]
    fn laurent_inverse_shifts_precision() {
        // q^-1 (1 + 2q) known through q^3 -> inverse q (1 - 2q + ...) known through q^5
        let q = PuiseuxSeries::var(Var::Q);
        let a = PuiseuxSeries::monomial(ExactComplex::one(), &[(Var::Q, r(-1, 1))])
            .add(&PuiseuxSeries::from_int(2))
            .with_cutoff(Var::Q, r(4, 1));
        let inv = a.invert(&Truncation::new().with(Var::Q, 10)).unwrap();
        assert_eq!(inv.coeff(&[(Var::Q, r(1, 1))]), ExactComplex::one());
        assert_eq!(inv.coeff(&[(Var::Q, r(2, 1))]), ExactComplex::from_int(-2));
        assert_eq!(inv.coeff(&[(Var::Q, r(5, 1))]), ExactComplex::from_int(16));
        assert_eq!(inv.cutoff(Var::Q), Some(r(6, 1)));
        let prod = a.mul(&inv);
        assert_eq!(prod, PuiseuxSeries::one().with_cutoff(Var::Q, r(5, 1)));
        assert!(q.is_exact());
    }

    #[test]
    fn half_integer_exponents_print_reduced() {
        let s = PuiseuxSeries::monomial(ExactComplex::from_int(2), &[(Var::T, r(3, 2))])
            .truncate(&Truncation::new().with(Var::T, 5));
        assert_eq!(s.to_text(), "2 * t^{3/2}\nO(t^{11/2})\n");
    }

    #[test]
    fn sqrt_of_one_minus_t() {
        let order = Truncation::new().with(Var::T, 4);
        let a = PuiseuxSeries::one().sub(&t());
        let h = a.pow_ratio(r(1, 2), &order).unwrap();
        assert_eq!(h.mul(&h), a.truncate(&order));
        assert_eq!(h.coeff(&[(Var::T, r(2, 1))]), ExactComplex::from_ratio(-1, 8));
    }

    #[test]
    fn half_power_of_monomial() {
        let order = Truncation::new().with(Var::T, 4);
        let a = PuiseuxSeries::monomial(ExactComplex::from_int(4), &[(Var::T, r(1, 1))]);
        let h = a.pow_ratio(r(3, 2), &order).unwrap();
        assert_eq!(h.sorted_terms(), vec![(vec![r(3, 2)], ExactComplex::from_int(8))]);
        let bad = PuiseuxSeries::from_int(2).pow_ratio(r(1, 2), &order);
        assert!(matches!(bad, Err(SeriesError::IrrationalPower { .. })));
    }

    #[test]
    fn substitution_sign_and_power() {
        let order = Truncation::new().with(Var::Q, 6);
        let a = PuiseuxSeries::one().sub(&PuiseuxSeries::var(Var::Q)).invert(&order).unwrap();
        let half = a.substitute_power(Var::Q, 1, r(1, 2)).unwrap();
        assert_eq!(half.coeff(&[(Var::Q, r(3, 2))]), ExactComplex::one());
        assert_eq!(half.cutoff(Var::Q), Some(r(7, 2)));
        let neg = half.substitute_power(Var::Q, -1, r(1, 1));
        assert!(matches!(neg, Err(SeriesError::NonIntegerExponent { .. })));
        let flipped = a.substitute_power(Var::Q, -1, r(1, 1)).unwrap();
        assert_eq!(flipped.coeff(&[(Var::Q, r(3, 1))]), ExactComplex::from_int(-1));
    }

    #[test]
    fn json_round_trip() {
        let order = Truncation::new().with(Var::T, 5).with(Var::X, 3);
        let s = PuiseuxSeries::one()
            .sub(&t().mul(&PuiseuxSeries::var(Var::X)))
            .invert(&order)
            .unwrap()
            .mul(&PuiseuxSeries::monomial(ExactComplex::i(), &[(Var::T, r(1, 2))]));
        let text = serde_json::to_string(&s).unwrap();
        let back: PuiseuxSeries = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn set_zero_drops_variable() {
        let s = PuiseuxSeries::from_int(3).add(&PuiseuxSeries::var(Var::Y)).mul(&t());
        let z = s.set_zero(Var::Y).unwrap();
        assert_eq!(z.variables(), &[Var::T]);
        assert_eq!(z.coeff(&[(Var::T, r(1, 1))]), ExactComplex::from_int(3));
        let inv = PuiseuxSeries::monomial(ExactComplex::one(), &[(Var::Y, r(-1, 1))]);
        assert_eq!(inv.set_zero(Var::Y), Err(SeriesError::SingularAtZero(Var::Y)));
    }
}
