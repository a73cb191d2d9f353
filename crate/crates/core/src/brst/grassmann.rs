//! Exact Grassmann algebra with su(2)-valued coefficients.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::BrstError;
use crate::series::ExactComplex;

/// Subset of Grassmann generators; bit k stands for theta_k.
pub type Mask = u128;
pub const MAX_GENERATORS: u32 = Mask::BITS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of_mask(m: Mask) -> Self {
        if m.count_ones() % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn is_odd(self) -> bool {
        self == Parity::Odd
    }

    pub fn flip(self) -> Self {
        self.plus(Parity::Odd)
    }

    /// Parity of a product.
    pub fn plus(self, o: Parity) -> Self {
        if self == o {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Sign taking theta^a theta^b to the ordered monomial theta^{a | b}; `None` if they share a generator.
pub fn reorder_sign(a: Mask, b: Mask) -> Option<bool> {
    if a & b != 0 {
        return None;
    }
    let mut swaps = 0u32;
    let mut m = b;
    while m != 0 {
        let j = m.trailing_zeros();
        // generators of a above j must move past theta_j
        swaps += a.checked_shr(j + 1).unwrap_or(0).count_ones();
        m &= m - 1;
    }
    Some(swaps % 2 == 1)
}

/// A scalar supernumber sum_m c_m theta^m.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Supernumber {
    pub terms: BTreeMap<Mask, ExactComplex>,
}

impl Supernumber {
    pub fn constant(c: ExactComplex) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(0, c);
        }
        Supernumber { terms }
    }

    pub fn generator(k: u32) -> Result<Self, BrstError> {
        if k >= MAX_GENERATORS {
            return Err(BrstError::GeneratorBudget(k + 1));
        }
        Ok(Supernumber { terms: [(1 << k, ExactComplex::one())].into_iter().collect() })
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, c: &ExactComplex) -> Self {
        let mut out = Supernumber::default();
        for (m, v) in &self.terms {
            insert_add(&mut out.terms, *m, v * c);
        }
        out
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (m, v) in &o.terms {
            insert_add(&mut out.terms, *m, v.clone());
        }
        out
    }

    /// Exterior product with Koszul signs.
    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Supernumber::default();
        for (ma, a) in &self.terms {
            for (mb, b) in &o.terms {
                if let Some(neg) = reorder_sign(*ma, *mb) {
                    let v = a * b;
                    insert_add(&mut out.terms, ma | mb, if neg { -v } else { v });
                }
            }
        }
        out
    }
}

fn insert_add(map: &mut BTreeMap<Mask, ExactComplex>, m: Mask, v: ExactComplex) {
    if v.is_zero() {
        return;
    }
    let e = map.entry(m).or_insert_with(ExactComplex::zero);
    *e += &v;
    if e.is_zero() {
        map.remove(&m);
    }
}

pub type Su2 = [ExactComplex; 3];

fn su2_zero() -> Su2 {
    [ExactComplex::zero(), ExactComplex::zero(), ExactComplex::zero()]
}

fn su2_is_zero(v: &Su2) -> bool {
    v.iter().all(|c| c.is_zero())
}

/// [e_a, e_b] = eps_abc e_c on coefficient vectors.
fn cross(x: &Su2, y: &Su2) -> Su2 {
    [&x[1] * &y[2] - &x[2] * &y[1], &x[2] * &y[0] - &x[0] * &y[2], &x[0] * &y[1] - &x[1] * &y[0]]
}

/// sum_m theta^m X_m^a e_a with homogeneous Grassmann parity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrassmannElement {
    pub parity: Parity,
    pub terms: BTreeMap<Mask, Su2>,
}

impl GrassmannElement {
    pub fn zero(parity: Parity) -> Self {
        GrassmannElement { parity, terms: BTreeMap::new() }
    }

    /// Build from monomials; every mask must have the declared parity.
    pub fn from_terms(parity: Parity, terms: impl IntoIterator<Item = (Mask, Su2)>) -> Result<Self, BrstError> {
        let mut out = GrassmannElement::zero(parity);
        for (m, v) in terms {
            if Parity::of_mask(m) != parity {
                return Err(BrstError::Parity(format!("monomial {m:#b} in a {parity:?} element")));
            }
            out.add_term(m, &v);
        }
        Ok(out)
    }

    /// An element e_a theta^m.
    pub fn basis(a: usize, m: Mask) -> Self {
        let mut v = su2_zero();
        v[a] = ExactComplex::one();
        GrassmannElement { parity: Parity::of_mask(m), terms: [(m, v)].into_iter().collect() }
    }

    fn add_term(&mut self, m: Mask, v: &Su2) {
        if su2_is_zero(v) {
            return;
        }
        let e = self.terms.entry(m).or_insert_with(su2_zero);
        for k in 0..3 {
            e[k] += &v[k];
        }
        if su2_is_zero(e) {
            self.terms.remove(&m);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &Self) -> Self {
        debug_assert!(o.is_zero() || self.is_zero() || self.parity == o.parity);
        let mut out = self.clone();
        if self.is_zero() {
            out.parity = o.parity;
        }
        for (m, v) in &o.terms {
            out.add_term(*m, v);
        }
        out
    }

    pub fn scale(&self, c: &ExactComplex) -> Self {
        let mut out = GrassmannElement::zero(self.parity);
        for (m, v) in &self.terms {
            out.add_term(*m, &[&v[0] * c, &v[1] * c, &v[2] * c]);
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(&ExactComplex::from_int(-1))
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    /// Multiply by a scalar supernumber on the left.
    pub fn mul_scalar(&self, s: &Supernumber) -> Self {
        let parity = self.parity.plus(s.terms.keys().next().map_or(Parity::Even, |m| Parity::of_mask(*m)));
        let mut out = GrassmannElement::zero(parity);
        for (ms, c) in &s.terms {
            for (m, v) in &self.terms {
                if let Some(neg) = reorder_sign(*ms, *m) {
                    let c = if neg { -c.clone() } else { c.clone() };
                    out.add_term(ms | m, &[&v[0] * &c, &v[1] * &c, &v[2] * &c]);
                }
            }
        }
        out
    }

    /// Graded commutator; all brackets vanish when `abelian`.
    pub fn bracket(&self, o: &Self, abelian: bool) -> Self {
        let mut out = GrassmannElement::zero(self.parity.plus(o.parity));
        if abelian {
            return out;
        }
        for (ma, a) in &self.terms {
            for (mb, b) in &o.terms {
                if let Some(neg) = reorder_sign(*ma, *mb) {
                    let mut v = cross(a, b);
                    if neg {
                        v = [-v[0].clone(), -v[1].clone(), -v[2].clone()];
                    }
                    out.add_term(ma | mb, &v);
                }
            }
        }
        out
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().flat_map(|v| v.iter().map(|c| c.max_abs())).fold(0.0, f64::max)
    }

    /// Flattened (mask, su(2) index, coefficient) entries.
    pub fn entries(&self) -> impl Iterator<Item = ((Mask, usize), &ExactComplex)> + '_ {
        self.terms
            .iter()
            .flat_map(|(m, v)| v.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(move |(k, c)| ((*m, k), c)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn th(k: u32) -> Supernumber {
        Supernumber::generator(k).unwrap()
    }

    #[test]
    fn exterior_signs() {
        assert!(th(1).mul(&th(1)).is_zero());
        assert_eq!(th(1).mul(&th(2)), th(2).mul(&th(1)).scale(&ExactComplex::from_int(-1)));
        let a = th(1).scale(&ExactComplex::from_ratio(3, 2));
        let b = th(2).scale(&ExactComplex::from_int(-5));
        assert!(a.mul(&b).add(&b.mul(&a)).is_zero());
        assert!(Supernumber::generator(MAX_GENERATORS).is_err());
        assert_eq!(reorder_sign(0b101, 0b010), Some(true));
        assert_eq!(reorder_sign(0b001, 0b110), Some(false));
        assert_eq!(reorder_sign(1 << 127, 1), Some(true));
    }

    #[test]
    fn brackets() {
        let e = |a| GrassmannElement::basis(a, 0);
        assert_eq!(e(0).bracket(&e(1), false), e(2));
        assert_eq!(e(1).bracket(&e(0), false), e(2).neg());
        let x = e(0).add(&e(2).scale(&ExactComplex::from_ratio(2, 7)));
        assert!(x.bracket(&x, false).is_zero());
        assert!(e(0).bracket(&e(1), true).is_zero());
        // two odd elements: [X, Y] = [Y, X]
        let p = GrassmannElement::basis(0, 1);
        let q = GrassmannElement::basis(1, 2);
        assert_eq!(p.bracket(&q, false), q.bracket(&p, false));
        assert_eq!(p.bracket(&q, false).parity, Parity::Even);
    }

    #[test]
    fn parity_is_checked() {
        let v = [ExactComplex::one(), ExactComplex::zero(), ExactComplex::zero()];
        assert!(GrassmannElement::from_terms(Parity::Odd, [(0b11, v.clone())]).is_err());
        assert!(GrassmannElement::from_terms(Parity::Even, [(0b11, v)]).is_ok());
    }
}
