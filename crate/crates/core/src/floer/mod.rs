//! Graded dimensions of Floer-type spaces: towers, HF+, Harder-Narasimhan, Molien and descent.

pub mod brieskorn;
pub mod superspace;

use num_rational::Rational64;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::{ExactComplex, ExactPolynomial, PolyError, PuiseuxSeries, SeriesError, Truncation, Var};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FloerError {
    #[error("h = {h} is out of range for genus {g} (need 0 < |h| <= g - 1)")]
    HOutOfRange { g: u32, h: i64 },
    #[error("genus {0} is out of range (need g >= {1})")]
    Genus(u32, u32),
    #[error("p = {0} must be positive")]
    LensOrder(u32),
    #[error("only N = 2 is supported, got {0}")]
    UnsupportedRank(u32),
    #[error("descent step p = {0} must lie in 0..=4")]
    DescentStep(u32),
    #[error("inexact division: {0}")]
    Division(#[from] PolyError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("{0}")]
    Superspace(String),
    #[error("unknown manifold {0:?}")]
    UnknownManifold(String),
    #[error("no conjectural series for {0}: missing data")]
    NoConjecture(String),
}

fn t_order(order: i64) -> Truncation {
    Truncation::new().with(Var::T, order)
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// A copy of the tower T+_n, optionally truncated to `length` generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tower {
    pub bottom: Rational64,
    pub length: Option<u32>,
}

impl Tower {
    pub fn new(bottom: Rational64) -> Self {
        Tower { bottom, length: None }
    }

    pub fn truncated(bottom: Rational64, length: u32) -> Self {
        Tower { bottom, length: Some(length) }
    }

    /// t^bottom / (1 - t^2), or t^bottom (1 + t^2 + ... + t^{2(L-1)}), through t^order.
    pub fn series(&self, order: i64) -> PuiseuxSeries {
        let top = Rational64::from_integer(order);
        let mut terms = Vec::new();
        let mut k = 0u32;
        loop {
            let e = self.bottom + Rational64::from_integer(2 * k as i64);
            if e > top || self.length.is_some_and(|l| k >= l) {
                break;
            }
            terms.push((vec![e], ExactComplex::one()));
            k += 1;
        }
        let s = PuiseuxSeries::from_terms(&[Var::T], terms);
        if self.length.is_some_and(|l| self.bottom + Rational64::from_integer(2 * (l as i64 - 1)) <= top) {
            // finitely many generators, all below the cutoff: exact
            s
        } else {
            s.truncate(&t_order(order))
        }
    }
}

pub fn tower_series(bottom: Rational64, length: Option<u32>, order: i64) -> PuiseuxSeries {
    Tower { bottom, length }.series(order)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HfManifold {
    Lens(u32),
    S2xS1,
    SigmaGxS1 { g: u32, h: i64 },
}

impl HfManifold {
    pub fn name(&self) -> String {
        match self {
            HfManifold::Lens(p) => format!("L({p},1)"),
            HfManifold::S2xS1 => "S2xS1".into(),
            HfManifold::SigmaGxS1 { g, h } => format!("Sigma{g}xS1(h={h})"),
        }
    }
}

/// `multiplicity` copies of a tower, tagged by the exterior degree i where relevant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerSummand {
    pub tower: Tower,
    pub multiplicity: u64,
    pub exterior_degree: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HfReport {
    pub manifold: String,
    /// Number of spin-c structures covered by `series`.
    pub spin_c: u32,
    pub summands: Vec<TowerSummand>,
    pub series: PuiseuxSeries,
    /// Total rank when finite.
    pub rank: Option<u64>,
    /// True when tower bottoms are only known relative to each other.
    pub relative_grading: bool,
}

/// HF+ of the basic examples; Lens spaces report one spin-c structure.
pub fn hf_plus(m: HfManifold, order: i64) -> Result<HfReport, FloerError> {
    let half = Rational64::new(1, 2);
    let (spin_c, summands, relative) = match m {
        HfManifold::Lens(p) => {
            if p == 0 {
                return Err(FloerError::LensOrder(p));
            }
            (
                1,
                vec![TowerSummand { tower: Tower::new(Rational64::zero()), multiplicity: 1, exterior_degree: None }],
                false,
            )
        }
        HfManifold::S2xS1 => (
            1,
            vec![
                TowerSummand { tower: Tower::new(-half), multiplicity: 1, exterior_degree: None },
                TowerSummand { tower: Tower::new(half), multiplicity: 1, exterior_degree: None },
            ],
            false,
        ),
        HfManifold::SigmaGxS1 { g, h } => {
            if g < 1 || h == 0 || h.unsigned_abs() > g as u64 - 1 {
                return Err(FloerError::HOutOfRange { g, h });
            }
            let d = g as u64 - 1 - h.unsigned_abs();
            let s = (0..=d)
                .map(|i| TowerSummand {
                    tower: Tower::truncated(Rational64::zero(), (d + 1 - i) as u32),
                    multiplicity: binomial(2 * g as u64, i),
                    exterior_degree: Some(i as u32),
                })
                .collect();
            (1, s, true)
        }
    };
    let mut series = PuiseuxSeries::zero();
    for s in &summands {
        series = series.add(&s.tower.series(order).scale(&ExactComplex::from_int(s.multiplicity as i64)));
    }
    let rank = summands.iter().map(|s| s.tower.length.map(|l| l as u64 * s.multiplicity)).sum::<Option<u64>>();
    Ok(HfReport { manifold: m.name(), spin_c, summands, series, rank, relative_grading: relative })
}

/// Rank of HF+(Sigma_g x S^1, s_h) by listing basis elements of the exterior powers times tower levels.
pub fn hf_rank_brute_force(g: u32, h: i64) -> Result<u64, FloerError> {
    if g < 1 || h == 0 || h.unsigned_abs() > g as u64 - 1 {
        return Err(FloerError::HOutOfRange { g, h });
    }
    let d = g - 1 - h.unsigned_abs() as u32;
    let mut count = 0;
    for mask in 0u64..(1 << (2 * g)) {
        let i = mask.count_ones();
        if i <= d {
            // levels U^0 .. U^{d-i} survive the quotient by U^{d+1-i}
            count += (0..=(d - i)).count() as u64;
        }
    }
    Ok(count)
}

fn poly(c: &[i64]) -> ExactPolynomial {
    ExactPolynomial::from_ints(c)
}

fn poly_to_series(p: &ExactPolynomial) -> PuiseuxSeries {
    PuiseuxSeries::from_terms(
        &[Var::T],
        (0..=p.degree()).map(|k| (vec![Rational64::from_integer(k as i64)], p.coeff(k))).filter(|(_, c)| !c.is_zero()),
    )
}

/// Poincaré polynomial of the moduli of stable rank-2 bundles of odd degree on Sigma_g.
pub fn hn_poincare(g: u32) -> Result<ExactPolynomial, FloerError> {
    if g < 2 {
        return Err(FloerError::Genus(g, 2));
    }
    let n = 2 * g;
    let num = poly(&[1, 0, 0, 1])
        .pow(n)
        .sub(&ExactPolynomial::monomial(ExactComplex::one(), n as usize).mul(&poly(&[1, 1]).pow(n)));
    let den = poly(&[1, 0, -1]).mul(&poly(&[1, 0, 0, 0, -1]));
    Ok(num.div_exact(&den)?)
}

pub fn hn_series(g: u32) -> Result<PuiseuxSeries, FloerError> {
    Ok(poly_to_series(&hn_poincare(g)?))
}

/// (1 + t)^{2g} times the Harder-Narasimhan polynomial (N = 2 only).
pub fn gl_vs_sl_cohomology(n: u32, g: u32, order: i64) -> Result<PuiseuxSeries, FloerError> {
    if n != 2 {
        return Err(FloerError::UnsupportedRank(n));
    }
    let p = poly(&[1, 1]).pow(2 * g).mul(&hn_poincare(g)?);
    let s = poly_to_series(&p);
    Ok(if (p.degree() as i64) <= order { s } else { s.truncate(&t_order(order)) })
}

/// Weight multiplicities of Sym^n of the spin-1 representation, indexed by weight + n.
fn sym_weights(n: usize) -> Vec<u64> {
    let mut m = vec![0u64; 2 * n + 1];
    // a multiset of size n from {-1, 0, 1} is fixed by the counts (a, b) of -1 and +1
    for a in 0..=n {
        for b in 0..=(n - a) {
            m[n + b - a] += 1;
        }
    }
    m
}

/// Irreducible content of Sym^n(spin 1) as (spin, multiplicity).
pub fn sym_decomposition(n: usize) -> Vec<(usize, u64)> {
    let m = sym_weights(n);
    (0..=n).map(|j| (j, m[n + j] - if j < n { m[n + j + 1] } else { 0 })).filter(|(_, k)| *k > 0).collect()
}

/// Invariant polynomials on su(2): dim of the trivial part of Sym^n(adjoint) at t^n.
pub fn molien_su2_adjoint(order: usize) -> PuiseuxSeries {
    let terms = (0..=order).filter_map(|n| {
        let m = sym_weights(n);
        let trivial = m[n] - if n > 0 { m[n + 1] } else { 0 };
        (trivial > 0).then(|| (vec![Rational64::from_integer(n as i64)], ExactComplex::from_int(trivial as i64)))
    });
    PuiseuxSeries::from_terms(&[Var::T], terms).truncate(&t_order(order as i64))
}

/// (deg_t W_p, homological degree) after p descent steps.
pub fn descent_degree(deg_w0: Rational64, p: u32) -> Result<(Rational64, Rational64), FloerError> {
    if p > 4 {
        return Err(FloerError::DescentStep(p));
    }
    let p = Rational64::from_integer(p as i64);
    Ok((deg_w0 - p / 2, deg_w0 * 2 - p))
}

/// Whether every coefficient is a nonnegative integer.
pub fn is_graded_dimension(s: &PuiseuxSeries) -> bool {
    s.terms().all(|(_, c)| c.is_real() && c.re.is_integer() && !c.re.is_negative())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    fn geometric(order: i64) -> PuiseuxSeries {
        (1 / (1 - crate::series::RationalExpr::var(Var::T).pow(2))).expand_to(&t_order(order)).unwrap()
    }

    #[test]
    fn towers() {
        assert_eq!(tower_series(r(0, 1), None, 10), geometric(10));
        assert_eq!(tower_series(r(0, 1), Some(1), 10), PuiseuxSeries::one().with_var(Var::T));
        let pair = tower_series(r(-1, 2), None, 6).add(&tower_series(r(1, 2), None, 6));
        for k in -1..=11 {
            let c = pair.coeff(&[(Var::T, r(k, 2))]);
            assert_eq!(c, ExactComplex::from_int(if k % 2 != 0 { 1 } else { 0 }), "t^{k}/2");
        }
    }

    #[test]
    fn hf_examples() {
        assert_eq!(hf_plus(HfManifold::Lens(5), 8).unwrap().series, geometric(8));
        assert_eq!(hf_plus(HfManifold::SigmaGxS1 { g: 2, h: 1 }, 8).unwrap().rank, Some(1));
        assert_eq!(hf_plus(HfManifold::SigmaGxS1 { g: 3, h: 1 }, 8).unwrap().rank, Some(8));
        assert!(hf_plus(HfManifold::SigmaGxS1 { g: 3, h: 3 }, 8).is_err());
        assert!(hf_plus(HfManifold::SigmaGxS1 { g: 3, h: 0 }, 8).is_err());
        assert_eq!(hf_plus(HfManifold::S2xS1, 4).unwrap().rank, None);
    }

    #[test]
    fn hf_rank_matches_enumeration() {
        for g in 2..=5u32 {
            for h in 1..g as i64 {
                for s in [h, -h] {
                    let rep = hf_plus(HfManifold::SigmaGxS1 { g, h: s }, 4 * g as i64).unwrap();
                    assert_eq!(rep.rank, Some(hf_rank_brute_force(g, s).unwrap()));
                    let total: i64 = rep.series.terms().map(|(_, c)| i64::try_from(c.re.to_integer()).unwrap()).sum();
                    assert_eq!(total as u64, rep.rank.unwrap());
                }
            }
        }
    }

    #[test]
    fn hn_genus_two() {
        assert_eq!(hn_poincare(2).unwrap(), poly(&[1, 0, 1, 4, 1, 0, 1]));
        for g in 2..=6 {
            let p = hn_poincare(g).unwrap();
            assert_eq!(p.degree(), 6 * g as usize - 6);
            assert!(is_graded_dimension(&poly_to_series(&p)));
        }
        assert!(hn_poincare(1).is_err());
    }

    #[test]
    fn gl_factor() {
        let s = gl_vs_sl_cohomology(2, 2, 20).unwrap();
        let want = poly_to_series(&poly(&[1, 1]).pow(4).mul(&poly(&[1, 0, 1, 4, 1, 0, 1])));
        assert_eq!(s, want);
        assert_eq!(s.coeff(&[(Var::T, r(0, 1))]), ExactComplex::one());
        assert_eq!(s.valuation(Var::T), Some(r(0, 1)));
        assert_eq!(poly(&[1, 1]).pow(6).mul(&hn_poincare(3).unwrap()).degree(), 12 + 6);
        assert!(gl_vs_sl_cohomology(3, 2, 10).is_err());
    }

    #[test]
    fn molien() {
        let dims: Vec<ExactComplex> = (0..=4).map(|k| molien_su2_adjoint(4).coeff(&[(Var::T, r(k, 1))])).collect();
        let want: Vec<ExactComplex> = [1, 0, 1, 0, 1].iter().map(|n| ExactComplex::from_int(*n)).collect();
        assert_eq!(dims, want);
        assert_eq!(molien_su2_adjoint(20), geometric(20));
        assert_eq!(sym_decomposition(2), vec![(0, 1), (2, 1)]);
    }

    #[test]
    fn descent() {
        let two = r(2, 1);
        assert_eq!(descent_degree(two, 0).unwrap(), (r(2, 1), r(4, 1)));
        assert_eq!(descent_degree(two, 4).unwrap(), (r(0, 1), r(0, 1)));
        assert_eq!(descent_degree(two, 3).unwrap(), (r(1, 2), r(1, 1)));
        assert!(descent_degree(two, 5).is_err());
    }
}
