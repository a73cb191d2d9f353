//! Reference data for Brieskorn spheres.

use std::collections::BTreeMap;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use super::{FloerError, Tower};
use crate::series::{ExactComplex, PuiseuxSeries, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlatCounts {
    pub trivial: u32,
    pub irreducible_su2: u32,
    /// Irreducible SL(2,C) flat connections not conjugate into SU(2), when known.
    pub irreducible_sl2c_only: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BrieskornDatum {
    pub name: String,
    /// Instanton Floer ranks by mod-8 degree.
    pub instanton_ranks: BTreeMap<u8, u32>,
    /// Rank of HP*, all in degree 0, when known.
    pub hp_rank: Option<u32>,
    pub flat_connection_counts: FlatCounts,
}

pub fn brieskorn(name: &str) -> Result<BrieskornDatum, FloerError> {
    let datum = |name: &str, ranks: &[(u8, u32)], hp_rank, flat| BrieskornDatum {
        name: name.into(),
        instanton_ranks: ranks.iter().copied().collect(),
        hp_rank,
        flat_connection_counts: flat,
    };
    match name {
        "P" | "Sigma235" | "Sigma(2,3,5)" => Ok(datum(
            "Sigma(2,3,5)",
            &[(0, 1), (4, 1)],
            None,
            FlatCounts { trivial: 1, irreducible_su2: 2, irreducible_sl2c_only: None },
        )),
        "Sigma237" | "Sigma(2,3,7)" => Ok(datum(
            "Sigma(2,3,7)",
            &[(2, 1), (6, 1)],
            Some(3),
            FlatCounts { trivial: 1, irreducible_su2: 2, irreducible_sl2c_only: Some(1) },
        )),
        _ => Err(FloerError::UnknownManifold(name.into())),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjectureReport {
    pub manifold: String,
    pub series: PuiseuxSeries,
    pub conjectural: bool,
}

/// T+ plus HP* placed in degree 0; always flagged conjectural.
pub fn conjecture_series(name: &str, order: i64) -> Result<ConjectureReport, FloerError> {
    let d = brieskorn(name)?;
    let hp = d.hp_rank.ok_or_else(|| FloerError::NoConjecture(d.name.clone()))?;
    let tower = Tower::new(Rational64::from_integer(0)).series(order);
    let constants = PuiseuxSeries::constant(ExactComplex::from_int(hp as i64)).with_var(Var::T);
    Ok(ConjectureReport { manifold: d.name, series: tower.add(&constants), conjectural: true })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog() {
        let p = brieskorn("P").unwrap();
        assert_eq!(p.instanton_ranks, [(0, 1), (4, 1)].into_iter().collect());
        let s = brieskorn("Sigma237").unwrap();
        assert_eq!(s.instanton_ranks, [(2, 1), (6, 1)].into_iter().collect());
        assert_eq!(s.hp_rank, Some(3));
        let f = s.flat_connection_counts;
        assert_eq!(f.trivial + f.irreducible_su2 + f.irreducible_sl2c_only.unwrap(), 4);
        assert!(brieskorn("Sigma(2,3,11)").is_err());
    }

    #[test]
    fn conjecture() {
        let r = conjecture_series("Sigma237", 6).unwrap();
        assert!(r.conjectural);
        let c = |k: i64| r.series.coeff(&[(Var::T, Rational64::from_integer(k))]);
        assert_eq!(c(0), ExactComplex::from_int(4));
        assert_eq!(c(2), ExactComplex::one());
        assert_eq!(c(4), ExactComplex::one());
        assert_eq!(c(1), ExactComplex::zero());
        assert!(conjecture_series("P", 6).is_err());
    }
}
