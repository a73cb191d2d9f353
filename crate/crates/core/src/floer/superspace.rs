//! Characters of the abelian zero-mode superspace on Sigma_g x S^1.

use num_rational::Rational64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::FloerError;
use crate::series::{ExactComplex, PuiseuxSeries, Truncation, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

/// Monomial weight x^a y^b t^c; the empty monomial is weightless.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Weight(pub Vec<(Var, i64)>);

impl Weight {
    pub fn var(v: Var) -> Self {
        Weight(vec![(v, 1)])
    }

    pub fn is_trivial(&self) -> bool {
        self.0.iter().all(|(_, e)| *e == 0)
    }

    fn series(&self) -> PuiseuxSeries {
        let exps: Vec<(Var, Rational64)> =
            self.0.iter().filter(|(_, e)| *e != 0).map(|(v, e)| (*v, Rational64::from_integer(*e))).collect();
        PuiseuxSeries::monomial(ExactComplex::one(), &exps)
    }
}

impl std::str::FromStr for Weight {
    type Err = String;
    /// Parses `1`, `x`, `t^2`, `x*y` and similar.
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s == "1" {
            return Ok(Weight::default());
        }
        let mut out = Vec::new();
        for f in s.split('*') {
            let (v, e) = match f.trim().split_once('^') {
                Some((v, e)) => (v, e.trim().parse::<i64>().map_err(|e| format!("bad exponent in {f:?}: {e}"))?),
                None => (f, 1),
            };
            let v: Var = v.trim().parse()?;
            if !matches!(v, Var::X | Var::Y | Var::T) {
                return Err(format!("weights use x, y, t only, got {v}"));
            }
            out.push((v, e));
        }
        Ok(Weight(out))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FactorKind {
    /// Bosonic C^m: a tower 1/(1 - w) per copy.
    Even,
    /// Grassmann Pi C^m: a fermionic Fock factor (1 + w) per copy.
    Odd,
    /// The real torus T^{2g} = Jac: cohomology (1 + s)^{2g}; complex dimension g on the even side.
    Torus,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuperspaceFactor {
    pub label: String,
    pub kind: FactorKind,
    pub weight: Weight,
    pub multiplicity: u32,
}

/// Weights of the factors that the geometry does not pin down.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightConfig {
    pub fiber: Weight,
    pub first_odd: Weight,
    /// Weight of the second standalone Pi C factor; there is no canonical choice.
    pub second_odd: Weight,
    pub blocks: [Weight; 2],
}

impl WeightConfig {
    /// Fiber and first odd factor weighted by x, blocks by y and t; the second odd weight is supplied.
    pub fn standard(second_odd: Weight) -> Self {
        WeightConfig {
            fiber: Weight::var(Var::X),
            first_odd: Weight::var(Var::X),
            second_odd,
            blocks: [Weight::var(Var::Y), Weight::var(Var::T)],
        }
    }
}

/// Factors of T*Jac x Pi C x Pi C x (C x Pi C^g) x (C x Pi C^g).
pub fn abelian_factors(g: u32, cfg: &WeightConfig) -> Vec<SuperspaceFactor> {
    let f = |label: &str, kind, weight: &Weight, multiplicity| SuperspaceFactor {
        label: label.into(),
        kind,
        weight: weight.clone(),
        multiplicity,
    };
    let mut v = vec![
        f("Jac", FactorKind::Torus, &Weight::default(), g),
        f("T*Jac fiber", FactorKind::Even, &cfg.fiber, g),
        f("Pi C (1)", FactorKind::Odd, &cfg.first_odd, 1),
        f("Pi C (2)", FactorKind::Odd, &cfg.second_odd, 1),
    ];
    for (k, w) in cfg.blocks.iter().enumerate() {
        v.push(f(&format!("block {} C", k + 1), FactorKind::Even, w, 1));
        v.push(f(&format!("block {} Pi C^g", k + 1), FactorKind::Odd, w, g));
    }
    v.retain(|x| x.multiplicity > 0);
    v
}

/// (even, odd) complex dimensions.
pub fn dimensions(factors: &[SuperspaceFactor]) -> (u32, u32) {
    factors.iter().fold((0, 0), |(e, o), f| match f.kind {
        FactorKind::Even | FactorKind::Torus => (e + f.multiplicity, o),
        FactorKind::Odd => (e, o + f.multiplicity),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperspaceReport {
    pub genus: u32,
    pub factors: Vec<SuperspaceFactor>,
    pub even_dim: u32,
    pub odd_dim: u32,
    pub character: PuiseuxSeries,
}

/// Product of 1/(1 - w) per even copy, (1 + w) per odd copy and (1 + s)^{2g} for the torus.
pub fn superspace_character(
    factors: &[SuperspaceFactor],
    genus: u32,
    order: i64,
) -> Result<SuperspaceReport, FloerError> {
    let (even_dim, odd_dim) = dimensions(factors);
    if even_dim != odd_dim {
        return Err(FloerError::Superspace(format!(
            "unbalanced superspace: even dimension {even_dim} != odd dimension {odd_dim}"
        )));
    }
    let trunc = Truncation::uniform(&[Var::X, Var::Y, Var::T], order);
    let one = PuiseuxSeries::one();
    let mut ch = one.clone();
    for f in factors {
        let w = f.weight.series();
        let piece = match f.kind {
            FactorKind::Torus => {
                one.add(&PuiseuxSeries::var(Var::S)).pow(2 * f.multiplicity as i64, &Truncation::new())?
            }
            FactorKind::Odd => one.add(&w).pow(f.multiplicity as i64, &Truncation::new())?,
            FactorKind::Even => {
                if f.weight.is_trivial() {
                    return Err(FloerError::Superspace(format!(
                        "even factor {:?} is weightless: its character 1/(1 - 1) diverges",
                        f.label
                    )));
                }
                one.sub(&w).pow(-(f.multiplicity as i64), &trunc)?
            }
        };
        ch = ch.mul(&piece).truncate(&trunc);
    }
    let trunc_vars: Vec<Var> = ch.variables().iter().copied().filter(|v| *v != Var::S).collect();
    let keep = Truncation::uniform(&trunc_vars, order);
    Ok(SuperspaceReport { genus, factors: factors.to_vec(), even_dim, odd_dim, character: ch.truncate(&keep) })
}

/// Character with the standard weights and the given weight for the second odd factor.
pub fn abelian_character(g: u32, second_odd: Weight, order: i64) -> Result<SuperspaceReport, FloerError> {
    superspace_character(&abelian_factors(g, &WeightConfig::standard(second_odd)), g, order)
}

/// Coefficient of x^a y^b t^c s^d in a character.
pub fn character_coeff(ch: &PuiseuxSeries, exps: &[(Var, i64)]) -> ExactComplex {
    let e: Vec<(Var, Rational64)> = exps.iter().map(|(v, k)| (*v, Rational64::from_integer(*k))).collect();
    if e.iter().any(|(_, k)| k < &Rational64::zero()) {
        return ExactComplex::zero();
    }
    ch.coeff(&e)
}
