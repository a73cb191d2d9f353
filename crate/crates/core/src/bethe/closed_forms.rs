//! Closed-form S-matrix elements and graded dimensions.

use serde::{Deserialize, Serialize};

use crate::series::{RationalExpr as E, Var};

/// The three classes of admissible Bethe roots, named after their first member.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SClass {
    S00,
    S02,
    S06,
}

impl SClass {
    pub const ALL: [SClass; 3] = [SClass::S00, SClass::S02, SClass::S06];

    /// Number of admissible roots in the class.
    pub fn multiplicity(self) -> usize {
        match self {
            SClass::S00 => 2,
            SClass::S02 | SClass::S06 => 4,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SClass::S00 => "S00",
            SClass::S02 => "S02",
            SClass::S06 => "S06",
        }
    }
}

fn x() -> E {
    E::var(Var::X)
}
fn y() -> E {
    E::var(Var::Y)
}
fn t() -> E {
    E::var(Var::T)
}

fn t32() -> E {
    t().half_pow(3).expect("t is z-free")
}

/// `(t y / x)^{3/2}`, the common prefactor of the generic elements.
pub fn sxyt_prefactor() -> E {
    (t() * y() / x()).half_pow(3).expect("z-free")
}

fn generic_denominator() -> E {
    t() * (3 * x() * y() + x() + y() - 1) + x() * (y() - 1) - y() - 3
}

/// Rational parts of S^2 at generic (x, y, t); multiply by [`sxyt_prefactor`].
pub fn sxyt_rational(class: SClass) -> E {
    let d = generic_denominator();
    match class {
        SClass::S00 => (x() - 1) * (x() + 1).pow(3) / ((t().pow(2) - 1) * (y().pow(2) - 1) * d),
        SClass::S02 => {
            (x() - 1).pow(3) * (t() * x() - 1) * (x() * y() - 1)
                / (4 * (t() - 1) * (y() - 1) * (t() * y() - 1) * (t() * x() * y() - 1) * d)
        }
        SClass::S06 => {
            (x().pow(2) - 1) * (t() * x() - 1) * (x() * y() - 1)
                / (4 * (t().pow(2) - 1) * (y().pow(2) - 1) * (t() * y() - 1) * (t() * x() * y() + 1))
        }
    }
}

/// S^2 at generic (x, y, t).
pub fn sxyt(class: SClass) -> E {
    sxyt_prefactor() * sxyt_rational(class)
}

/// S^2 on the slice y = x, as a function of (x, t).
pub fn selement(class: SClass) -> E {
    let d = t() * (3 * x() - 1) + x() - 3;
    match class {
        SClass::S00 => t32() * (x() + 1) / ((t().pow(2) - 1) * d),
        SClass::S02 => t32() * (x() - 1).pow(3) / (4 * (t() - 1) * (t() * x().pow(2) - 1) * d),
        SClass::S06 => t32() * (x().pow(2) - 1) / (4 * (t().pow(2) - 1) * (t() * x().pow(2) + 1)),
    }
}

/// Graded dimension for S^2 x S^1 at generic (x, y, t).
pub fn s2s1_xyt() -> E {
    let inner = x()
        * (t() * (x() * y() * (t() * (x().pow(2) + x() + 1) * y() - (t() + 1) * x() - x() * y()) + y() + 1) - x()
            + y()
            - 1)
        - 1;
    2 * t32() * (x() - 1) * (y() / x()).half_pow(3).expect("z-free") * inner
        / ((t().pow(2) - 1) * (y().pow(2) - 1) * (t() * y() - 1) * (t().pow(2) * x().pow(2) * y().pow(2) - 1))
}

/// Graded dimension for S^2 x S^1 on the slice y = x.
pub fn s2s1() -> E {
    2 * t32() * (t() * x().pow(4) + 1) / ((1 - t().pow(2)) * (1 - t().pow(2) * x().pow(4)))
}

/// Graded dimension for S^3.
pub fn s3() -> E {
    1 / (1 - t().pow(2))
}

/// Published R = 2 limits of the elements (normalization omitted).
pub fn verlinde_limit_reference(class: SClass) -> E {
    match class {
        SClass::S00 => (x() - 1) * (x() + 1).pow(3) / (x() + 3),
        SClass::S02 => (x() - 1).pow(3) / (4 * (x() + 3)),
        SClass::S06 => E::ratio(1, 4) * (x().pow(2) - 1),
    }
}

/// Published genus-2 R = 2 limit.
pub fn xlimit_genus2() -> E {
    (16 * x().pow(4) + 49 * x().pow(3) + 81 * x().pow(2) + 75 * x() + 35) / (1 - x().pow(2)).pow(3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generic_elements_restrict_to_slice() {
        for (xv, tv) in [(0.25, 1.0 / 9.0), (0.7, 0.3), (0.11, 0.83)] {
            for c in SClass::ALL {
                let g = sxyt(c).substitute(Var::Y, &x()).eval_real(&[(Var::X, xv), (Var::T, tv)]).unwrap();
                let s = selement(c).eval_real(&[(Var::X, xv), (Var::T, tv)]).unwrap();
                assert!((g - s).norm() <= 1e-12 * s.norm(), "{c:?} at {xv},{tv}");
            }
        }
    }

    #[test]
    fn genus_zero_sum_is_s2s1() {
        for (xv, yv, tv) in [(0.3, 0.7, 0.11), (0.6, 0.2, 0.45)] {
            let p = [(Var::X, xv), (Var::Y, yv), (Var::T, tv)];
            let sum: f64 =
                SClass::ALL.iter().map(|c| c.multiplicity() as f64 * sxyt(*c).eval_real(&p).unwrap().re).sum();
            let closed = s2s1_xyt().eval_real(&p).unwrap().re;
            assert!((sum - closed).abs() < 1e-12 * closed.abs());
        }
    }

    #[test]
    fn frozen_values_at_a_generic_point() {
        // S^2 from the Bethe roots at (x, y, t) = (0.7, 0.11, 0.3), solved independently at 40 digits
        let p = [(Var::X, 0.7), (Var::Y, 0.11), (Var::T, 0.3)];
        let want = [0.004_510_376_924_296_21, 0.000_023_007_378_133_985, 0.001_069_951_003_454_96];
        for (c, w) in SClass::ALL.iter().zip(want) {
            let v = sxyt(*c).eval_real(&p).unwrap().re;
            assert!((v - w).abs() < 1e-12 * w, "{c:?}: {v}");
        }
    }
}
