//! Bethe equation, S-matrix elements and the equivariant Verlinde sum.
//!
//! Higgs sectors `(x, R=2)`, `(y, R=0)`, `(t, R=0)`.  The Bethe polynomial is
//! `prod_p (p - z^2)^2 - prod_p (p z^2 - 1)^2`, degree 12 in `z`.

pub mod closed_forms;
pub mod limits;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::exact::rational_from_f64;
use crate::series::{poly_roots, ExactComplex, ExactPolynomial, PolyError, Var};
pub use closed_forms::SClass;

/// Roots closer than this to the Weyl-fixed points z = +-1 are dropped.
pub const WEYL_FIXED_DELTA: f64 = 1e-6;
/// Tolerance on |z z' - 1| for a Weyl partner.
pub const WEYL_PAIRING_TOL: f64 = 1e-6;
/// Relative tolerance for assigning a root to an S-matrix class.
pub const CLASS_REL_TOL: f64 = 1e-6;
pub const POLE_EPS: f64 = 1e-12;
pub const DEFAULT_ROOT_TOL: f64 = 1e-9;

/// Sector R-charges for (x, y, t).
pub const R_CHARGES: [(Var, i32); 3] = [(Var::X, 2), (Var::Y, 0), (Var::T, 0)];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BetheError {
    #[error("equivariant parameters must be finite, positive and different from 1; got {0}")]
    BadParameter(String),
    #[error(transparent)]
    Roots(#[from] PolyError),
    #[error("expected {expected} admissible roots, found {found}")]
    CountMismatch { expected: usize, found: usize },
    #[error("roots {0} and {1} are closer than the separation threshold")]
    NotSeparated(usize, usize),
    #[error("root {index} has no Weyl partner (best |z z' - 1| = {residual:e})")]
    NoWeylPartner { index: usize, residual: f64 },
    #[error("pole in the S-matrix element at z = {0}")]
    Pole(Complex64),
    #[error("S^2 value {value} matches {candidates} classes")]
    Unclassified { value: Complex64, candidates: usize },
    #[error("class multiplicities {found:?} differ from (2, 4, 4)")]
    Multiplicity { found: [usize; 3] },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetheParams {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl BetheParams {
    pub fn new(x: f64, y: f64, t: f64) -> Result<Self, BetheError> {
        for (name, v) in [("x", x), ("y", y), ("t", t)] {
            if !(v.is_finite() && v > 0.0 && v != 1.0) {
                return Err(BetheError::BadParameter(format!("{name} = {v}")));
            }
        }
        Ok(BetheParams { x, y, t })
    }

    pub fn get(&self, v: Var) -> f64 {
        match v {
            Var::X => self.x,
            Var::Y => self.y,
            Var::T => self.t,
            _ => unreachable!("only x, y, t are Bethe parameters"),
        }
    }

    pub fn point(&self) -> [(Var, f64); 3] {
        [(Var::X, self.x), (Var::Y, self.y), (Var::T, self.t)]
    }
}

/// The Bethe polynomial in z, expanded exactly from the (exactly converted) parameters.
pub fn bethe_polynomial(params: &BetheParams) -> ExactPolynomial {
    // in w = z^2: A(w) = prod (p - w)^2, B(w) = prod (p w - 1)^2
    let mut a = ExactPolynomial::from_ints(&[1]);
    let mut b = ExactPolynomial::from_ints(&[1]);
    for (v, _) in R_CHARGES {
        let p = ExactComplex::real(rational_from_f64(params.get(v)).expect("finite"));
        let lin_a = ExactPolynomial::new(vec![p.clone(), ExactComplex::from_int(-1)]);
        let lin_b = ExactPolynomial::new(vec![ExactComplex::from_int(-1), p]);
        a = a.mul(&lin_a.pow(2));
        b = b.mul(&lin_b.pow(2));
    }
    a.sub(&b).compose_power(2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetheRoot {
    pub z: Complex64,
    pub residual: f64,
    /// Index (into the admissible list) of the root paired with this one by z -> 1/z.
    pub weyl_partner: usize,
    pub pairing_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    pub all: Vec<Complex64>,
    pub admissible: Vec<BetheRoot>,
}

/// All 12 roots and the 10 admissible ones with their Weyl partners.
pub fn admissible_roots(params: &BetheParams, tol: f64) -> Result<RootSet, BetheError> {
    let poly = bethe_polynomial(params).to_complex();
    let roots = poly_roots(&poly, tol)?;
    let all: Vec<Complex64> = roots.iter().map(|r| r.value).collect();
    let admissible: Vec<(Complex64, f64)> = roots
        .iter()
        .filter(|r| (r.value - 1.0).norm() > WEYL_FIXED_DELTA && (r.value + 1.0).norm() > WEYL_FIXED_DELTA)
        .map(|r| (r.value, r.residual))
        .collect();
    if admissible.len() != 10 || all.len() != 12 {
        return Err(BetheError::CountMismatch { expected: 10, found: admissible.len() });
    }
    for i in 0..admissible.len() {
        for j in i + 1..admissible.len() {
            if (admissible[i].0 - admissible[j].0).norm() <= 2.0 * WEYL_FIXED_DELTA {
                return Err(BetheError::NotSeparated(i, j));
            }
        }
    }
    let mut out = Vec::with_capacity(10);
    for (i, (z, res)) in admissible.iter().enumerate() {
        let (j, pr) = admissible
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(j, (w, _))| (j, (z * w - 1.0).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if pr >= WEYL_PAIRING_TOL {
            return Err(BetheError::NoWeylPartner { index: i, residual: pr });
        }
        out.push(BetheRoot { z: *z, residual: *res, weyl_partner: j, pairing_residual: pr });
    }
    Ok(RootSet { all, admissible: out })
}

fn checked_inv(v: Complex64, z: Complex64) -> Result<Complex64, BetheError> {
    if v.norm() < POLE_EPS {
        Err(BetheError::Pole(z))
    } else {
        Ok(v.inv())
    }
}

/// S^2 at a Bethe root: inverse of (dilaton factor) x (second derivative of the superpotential).
pub fn s_squared(z: Complex64, params: &BetheParams) -> Result<Complex64, BetheError> {
    let w = z * z;
    let one = Complex64::new(1.0, 0.0);
    let mut dilaton = one;
    let mut hessian = Complex64::new(0.0, 0.0);
    for (v, r) in R_CHARGES {
        let p = params.get(v);
        let f = Complex64::new(p.powf(1.5), 0.0) * w * checked_inv((p - 1.0) * (p - w) * (p * w - 1.0), z)?;
        dilaton *= f.powi(r - 1);
        hessian += 4.0 * checked_inv(w / p - 1.0, z)? - 4.0 * checked_inv(w * p - 1.0, z)?;
    }
    let gauge = w + checked_inv(w, z)? - 2.0;
    Ok(gauge * checked_inv(dilaton * hessian, z)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SValue {
    pub z: Complex64,
    pub s_squared: Complex64,
    pub class: SClass,
}

/// Reference values of the three classes from the generic closed form.
pub fn class_values(params: &BetheParams) -> Result<[Complex64; 3], BetheError> {
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for (k, c) in SClass::ALL.iter().enumerate() {
        out[k] = closed_forms::sxyt(*c)
            .eval_real(&params.point())
            .map_err(|_| BetheError::Pole(Complex64::new(f64::NAN, f64::NAN)))?;
    }
    Ok(out)
}

/// Assign each value to the unique class within [`CLASS_REL_TOL`].
pub fn classify(values: &[Complex64], refs: &[Complex64; 3]) -> Result<Vec<SClass>, BetheError> {
    let mut out = Vec::with_capacity(values.len());
    let mut counts = [0usize; 3];
    for v in values {
        let hits: Vec<usize> = (0..3).filter(|k| (v - refs[*k]).norm() <= CLASS_REL_TOL * refs[*k].norm()).collect();
        if hits.len() != 1 {
            return Err(BetheError::Unclassified { value: *v, candidates: hits.len() });
        }
        counts[hits[0]] += 1;
        out.push(SClass::ALL[hits[0]]);
    }
    if values.len() == 10 && counts != [2, 4, 4] {
        return Err(BetheError::Multiplicity { found: counts });
    }
    Ok(out)
}

/// Full pipeline at one parameter point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BethePoint {
    pub params: BetheParams,
    pub roots: RootSet,
    pub s_values: Vec<SValue>,
}

pub fn solve_point(params: &BetheParams, tol: f64) -> Result<BethePoint, BetheError> {
    let roots = admissible_roots(params, tol)?;
    let values: Vec<Complex64> = roots.admissible.iter().map(|r| s_squared(r.z, params)).collect::<Result<_, _>>()?;
    let classes = classify(&values, &class_values(params)?)?;
    let s_values = roots
        .admissible
        .iter()
        .zip(values)
        .zip(classes)
        .map(|((r, s), c)| SValue { z: r.z, s_squared: s, class: c })
        .collect();
    Ok(BethePoint { params: *params, roots, s_values })
}

/// `sum over admissible roots of S^(2 - 2g)`.
pub fn verlinde_sum(g: u32, params: &BetheParams, tol: f64) -> Result<Complex64, BetheError> {
    let roots = admissible_roots(params, tol)?;
    let mut sum = Complex64::new(0.0, 0.0);
    for r in &roots.admissible {
        sum += s_squared(r.z, params)?.powi(1 - g as i32);
    }
    Ok(sum)
}

/// Seeded uniform points in (lo, hi)^3.
pub fn random_points(n: usize, seed: u64, lo: f64, hi: f64) -> Vec<BetheParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut draw = || loop {
                let v: f64 = rng.gen_range(lo..hi);
                if v > lo {
                    break v;
                }
            };
            BetheParams { x: draw(), y: draw(), t: draw() }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub params: BetheParams,
    pub root_count: usize,
    pub has_plus_minus_one: bool,
    pub admissible: usize,
    pub max_pairing_residual: f64,
    pub max_class_rel_error: f64,
    pub class_counts: [usize; 3],
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub seed: u64,
    pub points: Vec<SweepPoint>,
    pub all_ok: bool,
}

/// Run the pipeline over seeded random points and collect the invariants checked per point.
pub fn sweep(n: usize, seed: u64, tol: f64) -> SweepReport {
    let mut points = Vec::with_capacity(n);
    for params in random_points(n, seed, 0.05, 0.95) {
        let mut sp = SweepPoint {
            params,
            root_count: 0,
            has_plus_minus_one: false,
            admissible: 0,
            max_pairing_residual: f64::NAN,
            max_class_rel_error: f64::NAN,
            class_counts: [0; 3],
            error: None,
        };
        if let Ok(r) = poly_roots(&bethe_polynomial(&params).to_complex(), tol) {
            sp.root_count = r.len();
            let near = |c: f64| r.iter().any(|z| (z.value - c).norm() < WEYL_FIXED_DELTA);
            sp.has_plus_minus_one = near(1.0) && near(-1.0);
        }
        match solve_point(&params, tol) {
            Ok(pt) => {
                sp.admissible = pt.roots.admissible.len();
                sp.max_pairing_residual = pt.roots.admissible.iter().map(|r| r.pairing_residual).fold(0.0, f64::max);
                let refs = class_values(&params).expect("classified above");
                let mut worst: f64 = 0.0;
                for v in &pt.s_values {
                    let k = SClass::ALL.iter().position(|c| *c == v.class).unwrap();
                    sp.class_counts[k] += 1;
                    worst = worst.max((v.s_squared - refs[k]).norm() / refs[k].norm());
                }
                sp.max_class_rel_error = worst;
            }
            Err(e) => sp.error = Some(e.to_string()),
        }
        points.push(sp);
    }
    let all_ok = points.iter().all(|p| {
        p.error.is_none()
            && p.root_count == 12
            && p.has_plus_minus_one
            && p.admissible == 10
            && p.max_pairing_residual < WEYL_PAIRING_TOL
            && p.max_class_rel_error < CLASS_REL_TOL
            && p.class_counts == [2, 4, 4]
    });
    SweepReport { seed, points, all_ok }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::rat;

    #[test]
    fn polynomial_end_coefficients() {
        // (t, x, y) = (1/2, 1/4, 1/8): txy = 1/64
        let p = bethe_polynomial(&BetheParams::new(0.25, 0.125, 0.5).unwrap());
        assert_eq!(p.degree(), 12);
        let txy2 = rat(1, 64) * rat(1, 64);
        assert_eq!(p.coeff(12), ExactComplex::real(rat(1, 1) - &txy2));
        assert_eq!(p.coeff(0), ExactComplex::real(txy2 - rat(1, 1)));
        // odd powers of z are absent
        assert!((0..6).all(|k| p.coeff(2 * k + 1).is_zero()));
    }

    #[test]
    fn leading_coefficient_at_generic_point() {
        let p = bethe_polynomial(&BetheParams::new(0.7, 0.11, 0.3).unwrap()).to_complex();
        assert!((p.coeffs()[12].re - 0.99946639).abs() < 1e-12);
    }

    #[test]
    fn plus_minus_i_are_roots_and_form_the_s00_class() {
        let params = BetheParams::new(0.7, 0.11, 0.3).unwrap();
        let pt = solve_point(&params, DEFAULT_ROOT_TOL).unwrap();
        for v in &pt.s_values {
            let is_i = (v.z.re.abs() < 1e-9) && ((v.z.im.abs() - 1.0).abs() < 1e-9);
            assert_eq!(is_i, v.class == SClass::S00, "{v:?}");
        }
    }

    #[test]
    fn genus_one_counts_vacua() {
        let params = BetheParams::new(0.37, 0.52, 0.81).unwrap();
        let s = verlinde_sum(1, &params, DEFAULT_ROOT_TOL).unwrap();
        assert!((s - 10.0).norm() < 1e-12);
    }

    #[test]
    fn rejects_parameter_one() {
        assert!(matches!(BetheParams::new(1.0, 0.5, 0.5), Err(BetheError::BadParameter(_))));
        assert!(matches!(BetheParams::new(0.5, -0.5, 0.5), Err(BetheError::BadParameter(_))));
    }

    #[test]
    fn sweep_is_reproducible() {
        let a = sweep(5, 7, DEFAULT_ROOT_TOL);
        let b = sweep(5, 7, DEFAULT_ROOT_TOL);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(a.all_ok);
    }
}
