//! Univariate polynomials: exact arithmetic and floating-point root finding.

use num_complex::Complex64;
use thiserror::Error;

use super::exact::ExactComplex;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("polynomial of degree {0} has no roots to find")]
    DegreeTooLow(usize),
    #[error("non-finite coefficient")]
    NonFinite,
    #[error("root iteration did not converge; best normalized residual {best_residual:e}")]
    NoConvergence { best_residual: f64 },
    #[error("division by the zero polynomial")]
    DivisionByZero,
    #[error("division is not exact; remainder has degree {0}")]
    NotExact(usize),
}

/// Exact polynomial, coefficients in ascending order with no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactPolynomial {
    coeffs: Vec<ExactComplex>,
}

impl ExactPolynomial {
    pub fn new(mut coeffs: Vec<ExactComplex>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        ExactPolynomial { coeffs }
    }

    pub fn from_ints(c: &[i64]) -> Self {
        Self::new(c.iter().map(|n| ExactComplex::from_int(*n)).collect())
    }

    pub fn constant(c: ExactComplex) -> Self {
        Self::new(vec![c])
    }

    /// `c * z^k`
    pub fn monomial(c: ExactComplex, k: usize) -> Self {
        let mut v = vec![ExactComplex::zero(); k + 1];
        v[k] = c;
        Self::new(v)
    }

    pub fn coeffs(&self) -> &[ExactComplex] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeff(&self, k: usize) -> ExactComplex {
        self.coeffs.get(k).cloned().unwrap_or_default()
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        Self::new((0..n).map(|k| &self.coeff(k) + &o.coeff(k)).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        Self::new((0..n).map(|k| &self.coeff(k) - &o.coeff(k)).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::new(vec![]);
        }
        let mut out = vec![ExactComplex::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] += &(a * b);
            }
        }
        Self::new(out)
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::from_ints(&[1]), |acc, _| acc.mul(self))
    }

    pub fn scale(&self, c: &ExactComplex) -> Self {
        Self::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    /// Substitute `z -> z^k`.
    pub fn compose_power(&self, k: usize) -> Self {
        let mut v = vec![ExactComplex::zero(); self.degree() * k + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            v[i * k] = c.clone();
        }
        Self::new(v)
    }

    pub fn div_rem(&self, d: &Self) -> Result<(Self, Self), PolyError> {
        if d.is_zero() {
            return Err(PolyError::DivisionByZero);
        }
        let lead_inv = d.coeffs.last().unwrap().inv().unwrap();
        let mut rem = self.coeffs.clone();
        let dd = d.degree();
        if self.is_zero() || self.degree() < dd {
            return Ok((Self::new(vec![]), self.clone()));
        }
        let mut quot = vec![ExactComplex::zero(); self.degree() - dd + 1];
        for k in (0..quot.len()).rev() {
            let c = &rem[k + dd] * &lead_inv;
            if !c.is_zero() {
                for (j, b) in d.coeffs.iter().enumerate() {
                    rem[k + j] -= &(&c * b);
                }
            }
            quot[k] = c;
        }
        Ok((Self::new(quot), Self::new(rem)))
    }

    /// Quotient of an exact division, or an error naming the remainder degree.
    pub fn div_exact(&self, d: &Self) -> Result<Self, PolyError> {
        let (q, r) = self.div_rem(d)?;
        if r.is_zero() {
            Ok(q)
        } else {
            Err(PolyError::NotExact(r.degree()))
        }
    }

    pub fn eval(&self, z: &ExactComplex) -> ExactComplex {
        self.coeffs.iter().rev().fold(ExactComplex::zero(), |acc, c| &(&acc * z) + c)
    }

    pub fn to_complex(&self) -> ComplexPolynomial {
        ComplexPolynomial::new(self.coeffs.iter().map(|c| c.to_complex64()).collect())
    }
}

/// Floating-point polynomial, ascending coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexPolynomial {
    coeffs: Vec<Complex64>,
}

impl ComplexPolynomial {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        ComplexPolynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    /// Value and derivative by Horner.
    fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// Backward-error residual |p(z)| / sum |c_i| |z|^i.
    pub fn residual(&self, z: Complex64) -> f64 {
        let r = z.norm();
        let scale = self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm());
        if scale == 0.0 {
            return 0.0;
        }
        self.eval(z).norm() / scale
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub value: Complex64,
    pub residual: f64,
}

fn round12(x: f64) -> i64 {
    let v = (x * 1e12).round();
    if v == 0.0 {
        0
    } else {
        v as i64
    }
}

/// Canonical order: by real part, then imaginary part, both rounded to 12 decimals.
pub fn canonical_order(roots: &mut [Root]) {
    roots.sort_by(|a, b| {
        (round12(a.value.re), round12(a.value.im))
            .cmp(&(round12(b.value.re), round12(b.value.im)))
            .then(a.value.re.total_cmp(&b.value.re))
            .then(a.value.im.total_cmp(&b.value.im))
    });
}

const MAX_ITER: usize = 2000;

/// All roots by Aberth-Ehrlich iteration with deterministic start points, then a Newton polish.
/// Every root must reach a normalized residual `<= tol`.
pub fn poly_roots(p: &ComplexPolynomial, tol: f64) -> Result<Vec<Root>, PolyError> {
    if p.coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(PolyError::NonFinite);
    }
    let n = p.degree();
    if n < 1 {
        return Err(PolyError::DegreeTooLow(n));
    }
    let lead = p.coeffs[n];
    // zero roots split off exactly
    let zeros = p.coeffs.iter().take_while(|c| c.norm() == 0.0).count();
    let q = ComplexPolynomial::new(p.coeffs[zeros..].iter().map(|c| c / lead).collect());
    let m = q.degree();
    let mut z: Vec<Complex64> = Vec::with_capacity(m);
    if m > 0 {
        let radius = q.coeffs[0].norm().powf(1.0 / m as f64).max(1e-3);
        for k in 0..m {
            let angle = std::f64::consts::TAU * k as f64 / m as f64 + 0.4;
            z.push(Complex64::from_polar(radius, angle));
        }
        let mut done = vec![false; m];
        for _ in 0..MAX_ITER {
            let mut moved = false;
            for k in 0..m {
                if done[k] {
                    continue;
                }
                let (pz, dpz) = q.eval_with_derivative(z[k]);
                if q.residual(z[k]) <= f64::EPSILON {
                    done[k] = true;
                    continue;
                }
                let w = pz / dpz;
                let s: Complex64 = (0..m).filter(|&j| j != k).map(|j| (z[k] - z[j]).inv()).sum();
                let corr = w / (Complex64::new(1.0, 0.0) - w * s);
                if !corr.re.is_finite() || !corr.im.is_finite() {
                    continue;
                }
                z[k] -= corr;
                if corr.norm() > 1e-15 * z[k].norm().max(1e-300) {
                    moved = true;
                } else {
                    done[k] = true;
                }
            }
            if !moved {
                break;
            }
        }
        for zk in z.iter_mut() {
            for _ in 0..3 {
                let (pz, dpz) = q.eval_with_derivative(*zk);
                if dpz.norm() == 0.0 {
                    break;
                }
                let cand = *zk - pz / dpz;
                if q.residual(cand) < q.residual(*zk) {
                    *zk = cand;
                } else {
                    break;
                }
            }
        }
    }
    let mut roots: Vec<Root> = z.into_iter().map(|v| Root { value: v, residual: p.residual(v) }).collect();
    roots.extend((0..zeros).map(|_| Root { value: Complex64::new(0.0, 0.0), residual: 0.0 }));
    let worst = roots.iter().map(|r| r.residual).fold(0.0, f64::max);
    if !(worst <= tol) {
        return Err(PolyError::NoConvergence { best_residual: worst });
    }
    canonical_order(&mut roots);
    Ok(roots)
}
