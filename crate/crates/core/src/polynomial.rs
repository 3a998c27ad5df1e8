//! Monic complex polynomials and their Frobenius companion matrices.
//!
//! Coefficients are stored low-degree-first with the leading `1` implicit:
//! `z^n + a[n-1] z^(n-1) + ... + a[0]`.

use num_complex::Complex;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::scalar::{self, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("leading coefficient magnitude {magnitude:e} is at or below the monic threshold; reduce the degree first")]
    DegenerateLeadingCoefficient { magnitude: f64 },
    #[error("a polynomial needs degree >= 1 (got {len} coefficient(s))")]
    TooFewCoefficients { len: usize },
    #[error("coefficient {index} is not finite")]
    NonFiniteCoefficient { index: usize },
}

/// Monic polynomial of degree `n >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<F> {
    coeffs: Vec<Complex<F>>,
}

impl<F: Real> Polynomial<F> {
    /// Builds a polynomial from the non-leading coefficients `a[0..n]`.
    pub fn from_monic_coeffs(coeffs: Vec<Complex<F>>) -> Result<Self, PolyError> {
        if coeffs.is_empty() {
            return Err(PolyError::TooFewCoefficients { len: 1 });
        }
        if let Some(index) = coeffs.iter().position(|c| !scalar::is_finite(*c)) {
            return Err(PolyError::NonFiniteCoefficient { index });
        }
        Ok(Self { coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    /// `a[0] ... a[n-1]`.
    pub fn coeffs(&self) -> &[Complex<F>] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex<F>> {
        self.coeffs
    }

    /// Horner evaluation of `z^n + sum a_k z^k`.
    pub fn evaluate(&self, z: Complex<F>) -> Complex<F> {
        self.coeffs.iter().rev().fold(Complex::one(), |acc, &a| acc * z + a)
    }

    /// Derivative evaluated alongside the value, `(p(z), p'(z))`.
    pub fn evaluate_with_derivative(&self, z: Complex<F>) -> (Complex<F>, Complex<F>) {
        let mut p = Complex::one();
        let mut dp = Complex::zero();
        for &a in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + a;
        }
        (p, dp)
    }

    /// Monic polynomial with the given roots, expanded by repeated
    /// multiplication with `(z - r)`.
    ///
    /// # Panics
    /// If `roots` is empty.
    pub fn from_roots(roots: &[Complex<F>]) -> Self {
        assert!(!roots.is_empty(), "from_roots needs at least one root");
        // full coefficient vector including the leading one, low degree first
        let mut c: Vec<Complex<F>> = vec![Complex::one()];
        for &r in roots {
            let mut next = vec![Complex::zero(); c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k + 1] = next[k + 1] + ck;
                next[k] = next[k] - ck * r;
            }
            c = next;
        }
        c.pop();
        Self { coeffs: c }
    }

    pub fn cast<G: Real>(&self) -> Polynomial<G> {
        Polynomial { coeffs: self.coeffs.iter().map(|&c| scalar::cast(c)).collect() }
    }

    pub fn companion(&self) -> CompanionMatrix<F> {
        CompanionMatrix::new(self)
    }
}

/// Normalizes a full coefficient array `c[0..=n]` (low degree first,
/// `c[n]` leading) by dividing through by the leading coefficient.
pub fn make_monic<F: Real>(coeffs: &[Complex<F>]) -> Result<Polynomial<F>, PolyError> {
    if coeffs.len() < 2 {
        return Err(PolyError::TooFewCoefficients { len: coeffs.len() });
    }
    if let Some(index) = coeffs.iter().position(|c| !scalar::is_finite(*c)) {
        return Err(PolyError::NonFiniteCoefficient { index });
    }
    let (lead, rest) = coeffs.split_last().expect("length checked");
    let magnitude = lead.norm();
    if magnitude <= F::MONIC_EPSILON {
        return Err(PolyError::DegenerateLeadingCoefficient { magnitude: magnitude.to_f64() });
    }
    let one = Complex::<F>::one();
    let coeffs = if *lead == one { rest.to_vec() } else { rest.iter().map(|&c| c / *lead).collect() };
    Polynomial::from_monic_coeffs(coeffs)
}

/// Frobenius companion matrix: first row `-a[n-1] ... -a[0]`, ones on the
/// subdiagonal, zeros elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct CompanionMatrix<F> {
    first_row: Vec<Complex<F>>,
}

impl<F: Real> CompanionMatrix<F> {
    pub fn new(p: &Polynomial<F>) -> Self {
        Self { first_row: p.coeffs().iter().rev().map(|&a| -a).collect() }
    }

    pub fn order(&self) -> usize {
        self.first_row.len()
    }

    pub fn first_row(&self) -> &[Complex<F>] {
        &self.first_row
    }

    pub fn get(&self, i: usize, j: usize) -> Complex<F> {
        if i == 0 {
            self.first_row[j]
        } else if i == j + 1 {
            Complex::one()
        } else {
            Complex::zero()
        }
    }

    /// Row-major dense expansion.
    pub fn to_dense(&self) -> Vec<Vec<Complex<F>>> {
        let n = self.order();
        (0..n).map(|i| (0..n).map(|j| self.get(i, j)).collect()).collect()
    }
}
