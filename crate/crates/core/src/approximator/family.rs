//! Parametric polynomial families sampled on a regular parameter grid.
//!
//! Definition file:
//!
//! ```text
//! # z^2 + t z - 1 with t sampled at 101 points in [0, 1]
//! degree = 2
//! axes = 101
//! c0 = -1
//! c1 = t
//! ```
//!
//! `cK` gives the coefficient of `z^K` for `K < degree`; the leading
//! coefficient is 1. `axes` lists the sample count of each parameter axis
//! (`t1`, `t2`, ...); leaving it out or empty means no parameters and a single
//! polynomial.

use std::path::Path;

use num_complex::Complex64;
use thiserror::Error;

use super::expr::{Expr, ParseError};
use crate::polynomial::Polynomial;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FamilyError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("coefficient c{index}: {source}")]
    Expression { index: usize, source: ParseError },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read family file: {0}")]
    Io(String),
}

/// A sample whose coefficients did not evaluate to finite numbers.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("sample {sample}: coefficient c{coefficient} evaluated to {value}")]
pub struct ExpressionEvalError {
    pub sample: u64,
    pub coefficient: usize,
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParametricFamily {
    degree: usize,
    coeffs: Vec<Expr>,
    axes: Vec<usize>,
}

impl ParametricFamily {
    pub fn new(coeffs: Vec<Expr>, axes: Vec<usize>) -> Result<Self, FamilyError> {
        if coeffs.is_empty() {
            return Err(FamilyError::Invalid("a family needs degree >= 1".into()));
        }
        if let Some(k) = axes.iter().position(|&a| a == 0) {
            return Err(FamilyError::Invalid(format!("axis t{} has zero samples", k + 1)));
        }
        for (index, e) in coeffs.iter().enumerate() {
            if e.uses_z() {
                return Err(FamilyError::Invalid(format!("coefficient c{index} may not use z")));
            }
            if e.param_count() > axes.len() {
                return Err(FamilyError::Invalid(format!(
                    "coefficient c{index} uses t{} but only {} axes are declared",
                    e.param_count(),
                    axes.len()
                )));
            }
        }
        if axes.iter().try_fold(1u64, |acc, &a| acc.checked_mul(a as u64)).is_none() {
            return Err(FamilyError::Invalid("sample count overflows".into()));
        }
        Ok(Self { degree: coeffs.len(), coeffs, axes })
    }

    pub fn parse(text: &str) -> Result<Self, FamilyError> {
        let mut degree: Option<usize> = None;
        let mut axes: Vec<usize> = Vec::new();
        let mut raw: Vec<(usize, usize, String)> = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let lineno = k + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |message: String| FamilyError::Syntax { line: lineno, message };
            let (key, value) = line.split_once('=').ok_or_else(|| syntax("expected 'key = value'".into()))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "degree" => {
                    let n = value.parse::<usize>().map_err(|_| syntax(format!("bad degree '{value}'")))?;
                    degree = Some(n);
                }
                "axes" => {
                    axes = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| s.parse::<usize>().map_err(|_| syntax(format!("bad axis count '{s}'"))))
                        .collect::<Result<_, _>>()?;
                }
                _ => {
                    let index = key
                        .strip_prefix('c')
                        .and_then(|d| d.parse::<usize>().ok())
                        .ok_or_else(|| syntax(format!("unknown key '{key}'")))?;
                    if raw.iter().any(|(i, _, _)| *i == index) {
                        return Err(syntax(format!("c{index} given twice")));
                    }
                    raw.push((index, lineno, value.to_string()));
                }
            }
        }
        let degree = degree.ok_or_else(|| FamilyError::Invalid("missing 'degree'".into()))?;
        if degree == 0 {
            return Err(FamilyError::Invalid("degree must be >= 1".into()));
        }
        let mut coeffs: Vec<Option<Expr>> = vec![None; degree];
        for (index, lineno, src) in raw {
            if index >= degree {
                return Err(FamilyError::Syntax {
                    line: lineno,
                    message: format!("c{index} is out of range for degree {degree} (leading coefficient is implied)"),
                });
            }
            coeffs[index] = Some(Expr::parse(&src).map_err(|source| FamilyError::Expression { index, source })?);
        }
        let coeffs = coeffs
            .into_iter()
            .enumerate()
            .map(|(k, e)| e.ok_or_else(|| FamilyError::Invalid(format!("missing coefficient c{k}"))))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(coeffs, axes)
    }

    pub fn load(path: &Path) -> Result<Self, FamilyError> {
        let text = std::fs::read_to_string(path).map_err(|e| FamilyError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn axes(&self) -> &[usize] {
        &self.axes
    }

    pub fn coefficient_exprs(&self) -> &[Expr] {
        &self.coeffs
    }

    /// Product of the axis counts.
    pub fn sample_count(&self) -> u64 {
        self.axes.iter().map(|&a| a as u64).product()
    }

    /// Parameter vector of sample `index`, `t1` varying fastest.
    pub fn params(&self, index: u64, out: &mut Vec<f64>) {
        out.clear();
        let mut rest = index;
        for &count in &self.axes {
            let j = rest % count as u64;
            rest /= count as u64;
            out.push(axis_value(j, count));
        }
    }

    pub fn sample(&self, index: u64, params: &mut Vec<f64>) -> Result<Polynomial<f64>, ExpressionEvalError> {
        self.params(index, params);
        let zero = Complex64::new(0.0, 0.0);
        let mut coeffs = Vec::with_capacity(self.degree);
        for (coefficient, e) in self.coeffs.iter().enumerate() {
            let value = e.eval(params, zero);
            if !(value.re.is_finite() && value.im.is_finite()) {
                return Err(ExpressionEvalError { sample: index, coefficient, value });
            }
            coeffs.push(value);
        }
        Ok(Polynomial::from_monic_coeffs(coeffs).expect("finite coefficients, degree >= 1"))
    }

    pub fn iter(&self) -> FamilyIter<'_> {
        FamilyIter { family: self, next: 0, end: self.sample_count(), params: Vec::with_capacity(self.axes.len()) }
    }
}

/// `j / (count - 1)`, or 0 for a single sample.
fn axis_value(j: u64, count: usize) -> f64 {
    if count == 1 {
        0.0
    } else {
        j as f64 / (count - 1) as f64
    }
}

/// Row-major walk over the parameter grid. Samples that fail to evaluate
/// come out as errors so callers can skip and count them.
pub struct FamilyIter<'a> {
    family: &'a ParametricFamily,
    next: u64,
    end: u64,
    params: Vec<f64>,
}

impl Iterator for FamilyIter<'_> {
    type Item = Result<Polynomial<f64>, ExpressionEvalError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.end {
            return None;
        }
        let item = self.family.sample(self.next, &mut self.params);
        self.next += 1;
        Some(item)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.end - self.next) as usize;
        (left, Some(left))
    }
}

pub fn enumerate_family(f: &ParametricFamily) -> FamilyIter<'_> {
    f.iter()
}
