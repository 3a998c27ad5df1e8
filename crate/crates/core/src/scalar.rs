//! Floating-point precision selection.
//!
//! Every numeric type in the crate is generic over [`Real`], implemented for
//! `f32` (the accelerator's native precision) and `f64` (headroom for
//! reference checks).

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_complex::Complex;
use num_traits::{Float, FloatConst};
use serde::{Deserialize, Serialize};

/// Precision tag used by file headers, the CLI and the C ABI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Fp32,
    Fp64,
}

impl Precision {
    /// Header flag: 0 = fp32, 1 = fp64.
    pub fn flag(self) -> u32 {
        match self {
            Precision::Fp32 => 0,
            Precision::Fp64 => 1,
        }
    }

    pub fn from_flag(flag: u32) -> Option<Self> {
        match flag {
            0 => Some(Precision::Fp32),
            1 => Some(Precision::Fp64),
            _ => None,
        }
    }

    /// Bytes per real component.
    pub fn width(self) -> usize {
        match self {
            Precision::Fp32 => 4,
            Precision::Fp64 => 8,
        }
    }
}

impl Display for Precision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Precision::Fp32 => "fp32",
            Precision::Fp64 => "fp64",
        })
    }
}

impl FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fp32" | "f32" => Ok(Precision::Fp32),
            "fp64" | "f64" => Ok(Precision::Fp64),
            other => Err(format!("unknown precision '{other}' (expected fp32 or fp64)")),
        }
    }
}

/// Real scalar backing [`Complex`] values in the solver.
pub trait Real: Float + FloatConst + Default + Debug + Display + Send + Sync + 'static {
    const PRECISION: Precision;
    /// Leading coefficients at or below this magnitude are rejected by
    /// `make_monic`.
    const MONIC_EPSILON: Self;

    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f32 {
    const PRECISION: Precision = Precision::Fp32;
    const MONIC_EPSILON: f32 = 1e-6;

    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    const PRECISION: Precision = Precision::Fp64;
    const MONIC_EPSILON: f64 = 1e-12;

    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

/// Widens (or narrows) a complex value between precisions.
#[inline]
pub fn cast<A: Real, B: Real>(z: Complex<A>) -> Complex<B> {
    Complex::new(B::from_f64(z.re.to_f64()), B::from_f64(z.im.to_f64()))
}

#[inline]
pub(crate) fn is_finite<F: Real>(z: Complex<F>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}
