//! Single-shift QR iteration on companion matrices.
//!
//! The working matrix lives in [`CompactHessenberg`] storage. Each iteration
//! subtracts the shift, triangularizes with a left sweep of Givens rotations,
//! multiplies the retained rotations back in from the right and restores the
//! shift. Every level `m = n .. 2` runs a fixed number of iterations before
//! the trailing diagonal entry is read off as an eigenvalue.

mod batch;
mod givens;
mod hessenberg;

pub use batch::{batch_solve, BatchSolver};
pub use givens::{givens_coeffs, GivensPair, GIVENS_FLOPS};
pub use hessenberg::{CompactHessenberg, HessenbergError, ShiftSign};

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polynomial::{make_monic, PolyError, Polynomial};
use crate::scalar::{Precision, Real};

/// Iterations per deflation level used by the reference accelerator.
pub const DEFAULT_ITERATIONS: usize = 10;

/// Magnitude factor and direction of the exceptional shift
/// `s = a[m-1][m-1] + 0.75 |a[m-1][m-2]| (0.6 + 0.8i)`.
pub const EXCEPTIONAL_SHIFT_SCALE: f64 = 0.75;
pub const EXCEPTIONAL_SHIFT_DIRECTION: (f64, f64) = (0.6, 0.8);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("batch mixes degrees: expected {expected}, polynomial {index} has degree {found}")]
    MixedDegreeBatch { expected: usize, found: usize, index: usize },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// How the shift of each iteration is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ShiftStrategy {
    /// Always `s = a[m-1][m-1]`. Stalls forever on inputs whose eigenvalues
    /// sit symmetrically around the shift (e.g. `z^2 - 1`, `z^3 - 1`) and on
    /// real matrices with complex-conjugate eigenvalues.
    Rayleigh,
    /// Rayleigh shift, except that an iteration which fails to shrink an
    /// unconverged trailing subdiagonal makes the next iteration use the
    /// complex exceptional shift. Arithmetic is identical to `Rayleigh` as
    /// long as the subdiagonal keeps decreasing.
    #[default]
    Guarded,
}

impl std::str::FromStr for ShiftStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rayleigh" => Ok(ShiftStrategy::Rayleigh),
            "guarded" => Ok(ShiftStrategy::Guarded),
            other => Err(format!("unknown shift strategy '{other}' (expected rayleigh or guarded)")),
        }
    }
}

impl std::fmt::Display for ShiftStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ShiftStrategy::Rayleigh => "rayleigh",
            ShiftStrategy::Guarded => "guarded",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    /// Iterations per level, `T >= 1`.
    pub iterations: usize,
    /// Precision used by the type-erased entry points; the generic API picks
    /// precision from its type parameter.
    pub precision: Precision,
    /// Stop a level once `|a[m-1][m-2]| <= deflate_tol (|a[m-2][m-2]| + |a[m-1][m-1]|)`.
    /// Off by default; changes the pass count.
    pub early_deflate: bool,
    pub deflate_tol: f64,
    pub shift: ShiftStrategy,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            iterations: DEFAULT_ITERATIONS,
            precision: Precision::Fp64,
            early_deflate: false,
            deflate_tol: 1e-14,
            shift: ShiftStrategy::Guarded,
        }
    }
}

impl SolveConfig {
    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn with_precision(mut self, precision: Precision) -> Self {
        self.precision = precision;
        self
    }

    pub fn with_shift(mut self, shift: ShiftStrategy) -> Self {
        self.shift = shift;
        self
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if self.iterations == 0 {
            return Err(SolveError::InvalidConfig("iterations per level must be >= 1".into()));
        }
        if !(self.deflate_tol >= 0.0 && self.deflate_tol.is_finite()) {
            return Err(SolveError::InvalidConfig("deflate_tol must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// `eig[0 .. n]`: `roots[k]` is the value extracted at level `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSet<F> {
    pub roots: Vec<Complex<F>>,
}

impl<F: Real> RootSet<F> {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn cast<G: Real>(&self) -> RootSet<G> {
        RootSet { roots: self.roots.iter().map(|&z| crate::scalar::cast(z)).collect() }
    }
}

/// Counters from one solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub iterations: u64,
    pub exceptional_shifts: u64,
    pub flops: u64,
}

/// Reusable single-degree solver; holds the working matrix allocation.
#[derive(Debug, Clone)]
pub struct Solver<F> {
    cfg: SolveConfig,
    work: CompactHessenberg<F>,
    companion_row: Vec<Complex<F>>,
    stats: SolveStats,
}

impl<F: Real> Solver<F> {
    pub fn new(degree: usize, cfg: SolveConfig) -> Result<Self, SolveError> {
        cfg.validate()?;
        if degree == 0 {
            return Err(SolveError::InvalidConfig("degree must be >= 1".into()));
        }
        Ok(Self {
            cfg,
            work: CompactHessenberg::zeros(degree),
            companion_row: vec![Complex::new(F::zero(), F::zero()); degree],
            stats: SolveStats::default(),
        })
    }

    pub fn degree(&self) -> usize {
        self.work.order()
    }

    pub fn config(&self) -> &SolveConfig {
        &self.cfg
    }

    /// Counters of the most recent solve.
    pub fn last_stats(&self) -> SolveStats {
        self.stats
    }

    /// # Panics
    /// If the polynomial degree differs from the solver's.
    pub fn solve(&mut self, p: &Polynomial<F>) -> RootSet<F> {
        let mut roots = vec![Complex::new(F::zero(), F::zero()); self.degree()];
        self.solve_into(p, &mut roots);
        RootSet { roots }
    }

    /// Writes `eig[0..n]` into `out` without allocating.
    pub fn solve_into(&mut self, p: &Polynomial<F>, out: &mut [Complex<F>]) {
        let n = self.degree();
        assert_eq!(p.degree(), n, "polynomial degree does not match solver");
        assert_eq!(out.len(), n);
        for (dst, &a) in self.companion_row.iter_mut().zip(p.coeffs().iter().rev()) {
            *dst = -a;
        }
        self.work.load_companion(&self.companion_row);
        self.stats = SolveStats::default();

        let threshold_eps = F::epsilon();
        let deflate_tol = F::from_f64(self.cfg.deflate_tol);
        let scale = F::from_f64(EXCEPTIONAL_SHIFT_SCALE);
        let direction =
            Complex::new(F::from_f64(EXCEPTIONAL_SHIFT_DIRECTION.0), F::from_f64(EXCEPTIONAL_SHIFT_DIRECTION.1));

        while self.work.active_size() >= 2 {
            let m = self.work.active_size();
            let mut previous = self.work.trailing_subdiagonal().norm();
            let mut exceptional_next = false;
            for _ in 0..self.cfg.iterations {
                if self.cfg.early_deflate {
                    let sub = self.work.trailing_subdiagonal().norm();
                    let diag = self.work.get(m - 2, m - 2).norm() + self.work.trailing_diagonal().norm();
                    if sub <= deflate_tol * diag {
                        break;
                    }
                }
                let mut s = self.work.trailing_diagonal();
                if exceptional_next {
                    s = s + direction.scale(scale * previous);
                    self.stats.exceptional_shifts += 1;
                }
                self.work.qr_iteration_with_shift(s);
                self.stats.iterations += 1;

                if self.cfg.shift == ShiftStrategy::Guarded {
                    let sub = self.work.trailing_subdiagonal().norm();
                    let diag = self.work.get(m - 2, m - 2).norm() + self.work.trailing_diagonal().norm();
                    exceptional_next = !(sub < previous) && sub > threshold_eps * diag;
                    previous = sub;
                }
            }
            out[m - 1] = self.work.trailing_diagonal();
            self.work.deflate();
        }
        out[0] = self.work.get(0, 0);
        self.stats.flops = self.work.flops();
    }
}

/// Roots of a monic polynomial via the companion-matrix QR iteration.
pub fn solve_roots<F: Real>(p: &Polynomial<F>, cfg: &SolveConfig) -> Result<RootSet<F>, SolveError> {
    let mut solver = Solver::new(p.degree(), *cfg)?;
    Ok(solver.solve(p))
}

/// Raw-coefficient entry point: normalizes `c[0..=n]` (leading last) first.
pub fn solve_coefficients<F: Real>(coeffs: &[Complex<F>], cfg: &SolveConfig) -> Result<RootSet<F>, SolveError> {
    let p = make_monic(coeffs)?;
    solve_roots(&p, cfg)
}

/// Solves in the precision named by `cfg.precision`, returning fp64 values.
pub fn solve_roots_dyn(p: &Polynomial<f64>, cfg: &SolveConfig) -> Result<RootSet<f64>, SolveError> {
    match cfg.precision {
        Precision::Fp64 => solve_roots(p, cfg),
        Precision::Fp32 => Ok(solve_roots(&p.cast::<f32>(), cfg)?.cast()),
    }
}

/// Pipeline passes of one solve with a fixed iteration count:
/// `T * sum_{m=2..n} (2m - 2)`.
pub fn pass_count(degree: usize, iterations: usize) -> u64 {
    (2..=degree as u64).map(|m| 2 * m - 2).sum::<u64>() * iterations as u64
}
