//! Reference implementations used to check the compact solver.
//!
//! Nothing here shares code with [`crate::eigensolver`]: the Aberth–Ehrlich
//! iteration works on the polynomial directly, and the dense QR reference
//! forms every rotation, `Q` and `R` as full matrices.

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::eigensolver::ShiftStrategy;
use crate::polynomial::Polynomial;

pub type DenseMatrix = Vec<Vec<Complex64>>;

/// Largest root count accepted by [`match_roots`].
pub const MAX_MATCH_LEN: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("Aberth iteration did not converge in {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("root sets differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("exhaustive matching supports at most {MAX_MATCH_LEN} roots (got {0})")]
    TooManyRoots(usize),
}

/// Aberth–Ehrlich simultaneous iteration.
///
/// Starts from `n` points on a circle of radius `1 + max|a_k|` (rotated off
/// the real axis) and stops once every root either has relative residual
/// `|p(z)| <= tol * (|z|^n + sum |a_k| |z|^k)` or a correction below
/// `tol * max(1, |z|)`.
pub fn aberth_solve(p: &Polynomial<f64>, tol: f64, max_iter: usize) -> Result<Vec<Complex64>, OracleError> {
    let n = p.degree();
    let coeffs = p.coeffs();
    let radius = 1.0 + coeffs.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> =
        (0..n).map(|k| Complex64::from_polar(radius, std::f64::consts::TAU * k as f64 / n as f64 + 0.4)).collect();
    let mut done = vec![false; n];
    let residual_scale = |x: Complex64| {
        let r = x.norm();
        coeffs.iter().rev().fold(1.0, |acc, a| acc * r + a.norm())
    };

    for _ in 0..max_iter {
        let mut next = z.clone();
        for k in 0..n {
            if done[k] {
                continue;
            }
            let (v, dv) = p.evaluate_with_derivative(z[k]);
            if v.norm() <= tol * residual_scale(z[k]) {
                done[k] = true;
                continue;
            }
            let newton = v / dv;
            let repulsion: Complex64 = (0..n).filter(|&j| j != k).map(|j| 1.0 / (z[k] - z[j])).sum();
            let step = newton / (1.0 - newton * repulsion);
            if !step.re.is_finite() || !step.im.is_finite() {
                continue;
            }
            next[k] = z[k] - step;
            if step.norm() <= tol * z[k].norm().max(1.0) {
                done[k] = true;
            }
        }
        z = next;
        if done.iter().all(|&d| d) {
            return Ok(z);
        }
    }
    Err(OracleError::NoConvergence { iterations: max_iter })
}

fn identity(n: usize) -> DenseMatrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }).collect())
        .collect()
}

pub fn dense_mul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let n = a.len();
    let k = b.len();
    let m = b.first().map_or(0, Vec::len);
    (0..n).map(|i| (0..m).map(|j| (0..k).map(|t| a[i][t] * b[t][j]).sum()).collect()).collect()
}

pub fn adjoint(a: &DenseMatrix) -> DenseMatrix {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    (0..cols).map(|j| (0..rows).map(|i| a[i][j].conj()).collect()).collect()
}

/// Full `n x n` rotation acting on rows `i-1, i`, built straight from the
/// textbook formulas `c = conj(a)/r`, `s = conj(b)/r`; identity when
/// `a = b = 0`.
fn rotation(n: usize, i: usize, a: Complex64, b: Complex64) -> DenseMatrix {
    let mut q = identity(n);
    let zero = Complex64::new(0.0, 0.0);
    if a == zero && b == zero {
        return q;
    }
    let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let c = a.conj() / r;
    let s = b.conj() / r;
    q[i - 1][i - 1] = c;
    q[i - 1][i] = s;
    q[i][i - 1] = -s.conj();
    q[i][i] = c.conj();
    q
}

/// One explicit shifted QR step on the leading `m x m` block:
/// `A - sI = QR`, `A <- RQ + sI`, with `Q` and `R` formed in full.
/// Returns the block; entries outside it are not used.
pub fn dense_qr_step(a: &DenseMatrix, s: Complex64) -> DenseMatrix {
    let m = a.len();
    let mut shifted = a.clone();
    for (k, row) in shifted.iter_mut().enumerate() {
        row[k] -= s;
    }
    // accumulate Q^H = Q_{m-1} ... Q_1 on a working copy
    let mut work = shifted.clone();
    let mut qh = identity(m);
    for i in 1..m {
        let qi = rotation(m, i, work[i - 1][i - 1], work[i][i - 1]);
        work = dense_mul(&qi, &work);
        qh = dense_mul(&qi, &qh);
    }
    let q = adjoint(&qh);
    let r = dense_mul(&qh, &shifted);
    let mut next = dense_mul(&r, &q);
    for (k, row) in next.iter_mut().enumerate() {
        row[k] += s;
    }
    next
}

fn leading_block(a: &DenseMatrix, m: usize) -> DenseMatrix {
    a.iter().take(m).map(|row| row[..m].to_vec()).collect()
}

/// Dense single-shift QR iteration: `T` explicit steps per level, deflating
/// to the leading block after each level.
///
/// `on_step` receives the active block after every step, for lockstep
/// comparisons.
pub fn dense_qr_trajectory<Cb: FnMut(&DenseMatrix)>(
    a: &DenseMatrix,
    iterations: usize,
    shift: ShiftStrategy,
    mut on_step: Cb,
) -> Vec<Complex64> {
    let n = a.len();
    let mut eig = vec![Complex64::new(0.0, 0.0); n];
    let mut block = a.clone();
    let mut m = n;
    while m >= 2 {
        let mut previous = block[m - 1][m - 2].norm();
        let mut exceptional = false;
        for _ in 0..iterations {
            let mut s = block[m - 1][m - 1];
            if exceptional {
                s += Complex64::new(0.6, 0.8) * (0.75 * previous);
            }
            block = dense_qr_step(&block, s);
            on_step(&block);
            if shift == ShiftStrategy::Guarded {
                let sub = block[m - 1][m - 2].norm();
                let diag = block[m - 2][m - 2].norm() + block[m - 1][m - 1].norm();
                exceptional = sub >= previous && sub > f64::EPSILON * diag;
                previous = sub;
            }
        }
        eig[m - 1] = block[m - 1][m - 1];
        m -= 1;
        block = leading_block(&block, m);
    }
    eig[0] = block[0][0];
    eig
}

pub fn dense_qr_reference(a: &DenseMatrix, iterations: usize, shift: ShiftStrategy) -> Vec<Complex64> {
    dense_qr_trajectory(a, iterations, shift, |_| {})
}

/// Optimal pairing between two root multisets.
#[derive(Debug, Clone, PartialEq)]
pub struct RootMatch {
    /// `assignment[i]` is the index in the second set paired with `a[i]`.
    pub assignment: Vec<usize>,
    pub max_error: f64,
    pub mean_error: f64,
}

/// Finds the assignment minimizing the maximum pairwise distance (ties
/// broken by total distance) by exhaustive branch-and-bound over all
/// permutations.
pub fn match_roots(a: &[Complex64], b: &[Complex64]) -> Result<RootMatch, OracleError> {
    if a.len() != b.len() {
        return Err(OracleError::LengthMismatch { left: a.len(), right: b.len() });
    }
    let n = a.len();
    if n > MAX_MATCH_LEN {
        return Err(OracleError::TooManyRoots(n));
    }
    if n == 0 {
        return Ok(RootMatch { assignment: Vec::new(), max_error: 0.0, mean_error: 0.0 });
    }
    let dist: Vec<Vec<f64>> = a.iter().map(|x| b.iter().map(|y| (x - y).norm()).collect()).collect();

    struct Search<'a> {
        dist: &'a [Vec<f64>],
        used: Vec<bool>,
        current: Vec<usize>,
        best: Vec<usize>,
        best_key: (f64, f64),
    }

    impl Search<'_> {
        fn visit(&mut self, row: usize, max: f64, sum: f64) {
            if (max, sum) >= self.best_key {
                return;
            }
            if row == self.dist.len() {
                self.best_key = (max, sum);
                self.best.clone_from(&self.current);
                return;
            }
            for col in 0..self.dist.len() {
                if self.used[col] {
                    continue;
                }
                let d = self.dist[row][col];
                self.used[col] = true;
                self.current.push(col);
                self.visit(row + 1, max.max(d), sum + d);
                self.current.pop();
                self.used[col] = false;
            }
        }
    }

    let mut search = Search {
        dist: &dist,
        used: vec![false; n],
        current: Vec::with_capacity(n),
        best: Vec::new(),
        best_key: (f64::INFINITY, f64::INFINITY),
    };
    search.visit(0, 0.0, 0.0);
    let (max_error, sum) = search.best_key;
    Ok(RootMatch { assignment: search.best, max_error, mean_error: sum / n as f64 })
}

/// Draws `n` roots uniformly from the disk `|z| <= radius`, rejecting any
/// draw closer than `min_separation` to an earlier root.
pub fn random_separated_roots<R: Rng>(rng: &mut R, n: usize, radius: f64, min_separation: f64) -> Vec<Complex64> {
    let mut roots: Vec<Complex64> = Vec::with_capacity(n);
    while roots.len() < n {
        let r = radius * rng.gen::<f64>().sqrt();
        let theta = rng.gen::<f64>() * std::f64::consts::TAU;
        let z = Complex64::from_polar(r, theta);
        if roots.iter().all(|w| (w - z).norm() >= min_separation) {
            roots.push(z);
        }
    }
    roots
}

/// Random upper-Hessenberg matrix with entries uniform in the unit square.
pub fn random_hessenberg<R: Rng>(rng: &mut R, n: usize) -> DenseMatrix {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if j + 1 >= i {
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect()
        })
        .collect()
}
