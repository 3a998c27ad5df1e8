//! Packed upper-Hessenberg storage.
//!
//! Row `i` holds columns `max(i, 1) - 1 .. order`; entries below the first
//! subdiagonal have no storage at all. All updates are confined to the
//! leading `active x active` block.

use num_complex::Complex;
use num_traits::Zero;
use thiserror::Error;

use super::givens::{givens_coeffs, GivensPair, GIVENS_FLOPS};
use crate::polynomial::CompanionMatrix;
use crate::scalar::Real;

// one complex multiply-add pair per output entry: 2 cmul (6 each) + 1 cadd (2)
const ROTATE_FLOPS_PER_ENTRY: u64 = 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HessenbergError {
    #[error("matrix is not square")]
    NotSquare,
    #[error("matrix has a nonzero entry at ({row}, {col}) below the first subdiagonal")]
    NotHessenberg { row: usize, col: usize },
    #[error("matrix order must be at least 1")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftSign {
    Add,
    Subtract,
}

#[derive(Debug, Clone)]
pub struct CompactHessenberg<F> {
    order: usize,
    active: usize,
    data: Vec<Complex<F>>,
    row_offset: Vec<usize>,
    /// Rotations computed by the last left sweep, consumed by the right sweep.
    rotations: Vec<GivensPair<F>>,
    flops: u64,
}

#[inline(always)]
fn row_start(i: usize) -> usize {
    i.saturating_sub(1)
}

impl<F: Real> CompactHessenberg<F> {
    pub fn zeros(order: usize) -> Self {
        assert!(order >= 1, "order must be at least 1");
        let mut row_offset = Vec::with_capacity(order);
        let mut total = 0;
        for i in 0..order {
            row_offset.push(total);
            total += order - row_start(i);
        }
        Self {
            order,
            active: order,
            data: vec![Complex::zero(); total],
            row_offset,
            rotations: Vec::with_capacity(order.saturating_sub(1)),
            flops: 0,
        }
    }

    pub fn from_companion(cm: &CompanionMatrix<F>) -> Self {
        let mut a = Self::zeros(cm.order());
        a.load_companion(cm.first_row());
        a
    }

    /// Reinitializes in place from a companion first row of the same order,
    /// clearing the active size, retained rotations and FLOP count.
    pub fn load_companion(&mut self, first_row: &[Complex<F>]) {
        assert_eq!(first_row.len(), self.order, "companion order mismatch");
        self.data.fill(Complex::zero());
        self.data[..self.order].copy_from_slice(first_row);
        for i in 1..self.order {
            let k = self.index(i, i - 1);
            self.data[k] = Complex::new(F::one(), F::zero());
        }
        self.active = self.order;
        self.rotations.clear();
        self.flops = 0;
    }

    /// Packs a dense row-major matrix, rejecting anything below the first
    /// subdiagonal that is not exactly zero.
    pub fn from_dense(rows: &[Vec<Complex<F>>]) -> Result<Self, HessenbergError> {
        let n = rows.len();
        if n == 0 {
            return Err(HessenbergError::Empty);
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(HessenbergError::NotSquare);
        }
        let mut a = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if j + 1 < i {
                    if !v.is_zero() {
                        return Err(HessenbergError::NotHessenberg { row: i, col: j });
                    }
                } else {
                    a.set(i, j, v);
                }
            }
        }
        Ok(a)
    }

    #[inline(always)]
    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.order && j < self.order && j >= row_start(i));
        self.row_offset[i] + j - row_start(i)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn active_size(&self) -> usize {
        self.active
    }

    /// Number of complex values actually stored.
    pub fn stored_len(&self) -> usize {
        self.data.len()
    }

    /// Entry `(i, j)`; structurally absent positions read as zero.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<F> {
        if j < row_start(i) {
            Complex::zero()
        } else {
            self.data[self.index(i, j)]
        }
    }

    /// # Panics
    /// When `(i, j)` lies below the first subdiagonal.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex<F>) {
        assert!(j >= row_start(i), "({i}, {j}) is outside the Hessenberg band");
        let k = self.index(i, j);
        self.data[k] = v;
    }

    pub fn to_dense(&self) -> Vec<Vec<Complex<F>>> {
        (0..self.order).map(|i| (0..self.order).map(|j| self.get(i, j)).collect()).collect()
    }

    /// Dense copy of the leading `active x active` block.
    pub fn active_block(&self) -> Vec<Vec<Complex<F>>> {
        (0..self.active).map(|i| (0..self.active).map(|j| self.get(i, j)).collect()).collect()
    }

    /// Trailing diagonal entry of the active block.
    pub fn trailing_diagonal(&self) -> Complex<F> {
        self.get(self.active - 1, self.active - 1)
    }

    /// Trailing subdiagonal `(m-1, m-2)` of the active block; zero when
    /// `m == 1`.
    pub fn trailing_subdiagonal(&self) -> Complex<F> {
        if self.active < 2 {
            Complex::zero()
        } else {
            self.get(self.active - 1, self.active - 2)
        }
    }

    /// Shrinks the active block by one (`m <- m - 1`).
    pub fn deflate(&mut self) {
        assert!(self.active > 1, "cannot deflate a 1x1 block");
        self.active -= 1;
    }

    /// Real FLOPs spent since the last reset.
    pub fn flops(&self) -> u64 {
        self.flops
    }

    pub fn retained_rotations(&self) -> &[GivensPair<F>] {
        &self.rotations
    }

    /// `A <- Q_i A`: rotates rows `i-1` and `i` over columns `i-1 .. m`
    /// and writes an exact zero at `(i, i-1)`.
    pub fn apply_left(&mut self, i: usize, g: &GivensPair<F>) {
        let m = self.active;
        assert!(i >= 1 && i < m, "rotation index {i} out of range for active size {m}");
        let upper = self.index(i - 1, i - 1);
        let lower = self.index(i, i - 1);
        let width = m - (i - 1);
        for k in 0..width {
            let (x, y) = g.rotate(self.data[upper + k], self.data[lower + k]);
            self.data[upper + k] = x;
            self.data[lower + k] = y;
        }
        self.data[lower] = Complex::zero();
        self.flops += 2 * ROTATE_FLOPS_PER_ENTRY * width as u64;
    }

    /// `A <- A Q_i^H`: rotates columns `i-1` and `i` over rows `0 ..= i`.
    ///
    /// Rows below `i` hold zeros in both columns while the right sweep runs
    /// on an upper-triangular input, so they are left untouched.
    pub fn apply_right(&mut self, i: usize, g: &GivensPair<F>) {
        let m = self.active;
        assert!(i >= 1 && i < m, "rotation index {i} out of range for active size {m}");
        for r in 0..=i {
            let left = self.index(r, i - 1);
            let (x, y) = g.rotate_adjoint_right(self.data[left], self.data[left + 1]);
            self.data[left] = x;
            self.data[left + 1] = y;
        }
        self.flops += 2 * ROTATE_FLOPS_PER_ENTRY * (i as u64 + 1);
    }

    /// Adds or subtracts `s` on the active diagonal.
    pub fn shift_diag(&mut self, s: Complex<F>, sign: ShiftSign) {
        for d in 0..self.active {
            let k = self.index(d, d);
            match sign {
                ShiftSign::Add => self.data[k] = self.data[k] + s,
                ShiftSign::Subtract => self.data[k] = self.data[k] - s,
            }
        }
        self.flops += 2 * self.active as u64;
    }

    /// Left sweep `i = 1 .. m-1`: computes, applies and retains each
    /// rotation. Leaves the active block upper triangular.
    pub fn left_sweep(&mut self) -> &[GivensPair<F>] {
        self.rotations.clear();
        for i in 1..self.active {
            let (g, _) = givens_coeffs(self.get(i - 1, i - 1), self.get(i, i - 1));
            self.flops += GIVENS_FLOPS;
            self.apply_left(i, &g);
            self.rotations.push(g);
        }
        &self.rotations
    }

    /// Right sweep reusing the retained rotations; clears the buffer.
    pub fn right_sweep(&mut self) {
        let rotations = std::mem::take(&mut self.rotations);
        for (k, g) in rotations.iter().enumerate() {
            self.apply_right(k + 1, g);
        }
        // hand the allocation back for the next iteration
        self.rotations = rotations;
        self.rotations.clear();
    }

    /// One shifted QR step with an explicit shift `s`:
    /// `A <- Q (A - sI) Q^H + sI`.
    pub fn qr_iteration_with_shift(&mut self, s: Complex<F>) {
        assert!(self.active >= 2, "QR iteration needs an active block of size >= 2");
        self.shift_diag(s, ShiftSign::Subtract);
        self.left_sweep();
        self.right_sweep();
        self.shift_diag(s, ShiftSign::Add);
    }

    /// One single-shift QR step with `s = a[m-1][m-1]`.
    pub fn qr_iteration(&mut self) {
        let s = self.trailing_diagonal();
        self.qr_iteration_with_shift(s);
    }
}
