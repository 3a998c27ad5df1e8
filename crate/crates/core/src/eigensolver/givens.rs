use num_complex::Complex;
use num_traits::{One, Zero};

use crate::scalar::Real;

/// Real FLOPs charged for one `givens_coeffs` call: 4 divides for scaling,
/// 4 squares + 3 adds, 1 sqrt, 1 rescale multiply, 4 divides for `c`/`s`.
pub const GIVENS_FLOPS: u64 = 17;

/// Coefficients of the plane rotation
///
/// ```text
/// [  c      s  ]
/// [ -conj(s) conj(c) ]
/// ```
///
/// which maps `(a, b)` to `(r, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GivensPair<F> {
    pub c: Complex<F>,
    pub s: Complex<F>,
}

impl<F: Real> GivensPair<F> {
    pub fn identity() -> Self {
        Self { c: Complex::one(), s: Complex::zero() }
    }

    /// Left action on a column pair: `(c x + s y, -conj(s) x + conj(c) y)`.
    #[inline(always)]
    pub fn rotate(&self, x: Complex<F>, y: Complex<F>) -> (Complex<F>, Complex<F>) {
        (self.c * x + self.s * y, self.c.conj() * y - self.s.conj() * x)
    }

    /// Right action of the conjugate transpose on a row pair:
    /// `(x conj(c) + y conj(s), -x s + y c)`.
    #[inline(always)]
    pub fn rotate_adjoint_right(&self, x: Complex<F>, y: Complex<F>) -> (Complex<F>, Complex<F>) {
        (x * self.c.conj() + y * self.s.conj(), y * self.c - x * self.s)
    }

    /// `|c|^2 + |s|^2`, which should be one.
    pub fn norm_sqr(&self) -> F {
        self.c.norm_sqr() + self.s.norm_sqr()
    }
}

/// Computes the rotation zeroing `b` against `a`.
///
/// `r = sqrt(|a|^2 + |b|^2)` is evaluated after scaling all four components
/// by their largest magnitude so fp32 squares cannot overflow. `c` and `s`
/// follow `c = conj(a)/r`, `s = conj(b)/r`, so `b = 0` gives the phase
/// rotation `c = conj(a)/|a|`; only `a = b = 0` yields the identity pair with
/// `r = 0`.
pub fn givens_coeffs<F: Real>(a: Complex<F>, b: Complex<F>) -> (GivensPair<F>, Complex<F>) {
    let scale = a.re.abs().max(a.im.abs()).max(b.re.abs()).max(b.im.abs());
    if scale.is_zero() {
        return (GivensPair::identity(), Complex::zero());
    }
    let sa = a.unscale(scale);
    let sb = b.unscale(scale);
    let scaled_r = (sa.norm_sqr() + sb.norm_sqr()).sqrt();
    let r = scaled_r * scale;
    let pair = GivensPair { c: sa.conj().unscale(scaled_r), s: sb.conj().unscale(scaled_r) };
    (pair, Complex::new(r, F::zero()))
}
