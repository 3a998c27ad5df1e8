//! Local least-squares polynomial fits over a partitioned rectangle.
//!
//! On a cell with center `c` and half-width `h` the fit is
//! `g(z) = sum_k b_k u^k` with `u = (z - c) / h`, sampled on a tensor grid of
//! `q (n + 1)` points per axis at cell-centered positions. The error bound is
//! the largest `|f - g|` on a validation grid eight times denser per axis,
//! placed at odd offsets so it never touches a fit point.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::polynomial::{make_monic, PolyError, Polynomial};
use crate::scalar::Real;

/// Validation points per fit point, per axis.
pub const VALIDATION_DENSITY: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("cell {cell:?}: degree-{degree} term vanishes (relative size {relative:e})")]
    DegenerateFit { cell: (usize, usize), degree: usize, relative: f64 },
    #[error("cell {cell:?}: function is not finite at {z}")]
    NonFiniteSample { cell: (usize, usize), z: Complex64 },
    #[error("invalid fit request: {0}")]
    Invalid(String),
}

/// Axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self, FitError> {
        let all_finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !all_finite || !(x_min < x_max) || !(y_min < y_max) {
            return Err(FitError::Invalid(format!(
                "need finite x_min < x_max and y_min < y_max, got [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        Ok(Self { x_min, x_max, y_min, y_max })
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))
    }

    /// Larger of the two half-extents.
    pub fn half_width(&self) -> f64 {
        (0.5 * (self.x_max - self.x_min)).max(0.5 * (self.y_max - self.y_min))
    }

    /// Half-open membership `[x_min, x_max) x [y_min, y_max)`.
    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.x_min && z.re < self.x_max && z.im >= self.y_min && z.im < self.y_max
    }

    pub fn translate(&self, by: Complex64) -> Rect {
        Rect {
            x_min: self.x_min + by.re,
            x_max: self.x_max + by.re,
            y_min: self.y_min + by.im,
            y_max: self.y_max + by.im,
        }
    }
}

/// Regular `cells_x x cells_y` split of a rectangle into half-open cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DomainPartition {
    pub bounds: Rect,
    pub cells_x: usize,
    pub cells_y: usize,
}

impl DomainPartition {
    pub fn new(bounds: Rect, cells_x: usize, cells_y: usize) -> Result<Self, FitError> {
        if cells_x == 0 || cells_y == 0 {
            return Err(FitError::Invalid("cell counts must be >= 1".into()));
        }
        Ok(Self { bounds, cells_x, cells_y })
    }

    pub fn cell_count(&self) -> usize {
        self.cells_x * self.cells_y
    }

    /// Cell `(i, j)`: column `i` along x, row `j` along y.
    pub fn cell(&self, i: usize, j: usize) -> Rect {
        let b = &self.bounds;
        let edge = |lo: f64, hi: f64, k: usize, count: usize| {
            if k == count {
                hi
            } else {
                lo + (hi - lo) * k as f64 / count as f64
            }
        };
        Rect {
            x_min: edge(b.x_min, b.x_max, i, self.cells_x),
            x_max: edge(b.x_min, b.x_max, i + 1, self.cells_x),
            y_min: edge(b.y_min, b.y_max, j, self.cells_y),
            y_max: edge(b.y_min, b.y_max, j + 1, self.cells_y),
        }
    }

    /// Cells in row-major order, x fastest.
    pub fn cells(&self) -> impl Iterator<Item = ((usize, usize), Rect)> + '_ {
        (0..self.cells_y).flat_map(move |j| (0..self.cells_x).map(move |i| ((i, j), self.cell(i, j))))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub poly: Polynomial<f64>,
    pub error_bound: f64,
    pub cell_id: (usize, usize),
    /// `b_0..=b_n` in the centered, scaled basis.
    pub local_coeffs: Vec<Complex64>,
    pub center: Complex64,
    pub half_width: f64,
}

impl FitResult {
    /// Evaluates the fitted (non-normalized) polynomial.
    pub fn eval_local(&self, z: Complex64) -> Complex64 {
        horner(&self.local_coeffs, (z - self.center) / self.half_width)
    }
}

/// Cell-centered sample positions in `(-1, 1)`: `(2k + 1) / count - 1`.
fn grid(count: usize) -> impl Iterator<Item = f64> + Clone {
    (0..count).map(move |k| (2 * k + 1) as f64 / count as f64 - 1.0)
}

fn horner(coeffs: &[Complex64], u: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &b| acc * u + b)
}

/// Fits a degree-`n` polynomial to `f` on `cell` with oversampling factor
/// `q >= 1`.
pub fn fit_cell<Fun>(f: Fun, cell: &Rect, cell_id: (usize, usize), n: usize, q: usize) -> Result<FitResult, FitError>
where
    Fun: Fn(Complex64) -> Complex64,
{
    if n == 0 || q == 0 {
        return Err(FitError::Invalid(format!("need degree >= 1 and oversampling >= 1, got n={n}, q={q}")));
    }
    let center = cell.center();
    let h = cell.half_width();
    let (hx, hy) = (0.5 * (cell.x_max - cell.x_min), 0.5 * (cell.y_max - cell.y_min));
    let point = |sx: f64, sy: f64| Complex64::new(center.re + hx * sx, center.im + hy * sy);
    let sample = |z: Complex64| {
        let v = f(z);
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(FitError::NonFiniteSample { cell: cell_id, z })
        }
    };

    let per_axis = q * (n + 1);
    let cols = n + 1;
    let mut a = Vec::with_capacity(per_axis * per_axis * cols);
    let mut y = Vec::with_capacity(per_axis * per_axis);
    for sy in grid(per_axis) {
        for sx in grid(per_axis) {
            let z = point(sx, sy);
            let u = (z - center) / h;
            let mut p = Complex64::new(1.0, 0.0);
            for _ in 0..cols {
                a.push(p);
                p *= u;
            }
            y.push(sample(z)?);
        }
    }
    let b = least_squares(&mut a, cols, &mut y)
        .ok_or_else(|| FitError::Invalid("fit grid does not determine the polynomial".into()))?;

    let dense = per_axis * VALIDATION_DENSITY;
    let mut error_bound: f64 = 0.0;
    for sy in grid(dense) {
        for sx in grid(dense) {
            let z = point(sx, sy);
            let err = (sample(z)? - horner(&b, (z - center) / h)).norm();
            error_bound = error_bound.max(err);
        }
    }

    let scale = b.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let relative = if scale > 0.0 { b[n].norm() / scale } else { 0.0 };
    if relative <= f64::MONIC_EPSILON {
        return Err(FitError::DegenerateFit { cell: cell_id, degree: n, relative });
    }
    let global = to_global(&b, center, h);
    let poly = make_monic(&global).map_err(|e| match e {
        PolyError::DegenerateLeadingCoefficient { magnitude } => {
            FitError::DegenerateFit { cell: cell_id, degree: n, relative: magnitude }
        }
        other => FitError::Invalid(other.to_string()),
    })?;
    Ok(FitResult { poly, error_bound, cell_id, local_coeffs: b, center, half_width: h })
}

/// Re-expands `sum_k b_k ((z - c) / h)^k` in powers of `z`, lowest first.
pub fn to_global(b: &[Complex64], c: Complex64, h: f64) -> Vec<Complex64> {
    let n = b.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    // (z - c)^k expanded incrementally: row holds its coefficients
    let mut row = vec![Complex64::new(0.0, 0.0); n];
    row[0] = Complex64::new(1.0, 0.0);
    let mut hk = 1.0;
    for (k, bk) in b.iter().enumerate() {
        if k > 0 {
            for j in (0..=k).rev() {
                let shifted = if j > 0 { row[j - 1] } else { Complex64::new(0.0, 0.0) };
                row[j] = shifted - c * row[j];
            }
            hk *= h;
        }
        let w = bk / hk;
        for j in 0..=k {
            out[j] += w * row[j];
        }
    }
    out
}

/// Minimizes `|A x - y|` for a row-major `rows x cols` matrix by Householder
/// QR. `a` and `y` are overwritten. Returns `None` when a column is
/// numerically dependent on the previous ones.
pub fn least_squares(a: &mut [Complex64], cols: usize, y: &mut [Complex64]) -> Option<Vec<Complex64>> {
    let rows = y.len();
    assert_eq!(a.len(), rows * cols);
    if rows < cols {
        return None;
    }
    let idx = |i: usize, j: usize| i * cols + j;
    let mut v = vec![Complex64::new(0.0, 0.0); rows];
    for j in 0..cols {
        let norm = (j..rows).map(|i| a[idx(i, j)].norm_sqr()).sum::<f64>().sqrt();
        let col_scale = (0..rows).map(|i| a[idx(i, j)].norm()).fold(0.0, f64::max);
        if norm <= 1e-14 * col_scale.max(f64::MIN_POSITIVE) {
            return None;
        }
        let x0 = a[idx(j, j)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { Complex64::new(1.0, 0.0) };
        let alpha = -phase * norm;
        for i in j..rows {
            v[i] = a[idx(i, j)];
        }
        v[j] -= alpha;
        let vnorm = (j..rows).map(|i| v[i].norm_sqr()).sum::<f64>().sqrt();
        for vi in &mut v[j..rows] {
            *vi /= vnorm;
        }
        // H = I - 2 v v^H on the trailing block and the right-hand side
        for k in j..cols {
            let dot: Complex64 = (j..rows).map(|i| v[i].conj() * a[idx(i, k)]).sum();
            for i in j..rows {
                a[idx(i, k)] -= 2.0 * v[i] * dot;
            }
        }
        let dot: Complex64 = (j..rows).map(|i| v[i].conj() * y[i]).sum();
        for i in j..rows {
            y[i] -= 2.0 * v[i] * dot;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); cols];
    for j in (0..cols).rev() {
        let s: Complex64 = (j + 1..cols).map(|k| a[idx(j, k)] * x[k]).sum();
        x[j] = (y[j] - s) / a[idx(j, j)];
    }
    Some(x)
}

/// `true` iff the fit error is strictly below `eps`.
pub fn accept_cell(r: &FitResult, eps: f64) -> bool {
    r.error_bound < eps
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolver::{solve_roots, SolveConfig};
    use crate::oracle::match_roots;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn square(cx: f64, cy: f64, h: f64) -> Rect {
        Rect::new(cx - h, cx + h, cy - h, cy + h).unwrap()
    }

    fn dummy(error_bound: f64) -> FitResult {
        FitResult {
            poly: Polynomial::from_monic_coeffs(vec![c(0.0, 0.0)]).unwrap(),
            error_bound,
            cell_id: (0, 0),
            local_coeffs: vec![],
            center: c(0.0, 0.0),
            half_width: 1.0,
        }
    }

    #[test]
    fn partition_cells_tile_the_domain() {
        let p = DomainPartition::new(Rect::new(-1.0, 2.0, 0.0, 1.0).unwrap(), 3, 2).unwrap();
        assert_eq!(p.cell_count(), 6);
        let cells: Vec<_> = p.cells().collect();
        assert_eq!(cells[0].0, (0, 0));
        assert_eq!(cells[1].0, (1, 0));
        assert_eq!(cells[3].0, (0, 1));
        assert_eq!(p.cell(2, 1).x_max, 2.0);
        assert_eq!(p.cell(0, 0).x_max, p.cell(1, 0).x_min);
        let z = c(0.0, 0.5);
        assert_eq!(cells.iter().filter(|(_, r)| r.contains(z)).count(), 1);
        assert!(DomainPartition::new(p.bounds, 0, 1).is_err());
        assert!(Rect::new(1.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn least_squares_recovers_exact_solution() {
        // 4 x 2 consistent system with complex entries
        let truth = [c(1.0, -2.0), c(0.5, 0.25)];
        let rows = [
            [c(1.0, 0.0), c(2.0, 1.0)],
            [c(0.0, 1.0), c(-1.0, 0.0)],
            [c(3.0, 0.0), c(0.0, 0.0)],
            [c(1.0, 1.0), c(1.0, -1.0)],
        ];
        let mut a: Vec<_> = rows.iter().flatten().copied().collect();
        let mut y: Vec<_> = rows.iter().map(|r| r[0] * truth[0] + r[1] * truth[1]).collect();
        let x = least_squares(&mut a, 2, &mut y).unwrap();
        assert!((x[0] - truth[0]).norm() < 1e-14 && (x[1] - truth[1]).norm() < 1e-14);
        let mut dep = vec![c(1.0, 0.0), c(2.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)];
        assert!(least_squares(&mut dep, 2, &mut [c(1.0, 0.0), c(1.0, 0.0)]).is_none());
    }

    #[test]
    fn least_squares_matches_normal_equations() {
        // overdetermined line fit against the closed form
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = [1.0, 2.9, 5.2, 7.1, 8.8];
        let mut a: Vec<_> = xs.iter().flat_map(|&x| [c(1.0, 0.0), c(x, 0.0)]).collect();
        let mut y: Vec<_> = ys.iter().map(|&v| c(v, 0.0)).collect();
        let sol = least_squares(&mut a, 2, &mut y).unwrap();
        let n = xs.len() as f64;
        let (sx, sy) = (xs.iter().sum::<f64>(), ys.iter().sum::<f64>());
        let sxx = xs.iter().map(|x| x * x).sum::<f64>();
        let sxy = xs.iter().zip(&ys).map(|(x, y)| x * y).sum::<f64>();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let icpt = (sy - slope * sx) / n;
        assert!((sol[1].re - slope).abs() < 1e-13 && (sol[0].re - icpt).abs() < 1e-13);
    }

    #[test]
    fn global_expansion() {
        // 2 + 3u + u^2 with u = (z - (1+i)) / 2
        let b = [c(2.0, 0.0), c(3.0, 0.0), c(1.0, 0.0)];
        let g = to_global(&b, c(1.0, 1.0), 2.0);
        for z in [c(0.3, -0.2), c(-1.0, 2.0), c(5.0, 0.0)] {
            let u = (z - c(1.0, 1.0)) / 2.0;
            let want = b[0] + b[1] * u + b[2] * u * u;
            let got = g[0] + g[1] * z + g[2] * z * z;
            assert!((want - got).norm() < 1e-13);
        }
    }

    #[test]
    fn exact_quadratic_on_any_cell() {
        let f = |z: Complex64| z * z - 1.0;
        for cell in [square(0.0, 0.0, 1.0), square(3.0, -2.0, 0.5), square(-0.4, 0.7, 1e-3)] {
            let r = fit_cell(f, &cell, (0, 0), 2, 2).unwrap();
            assert!(r.error_bound <= 1e-10, "{}", r.error_bound);
            let want = [c(-1.0, 0.0), c(0.0, 0.0)];
            for (got, want) in r.poly.coeffs().iter().zip(want) {
                assert!((got - want).norm() <= 1e-9, "{got} vs {want}");
            }
            assert!(accept_cell(&r, 1e-6));
        }
    }

    #[test]
    fn constant_is_degenerate() {
        let err = fit_cell(|_| c(1.0, 0.0), &square(0.0, 0.0, 1.0), (2, 3), 2, 2).unwrap_err();
        assert!(matches!(err, FitError::DegenerateFit { cell: (2, 3), degree: 2, .. }));
    }

    #[test]
    fn sine_near_origin_follows_taylor() {
        let r = fit_cell(|z: Complex64| z.sin(), &square(0.0, 0.0, 0.1), (0, 0), 5, 2).unwrap();
        assert!(r.error_bound < 1e-9, "{}", r.error_bound);
        // sin z = z - z^3/6 + z^5/120 - ...; monic form divides by 1/120
        let taylor = [0.0, 120.0, 0.0, -20.0, 0.0];
        for (k, (got, want)) in r.poly.coeffs().iter().zip(taylor).enumerate() {
            let tol = if k == 3 { 0.05 } else { 0.5 };
            assert!((got - c(want, 0.0)).norm() < tol, "a{k}: {got} vs {want}");
        }
        // the fitted local coefficients match the truncated series directly
        let h = 0.1f64;
        let series = [0.0, h, 0.0, -h.powi(3) / 6.0, 0.0, h.powi(5) / 120.0];
        for (got, want) in r.local_coeffs.iter().zip(series) {
            assert!((got - c(want, 0.0)).norm() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn non_finite_samples_reported() {
        // an odd per-axis count puts a sample on the center line re = 0
        let err = fit_cell(|z: Complex64| c(1.0 / z.re, 0.0), &square(0.0, 0.0, 1.0), (0, 0), 2, 1).unwrap_err();
        assert!(matches!(err, FitError::NonFiniteSample { .. }));
        assert!(fit_cell(|z| z, &square(0.0, 0.0, 1.0), (0, 0), 0, 1).is_err());
    }

    #[test]
    fn acceptance_is_strict() {
        assert!(accept_cell(&dummy(0.0), 1e-6));
        assert!(!accept_cell(&dummy(1e-6), 1e-6));
        assert!(!accept_cell(&dummy(2e-6), 1e-6));
    }

    #[test]
    fn validation_grid_is_disjoint_from_fit_grid() {
        for n in 1..6 {
            for q in 1..4 {
                let fit: Vec<f64> = grid(q * (n + 1)).collect();
                let val: Vec<f64> = grid(q * (n + 1) * VALIDATION_DENSITY).collect();
                assert!(fit.iter().all(|a| val.iter().all(|b| (a - b).abs() > 1e-12)));
            }
        }
    }

    #[test]
    fn translation_leaves_roots_in_place() {
        let f = |z: Complex64| (z * 0.5).exp() - c(1.2, 0.3);
        let cell = square(1.5, -0.5, 0.4);
        let shift = cell.center();
        let direct = fit_cell(f, &cell, (0, 0), 4, 2).unwrap();
        let moved = fit_cell(|w: Complex64| f(w + shift), &cell.translate(-shift), (0, 0), 4, 2).unwrap();
        let cfg = SolveConfig::default();
        let a = solve_roots(&direct.poly, &cfg).unwrap().roots;
        let b: Vec<_> = solve_roots(&moved.poly, &cfg).unwrap().roots.iter().map(|r| r + shift).collect();
        assert!(match_roots(&a, &b).unwrap().max_error < 1e-8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // Sample rounding is about eps * max|f|, so the z^n coefficient is only
        // determined to eps * max|f| / h^n; the cases below keep that under 1e-10.
        #[test]
        fn polynomials_are_refit_exactly(
            n in 1usize..=2,
            raw in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 2),
            cx in -1.0f64..1.0, cy in -1.0f64..1.0,
            log_h in -3.0f64..0.0,
        ) {
            let h = 10f64.powf(log_h);
            let coeffs: Vec<_> = raw[..n].iter().map(|&(a, b)| c(a, b)).collect();
            let p = Polynomial::from_monic_coeffs(coeffs.clone()).unwrap();
            let r = fit_cell(|z| p.evaluate(z), &square(cx, cy, h), (0, 0), n, 2).unwrap();
            for (got, want) in r.poly.coeffs().iter().zip(&coeffs) {
                prop_assert!((got - want).norm() <= 1e-9, "n={} h={:e}: {} vs {}", n, h, got, want);
            }
        }

        #[test]
        fn cubics_refit_on_moderate_cells(
            raw in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 3),
            cx in -1.0f64..1.0, cy in -1.0f64..1.0,
            h in 0.05f64..1.0,
        ) {
            let coeffs: Vec<_> = raw.iter().map(|&(a, b)| c(a, b)).collect();
            let p = Polynomial::from_monic_coeffs(coeffs.clone()).unwrap();
            let r = fit_cell(|z| p.evaluate(z), &square(cx, cy, h), (0, 0), 3, 2).unwrap();
            for (got, want) in r.poly.coeffs().iter().zip(&coeffs) {
                prop_assert!((got - want).norm() <= 1e-9, "h={}: {} vs {}", h, got, want);
            }
        }

        #[test]
        fn higher_degree_refit_on_unit_scale_cells(
            n in 4usize..=6,
            raw in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 6),
            cx in -1.0f64..1.0, cy in -1.0f64..1.0,
            h in 0.5f64..2.0,
        ) {
            let coeffs: Vec<_> = raw[..n].iter().map(|&(a, b)| c(a, b)).collect();
            let p = Polynomial::from_monic_coeffs(coeffs.clone()).unwrap();
            let r = fit_cell(|z| p.evaluate(z), &square(cx, cy, h), (0, 0), n, 2).unwrap();
            for (got, want) in r.poly.coeffs().iter().zip(&coeffs) {
                prop_assert!((got - want).norm() <= 1e-9, "n={} h={}: {} vs {}", n, h, got, want);
            }
        }

        #[test]
        fn fits_are_deterministic(cx in -1.0f64..1.0, h in 0.01f64..1.0) {
            let f = |z: Complex64| z.cos() + z * 0.25;
            let cell = square(cx, 0.0, h);
            prop_assert_eq!(fit_cell(f, &cell, (0, 0), 4, 2).unwrap(), fit_cell(f, &cell, (0, 0), 4, 2).unwrap());
        }
    }
}
