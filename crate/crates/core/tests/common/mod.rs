#![allow(dead_code)]
#![allow(clippy::needless_range_loop)]

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rootdensity::eigensolver::{givens_coeffs, CompactHessenberg, ShiftStrategy};
use rootdensity::oracle::{self, adjoint, dense_mul, dense_qr_step, DenseMatrix};
use rootdensity::{Polynomial, SolveConfig};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("data")
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_rootdensity")
}

/// Runs the CLI in-process and returns `(exit code, stdout, stderr)`.
pub fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("rootdensity").chain(args.iter().copied());
    let code = rootdensity::cli::run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// Value of `key=...` in a key=value report.
pub fn kv<'a>(report: &'a str, key: &str) -> Option<&'a str> {
    report.lines().find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
}

pub fn kv_f64(report: &str, key: &str) -> f64 {
    kv(report, key).unwrap_or_else(|| panic!("no {key} in report:\n{report}")).parse().unwrap()
}

pub fn max_entry_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.iter().zip(b).flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).norm())).fold(0.0, f64::max)
}

pub fn max_entry(a: &DenseMatrix) -> f64 {
    a.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Runs the compact kernel through the same level/iteration/shift schedule as
/// the solver, reporting the active block after every step.
pub fn compact_trajectory<Cb: FnMut(&DenseMatrix)>(
    a: &DenseMatrix,
    iterations: usize,
    shift: ShiftStrategy,
    mut on_step: Cb,
) -> Vec<Complex64> {
    let n = a.len();
    let mut h = CompactHessenberg::<f64>::from_dense(a).expect("input is Hessenberg");
    let mut eig = vec![c(0.0, 0.0); n];
    while h.active_size() >= 2 {
        let m = h.active_size();
        let mut previous = h.trailing_subdiagonal().norm();
        let mut exceptional = false;
        for _ in 0..iterations {
            let mut s = h.trailing_diagonal();
            if exceptional {
                s += c(0.6, 0.8) * (0.75 * previous);
            }
            h.qr_iteration_with_shift(s);
            on_step(&h.active_block());
            if shift == ShiftStrategy::Guarded {
                let sub = h.trailing_subdiagonal().norm();
                let diag = h.get(m - 2, m - 2).norm() + h.trailing_diagonal().norm();
                exceptional = sub >= previous && sub > f64::EPSILON * diag;
                previous = sub;
            }
        }
        eig[m - 1] = h.trailing_diagonal();
        h.deflate();
    }
    eig[0] = h.get(0, 0);
    eig
}

/// Largest per-step max-entry difference between the compact and dense
/// trajectories, plus the largest eigenvalue difference.
pub fn lockstep_error(a: &DenseMatrix, iterations: usize, shift: ShiftStrategy) -> f64 {
    let mut dense_steps = Vec::new();
    let dense_eig = oracle::dense_qr_trajectory(a, iterations, shift, |b| dense_steps.push(b.clone()));
    let mut worst = 0.0f64;
    let mut k = 0;
    let compact_eig = compact_trajectory(a, iterations, shift, |b| {
        worst = worst.max(max_entry_diff(b, &dense_steps[k]));
        k += 1;
    });
    assert_eq!(k, dense_steps.len(), "trajectories have different lengths");
    for (x, y) in compact_eig.iter().zip(&dense_eig) {
        worst = worst.max((x - y).norm());
    }
    worst
}

/// Random degree-`n` monic polynomial with roots in `|z| <= 2`, pairwise at
/// least 0.1 apart, and those roots.
pub fn separated_polynomial(rng: &mut ChaCha8Rng, n: usize) -> (Polynomial<f64>, Vec<Complex64>) {
    let roots = oracle::random_separated_roots(rng, n, 2.0, 0.1);
    (Polynomial::from_roots(&roots), roots)
}

pub fn aberth(p: &Polynomial<f64>) -> Vec<Complex64> {
    oracle::aberth_solve(p, 1e-15, 2000).expect("Aberth converges on separated roots")
}

// ---- property strategies ----

fn complex_in(scale: f64) -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(move |(re, im)| c(re * scale, im * scale))
}

/// Upper-Hessenberg matrices of order 2..=8 with entries scaled by 10^k,
/// k in -3..=3.
pub fn hessenberg_strategy() -> impl Strategy<Value = DenseMatrix> {
    (2usize..=8, -3i32..=3).prop_flat_map(|(n, k)| {
        let scale = 10f64.powi(k);
        prop::collection::vec(complex_in(scale), n * n).prop_map(move |v| {
            (0..n).map(|i| (0..n).map(|j| if j + 1 >= i { v[i * n + j] } else { c(0.0, 0.0) }).collect()).collect()
        })
    })
}

pub fn shift_for(a: &DenseMatrix, pick: usize) -> Complex64 {
    let n = a.len();
    a[pick % n][pick % n]
}

fn identity(n: usize) -> DenseMatrix {
    (0..n).map(|i| (0..n).map(|j| c(if i == j { 1.0 } else { 0.0 }, 0.0)).collect()).collect()
}

/// Dense embedding of the rotation acting on rows `i-1, i`.
fn embed(n: usize, i: usize, g: &rootdensity::eigensolver::GivensPair<f64>) -> DenseMatrix {
    let mut q = identity(n);
    q[i - 1][i - 1] = g.c;
    q[i - 1][i] = g.s;
    q[i][i - 1] = -g.s.conj();
    q[i][i] = g.c.conj();
    q
}

/// One shifted QR step leaves the matrix upper Hessenberg (checked on the
/// dense oracle, which forms Q and R in full), and the compact kernel agrees
/// with it.
pub fn prop_hessenberg_preserved(a: &DenseMatrix, s: Complex64) -> Result<(), TestCaseError> {
    let scale = max_entry(a).max(f64::MIN_POSITIVE);
    let next = dense_qr_step(a, s);
    let n = a.len();
    for i in 0..n {
        for j in 0..i.saturating_sub(1) {
            prop_assert!(next[i][j].norm() <= 1e-12 * scale, "entry ({i},{j}) = {} after step", next[i][j]);
        }
    }
    let mut h = CompactHessenberg::<f64>::from_dense(a).unwrap();
    h.qr_iteration_with_shift(s);
    let diff = max_entry_diff(&h.to_dense(), &next);
    prop_assert!(diff <= 1e-10 * scale.max(1.0), "compact vs dense step differ by {diff:e}");
    Ok(())
}

/// After the left sweep the block is upper triangular and equals
/// `Q^H (A - sI)` rebuilt from the retained rotations.
pub fn prop_left_sweep_triangular(a: &DenseMatrix, s: Complex64) -> Result<(), TestCaseError> {
    let n = a.len();
    let scale = max_entry(a).max(f64::MIN_POSITIVE);
    let mut shifted = a.clone();
    for (k, row) in shifted.iter_mut().enumerate() {
        row[k] -= s;
    }
    let mut h = CompactHessenberg::<f64>::from_dense(&shifted).unwrap();
    let rotations = h.left_sweep().to_vec();
    prop_assert_eq!(rotations.len(), n - 1);
    let mut qh = identity(n);
    for (k, g) in rotations.iter().enumerate() {
        qh = dense_mul(&embed(n, k + 1, g), &qh);
    }
    let r = dense_mul(&qh, &shifted);
    for i in 1..n {
        for j in 0..i {
            prop_assert!(r[i][j].norm() <= 1e-12 * scale, "Q^H(A - sI) has ({i},{j}) = {}", r[i][j]);
            prop_assert!(h.get(i, j).norm() == 0.0, "compact block not triangular at ({i},{j})");
        }
    }
    let diff = max_entry_diff(&h.to_dense(), &r);
    prop_assert!(diff <= 1e-12 * scale.max(1.0) * n as f64, "compact R differs from dense by {diff:e}");
    // Q is unitary
    let qqh = dense_mul(&adjoint(&qh), &qh);
    prop_assert!(max_entry_diff(&qqh, &identity(n)) <= 1e-12);
    Ok(())
}

pub fn givens_inputs() -> impl Strategy<Value = (Complex64, Complex64)> {
    let part = prop_oneof![
        4 => -1.0..1.0f64,
        1 => Just(0.0),
    ];
    (part.clone(), part.clone(), part.clone(), part, -30i32..=30, -30i32..=30)
        .prop_map(|(ar, ai, br, bi, ea, eb)| (c(ar, ai) * 10f64.powi(ea), c(br, bi) * 10f64.powi(eb)))
}

/// `|c|^2 + |s|^2 = 1`, the rotation maps `(a, b)` to `(r, 0)`, and `r` is
/// real and nonnegative whenever a rotation happens.
pub fn prop_givens_unitary(a: Complex64, b: Complex64) -> Result<(), TestCaseError> {
    let (g, r) = givens_coeffs(a, b);
    prop_assert!((g.norm_sqr() - 1.0).abs() <= 1e-12, "|c|^2 + |s|^2 = {}", g.norm_sqr());
    let (x, y) = g.rotate(a, b);
    let size = a.norm().max(b.norm());
    prop_assert!(y.norm() <= 1e-12 * size, "second component {y} not annihilated");
    prop_assert!((x - r).norm() <= 1e-12 * size, "first component {x} != r = {r}");
    if b != c(0.0, 0.0) {
        prop_assert!(r.im == 0.0 && r.re >= 0.0, "r = {r} is not real nonnegative");
    }
    Ok(())
}

pub fn polynomial_strategy() -> impl Strategy<Value = Vec<Complex64>> {
    (1usize..=8).prop_flat_map(|n| prop::collection::vec(complex_in(2.0).prop_map(|z| z), n))
}

/// Sum of computed roots equals minus the `z^(n-1)` coefficient.
pub fn prop_vieta_trace(roots: &[Complex64]) -> Result<(), TestCaseError> {
    let p = Polynomial::from_roots(roots);
    let found = rootdensity::solve_roots(&p, &SolveConfig::default()).unwrap().roots;
    let sum: Complex64 = found.iter().sum();
    let expected = -p.coeffs()[p.degree() - 1];
    prop_assert!((sum - expected).norm() <= 1e-6, "root sum {sum} vs {expected}");
    Ok(())
}
