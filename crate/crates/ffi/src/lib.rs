//! C interface to the rootdensity solver, rasterizer and pipeline model.
//!
//! Every function returns an [`RdStatus`]. Status values match the exit codes
//! of the command-line tool where the failure kinds overlap. After a failure,
//! [`rd_last_error`] describes it. Handles are opaque and owned by the caller,
//! who releases them with the matching `_free` function.
//!
//! Complex numbers cross the boundary as [`RdComplex`] pairs. Polynomials are
//! passed as their `n` non-leading coefficients `a[0], ..., a[n-1]` of the
//! monic polynomial `z^n + a[n-1] z^(n-1) + ... + a[0]`, except for
//! [`rd_solve`], which takes all `n + 1` coefficients and normalizes them.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use num_complex::Complex64;
use rootdensity::eigensolver::BatchSolver;
use rootdensity::pipeline::{self, PipelineConfig, PipelineError, Variant};
use rootdensity::raster::{self, DensityGrid, Palette, RasterError, ToneMap, ToneMode, Viewport};
use rootdensity::{make_monic, PolyError, Polynomial, Precision, ShiftStrategy, SolveConfig, SolveError, Solver};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RdStatus {
    Ok = 0,
    /// Malformed input data.
    Format = 2,
    /// Vanishing leading coefficient, non-finite coefficient or mixed degrees.
    Degenerate = 3,
    /// Invalid configuration value.
    Config = 4,
    Io = 5,
    /// A required pointer was null.
    NullPointer = 6,
    /// An output buffer is too small.
    BufferTooSmall = 7,
    /// Internal failure; the library caught a panic.
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RdComplex {
    pub re: f64,
    pub im: f64,
}

impl From<RdComplex> for Complex64 {
    fn from(z: RdComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

impl From<Complex64> for RdComplex {
    fn from(z: Complex64) -> Self {
        RdComplex { re: z.re, im: z.im }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RdPrecision {
    Fp32 = 0,
    Fp64 = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RdShift {
    /// Always `s = a[m-1][m-1]`.
    Rayleigh = 0,
    /// Rayleigh shift with an exceptional shift after a non-shrinking step.
    Guarded = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdSolveConfig {
    /// QR iterations per deflation level.
    pub iterations: u32,
    pub precision: RdPrecision,
    pub shift: RdShift,
    /// Threads used by batch solves; 1 solves on the calling thread.
    pub workers: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdViewport {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub width: u32,
    pub height: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RdToneMode {
    Linear = 0,
    Log1p = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RdPalette {
    Grayscale = 0,
    Inferno = 1,
    Viridis = 2,
    Ice = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdToneMap {
    pub mode: RdToneMode,
    pub gamma: f64,
    pub palette: RdPalette,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RdGridStats {
    pub total_roots: u64,
    pub in_view: u64,
    pub dropped: u64,
    pub max_count: u32,
    pub nonzero_pixels: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RdVariant {
    Wide = 0,
    Narrow = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdPipelineConfig {
    pub degree: u32,
    pub iterations: u32,
    pub pipeline_depth: u32,
    pub clock_hz: f64,
    pub variant: RdVariant,
    pub fifo_depth: u32,
    pub fifo_drain_per_cycle: u32,
    pub core_count: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RdSimReport {
    pub tasks: u64,
    pub total_cycles: u64,
    pub passes_per_task: u64,
    pub cycles_per_input: f64,
    /// `(K + 1) * N_p`.
    pub c_batch: u64,
    pub throughput_per_s: f64,
    pub fifo_max_occupancy: u64,
    pub stall_cycles: u64,
    pub extractions: u64,
}

enum Single {
    F64(Solver<f64>),
    F32(Solver<f32>),
}

/// Solver for one fixed degree.
pub struct RdSolver {
    degree: usize,
    single: Single,
    batch: BatchSolver,
}

/// Hit-count raster over a fixed viewport.
pub struct RdDensityGrid {
    viewport: Viewport,
    grid: DensityGrid,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let clean = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = clean);
}

struct Failure(RdStatus, String);

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        let status = match e {
            SolveError::InvalidConfig(_) => RdStatus::Config,
            SolveError::MixedDegreeBatch { .. } | SolveError::Poly(_) => RdStatus::Degenerate,
        };
        Failure(status, e.to_string())
    }
}

impl From<PolyError> for Failure {
    fn from(e: PolyError) -> Self {
        Failure(RdStatus::Degenerate, e.to_string())
    }
}

impl From<RasterError> for Failure {
    fn from(e: RasterError) -> Self {
        Failure(RdStatus::Config, e.to_string())
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure(RdStatus::Config, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(RdStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(RdStatus::Config, msg.into())
}

/// Runs `f`, records any failure and turns panics into [`RdStatus::Panic`].
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RdStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .map(String::as_str)
                .or_else(|| payload.downcast_ref::<&str>().copied())
                .unwrap_or("panic");
            set_error(&format!("internal error: {msg}"));
            RdStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn reference<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn reference_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn to_solve_config(c: &RdSolveConfig) -> SolveConfig {
    SolveConfig::default()
        .with_iterations(c.iterations as usize)
        .with_precision(match c.precision {
            RdPrecision::Fp32 => Precision::Fp32,
            RdPrecision::Fp64 => Precision::Fp64,
        })
        .with_shift(match c.shift {
            RdShift::Rayleigh => ShiftStrategy::Rayleigh,
            RdShift::Guarded => ShiftStrategy::Guarded,
        })
}

fn monic(coeffs: &[RdComplex]) -> Result<Polynomial<f64>, Failure> {
    Ok(Polynomial::from_monic_coeffs(coeffs.iter().map(|&z| z.into()).collect())?)
}

fn to_viewport(v: &RdViewport) -> Result<Viewport, Failure> {
    Ok(Viewport::new(v.x_min, v.x_max, v.y_min, v.y_max, v.width as usize, v.height as usize)?)
}

fn to_tone_map(t: &RdToneMap) -> Result<ToneMap, Failure> {
    let mode = match t.mode {
        RdToneMode::Linear => ToneMode::Linear,
        RdToneMode::Log1p => ToneMode::Log1p,
    };
    let palette = match t.palette {
        RdPalette::Grayscale => Palette::Grayscale,
        RdPalette::Inferno => Palette::Inferno,
        RdPalette::Viridis => Palette::Viridis,
        RdPalette::Ice => Palette::Ice,
    };
    Ok(ToneMap::new(mode, t.gamma, palette)?)
}

fn to_pipeline_config(c: &RdPipelineConfig) -> Result<PipelineConfig, Failure> {
    let cfg = PipelineConfig {
        degree: c.degree as usize,
        iterations: c.iterations as usize,
        pipeline_depth: c.pipeline_depth as usize,
        clock_hz: c.clock_hz,
        variant: to_variant(c.variant),
        fifo_depth: c.fifo_depth as usize,
        fifo_drain_per_cycle: c.fifo_drain_per_cycle as usize,
        core_count: c.core_count as usize,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn to_variant(v: RdVariant) -> Variant {
    match v {
        RdVariant::Wide => Variant::Wide,
        RdVariant::Narrow => Variant::Narrow,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or an empty string. The
/// pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn rd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Default solver settings: 10 iterations, fp64, guarded shift, one worker.
#[no_mangle]
pub extern "C" fn rd_solve_config_default() -> RdSolveConfig {
    RdSolveConfig { iterations: 10, precision: RdPrecision::Fp64, shift: RdShift::Guarded, workers: 1 }
}

/// Creates a solver for polynomials of `degree`.
///
/// # Safety
/// `config` must be null or point to a valid config; `out` must be valid for
/// a pointer write.
#[no_mangle]
pub unsafe extern "C" fn rd_solver_new(degree: u32, config: *const RdSolveConfig, out: *mut *mut RdSolver) -> RdStatus {
    guard(|| {
        let out = reference_mut(out, "out")?;
        *out = ptr::null_mut();
        let c = match config.as_ref() {
            Some(c) => *c,
            None => rd_solve_config_default(),
        };
        if c.workers == 0 {
            return Err(invalid("workers must be at least 1"));
        }
        let cfg = to_solve_config(&c);
        let degree = degree as usize;
        if degree == 0 {
            return Err(invalid("degree must be at least 1"));
        }
        let single = match cfg.precision {
            Precision::Fp64 => Single::F64(Solver::new(degree, cfg)?),
            Precision::Fp32 => Single::F32(Solver::new(degree, cfg)?),
        };
        let batch = BatchSolver::new(cfg, c.workers as usize)?;
        *out = Box::into_raw(Box::new(RdSolver { degree, single, batch }));
        Ok(())
    })
}

/// Releases a solver. Null is ignored.
///
/// # Safety
/// `solver` must be null or a handle from [`rd_solver_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rd_solver_free(solver: *mut RdSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}

/// Degree the solver was created for, or 0 for a null handle.
///
/// # Safety
/// `solver` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rd_solver_degree(solver: *const RdSolver) -> u32 {
    solver.as_ref().map_or(0, |s| s.degree as u32)
}

/// Solves one monic polynomial. `coeffs` and `roots` both hold `degree`
/// entries; root `k` is the value extracted at deflation level `k + 1`.
///
/// # Safety
/// `coeffs` must be readable and `roots` writable for `degree` elements.
#[no_mangle]
pub unsafe extern "C" fn rd_solver_solve(
    solver: *mut RdSolver,
    coeffs: *const RdComplex,
    roots: *mut RdComplex,
) -> RdStatus {
    guard(|| {
        let s = reference_mut(solver, "solver")?;
        let coeffs = slice(coeffs, s.degree, "coeffs")?;
        let roots = slice_mut(roots, s.degree, "roots")?;
        let p = monic(coeffs)?;
        let found: Vec<Complex64> = match &mut s.single {
            Single::F64(solver) => solver.solve(&p).roots,
            Single::F32(solver) => {
                solver.solve(&p.cast()).roots.iter().map(|z| Complex64::new(z.re as f64, z.im as f64)).collect()
            }
        };
        for (dst, z) in roots.iter_mut().zip(found) {
            *dst = z.into();
        }
        Ok(())
    })
}

/// Solves `count` polynomials stored back to back (`count * degree`
/// coefficients) into `roots` (`count * degree` entries), using the
/// solver's worker count. Results are in input order.
///
/// # Safety
/// `coeffs` must be readable and `roots` writable for `count * degree`
/// elements.
#[no_mangle]
pub unsafe extern "C" fn rd_solver_solve_batch(
    solver: *const RdSolver,
    coeffs: *const RdComplex,
    count: usize,
    roots: *mut RdComplex,
) -> RdStatus {
    guard(|| {
        let s = reference(solver, "solver")?;
        let len = count.checked_mul(s.degree).ok_or_else(|| invalid("count * degree overflows"))?;
        let coeffs = slice(coeffs, len, "coeffs")?;
        let roots = slice_mut(roots, len, "roots")?;
        let polys: Vec<Polynomial<f64>> = coeffs.chunks(s.degree).map(monic).collect::<Result<_, _>>()?;
        let found = match s.batch.config().precision {
            Precision::Fp64 => s.batch.solve_flat(&polys)?,
            Precision::Fp32 => {
                let narrow: Vec<Polynomial<f32>> = polys.iter().map(Polynomial::cast).collect();
                s.batch.solve_flat(&narrow)?.iter().map(|z| Complex64::new(z.re as f64, z.im as f64)).collect()
            }
        };
        for (dst, z) in roots.iter_mut().zip(found) {
            *dst = z.into();
        }
        Ok(())
    })
}

/// One-shot solve of `a[0] + a[1] z + ... + a[len-1] z^(len-1)` at fp64 with
/// the guarded shift. The leading coefficient must not vanish. Writes
/// `len - 1` roots; `roots_capacity` is the size of `roots`.
///
/// # Safety
/// `coeffs` must be readable for `len` elements and `roots` writable for
/// `roots_capacity` elements.
#[no_mangle]
pub unsafe extern "C" fn rd_solve(
    coeffs: *const RdComplex,
    len: usize,
    iterations: u32,
    roots: *mut RdComplex,
    roots_capacity: usize,
) -> RdStatus {
    guard(|| {
        let coeffs: Vec<Complex64> = slice(coeffs, len, "coeffs")?.iter().map(|&z| z.into()).collect();
        let p = make_monic(&coeffs)?;
        if roots_capacity < p.degree() {
            return Err(Failure(
                RdStatus::BufferTooSmall,
                format!("{} roots do not fit in {roots_capacity}", p.degree()),
            ));
        }
        let roots = slice_mut(roots, p.degree(), "roots")?;
        let cfg = SolveConfig::default().with_iterations(iterations as usize);
        let found = rootdensity::solve_roots(&p, &cfg)?;
        for (dst, &z) in roots.iter_mut().zip(&found.roots) {
            *dst = z.into();
        }
        Ok(())
    })
}

/// Creates an empty grid covering `viewport`.
///
/// # Safety
/// `viewport` must point to a valid viewport; `out` must be valid for a
/// pointer write.
#[no_mangle]
pub unsafe extern "C" fn rd_grid_new(viewport: *const RdViewport, out: *mut *mut RdDensityGrid) -> RdStatus {
    guard(|| {
        let out = reference_mut(out, "out")?;
        *out = ptr::null_mut();
        let viewport = to_viewport(reference(viewport, "viewport")?)?;
        let grid = DensityGrid::for_viewport(&viewport);
        *out = Box::into_raw(Box::new(RdDensityGrid { viewport, grid }));
        Ok(())
    })
}

/// Releases a grid. Null is ignored.
///
/// # Safety
/// `grid` must be null or a handle from [`rd_grid_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rd_grid_free(grid: *mut RdDensityGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Adds `count` roots. Roots outside the viewport or not finite are counted
/// as dropped.
///
/// # Safety
/// `roots` must be readable for `count` elements.
#[no_mangle]
pub unsafe extern "C" fn rd_grid_accumulate(
    grid: *mut RdDensityGrid,
    roots: *const RdComplex,
    count: usize,
) -> RdStatus {
    guard(|| {
        let g = reference_mut(grid, "grid")?;
        let roots = slice(roots, count, "roots")?;
        g.grid.accumulate(&g.viewport, roots.iter().map(|&z| Complex64::from(z)));
        Ok(())
    })
}

/// Copies the row-major hit counts (row 0 is the top, `y_max`) into `counts`,
/// which must hold `width * height` entries.
///
/// # Safety
/// `counts` must be writable for `capacity` elements.
#[no_mangle]
pub unsafe extern "C" fn rd_grid_counts(grid: *const RdDensityGrid, counts: *mut u32, capacity: usize) -> RdStatus {
    guard(|| {
        let g = reference(grid, "grid")?;
        let src = g.grid.counts();
        if capacity < src.len() {
            return Err(Failure(RdStatus::BufferTooSmall, format!("{} counts do not fit in {capacity}", src.len())));
        }
        slice_mut(counts, src.len(), "counts")?.copy_from_slice(src);
        Ok(())
    })
}

/// # Safety
/// `stats` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rd_grid_stats(grid: *const RdDensityGrid, stats: *mut RdGridStats) -> RdStatus {
    guard(|| {
        let g = reference(grid, "grid")?;
        let out = reference_mut(stats, "stats")?;
        let s = g.grid.stats();
        *out = RdGridStats {
            total_roots: s.total_roots,
            in_view: s.in_view,
            dropped: s.dropped,
            max_count: s.max_count,
            nonzero_pixels: s.nonzero_pixels,
        };
        Ok(())
    })
}

/// Adds the counts of `other` into `grid`. Both must have the same size.
///
/// # Safety
/// Both handles must be live and distinct.
#[no_mangle]
pub unsafe extern "C" fn rd_grid_merge(grid: *mut RdDensityGrid, other: *const RdDensityGrid) -> RdStatus {
    guard(|| {
        if ptr::eq(grid, other) {
            return Err(invalid("cannot merge a grid into itself"));
        }
        let other = &reference(other, "other")?.grid;
        reference_mut(grid, "grid")?.grid.merge_from(other)?;
        Ok(())
    })
}

/// Tone-maps the grid and writes a PGM (grayscale) or PPM (color) image.
/// A null `tone` uses log1p, gamma 1, grayscale.
///
/// # Safety
/// `tone` must be null or valid; `path` must be a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn rd_grid_write_image(
    grid: *const RdDensityGrid,
    tone: *const RdToneMap,
    path: *const c_char,
) -> RdStatus {
    guard(|| {
        let g = reference(grid, "grid")?;
        let tone = match tone.as_ref() {
            Some(t) => to_tone_map(t)?,
            None => ToneMap::default(),
        };
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|_| invalid("path is not valid UTF-8"))?;
        raster::write_image(&raster::render(&g.grid, &tone), Path::new(path))
            .map_err(|e| Failure(RdStatus::Io, format!("{path}: {e}")))
    })
}

/// Pipeline settings of the reference design: degree 6, 10 iterations,
/// 16-stage ring, 100 MHz, wide variant, one core.
#[no_mangle]
pub extern "C" fn rd_pipeline_config_default() -> RdPipelineConfig {
    let d = PipelineConfig::default();
    RdPipelineConfig {
        degree: d.degree as u32,
        iterations: d.iterations as u32,
        pipeline_depth: d.pipeline_depth as u32,
        clock_hz: d.clock_hz,
        variant: match d.variant {
            Variant::Wide => RdVariant::Wide,
            Variant::Narrow => RdVariant::Narrow,
        },
        fifo_depth: d.fifo_depth as u32,
        fifo_drain_per_cycle: d.fifo_drain_per_cycle as u32,
        core_count: d.core_count as u32,
    }
}

/// Pipeline steps one task of degree `n` needs at `t` iterations per level,
/// or 0 when `n < 2` or `t == 0`.
#[no_mangle]
pub extern "C" fn rd_passes_per_task(n: u32, t: u32, variant: RdVariant) -> u64 {
    if n < 2 || t == 0 {
        return 0;
    }
    pipeline::passes_per_task(n as usize, t as usize, to_variant(variant))
}

/// Runs the cycle-level simulation for `tasks` inputs.
///
/// # Safety
/// `config` must point to a valid config; `report` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rd_pipeline_simulate(
    config: *const RdPipelineConfig,
    tasks: u64,
    report: *mut RdSimReport,
) -> RdStatus {
    guard(|| {
        let cfg = to_pipeline_config(reference(config, "config")?)?;
        let out = reference_mut(report, "report")?;
        let r = pipeline::sim::simulate(&cfg, tasks)?;
        *out = RdSimReport {
            tasks: r.tasks,
            total_cycles: r.total_cycles,
            passes_per_task: r.passes_per_task,
            cycles_per_input: r.cycles_per_input,
            c_batch: r.c_batch,
            throughput_per_s: r.throughput_per_s,
            fifo_max_occupancy: r.fifo_max_occupancy as u64,
            stall_cycles: r.stall_cycles,
            extractions: r.extractions,
        };
        Ok(())
    })
}

/// Modeled steady-state throughput `clock_hz * core_count / K` in
/// polynomials per second, or a negative value for an invalid config.
///
/// # Safety
/// `config` must be null or point to a valid config.
#[no_mangle]
pub unsafe extern "C" fn rd_pipeline_throughput(config: *const RdPipelineConfig) -> f64 {
    let mut value = -1.0;
    guard(|| {
        let cfg = to_pipeline_config(reference(config, "config")?)?;
        value = pipeline::throughput_model(&cfg);
        Ok(())
    });
    value
}
