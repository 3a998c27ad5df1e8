use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::args::{
    BenchArgs, FitArgs, ImageArgs, RenderArgs, RootsFormat, SimulateArgs, SolveArgs, SolverArgs, SweepArgs,
};
use super::manifest::{manifest_path, stats_path, RunManifest};
use super::{CliError, OutputGuard};
use crate::approximator::{self, accept_cell, fit_cell, DomainPartition, FitError, ParametricFamily, Rect};
use crate::eigensolver::{BatchSolver, ShiftStrategy, SolveConfig, SolveError, Solver};
use crate::format::{read_roots, write_roots_text, PolynomialSource, RootsWriter};
use crate::pipeline::{self, compare_variants, reference, PipelineConfig};
use crate::polynomial::Polynomial;
use crate::raster::{self, DensityGrid, ToneMap, Viewport};
use crate::scalar::{cast, Precision};

fn parse_pair(s: &str, what: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Config(format!("{what} must look like 640x480, got '{s}'"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || b == 0 {
        return Err(bad());
    }
    Ok((a, b))
}

fn parse_bounds(s: &str, what: &str) -> Result<[f64; 4], CliError> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Config(format!("{what} must be xmin,xmax,ymin,ymax, got '{s}'")))?;
    <[f64; 4]>::try_from(parts)
        .map_err(|_| CliError::Config(format!("{what} must have exactly four numbers, got '{s}'")))
}

struct ImageSetup {
    viewport: Viewport,
    tone: ToneMap,
}

fn image_setup(a: &ImageArgs) -> Result<ImageSetup, CliError> {
    let (w, h) = parse_pair(&a.size, "--size")?;
    let viewport = Viewport::parse(&a.viewport, w, h)?;
    let tone = ToneMap::new(a.tone.into(), a.gamma, a.palette.into())?;
    Ok(ImageSetup { viewport, tone })
}

fn record_image(m: &mut RunManifest, s: &ImageSetup) {
    let v = &s.viewport;
    m.viewport = Some([v.x_min, v.x_max, v.y_min, v.y_max]);
    m.size = Some([v.width, v.height]);
    m.tone_map = Some(s.tone);
}

fn solve_config(a: &SolverArgs, precision: Precision) -> Result<SolveConfig, CliError> {
    let cfg = SolveConfig::default()
        .with_iterations(a.iterations as usize)
        .with_precision(precision)
        .with_shift(ShiftStrategy::from(a.shift));
    cfg.validate()?;
    Ok(cfg)
}

fn record_solver(m: &mut RunManifest, a: &SolverArgs, cfg: &SolveConfig) {
    m.precision = Some(cfg.precision);
    m.iterations = Some(cfg.iterations);
    m.worker_count = Some(a.workers as usize);
    m.set("shift", cfg.shift.to_string());
    m.set("chunk", a.chunk);
}

/// Solves a same-degree chunk at the configured precision; roots come back in
/// fp64, `degree` per polynomial, in input order.
fn solve_chunk(solver: &BatchSolver, polys: &[Polynomial<f64>]) -> Result<Vec<Complex64>, SolveError> {
    match solver.config().precision {
        Precision::Fp64 => solver.solve_flat(polys),
        Precision::Fp32 => {
            let narrow: Vec<Polynomial<f32>> = polys.iter().map(Polynomial::cast).collect();
            Ok(solver.solve_flat(&narrow)?.into_iter().map(cast).collect())
        }
    }
}

/// Groups a fallible polynomial stream into same-degree chunks and solves
/// them, handing `(polys, roots)` to `sink`. Degree mismatches are reported
/// with their index in the whole stream.
fn solve_stream<I, S>(solver: &BatchSolver, chunk: usize, polys: I, mut sink: S) -> Result<u64, CliError>
where
    I: IntoIterator<Item = Result<Polynomial<f64>, CliError>>,
    S: FnMut(&[Polynomial<f64>], &[Complex64]) -> Result<(), CliError>,
{
    let mut buf = Vec::with_capacity(chunk);
    let mut degree = None;
    let mut seen = 0u64;
    let mut flush = |buf: &mut Vec<Polynomial<f64>>| -> Result<(), CliError> {
        let roots = solve_chunk(solver, buf)?;
        sink(buf, &roots)?;
        buf.clear();
        Ok(())
    };
    for p in polys {
        let p = p?;
        let n = *degree.get_or_insert(p.degree());
        if p.degree() != n {
            return Err(SolveError::MixedDegreeBatch { expected: n, found: p.degree(), index: seen as usize }.into());
        }
        buf.push(p);
        seen += 1;
        if buf.len() == chunk {
            flush(&mut buf)?;
        }
    }
    if !buf.is_empty() {
        flush(&mut buf)?;
    }
    Ok(seen)
}

enum RootsSink {
    Binary(RootsWriter<BufWriter<File>>),
    Text(BufWriter<File>),
}

impl RootsSink {
    fn create(path: &Path, format: RootsFormat, degree: usize) -> Result<Self, CliError> {
        let text = match format {
            RootsFormat::Text => true,
            RootsFormat::Binary => false,
            RootsFormat::Auto => path.extension().is_some_and(|e| e.eq_ignore_ascii_case("txt")),
        };
        let file = BufWriter::new(File::create(path).map_err(|e| CliError::io_at(path, e))?);
        if text {
            Ok(RootsSink::Text(file))
        } else {
            Ok(RootsSink::Binary(RootsWriter::new(file, degree).map_err(|e| CliError::io_at(path, e))?))
        }
    }

    fn push(&mut self, roots: &[Complex64]) -> std::io::Result<()> {
        match self {
            RootsSink::Binary(w) => w.push(roots),
            RootsSink::Text(w) => write_roots_text(w, roots),
        }
    }

    fn finish(self) -> std::io::Result<()> {
        match self {
            RootsSink::Binary(w) => w.finish()?.flush(),
            RootsSink::Text(mut w) => w.flush(),
        }
    }
}

/// Writes roots one polynomial at a time. The sink is opened on the first
/// chunk so the degree is known; an empty run still produces a file.
struct RootsOutput<'a> {
    path: &'a Path,
    format: RootsFormat,
    sink: Option<RootsSink>,
    polynomials: u64,
}

impl<'a> RootsOutput<'a> {
    fn new(path: &'a Path, format: RootsFormat) -> Self {
        Self { path, format, sink: None, polynomials: 0 }
    }

    fn write(&mut self, degree: usize, roots: &[Complex64]) -> Result<(), CliError> {
        if self.sink.is_none() {
            self.sink = Some(RootsSink::create(self.path, self.format, degree)?);
        }
        let sink = self.sink.as_mut().expect("opened above");
        for set in roots.chunks(degree) {
            sink.push(set).map_err(|e| CliError::io_at(self.path, e))?;
            self.polynomials += 1;
        }
        Ok(())
    }

    fn finish(mut self, fallback_degree: usize) -> Result<u64, CliError> {
        let sink = match self.sink.take() {
            Some(s) => s,
            None => RootsSink::create(self.path, self.format, fallback_degree.max(1))?,
        };
        sink.finish().map_err(|e| CliError::io_at(self.path, e))?;
        Ok(self.polynomials)
    }
}

fn write_manifest(m: &mut RunManifest, guard: &mut OutputGuard, primary: &Path) -> Result<(), CliError> {
    m.outputs = guard.paths().to_vec();
    let path = manifest_path(primary);
    guard.track(&path);
    m.write(&path).map_err(|e| CliError::io_at(&path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io_at(path, e))
}

fn report(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::Io(format!("stdout: {e}")))
}

pub(super) fn solve(a: &SolveArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("solve", a.solver.seed);
    let mut skipped = 0u64;
    let mut guard = OutputGuard::new();
    guard.track(&a.out);
    let mut roots_out = RootsOutput::new(&a.out, a.format);

    let (count, degree, cfg) = if let Some(family_path) = &a.family {
        let source = std::fs::read_to_string(family_path).map_err(|e| CliError::io_at(family_path, e))?;
        let family = ParametricFamily::parse(&source)?;
        let cfg = solve_config(&a.solver, a.solver.precision.map_or(Precision::Fp64, Into::into))?;
        let solver = BatchSolver::new(cfg, a.solver.workers as usize)?;
        manifest.inputs.push(family_path.clone());
        manifest.set("family_source", source);
        let polys = family.iter().filter_map(|p| match p {
            Ok(p) => Some(Ok(p)),
            Err(_) => {
                skipped += 1;
                None
            }
        });
        let count =
            solve_stream(&solver, a.solver.chunk as usize, polys, |ps, roots| roots_out.write(ps[0].degree(), roots))?;
        (count, family.degree(), cfg)
    } else {
        // Open everything up front so a bad header fails before any output exists.
        let sources: Vec<PolynomialSource> =
            a.input.iter().map(|p| PolynomialSource::open(p)).collect::<Result<_, _>>()?;
        let declared = sources.iter().find_map(PolynomialSource::declared_precision);
        let degree = sources.iter().find_map(PolynomialSource::declared_degree).unwrap_or(1);
        let precision = a.solver.precision.map(Into::into).or(declared).unwrap_or(Precision::Fp64);
        let cfg = solve_config(&a.solver, precision)?;
        let solver = BatchSolver::new(cfg, a.solver.workers as usize)?;
        manifest.inputs = a.input.clone();
        let polys = sources.into_iter().flatten().map(|r| r.map_err(CliError::from));
        let count =
            solve_stream(&solver, a.solver.chunk as usize, polys, |ps, roots| roots_out.write(ps[0].degree(), roots))?;
        (count, degree, cfg)
    };
    roots_out.finish(degree)?;

    record_solver(&mut manifest, &a.solver, &cfg);
    manifest.set("polynomials", count);
    manifest.set("degree", degree);
    manifest.set("skipped", skipped);
    write_manifest(&mut manifest, &mut guard, &a.out)?;
    report(
        out,
        &format!("polynomials={count}\ndegree={degree}\nroots={}\nskipped={skipped}\n", count * degree as u64),
    )?;
    guard.commit();
    Ok(())
}

pub(super) fn render(a: &RenderArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let setup = image_setup(&a.image)?;
    let roots = read_roots(&a.input)?;
    let mut grid = DensityGrid::for_viewport(&setup.viewport);
    grid.accumulate(&setup.viewport, roots.iter_roots());
    let stats = grid.stats();

    let mut guard = OutputGuard::new();
    guard.track(&a.out);
    raster::write_image(&raster::render(&grid, &setup.tone), &a.out).map_err(|e| CliError::io_at(&a.out, e))?;
    let sidecar = stats_path(&a.out);
    guard.track(&sidecar);
    write_text(&sidecar, &stats.to_kv())?;

    let mut manifest = RunManifest::new("render", 0);
    manifest.inputs.push(a.input.clone());
    record_image(&mut manifest, &setup);
    write_manifest(&mut manifest, &mut guard, &a.out)?;
    report(out, &stats.to_kv())?;
    guard.commit();
    Ok(())
}

/// Result of a streaming sweep.
pub struct SweepOutcome {
    pub grid: DensityGrid,
    pub polynomials: u64,
    pub eval_errors: u64,
}

/// Enumerates `family`, solves in chunks and accumulates every root into a
/// grid. Memory is bounded by the chunk and the grid.
pub fn sweep_family(
    family: &ParametricFamily,
    viewport: &Viewport,
    solver: &BatchSolver,
    chunk: usize,
) -> Result<SweepOutcome, CliError> {
    let mut grid = DensityGrid::for_viewport(viewport);
    let mut eval_errors = 0u64;
    let polys = family.iter().filter_map(|p| match p {
        Ok(p) => Some(Ok(p)),
        Err(_) => {
            eval_errors += 1;
            None
        }
    });
    let polynomials = solve_stream(solver, chunk, polys, |_, roots| {
        grid.accumulate(viewport, roots.iter().copied());
        Ok(())
    })?;
    Ok(SweepOutcome { grid, polynomials, eval_errors })
}

pub(super) fn sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let setup = image_setup(&a.image)?;
    let source = std::fs::read_to_string(&a.family).map_err(|e| CliError::io_at(&a.family, e))?;
    let family = ParametricFamily::parse(&source)?;
    let cfg = solve_config(&a.solver, a.solver.precision.map_or(Precision::Fp64, Into::into))?;
    let solver = BatchSolver::new(cfg, a.solver.workers as usize)?;

    let outcome = sweep_family(&family, &setup.viewport, &solver, a.solver.chunk as usize)?;
    let stats_text = format!(
        "{}polynomials={}\neval_errors={}\n",
        outcome.grid.stats().to_kv(),
        outcome.polynomials,
        outcome.eval_errors
    );

    let mut guard = OutputGuard::new();
    guard.track(&a.out);
    raster::write_image(&raster::render(&outcome.grid, &setup.tone), &a.out).map_err(|e| CliError::io_at(&a.out, e))?;
    let sidecar = stats_path(&a.out);
    guard.track(&sidecar);
    write_text(&sidecar, &stats_text)?;

    let mut manifest = RunManifest::new("sweep", a.solver.seed);
    manifest.inputs.push(a.family.clone());
    manifest.set("family_source", source);
    record_image(&mut manifest, &setup);
    record_solver(&mut manifest, &a.solver, &cfg);
    manifest.set("polynomials", outcome.polynomials);
    manifest.set("eval_errors", outcome.eval_errors);
    write_manifest(&mut manifest, &mut guard, &a.out)?;
    report(out, &stats_text)?;
    guard.commit();
    Ok(())
}

pub(super) fn simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = PipelineConfig {
        degree: a.degree as usize,
        iterations: a.iterations as usize,
        pipeline_depth: a.pipeline_depth as usize,
        clock_hz: a.clock_hz,
        variant: a.variant.into(),
        fifo_depth: a.fifo_depth as usize,
        fifo_drain_per_cycle: a.fifo_drain as usize,
        core_count: a.cores as usize,
    };
    cfg.validate()?;
    let tasks = a.tasks.unwrap_or(8 * (cfg.pipeline_depth * cfg.core_count) as u64);
    let sim = pipeline::sim::simulate(&cfg, tasks)?;
    let cmp = compare_variants(&cfg);
    let kv = format!(
        "{}throughput_model_per_s={}\nK_wide={}\nK_narrow={}\nthroughput_ratio={}\nefficiency_ratio={}\nefficiency_ratio_raw_watts={}\n",
        sim.to_kv(),
        pipeline::throughput_model(&cfg),
        cmp.cycles_wide,
        cmp.cycles_narrow,
        cmp.throughput_ratio,
        cmp.efficiency_ratio,
        cmp.efficiency_ratio_raw_watts,
    );
    report(out, &format!("{}\n{kv}", sim.to_table()))?;

    if let Some(path) = &a.out {
        let mut guard = OutputGuard::new();
        guard.track(path);
        write_text(path, &kv)?;
        let mut manifest = RunManifest::new("simulate", 0);
        manifest.iterations = Some(cfg.iterations);
        manifest.set("config", serde_json::to_value(cfg).expect("config serializes"));
        manifest.set("tasks", tasks);
        write_manifest(&mut manifest, &mut guard, path)?;
        guard.commit();
    }
    Ok(())
}

/// Random monic polynomial with roots uniform in the disk `|z| <= 2`.
fn random_polynomial(rng: &mut ChaCha8Rng, degree: usize) -> Polynomial<f64> {
    let roots: Vec<Complex64> = (0..degree)
        .map(|_| Complex64::from_polar(2.0 * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..std::f64::consts::TAU)))
        .collect();
    Polynomial::from_roots(&roots)
}

/// FLOP count of one solve at `cfg`, from the instrumented solver.
fn flops_per_poly(p: &Polynomial<f64>, cfg: SolveConfig) -> Result<u64, SolveError> {
    Ok(match cfg.precision {
        Precision::Fp64 => {
            let mut s = Solver::<f64>::new(p.degree(), cfg)?;
            s.solve(p);
            s.last_stats().flops
        }
        Precision::Fp32 => {
            let mut s = Solver::<f32>::new(p.degree(), cfg)?;
            s.solve(&p.cast());
            s.last_stats().flops
        }
    })
}

/// Order-sensitive FNV-1a hash over the bit patterns of the roots.
fn checksum(roots: &[Complex64]) -> u64 {
    roots
        .iter()
        .flat_map(|z| [z.re.to_bits(), z.im.to_bits()])
        .fold(0xcbf2_9ce4_8422_2325, |h, w| (h ^ w).wrapping_mul(0x0000_0100_0000_01b3))
}

pub(super) fn bench(a: &BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let degree = a.degree as usize;
    let cfg = solve_config(&a.solver, a.solver.precision.map_or(Precision::Fp64, Into::into))?;
    let solver = BatchSolver::new(cfg, a.solver.workers as usize)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.solver.seed);
    let polys: Vec<Polynomial<f64>> = (0..a.count).map(|_| random_polynomial(&mut rng, degree)).collect();

    let mut text = format!(
        "polynomials={}\ndegree={degree}\nprecision={}\niterations={}\nworkers={}\n",
        a.count, cfg.precision, cfg.iterations, a.solver.workers
    );
    if let Some(first) = polys.first() {
        let start = Instant::now();
        let roots = solve_chunk(&solver, &polys)?;
        let elapsed = start.elapsed().as_secs_f64();
        let flops = flops_per_poly(first, cfg)?;
        let throughput = a.count as f64 / elapsed.max(1e-9);
        text.push_str(&format!(
            "elapsed_s={elapsed:.6}\nthroughput_per_s={throughput:.1}\nflops_per_poly={flops}\ngflops={:.4}\nroots_checksum={:016x}\n",
            throughput * flops as f64 / 1e9,
            checksum(&roots),
        ));
    }
    text.push_str(&format!(
        "reference_fpga_throughput_per_s={:e}\nreference_fpga_gflops={}\nreference_fpga_gflops_ceiling={}\n\
         reference_fpga_efficiency={}\nreference_cpu_throughput_per_s={:e}\nreference_cpu_gflops={}\n\
         reference_gpu_throughput_per_s={:e}\nreference_gpu_gflops={}\nreference_implied_flops_per_poly={:.1}\n",
        reference::FPGA_THROUGHPUT,
        reference::FPGA_GFLOPS_AVERAGE,
        reference::FPGA_GFLOPS_CEILING,
        reference::FPGA_EFFICIENCY,
        reference::CPU_THROUGHPUT,
        reference::CPU_GFLOPS,
        reference::GPU_THROUGHPUT,
        reference::GPU_GFLOPS,
        reference::implied_flops_per_poly(),
    ));
    report(out, &text)?;

    if let Some(path) = &a.out {
        let mut guard = OutputGuard::new();
        guard.track(path);
        write_text(path, &text)?;
        let mut manifest = RunManifest::new("bench", a.solver.seed);
        record_solver(&mut manifest, &a.solver, &cfg);
        manifest.set("count", a.count);
        manifest.set("degree", degree);
        write_manifest(&mut manifest, &mut guard, path)?;
        guard.commit();
    }
    Ok(())
}

#[derive(Debug, Default)]
struct FitTally {
    accepted: u64,
    rejected: u64,
    degenerate: u64,
    non_finite: u64,
    max_accepted_error: f64,
}

pub(super) fn fit(a: &FitArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let target = approximator::resolve(&a.function).map_err(CliError::Config)?;
    let [x0, x1, y0, y1] = parse_bounds(&a.domain, "--domain")?;
    let (nx, ny) = parse_pair(&a.cells, "--cells")?;
    if !(a.eps > 0.0 && a.eps.is_finite()) {
        return Err(CliError::Config(format!("--eps must be positive, got {}", a.eps)));
    }
    let fit_err = |e: FitError| CliError::Config(e.to_string());
    let partition = DomainPartition::new(Rect::new(x0, x1, y0, y1).map_err(fit_err)?, nx, ny).map_err(fit_err)?;
    let degree = a.degree as usize;
    let cfg = solve_config(&a.solver, a.solver.precision.map_or(Precision::Fp64, Into::into))?;
    let solver = BatchSolver::new(cfg, a.solver.workers as usize)?;

    let mut tally = FitTally::default();
    let mut accepted = Vec::new();
    for (id, cell) in partition.cells() {
        match fit_cell(|z| target.eval(z), &cell, id, degree, a.oversample as usize) {
            Ok(r) if accept_cell(&r, a.eps) => {
                tally.accepted += 1;
                tally.max_accepted_error = tally.max_accepted_error.max(r.error_bound);
                accepted.push(r.poly);
            }
            Ok(_) => tally.rejected += 1,
            Err(FitError::DegenerateFit { .. }) => tally.degenerate += 1,
            Err(FitError::NonFiniteSample { .. }) => tally.non_finite += 1,
            Err(e @ FitError::Invalid(_)) => return Err(fit_err(e)),
        }
    }

    let mut guard = OutputGuard::new();
    guard.track(&a.out);
    let mut roots_out = RootsOutput::new(&a.out, a.format);
    solve_stream(&solver, a.solver.chunk as usize, accepted.into_iter().map(Ok), |_, roots| {
        roots_out.write(degree, roots)
    })?;
    roots_out.finish(degree)?;

    let stats_text = format!(
        "cells={}\naccepted={}\nrejected={}\ndegenerate={}\nnon_finite={}\nmax_accepted_error={:e}\nroots={}\n",
        partition.cell_count(),
        tally.accepted,
        tally.rejected,
        tally.degenerate,
        tally.non_finite,
        tally.max_accepted_error,
        tally.accepted * degree as u64,
    );
    let sidecar = stats_path(&a.out);
    guard.track(&sidecar);
    write_text(&sidecar, &stats_text)?;

    let mut manifest = RunManifest::new("fit", a.solver.seed);
    record_solver(&mut manifest, &a.solver, &cfg);
    manifest.set("function", a.function.clone());
    manifest.set("domain", vec![x0, x1, y0, y1]);
    manifest.set("cells", vec![nx, ny]);
    manifest.set("degree", degree);
    manifest.set("oversample", a.oversample);
    manifest.set("eps", a.eps);
    write_manifest(&mut manifest, &mut guard, &a.out)?;
    report(out, &stats_text)?;
    guard.commit();
    Ok(())
}
