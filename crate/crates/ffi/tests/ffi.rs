use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use rootdensity_ffi::*;

fn z(re: f64, im: f64) -> RdComplex {
    RdComplex { re, im }
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(rd_last_error()) }.to_str().unwrap().to_owned()
}

fn sorted(mut v: Vec<RdComplex>) -> Vec<RdComplex> {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    v
}

fn close(a: RdComplex, b: RdComplex, tol: f64) -> bool {
    (a.re - b.re).hypot(a.im - b.im) <= tol
}

fn solver(degree: u32, cfg: &RdSolveConfig) -> *mut RdSolver {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { rd_solver_new(degree, cfg, &mut s) }, RdStatus::Ok, "{}", last_error());
    assert!(!s.is_null());
    s
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(rd_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn one_shot_solve_normalizes_the_leading_coefficient() {
    // 2 z^2 - 2
    let coeffs = [z(-2.0, 0.0), z(0.0, 0.0), z(2.0, 0.0)];
    let mut roots = [RdComplex::default(); 2];
    let status = unsafe { rd_solve(coeffs.as_ptr(), 3, 10, roots.as_mut_ptr(), 2) };
    assert_eq!(status, RdStatus::Ok);
    let r = sorted(roots.to_vec());
    assert!(close(r[0], z(-1.0, 0.0), 1e-12) && close(r[1], z(1.0, 0.0), 1e-12), "{r:?}");

    let degenerate = [z(1.0, 0.0), z(1e-30, 0.0)];
    let status = unsafe { rd_solve(degenerate.as_ptr(), 2, 10, roots.as_mut_ptr(), 2) };
    assert_eq!(status, RdStatus::Degenerate);
    assert!(last_error().contains("leading coefficient"), "{}", last_error());

    let status = unsafe { rd_solve(coeffs.as_ptr(), 3, 10, roots.as_mut_ptr(), 1) };
    assert_eq!(status, RdStatus::BufferTooSmall);
}

#[test]
fn solver_handle_matches_batch_and_both_precisions() {
    let cube = [z(-1.0, 0.0), z(0.0, 0.0), z(0.0, 0.0)];
    let want = sorted(vec![z(-0.5, -(0.75f64.sqrt())), z(-0.5, 0.75f64.sqrt()), z(1.0, 0.0)]);
    for (precision, tol) in [(RdPrecision::Fp64, 1e-10), (RdPrecision::Fp32, 1e-4)] {
        let cfg = RdSolveConfig { precision, ..rd_solve_config_default() };
        let s = solver(3, &cfg);
        assert_eq!(unsafe { rd_solver_degree(s) }, 3);
        let mut roots = [RdComplex::default(); 3];
        assert_eq!(unsafe { rd_solver_solve(s, cube.as_ptr(), roots.as_mut_ptr()) }, RdStatus::Ok);
        for (g, w) in sorted(roots.to_vec()).iter().zip(&want) {
            assert!(close(*g, *w, tol), "{precision:?}: {g:?} vs {w:?}");
        }
        unsafe { rd_solver_free(s) };
    }
}

#[test]
fn batch_is_worker_independent_and_ordered() {
    let count = 257;
    let coeffs: Vec<RdComplex> = (0..count * 4).map(|k| z((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos())).collect();
    let run = |workers: u32| {
        let s = solver(4, &RdSolveConfig { workers, ..rd_solve_config_default() });
        let mut roots = vec![RdComplex::default(); count * 4];
        assert_eq!(unsafe { rd_solver_solve_batch(s, coeffs.as_ptr(), count, roots.as_mut_ptr()) }, RdStatus::Ok);
        unsafe { rd_solver_free(s) };
        roots
    };
    let one = run(1);
    assert_eq!(one, run(3));

    let s = solver(4, &rd_solve_config_default());
    let mut single = [RdComplex::default(); 4];
    assert_eq!(unsafe { rd_solver_solve(s, coeffs[40..44].as_ptr(), single.as_mut_ptr()) }, RdStatus::Ok);
    assert_eq!(&single[..], &one[40..44]);
    unsafe { rd_solver_free(s) };
}

#[test]
fn invalid_inputs_report_status_and_message() {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { rd_solver_new(0, ptr::null(), &mut s) }, RdStatus::Config);
    assert!(s.is_null());
    let bad = RdSolveConfig { iterations: 0, ..rd_solve_config_default() };
    assert_eq!(unsafe { rd_solver_new(3, &bad, &mut s) }, RdStatus::Config);
    assert!(!last_error().is_empty());
    let bad = RdSolveConfig { workers: 0, ..rd_solve_config_default() };
    assert_eq!(unsafe { rd_solver_new(3, &bad, &mut s) }, RdStatus::Config);
    assert_eq!(unsafe { rd_solver_new(3, ptr::null(), ptr::null_mut()) }, RdStatus::NullPointer);

    let s = solver(2, &rd_solve_config_default());
    let mut roots = [RdComplex::default(); 2];
    let nan = [z(f64::NAN, 0.0), z(0.0, 0.0)];
    assert_eq!(unsafe { rd_solver_solve(s, nan.as_ptr(), roots.as_mut_ptr()) }, RdStatus::Degenerate);
    assert_eq!(unsafe { rd_solver_solve(s, ptr::null(), roots.as_mut_ptr()) }, RdStatus::NullPointer);
    assert_eq!(unsafe { rd_solver_solve(ptr::null_mut(), nan.as_ptr(), roots.as_mut_ptr()) }, RdStatus::NullPointer);
    let good = [z(-1.0, 0.0), z(0.0, 0.0)];
    assert_eq!(unsafe { rd_solver_solve(s, good.as_ptr(), roots.as_mut_ptr()) }, RdStatus::Ok);
    assert_eq!(last_error(), "");
    unsafe {
        rd_solver_free(s);
        rd_solver_free(ptr::null_mut());
        rd_grid_free(ptr::null_mut());
    }
}

fn grid(vp: &RdViewport) -> *mut RdDensityGrid {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { rd_grid_new(vp, &mut g) }, RdStatus::Ok, "{}", last_error());
    g
}

const SQUARE4: RdViewport = RdViewport { x_min: -2.0, x_max: 2.0, y_min: -2.0, y_max: 2.0, width: 4, height: 4 };

#[test]
fn grid_counts_stats_and_merge() {
    let g = grid(&SQUARE4);
    let roots = [z(0.0, 0.0), z(0.1, 0.1), z(-2.0, 2.0), z(5.0, 0.0), z(f64::NAN, 0.0)];
    assert_eq!(unsafe { rd_grid_accumulate(g, roots.as_ptr(), roots.len()) }, RdStatus::Ok);
    let mut counts = [0u32; 16];
    assert_eq!(unsafe { rd_grid_counts(g, counts.as_mut_ptr(), 16) }, RdStatus::Ok);
    assert_eq!(counts[4 + 2], 1);
    assert_eq!(counts[2 * 4 + 2], 1);
    assert_eq!(counts[0], 1);
    assert_eq!(counts.iter().sum::<u32>(), 3);
    assert_eq!(unsafe { rd_grid_counts(g, counts.as_mut_ptr(), 15) }, RdStatus::BufferTooSmall);

    let mut stats = RdGridStats::default();
    assert_eq!(unsafe { rd_grid_stats(g, &mut stats) }, RdStatus::Ok);
    assert_eq!(stats, RdGridStats { total_roots: 5, in_view: 3, dropped: 2, max_count: 1, nonzero_pixels: 3 });

    let h = grid(&SQUARE4);
    assert_eq!(unsafe { rd_grid_accumulate(h, roots.as_ptr(), 1) }, RdStatus::Ok);
    assert_eq!(unsafe { rd_grid_merge(g, h) }, RdStatus::Ok);
    assert_eq!(unsafe { rd_grid_stats(g, &mut stats) }, RdStatus::Ok);
    assert_eq!((stats.total_roots, stats.max_count), (6, 2));
    assert_eq!(unsafe { rd_grid_merge(g, g) }, RdStatus::Config);

    let other = grid(&RdViewport { width: 5, ..SQUARE4 });
    assert_eq!(unsafe { rd_grid_merge(g, other) }, RdStatus::Config);
    unsafe {
        rd_grid_free(g);
        rd_grid_free(h);
        rd_grid_free(other);
    }

    let mut none = ptr::null_mut();
    let bad = RdViewport { x_max: -2.0, ..SQUARE4 };
    assert_eq!(unsafe { rd_grid_new(&bad, &mut none) }, RdStatus::Config);
    assert!(none.is_null());
}

#[test]
fn grid_writes_images() {
    let dir = tempfile::tempdir().unwrap();
    let g = grid(&SQUARE4);
    let roots = [z(0.0, 0.0)];
    assert_eq!(unsafe { rd_grid_accumulate(g, roots.as_ptr(), 1) }, RdStatus::Ok);

    let gray = CString::new(dir.path().join("a.pgm").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { rd_grid_write_image(g, ptr::null(), gray.as_ptr()) }, RdStatus::Ok);
    let bytes = std::fs::read(dir.path().join("a.pgm")).unwrap();
    assert!(bytes.starts_with(b"P5\n4 4\n255\n"));
    assert_eq!(bytes[11 + 2 * 4 + 2], 255);

    let tone = RdToneMap { mode: RdToneMode::Linear, gamma: 1.0, palette: RdPalette::Viridis };
    let color = CString::new(dir.path().join("b.ppm").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { rd_grid_write_image(g, &tone, color.as_ptr()) }, RdStatus::Ok);
    assert!(std::fs::read(dir.path().join("b.ppm")).unwrap().starts_with(b"P6\n"));

    let bad_tone = RdToneMap { gamma: 0.0, ..tone };
    assert_eq!(unsafe { rd_grid_write_image(g, &bad_tone, color.as_ptr()) }, RdStatus::Config);
    let missing = CString::new(dir.path().join("no/dir/c.pgm").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { rd_grid_write_image(g, ptr::null(), missing.as_ptr()) }, RdStatus::Io);
    assert_eq!(unsafe { rd_grid_write_image(g, ptr::null(), ptr::null()) }, RdStatus::NullPointer);
    unsafe { rd_grid_free(g) };
}

#[test]
fn pipeline_model_through_the_c_interface() {
    assert_eq!(rd_passes_per_task(6, 10, RdVariant::Wide), 300);
    assert_eq!(rd_passes_per_task(6, 10, RdVariant::Narrow), 1000);
    assert_eq!(rd_passes_per_task(1, 10, RdVariant::Wide), 0);

    let cfg = rd_pipeline_config_default();
    assert_eq!((cfg.degree, cfg.iterations, cfg.clock_hz), (6, 10, 1e8));
    let tp = unsafe { rd_pipeline_throughput(&cfg) };
    assert!((tp - 1e8 / 300.0).abs() < 1e-6);

    for depth in [1u32, 4, 16] {
        let c = RdPipelineConfig { pipeline_depth: depth, ..cfg };
        let mut r = RdSimReport::default();
        assert_eq!(unsafe { rd_pipeline_simulate(&c, depth as u64, &mut r) }, RdStatus::Ok);
        assert_eq!(r.total_cycles, 301 * depth as u64);
        assert_eq!(r.c_batch, 301 * depth as u64);
        assert_eq!(r.passes_per_task, 300);
        assert_eq!(r.extractions, 6 * depth as u64);
    }

    let bad = RdPipelineConfig { degree: 1, ..cfg };
    let mut r = RdSimReport::default();
    assert_eq!(unsafe { rd_pipeline_simulate(&bad, 4, &mut r) }, RdStatus::Config);
    assert!(unsafe { rd_pipeline_throughput(&bad) } < 0.0);
    assert_eq!(unsafe { rd_pipeline_simulate(&cfg, 4, ptr::null_mut()) }, RdStatus::NullPointer);
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/rootdensity.h")).unwrap();
    for name in [
        "rd_version",
        "rd_last_error",
        "rd_solve_config_default",
        "rd_solver_new",
        "rd_solver_free",
        "rd_solver_degree",
        "rd_solver_solve",
        "rd_solver_solve_batch",
        "rd_solve",
        "rd_grid_new",
        "rd_grid_free",
        "rd_grid_accumulate",
        "rd_grid_counts",
        "rd_grid_stats",
        "rd_grid_merge",
        "rd_grid_write_image",
        "rd_pipeline_config_default",
        "rd_passes_per_task",
        "rd_pipeline_simulate",
        "rd_pipeline_throughput",
        "typedef struct RdSolver RdSolver;",
        "typedef struct RdDensityGrid RdDensityGrid;",
        "RD_STATUS_DEGENERATE = 3",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

/// Directory holding the library artifacts of the current profile.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_static_library() {
    let lib = artifact_dir().join("librootdensity_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(root.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let image = dir.path().join("smoke.pgm");
    let out = Command::new(&exe).arg(&image).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
    assert!(image.exists());
}
