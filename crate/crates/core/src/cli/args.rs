use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::eigensolver::ShiftStrategy;
use crate::pipeline::Variant;
use crate::raster::{Palette, ToneMode};
use crate::scalar::Precision;

#[derive(Debug, Parser)]
#[command(name = "rootdensity", version, about = "Batch polynomial root solver and root-density plotter")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a polynomial batch or family and write the roots.
    Solve(SolveArgs),
    /// Rasterize a roots file into a density image.
    Render(RenderArgs),
    /// Enumerate a family, solve and rasterize in one streaming pass.
    Sweep(SweepArgs),
    /// Run the pipeline cycle model.
    Simulate(SimulateArgs),
    /// Measure host solver throughput on random polynomials.
    Bench(BenchArgs),
    /// Fit local polynomials to a function over a partitioned domain and
    /// solve the accepted fits.
    Fit(FitArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrecisionArg {
    Fp32,
    Fp64,
}

impl From<PrecisionArg> for Precision {
    fn from(p: PrecisionArg) -> Self {
        match p {
            PrecisionArg::Fp32 => Precision::Fp32,
            PrecisionArg::Fp64 => Precision::Fp64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShiftArg {
    Rayleigh,
    Guarded,
}

impl From<ShiftArg> for ShiftStrategy {
    fn from(s: ShiftArg) -> Self {
        match s {
            ShiftArg::Rayleigh => ShiftStrategy::Rayleigh,
            ShiftArg::Guarded => ShiftStrategy::Guarded,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ToneArg {
    Linear,
    Log1p,
}

impl From<ToneArg> for ToneMode {
    fn from(t: ToneArg) -> Self {
        match t {
            ToneArg::Linear => ToneMode::Linear,
            ToneArg::Log1p => ToneMode::Log1p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PaletteArg {
    Grayscale,
    Inferno,
    Viridis,
    Ice,
}

impl From<PaletteArg> for Palette {
    fn from(p: PaletteArg) -> Self {
        match p {
            PaletteArg::Grayscale => Palette::Grayscale,
            PaletteArg::Inferno => Palette::Inferno,
            PaletteArg::Viridis => Palette::Viridis,
            PaletteArg::Ice => Palette::Ice,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Wide,
    Narrow,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Wide => Variant::Wide,
            VariantArg::Narrow => Variant::Narrow,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RootsFormat {
    /// `.txt` means text, anything else binary.
    Auto,
    Binary,
    Text,
}

/// Solver settings shared by the solving subcommands.
#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Arithmetic precision; fp64 unless `solve` reads a batch that declares fp32.
    #[arg(long, value_enum)]
    pub precision: Option<PrecisionArg>,
    /// QR iterations per deflation level.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    pub iterations: u32,
    /// Worker threads.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub workers: u32,
    /// Shift strategy.
    #[arg(long, value_enum, default_value_t = ShiftArg::Guarded)]
    pub shift: ShiftArg,
    /// Polynomials per parallel chunk.
    #[arg(long, default_value_t = 4096, value_parser = clap::value_parser!(u32).range(1..))]
    pub chunk: u32,
    /// Recorded in the manifest.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ImageArgs {
    /// Complex-plane window `xmin,xmax,ymin,ymax`.
    #[arg(long, default_value = "-2,2,-2,2", allow_hyphen_values = true)]
    pub viewport: String,
    /// Image size `WxH`.
    #[arg(long, default_value = "512x512")]
    pub size: String,
    #[arg(long, value_enum, default_value_t = ToneArg::Log1p)]
    pub tone: ToneArg,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, value_enum, default_value_t = PaletteArg::Grayscale)]
    pub palette: PaletteArg,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Polynomial batch (binary or text); repeatable.
    #[arg(long, required_unless_present = "family", conflicts_with = "family")]
    pub input: Vec<PathBuf>,
    /// Family definition file.
    #[arg(long)]
    pub family: Option<PathBuf>,
    /// Roots output file.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = RootsFormat::Auto)]
    pub format: RootsFormat,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    /// Roots file (binary or text).
    #[arg(long)]
    pub input: PathBuf,
    /// Image file; PGM for grayscale, PPM for palettes.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub image: ImageArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub family: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub image: ImageArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u32).range(2..))]
    pub degree: u32,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    pub iterations: u32,
    #[arg(long, value_enum, default_value_t = VariantArg::Wide)]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u32).range(1..))]
    pub pipeline_depth: u32,
    #[arg(long, default_value_t = 100e6)]
    pub clock_hz: f64,
    /// Tasks to stream through; defaults to 8 full rings.
    #[arg(long)]
    pub tasks: Option<u64>,
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u32).range(1..))]
    pub fifo_depth: u32,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub fifo_drain: u32,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub cores: u32,
    /// Also write the key=value report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Polynomials in the batch.
    #[arg(long, default_value_t = 100_000)]
    pub count: u64,
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..))]
    pub degree: u32,
    /// Also write the key=value report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// `sin`, `cos`, `exp` or `expr:<expression in z>`.
    #[arg(long)]
    pub function: String,
    /// Domain `xmin,xmax,ymin,ymax`.
    #[arg(long, default_value = "-2,2,-2,2", allow_hyphen_values = true)]
    pub domain: String,
    /// Partition `NxM`.
    #[arg(long, default_value = "8x8")]
    pub cells: String,
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..))]
    pub degree: u32,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    pub oversample: u32,
    /// Acceptance threshold on the sampled sup-norm error.
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = RootsFormat::Auto)]
    pub format: RootsFormat,
    #[command(flatten)]
    pub solver: SolverArgs,
}
