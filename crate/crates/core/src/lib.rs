//! Batch polynomial root solving by single-shift QR iteration on companion
//! matrices, root-density rasterization, and a pass-level cost model of a
//! pipelined QR accelerator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approximator;
pub mod cli;
pub mod eigensolver;
pub mod format;
pub mod oracle;
pub mod pipeline;
pub mod polynomial;
pub mod raster;
pub mod scalar;

pub use eigensolver::{batch_solve, solve_roots, RootSet, ShiftStrategy, SolveConfig, SolveError, Solver};
pub use polynomial::{make_monic, CompanionMatrix, PolyError, Polynomial};
pub use scalar::{Precision, Real};
