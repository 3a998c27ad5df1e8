//! Polynomial batch generation: parametric coefficient families and local
//! polynomial fits of a target function over a partitioned domain.

pub mod builtin;
pub mod expr;
pub mod family;
pub mod fit;

pub use builtin::{resolve, Target};
pub use expr::{Expr, ParseError};
pub use family::{enumerate_family, ExpressionEvalError, FamilyError, FamilyIter, ParametricFamily};
pub use fit::{accept_cell, fit_cell, least_squares, DomainPartition, FitError, FitResult, Rect};
