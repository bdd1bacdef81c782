//! Finite-depth constructive pipeline for gradient inclusion problems.
//!
//! Given affine boundary data and a target set of gradients supplied as
//! callbacks, the pipeline realizes laminates on dyadic boxes as stacks of
//! compactly supported oscillation patches, refines a gridded field stage
//! by stage, and iterates either toward one open target or along a nested
//! in-approximation family. Placements are stored analytically — a forest
//! of patch templates with virtual tilings — so fields evaluate exactly,
//! boundary nodes stay bit-identical, and the linear constraint holds to
//! roundoff at every point.
//!
//! Measure-theoretic claims of the underlying construction degrade, on a
//! grid, to node fractions at a stated resolution; every report carries the
//! resolution next to each fraction. Sup-norm budgets, by contrast, are
//! exact: each stage asserts its measured change against its budget.

mod assembly;
pub mod field;
pub mod realize;
pub mod refine;
pub mod solve;
pub mod target;
pub mod tol;

pub use field::{BoundaryField, FdCheck, GradientField};
pub use realize::{realize_laminate, realize_laminate_with_resolution, RealizeStats};
pub use refine::{refine_field, StageReport};
pub use solve::{
    report_to_json, solve_in_approx, solve_open, SolveOutcome, SolveReport, SolveSummary,
    StageMetrics,
};
pub use target::{InApproximation, IterationSchedule, TargetSpec};

use thiserror::Error;

/// Errors of the integration pipeline.
#[derive(Debug, Error)]
pub enum IntError {
    /// A parameter fails validation; `value` echoes the offending number.
    #[error("invalid parameter `{name}` = {value}")]
    BadParam { name: &'static str, value: f64 },
    /// An oracle's laminate missed the gradient it was asked to mix.
    #[error("laminate barycenter misses the requested gradient by {dist}")]
    BarycenterMismatch { dist: f64 },
    /// A gradient the pipeline must mix lies outside the reachable hull.
    #[error("{what}")]
    OutsideHull { what: &'static str },
    #[error(transparent)]
    Mat(#[from] matcore::MatError),
    #[error(transparent)]
    Osc(#[from] oscillation::OscError),
    #[error(transparent)]
    Lam(#[from] laminates::LamError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, IntError>;
