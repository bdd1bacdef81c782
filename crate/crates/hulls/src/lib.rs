//! Discrete hull computations: lamination hulls of finite matrix sets,
//! separately convex envelopes on diagonal-matrix lattices, and the explicit
//! four-point hull with its protruding segments. These act as the geometric
//! oracles for the rest of the workspace.

mod cloud;
mod lattice;
mod t4;

pub use cloud::{
    lamination_hull_discrete, relative_hull_agreement_check, AgreementReport, HullResult,
    PointCloud,
};
pub use lattice::{separately_convex_envelope, DiagLattice, EnvelopeResult};
pub use t4::{t4_dist, t4_hull_membership, t4_hull_membership_xy, T4Config};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HullError {
    #[error("point clouds require at least one point")]
    EmptyCloud,
    #[error("point shape {got_rows}x{got_cols} does not match cloud shape {rows}x{cols}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        got_rows: usize,
        got_cols: usize,
    },
    #[error("expected a diagonal 2x2 matrix (off-diagonal magnitude {off:.3e})")]
    NotDiagonal { off: f64 },
    #[error("lattice step {step} does not divide the range [{lo}, {hi}]")]
    BadStep { lo: f64, hi: f64, step: f64 },
    #[error("resolution must be positive")]
    BadResolution,
    #[error("segment sampling needs at least 2 samples, got {got}")]
    TooFewSamples { got: usize },
}
