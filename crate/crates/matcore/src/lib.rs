//! Small dense-matrix kernels and the linear-constraint algebra used by the
//! rest of the workspace.
//!
//! Everything here works on tiny row-major matrices (dimensions in the single
//! digits) with `f64` entries and the Hilbert-Schmidt inner product. The
//! decompositions expose deterministic sign conventions so downstream code
//! and tests can compare results exactly.

mod constraint;
mod decomp;
mod mat;
pub mod tol;

pub use constraint::{apply_constraint, is_injective_map, project_to_sigma, LinearConstraint};
pub use decomp::{
    householder_to_e1, rank, rank_one_decompose, rotation_to_e1, svd_small, Svd,
};
pub use mat::{vec_dot, vec_norm, vec_scale, vec_sub, Mat};

use thiserror::Error;

/// Errors shared by the kernel operations.
#[derive(Debug, Error, PartialEq)]
pub enum MatError {
    #[error("shape mismatch: expected {expected_rows}x{expected_cols}, got {got_rows}x{got_cols}")]
    ShapeMismatch {
        expected_rows: usize,
        expected_cols: usize,
        got_rows: usize,
        got_cols: usize,
    },
    #[error("matrix is not rank one (sigma_2/sigma_1 = {ratio:.3e})")]
    NotRankOne { ratio: f64 },
    #[error("zero vector has no Householder reflector")]
    ZeroVector,
    #[error("expected a unit vector, got norm {norm}")]
    NotUnit { norm: f64 },
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("dimension {dim} exceeds the small-kernel limit of 8")]
    TooLarge { dim: usize },
    #[error("Jacobi sweep limit reached without convergence")]
    NonConvergence,
    #[error("constraint weights are identically zero")]
    DegenerateConstraint,
}

/// A rank-one connection between two matrices: `A - B = a (x) b` with `|b| = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOnePair {
    pub a_mat: Mat,
    pub b_mat: Mat,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl RankOnePair {
    /// Builds the pair from its two endpoint matrices, factoring the
    /// difference. Fails with [`MatError::NotRankOne`] when `A - B` is not
    /// rank one.
    pub fn new(a_mat: Mat, b_mat: Mat) -> Result<Self, MatError> {
        let diff = a_mat.sub(&b_mat)?;
        let (a, b) = rank_one_decompose(&diff)?;
        Ok(RankOnePair { a_mat, b_mat, a, b })
    }

    /// The difference `A - B` reconstructed from the stored factors.
    pub fn direction(&self) -> Mat {
        Mat::outer(&self.a, &self.b)
    }
}
