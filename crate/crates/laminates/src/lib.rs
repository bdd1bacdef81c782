//! Finite-order laminates: probability measures on matrix space built from a
//! Dirac mass by a recorded sequence of rank-one splits.
//!
//! A laminate here is a list of weighted atoms together with the full split
//! log that produced it, so every measure in this crate carries its own
//! construction certificate. The log can be replayed to verify that the atom
//! list is exactly reproducible, and each split is checked at creation time
//! for rank-one compatibility and barycentric consistency.
//!
//! The `t4_staircase` constructor pushes a point of the four-matrix hull onto
//! the extremal corners through axis-parallel splits, leaving a geometrically
//! small remainder near the inner square.

mod json;
mod laminate;
mod staircase;
mod testfn;
pub mod tol;

pub use json::{laminate_from_json, laminate_to_json};
pub use laminate::{dirac, Laminate, SplitRecord};
pub use staircase::t4_staircase;
pub use testfn::{jensen_check, FnTag, JensenCheck, TestFunction};

use thiserror::Error;

/// Errors for laminate construction and manipulation.
#[derive(Debug, Error)]
pub enum LamError {
    /// The proposed split endpoints do not differ by a rank-one matrix.
    #[error("split endpoints differ by a matrix of rank != 1 (singular value ratio {ratio:.3e})")]
    NotRankOne { ratio: f64 },

    /// The replaced atom does not lie on the segment between the endpoints.
    #[error("atom is off the split segment by {dist:.3e} (tolerance {tol:.1e})")]
    NotOnSegment { dist: f64, tol: f64 },

    /// A new atom coincides with an existing one; merging is not supported.
    #[error("new atom duplicates existing atom {index} (distance below distinctness threshold)")]
    DuplicateAtom { index: usize },

    /// The split parameter must lie strictly inside (0, 1).
    #[error("split parameter {s} outside the open interval (0, 1)")]
    BadWeight { s: f64 },

    /// Atom index out of range.
    #[error("atom index {index} out of range for {count} atoms")]
    BadIndex { index: usize, count: usize },

    /// The staircase start point is outside the four-point lamination hull.
    #[error("point ({x}, {y}) is not in the four-point hull")]
    NotInHull { x: f64, y: f64 },

    /// The staircase requires a diagonal 2x2 matrix.
    #[error("staircase input must be a diagonal 2x2 matrix (off-diagonal magnitude {off:.3e})")]
    NotDiagonal { off: f64 },

    /// Staircase depth outside the supported range.
    #[error("staircase depth {depth} outside 1..={max}")]
    BadDepth { depth: usize, max: usize },

    /// Malformed JSON input.
    #[error("laminate JSON is malformed: {reason}")]
    BadJson { reason: String },

    /// A matrix-level failure from the core layer.
    #[error(transparent)]
    Mat(#[from] matcore::MatError),
}
