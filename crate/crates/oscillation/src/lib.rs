//! Oscillation patches for linearly constrained gradient fields.
//!
//! A patch perturbs an affine map whose gradient sits on a rank-one segment
//! `[B - A]` so that the perturbed gradient concentrates near the endpoints
//! `A` and `B` while `L(grad)` stays identically constant. The construction
//! is fully analytic: a canonical frame reduction, a closed-form coefficient
//! tensor, a piecewise-polynomial oscillation profile, and a tensor-product
//! cutoff. Everything evaluates in closed form; no grids are stored.

pub mod coeffs;
pub mod cutoff;
pub mod frame;
pub mod patch;
pub mod profile;
pub mod smoothstep;
pub mod tol;

pub use coeffs::{coefficient_residual, solve_coefficients, CoefficientTensor};
pub use cutoff::{build_cutoff, build_cutoff_shaped, Cutoff};
pub use frame::{canonicalize, CanonicalFrame, ReductionCase};
pub use patch::{
    distance_to_segment, evaluate_patch, for_each_sample, make_patch, make_patch_with,
    patch_to_json, sample_to_csv, BoxDomain, OscillationPatch, PatchOptions,
};
pub use profile::{build_profile, build_profile_min_cells, build_profile_shaped, Profile};

use matcore::MatError;
use thiserror::Error;

/// Errors reported by frame reduction, coefficient solving, and patch assembly.
#[derive(Debug, Error)]
pub enum OscError {
    /// The two endpoint matrices evaluate differently under the constraint.
    #[error("constraint values differ across the pair: {lhs} vs {rhs}")]
    ConstraintViolated { lhs: f64, rhs: f64 },

    /// The constraint annihilates the oscillation direction, so no frame
    /// with a positive leading weight exists.
    #[error("constraint weights annihilate the oscillation direction")]
    DegenerateDirection,

    /// Input matrix is not in the canonical frame a solver requires.
    #[error("matrix is not in canonical form: {reason}")]
    NonCanonical { reason: String },

    /// The requested amplitude bound needs more oscillation cells than the cap.
    #[error("profile needs {required_n} cells, above the cap of {cap}")]
    ProfileInfeasible { required_n: usize, cap: usize },

    /// Evaluation point lies outside the closed patch domain.
    #[error("coordinate {coord} on axis {axis} is outside the patch domain")]
    OutOfDomain { axis: usize, coord: f64 },

    /// A scalar parameter is outside its admissible range.
    #[error("parameter {name} = {value} is out of range")]
    BadParam { name: &'static str, value: f64 },

    /// Underlying matrix-kernel failure.
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// Shorthand result type used across the crate.
pub type Result<T> = std::result::Result<T, OscError>;
