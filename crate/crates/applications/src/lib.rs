//! Worked gradient-inclusion problems built on the construction kit.
//!
//! Two applications are implemented end to end:
//!
//! * the **constrained vectorial eikonal equation** `|∇u| = 1` with an
//!   affine boundary map and a linear side constraint `𝓛(∇u) = t`, solved
//!   either through an explicit shell family ([`eikonal_in_approx`],
//!   [`solve_eikonal`]) or through the density-refinement step
//!   ([`baire_refine`]);
//! * the **four-matrix inclusion** `∇u ∈ {A_1, …, A_4}` up to `ε`, where
//!   the four diagonal matrices have no rank-one connections and the side
//!   constraint is the anti-diagonal functional `𝓛(M) = k·M_{01} + M_{10}`
//!   ([`solve_t4`]).
//!
//! Both front ends validate their hypotheses, run the staged integrator,
//! and return a serializable report that embeds the checklist of verified
//! preconditions next to the measured outcome.

mod baire;
mod boundary;
mod endpoints;
mod eikonal;
mod geometry;
mod report;
mod shells;
mod t4;

pub use baire::{baire_iterate, baire_refine, check_admissible, AdmissibilityReport, BaireReport, BaireStep};
pub use boundary::AffineBoundary;
pub use endpoints::{eikonal_endpoints, EikonalEndpoints};
pub use eikonal::{
    distinctness_threshold, solve_eikonal, EikonalMethod, EikonalOutcome, EikonalParams,
    EikonalReport,
};
pub use geometry::EikonalGeometry;
pub use report::{report_json, HypothesisCheck};
pub use shells::{eikonal_family, eikonal_in_approx, EikonalFamily};
pub use t4::{solve_t4, t4_constraint, T4Outcome, T4Params, T4Report};

use integrator::IntError;
use laminates::LamError;
use matcore::MatError;
use thiserror::Error;

/// Errors raised by the application layer.
#[derive(Debug, Error)]
pub enum AppError {
    /// A scalar or shape parameter failed validation.
    #[error("parameter `{name}` is invalid (got {value})")]
    BadParam { name: &'static str, value: f64 },
    /// The boundary gradient must lie strictly inside the unit ball.
    #[error("boundary gradient norm must be below one (got {norm})")]
    EtaNormTooLarge { norm: f64 },
    /// The shell route needs the constraint to act injectively on
    /// directions; callers should fall back to [`baire_refine`].
    #[error("constraint map is not injective; the shell route does not apply — use the density-refinement route")]
    NonInjective,
    /// The boundary gradient is outside the lamination hull of the target.
    #[error("boundary gradient lies outside the lamination hull of the target set")]
    NotInHull,
    /// A field handed to the refinement step violates the admissible-class
    /// conditions.
    #[error("field is not admissible: {what}")]
    NotAdmissible { what: &'static str },
    /// A sup-change budget fell below what the grid can represent.
    #[error("budget `{name}` = {value} is below the grid-resolvable amplitude {limit}")]
    BudgetInfeasible { name: &'static str, value: f64, limit: f64 },
    /// An internal numeric guarantee failed; indicates a defect, not bad
    /// input.
    #[error("numeric guarantee `{what}` violated (got {value})")]
    Numeric { what: &'static str, value: f64 },
    #[error(transparent)]
    Int(#[from] IntError),
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    Lam(#[from] LamError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, AppError>;

/// Tolerances shared across the application layer.
pub mod tol {
    /// Maximum admissible `|𝓛(∇u) − t|` anywhere on a produced field.
    pub const CONSTRAINT_RESIDUAL_MAX: f64 = 1e-8;
    /// Closed-form identities (endpoint norms, barycenters) must hold to
    /// this tolerance.
    pub const EXACT_IDENTITY_TOL: f64 = 1e-12;
    /// Numeric slack multiplier for asserted upper bounds.
    pub const BUDGET_SLACK: f64 = 1e-9;
    /// Circle samples used when measuring arc diameters on a sphere slice.
    pub const SLICE_SAMPLES: usize = 4096;
    /// Distinct solutions must differ by more than this many machine
    /// epsilons (relative to the field scale): genuine perturbations are
    /// orders of magnitude above it, bit-identical reruns are exactly zero.
    pub const DISTINCTNESS_ULPS: f64 = 10.0;
}
