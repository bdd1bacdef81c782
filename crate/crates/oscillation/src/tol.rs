//! Tolerances and fixed construction constants for oscillation patches.

/// Max residual accepted when validating canonical form of a reduced matrix,
/// relative to its largest entry. Entries below this are snapped to zero.
pub const CANONICAL_FORM_TOL: f64 = 1e-12;

/// Tolerance on the leading component of the reduced direction vector,
/// relative to the vector norm. The component is analytically zero whenever
/// the pair satisfies the constraint, so anything larger signals a violated
/// precondition rather than roundoff.
pub const DIRECTION_SNAP_TOL: f64 = 1e-9;

/// Relative tolerance for the constraint agreement between the two endpoint
/// matrices of a rank-one pair.
pub const PAIR_CONSTRAINT_TOL: f64 = 1e-10;

/// Relative threshold below which a singular value of the reduced block
/// counts as zero when determining the canonical rank.
pub const BLOCK_RANK_TOL: f64 = 1e-11;

/// Max coefficient-equation residual accepted for a solved tensor, relative
/// to the scale of the canonical matrix times the direction vector.
pub const COEFF_RESIDUAL_TOL: f64 = 1e-12;

/// Absolute sampled bound on the constraint applied to a patch gradient.
/// The identity is exact in real arithmetic; the slack covers rounding.
pub const CONSTRAINT_SAMPLE_TOL: f64 = 1e-10;

/// Absolute tolerance for plateau gradient values after frame composition.
pub const PLATEAU_TOL: f64 = 1e-12;

/// Slack, relative to the box edge, admitted when checking that a point lies
/// inside the closed patch domain.
pub const DOMAIN_SLACK: f64 = 1e-12;

/// Hard cap on the number of oscillation cells in one profile. Storage is
/// O(1) in the cell count, so the cap only bounds pathological requests.
pub const MAX_PROFILE_CELLS: usize = 100_000_000;

/// Fraction of tau spent on the support margin of the profile: the profile
/// is supported in [margin, 1 - margin] with margin = tau / 16.
pub const PROFILE_MARGIN_FRACTION: f64 = 1.0 / 16.0;

/// Fraction of tau used for the relative ramp width inside one profile cell.
pub const PROFILE_RAMP_FRACTION: f64 = 1.0 / 32.0;

/// Per-axis cutoff geometry: the ramp width is tau / (6 * axes) so that the
/// total plateau measure loss stays below tau / 2 with a 20% margin.
pub const CUTOFF_RAMP_DENOM: f64 = 6.0;

/// Safety divisor in the amplitude budget: each noise term gets tau / 4.
pub const NOISE_BUDGET_DIVISOR: f64 = 4.0;
