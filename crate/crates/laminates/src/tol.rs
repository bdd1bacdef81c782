//! Tolerances for laminate bookkeeping.

/// Weights must sum to 1 within this bound after any sequence of splits.
/// Each split replaces a weight by two exact products, so drift only enters
/// through the final summation in `weight_sum`.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Barycenter drift allowed across a split. Both sides are computed in the
/// same summation order, so the bound is a pure floating-point allowance.
pub const BARYCENTER_TOL: f64 = 1e-12;

/// Two atoms closer than this (in Frobenius distance) count as duplicates.
pub const ATOM_DISTINCT_TOL: f64 = 1e-10;

/// Maximum residual allowed when checking that a replaced atom lies on the
/// segment between the two split endpoints.
pub const ON_SEGMENT_TOL: f64 = 1e-10;

/// Determinant is affine along rank-one segments; three-point collinearity
/// checks of that identity use this bound.
pub const DET_AFFINE_TOL: f64 = 1e-10;

/// Jensen comparisons allow this slack on the convex side.
pub const JENSEN_TOL: f64 = 1e-10;

/// Base offset for staircase corner deposits when the exact corner is
/// already occupied by an earlier atom. Each revisit halves the offset, so
/// with the depth cap below the smallest offset stays two orders of
/// magnitude above `ATOM_DISTINCT_TOL`.
pub const CORNER_NUDGE: f64 = 1e-7;

/// Depth cap for the staircase; keeps corner nudges distinct (see above).
pub const MAX_STAIRCASE_DEPTH: usize = 20;
