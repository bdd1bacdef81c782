//! Pinned tolerances and sizing constants for the pipeline.

/// Ceiling on `|L(grad u) - t|` after every pipeline operation.
pub const CONSTRAINT_RESIDUAL_MAX: f64 = 1e-8;

/// Matching tolerance when a replayed split value or realized plateau is
/// looked up among laminate atoms; both sides are exact by construction, so
/// this only absorbs serialization round-trips.
pub const ATOM_MATCH_TOL: f64 = 1e-12;

/// Split endpoints must share their constraint value to this relative
/// precision before a patch is built between them.
pub const SPLIT_CONSTRAINT_TOL: f64 = 1e-9;

/// Relative slack allowed between a measured quantity and its certified
/// budget before an assert trips.
pub const SUP_BUDGET_SLACK: f64 = 1e-9;

/// A laminate realized around `xi` must have its barycenter within this
/// relative distance of `xi`.
pub const BARYCENTER_TOL: f64 = 1e-9;

/// Profile end-margin cap, in box units, for patches placed by the
/// refinement pipeline. The margin is a zero region, so later sweeps can
/// fill it with dyadic boxes: the cap sits just above `2^-9`.
pub const PIPELINE_PROFILE_MARGIN_CAP: f64 = 2e-3;

/// Profile ramp cap (relative to one oscillation cell) for pipeline
/// patches. Ramps carry gradients strictly between the plateau values and
/// no later sweep can convert them, so their share is capped hard: the
/// total ramp measure of a profile is six times this fraction.
pub const PIPELINE_PROFILE_RAMP_CAP: f64 = 2.5e-4;

/// Cutoff ramp cap, in box units, for pipeline patches; bounds the
/// transverse transition shell, which is likewise unconvertible.
pub const PIPELINE_CUTOFF_RAMP_CAP: f64 = 2e-3;

/// Deepest dyadic subdivision the free-space sweep attempts before a
/// straddling box is flagged instead of split.
pub const MAX_REFINE_DEPTH: usize = 12;

/// Buckets per axis in the root placement index.
pub const ROOT_INDEX_BUCKETS: usize = 64;

/// A stage whose budget falls below this multiple of the largest grid
/// spacing cannot be resolved by the node grid; iteration stops early.
pub const GRID_AMPLITUDE_FACTOR: f64 = 1.0;

/// Inset applied when a template's box must be inscribed through a frame
/// that is not a signed permutation of the container axes.
pub const FALLBACK_INSET: f64 = 0.02;

/// Entry tolerance when testing whether a frame product is a signed
/// permutation.
pub const PERMUTATION_TOL: f64 = 1e-12;
