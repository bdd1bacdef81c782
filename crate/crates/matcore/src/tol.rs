//! Numerical tolerances used across the workspace, collected in one place so
//! every comparison has a documented budget.
//!
//! The matrices here have single-digit dimensions and entries of moderate
//! magnitude, so error accumulation is a small constant multiple of machine
//! epsilon (2.2e-16). The budgets below leave two to four orders of
//! magnitude of headroom over that floor.

/// Identity-style residuals: orthogonality checks `|P^T P - I|`, constraint
/// linearity, projections landing back on the constraint plane. These are a
/// handful of fused multiply-adds, so 1e-12 is generous.
pub const ORTHO_TOL: f64 = 1e-12;

/// Reconstruction-style residuals: `U diag(sigma) V^T` against the input,
/// `a (x) b` against a decomposed matrix. Iterative factorizations carry a
/// little more noise than direct identities, hence the looser budget.
pub const RECON_TOL: f64 = 1e-10;

/// Default relative singular-value cutoff for numeric rank: sigma counts
/// when `sigma > RANK_REL_TOL * sigma_max`. Relative, because absolute
/// thresholds misclassify across input scales.
pub const RANK_REL_TOL: f64 = 1e-9;

/// One-sided Jacobi stops when every column pair satisfies
/// `|<w_p, w_q>| <= JACOBI_ORTH_TOL * |w_p| * |w_q|`.
pub const JACOBI_ORTH_TOL: f64 = 1e-14;

/// Hard ceiling on Jacobi sweeps; at dimension <= 8 convergence takes a
/// handful of sweeps, so hitting this indicates non-finite input slipping
/// through or a logic error, reported as a numeric-convergence failure.
pub const JACOBI_MAX_SWEEPS: usize = 64;
