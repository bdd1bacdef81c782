//! Front end for the four-matrix inclusion: steer `∇u` into ε-balls
//! around four diagonal matrices that have no rank-one connections.
//!
//! The side constraint is the anti-diagonal functional
//! `𝓛(M) = k·M_{01} + M_{10}` (weights `(0 k / 1 0)`, target 0), which
//! vanishes on every diagonal matrix — so all staircase directions are
//! admissible oscillation directions. For `k = −1` the constraint plane
//! is exactly the symmetric 2×2 matrices.

use crate::boundary::AffineBoundary;
use crate::report::HypothesisCheck;
use crate::{tol, AppError, Result};
use hulls::{t4_hull_membership_xy, T4Config};
use integrator::{solve_open, GradientField, SolveReport, TargetSpec};
use oscillation::BoxDomain;
use laminates::t4_staircase;
use matcore::{LinearConstraint, Mat};
use serde::Serialize;
use std::sync::Arc;

/// The anti-diagonal constraint `𝓛(M) = k·M_{01} + M_{10} = 0`.
///
/// # Errors
/// [`AppError::BadParam`] when `k` is zero or non-finite.
pub fn t4_constraint(k: f64) -> Result<LinearConstraint> {
    if k == 0.0 || !k.is_finite() {
        return Err(AppError::BadParam { name: "k", value: k });
    }
    Ok(LinearConstraint::new(Mat::from_rows(&[vec![0.0, k], vec![1.0, 0.0]]), 0.0))
}

/// Problem statement for one four-matrix run.
#[derive(Debug)]
pub struct T4Params {
    pub domain: BoxDomain,
    pub resolution: Vec<usize>,
    /// Anti-diagonal coupling; `k = 1` and `k = −1` are the standard
    /// desks (`k = −1` makes the constraint plane the symmetric
    /// matrices).
    pub k: f64,
    /// Boundary gradient; must be diagonal and inside the lamination
    /// hull of the four target matrices.
    pub eta: Mat,
    pub gamma: Vec<f64>,
    pub eps: f64,
    /// Staged-solve passes (each converts the remainder of the previous).
    pub stages: usize,
}

/// Measured outcome of a four-matrix run.
#[derive(Debug, Clone, Serialize)]
pub struct T4Report {
    pub k: f64,
    pub eps: f64,
    /// Staircase splitting depth `⌈log₂(1/ε)⌉ + 2`.
    pub depth: usize,
    pub hypotheses: Vec<HypothesisCheck>,
    /// `det(A_i − A_j)` for the six pairs; all nonzero — every pairwise
    /// difference has full rank, so the target set has no rank-one
    /// connections.
    pub pair_determinants: Vec<f64>,
    /// Fraction of nodes with `dist(∇u, {A_1..A_4}) < ε`.
    pub fraction_near_targets: f64,
    /// Max `|𝓛(∇u)|` over nodes.
    pub max_constraint_deviation: f64,
    pub boundary_exact: bool,
    /// Measured `sup |u − v_{η,γ}|` over nodes.
    pub sup_deviation: f64,
    /// The theorem's bound `ε` on the deviation.
    pub deviation_bound: f64,
    /// True when the boundary gradient already sits inside a target ball
    /// (the solve then leaves the affine map untouched).
    pub trivial: bool,
    pub solve: SolveReport,
}

/// A produced field plus its report.
#[derive(Debug)]
pub struct T4Outcome {
    pub field: GradientField,
    pub report: T4Report,
}

fn min_corner_distance(cfg: &T4Config, xi: &Mat) -> f64 {
    cfg.corners().iter().map(|a| xi.dist(a)).fold(f64::INFINITY, f64::min)
}

/// The target `U = ∪ᵢ B(A_i, ε) ∩ Σ₀` with the staircase oracle.
fn t4_target(constraint: &LinearConstraint, eps: f64, depth: usize) -> TargetSpec {
    let cfg = Arc::new(T4Config::standard());
    let c = constraint.clone();
    let cfg_c = Arc::clone(&cfg);
    let contains = move |xi: &Mat| {
        c.residual(xi).abs() <= tol::CONSTRAINT_RESIDUAL_MAX
            && min_corner_distance(&cfg_c, xi) < eps
    };
    let cfg_m = Arc::clone(&cfg);
    let margin = move |xi: &Mat| (eps - min_corner_distance(&cfg_m, xi)).max(0.0);
    let oracle = move |xi: &Mat| {
        // Staircase splits are defined for diagonal matrices in the hull;
        // snap sub-tolerance off-diagonal noise away before asking.
        if xi.rows() != 2 || xi.cols() != 2 {
            return None;
        }
        if xi.get(0, 1).abs() > 1e-9 || xi.get(1, 0).abs() > 1e-9 {
            return None;
        }
        t4_staircase(&Mat::diag(&[xi.get(0, 0), xi.get(1, 1)]), depth).ok()
    };
    TargetSpec::new(contains, margin, oracle)
}

/// Steers the gradient into the four ε-balls with a staged solve.
///
/// Validates that `k ≠ 0`, that `η` is diagonal and inside the lamination
/// hull, records the rank witnesses for all six pairs, runs the staged
/// engine at staircase depth `⌈log₂(1/ε)⌉ + 2`, and measures the
/// conclusions.
///
/// # Errors
/// [`AppError::BadParam`] for bad `k`, `ε`, or `stages`;
/// [`AppError::NotInHull`] when `η` is off-diagonal or outside the hull;
/// engine errors propagate.
pub fn solve_t4(params: &T4Params) -> Result<T4Outcome> {
    if !(params.eps > 0.0 && params.eps < 1.0) {
        return Err(AppError::BadParam { name: "eps", value: params.eps });
    }
    if params.stages == 0 {
        return Err(AppError::BadParam { name: "stages", value: 0.0 });
    }
    let constraint = t4_constraint(params.k)?;
    let eta = &params.eta;
    if eta.rows() != 2 || eta.cols() != 2 {
        return Err(AppError::BadParam { name: "eta_shape", value: eta.rows() as f64 });
    }
    let diagonal = eta.get(0, 1) == 0.0 && eta.get(1, 0) == 0.0;
    let in_hull = diagonal && t4_hull_membership_xy(eta.get(0, 0), eta.get(1, 1));
    if !in_hull {
        return Err(AppError::NotInHull);
    }

    let cfg = T4Config::standard();
    let mut pair_determinants = Vec::with_capacity(6);
    for i in 0..4 {
        for j in (i + 1)..4 {
            let d = cfg.corners()[i].sub(&cfg.corners()[j])?;
            let det = d.get(0, 0) * d.get(1, 1) - d.get(0, 1) * d.get(1, 0);
            assert!(det != 0.0, "target pair ({i},{j}) lost full rank");
            pair_determinants.push(det);
        }
    }

    let depth = (1.0 / params.eps).log2().ceil() as usize + 2;
    let diag_dirs_free = constraint.residual(&Mat::diag(&[1.0, 0.0])).abs() == 0.0
        && constraint.residual(&Mat::diag(&[0.0, 1.0])).abs() == 0.0;
    let hypotheses = vec![
        HypothesisCheck::new("k_nonzero", params.k != 0.0, format!("k = {}", params.k)),
        HypothesisCheck::new(
            "eta_in_lamination_hull",
            in_hull,
            format!("eta = diag({}, {})", eta.get(0, 0), eta.get(1, 1)),
        ),
        HypothesisCheck::new(
            "eta_on_constraint_plane",
            constraint.residual(eta).abs() <= tol::EXACT_IDENTITY_TOL,
            format!("L(eta) = {:.3e}", constraint.residual(eta)),
        ),
        HypothesisCheck::new(
            "diagonal_directions_constraint_free",
            diag_dirs_free,
            "anti-diagonal weights vanish on diagonal oscillation directions".to_owned(),
        ),
        HypothesisCheck::new(
            "targets_have_no_rank_one_connection",
            pair_determinants.iter().all(|d| *d != 0.0),
            format!("pair determinants {:?}", pair_determinants),
        ),
    ];

    let boundary = AffineBoundary::new(eta.clone(), params.gamma.clone())?;
    let target = t4_target(&constraint, params.eps, depth);
    let trivial = target.contains(eta);
    let outcome = solve_open(
        &constraint,
        boundary.field(),
        params.domain.clone(),
        &params.resolution,
        &target,
        params.eps,
        params.stages,
    )?;

    let input = GradientField::from_boundary(
        &constraint,
        boundary.field(),
        params.domain.clone(),
        &params.resolution,
    )?;
    let sup_deviation = outcome.field.sup_change_from(&input);
    let report = T4Report {
        k: params.k,
        eps: params.eps,
        depth,
        hypotheses,
        pair_determinants,
        fraction_near_targets: outcome.report.summary.fraction_in_target,
        max_constraint_deviation: outcome.field.max_residual(),
        boundary_exact: outcome.field.boundary_nodes_bit_identical(),
        sup_deviation,
        deviation_bound: params.eps,
        trivial,
        solve: outcome.report,
    };
    Ok(T4Outcome { field: outcome.field, report })
}
