//! The density-refinement step: push the mean gradient distance to the
//! arc set below `δ` while moving the map by less than `θ`.
//!
//! This is the computable core of the Baire-category argument: the class
//! of admissible maps (`∇v ∈ U` everywhere, `‖v − v_{η,γ}‖_∞ < ε/2`)
//! contains, arbitrarily close to any member, a map whose mean gradient
//! distance to `K` is below any prescribed `δ`. One refinement step
//! selects the regions whose gradient is farther than `δ/8` from the
//! arcs, splits each along `a⊗b` to the two points at arc distance
//! exactly `δ/8`, and inserts the matching oscillation patches.

use crate::geometry::EikonalGeometry;
use crate::{tol, AppError, Result};
use integrator::{refine_field, GradientField, TargetSpec};
use matcore::Mat;
use serde::Serialize;
use std::sync::Arc;

/// Measured admissibility of a field: gradient membership in `U` at every
/// node and sup-distance from the affine boundary map.
#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    /// Every node gradient lies in the strip-ball set (with numeric
    /// slack for the open conditions).
    pub in_u_all: bool,
    /// Worst distance-to-line over nodes, to compare against `α`.
    pub worst_strip: f64,
    /// Worst gradient norm over nodes, to compare against 1.
    pub worst_norm: f64,
    /// Worst `|𝓛(∇v) − t|` over nodes.
    pub worst_plane: f64,
    /// Measured `sup |v − v_{η,γ}|` over nodes.
    pub sup_deviation: f64,
    /// The admissible-class bound `ε/2` the deviation is compared to.
    pub deviation_bound: f64,
}

/// One refinement step's outcome.
#[derive(Debug)]
pub struct BaireStep {
    pub field: GradientField,
    pub report: BaireReport,
}

/// Serializable record of one refinement step.
#[derive(Debug, Clone, Serialize)]
pub struct BaireReport {
    pub delta: f64,
    pub theta: f64,
    /// The selection threshold `δ/8`.
    pub threshold: f64,
    pub mean_dist_before: f64,
    pub mean_dist_after: f64,
    pub sup_change: f64,
    pub roots_added: usize,
    pub leaves_extended: usize,
    /// True when the selection was empty and the field is unchanged.
    pub unchanged: bool,
    pub admissible_after: bool,
}

/// Scans every node of `field` against the admissible-class conditions.
pub fn check_admissible(field: &GradientField, geom: &EikonalGeometry) -> AdmissibilityReport {
    let boundary = field.boundary().clone();
    let mut worst_strip: f64 = 0.0;
    let mut worst_norm: f64 = 0.0;
    let mut sup_dev: f64 = 0.0;
    for idx in 0..field.node_count() {
        let g = field.grad_at(idx);
        worst_strip = worst_strip.max(geom.dist_to_line(&g));
        worst_norm = worst_norm.max(g.norm());
        let x = field.node_coord(idx);
        let (v, _) = boundary.eval(&x);
        let u = field.u_at(idx);
        for (ui, vi) in u.iter().zip(&v) {
            sup_dev = sup_dev.max((ui - vi).abs());
        }
    }
    let worst_plane = field.max_residual();
    let slack = 1.0 + 1e-9;
    AdmissibilityReport {
        in_u_all: worst_strip <= geom.alpha() * slack
            && worst_norm < 1.0
            && worst_plane <= tol::CONSTRAINT_RESIDUAL_MAX,
        worst_strip,
        worst_norm,
        worst_plane,
        sup_deviation: sup_dev,
        deviation_bound: geom.eps() / 2.0,
    }
}

fn mean_arc_distance(field: &GradientField, geom: &EikonalGeometry) -> f64 {
    let n = field.node_count();
    let mut sum = 0.0;
    for idx in 0..n {
        sum += geom.arc_distance(&field.grad_at(idx));
    }
    sum / n as f64
}

/// The target "arc distance at most `δ/8`" with the exact-placement
/// oracle of the refinement step.
pub(crate) fn delta_target(geom: &Arc<EikonalGeometry>, delta: f64) -> TargetSpec {
    let threshold = delta / 8.0;
    let g = Arc::clone(geom);
    let contains = move |xi: &Mat| g.in_u(xi) && g.arc_distance(xi) <= threshold;
    let g = Arc::clone(geom);
    let margin = move |xi: &Mat| {
        (threshold - g.arc_distance(xi)).min(g.alpha() - g.dist_to_line(xi)).max(0.0)
    };
    let g = Arc::clone(geom);
    let oracle = move |xi: &Mat| g.split_toward(xi, threshold);
    TargetSpec::new(contains, margin, oracle)
}

/// One refinement step: returns the refined field and its measurements.
///
/// Regions whose sampled gradient is farther than `δ/8` from the arcs
/// are exactly the ones the target's `contains` rejects, so the staged
/// engine's selection reproduces the step's index sets; the oracle places
/// both split endpoints at arc distance `δ/8`. The output satisfies the
/// quadrature bound `mean dist(∇v_θ, K) < δ`, moves by less than `θ`, and
/// stays admissible; an input that is already `δ/8`-close everywhere
/// comes back unchanged.
///
/// # Errors
/// [`AppError::BudgetInfeasible`] when `θ` is below the grid-resolvable
/// amplitude; [`AppError::NotAdmissible`] when the input violates the
/// class conditions; [`AppError::Numeric`] when a post-condition fails
/// (a defect, not bad input).
pub fn baire_refine(
    field: &GradientField,
    geom: &Arc<EikonalGeometry>,
    delta: f64,
    theta: f64,
) -> Result<BaireStep> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(AppError::BadParam { name: "delta", value: delta });
    }
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(AppError::BadParam { name: "theta", value: theta });
    }
    let max_h = field
        .domain()
        .size()
        .iter()
        .zip(field.resolution())
        .map(|(s, &r)| s / (r - 1) as f64)
        .fold(0.0_f64, f64::max);
    if theta < max_h {
        return Err(AppError::BudgetInfeasible { name: "theta", value: theta, limit: max_h });
    }
    let pre = check_admissible(field, geom);
    if !pre.in_u_all {
        return Err(AppError::NotAdmissible { what: "gradient leaves the strip-ball set" });
    }
    if pre.sup_deviation >= pre.deviation_bound {
        return Err(AppError::NotAdmissible { what: "sup deviation reaches eps/2" });
    }

    let mean_before = mean_arc_distance(field, geom);
    let target = delta_target(geom, delta);
    let (out, stage) = refine_field(field, &target, theta)?;

    let mean_after = mean_arc_distance(&out, geom);
    if !(mean_after < delta) {
        return Err(AppError::Numeric { what: "mean_distance_quadrature", value: mean_after });
    }
    if stage.sup_change > theta * (1.0 + tol::BUDGET_SLACK) {
        return Err(AppError::Numeric { what: "sup_change_budget", value: stage.sup_change });
    }
    let post = check_admissible(&out, geom);
    let admissible_after = post.in_u_all && post.sup_deviation < post.deviation_bound;
    if !admissible_after {
        return Err(AppError::NotAdmissible { what: "refined field left the admissible class" });
    }

    Ok(BaireStep {
        field: out,
        report: BaireReport {
            delta,
            theta,
            threshold: delta / 8.0,
            mean_dist_before: mean_before,
            mean_dist_after: mean_after,
            sup_change: stage.sup_change,
            roots_added: stage.roots_added,
            leaves_extended: stage.leaves_extended,
            unchanged: stage.roots_added == 0 && stage.leaves_extended == 0,
            admissible_after,
        },
    })
}

/// Iterates the refinement step with the proof's stage targets
/// `δ_k = 1/k` and geometric move budgets `θ_k = ε/2^{k+1}` (so the total
/// movement stays below `ε/2`).
///
/// # Errors
/// [`AppError::BudgetInfeasible`] up front when the last iteration's
/// budget is below the grid-resolvable amplitude; step errors propagate.
pub fn baire_iterate(
    field: &GradientField,
    geom: &Arc<EikonalGeometry>,
    iterations: usize,
) -> Result<(GradientField, Vec<BaireReport>)> {
    if iterations == 0 {
        return Err(AppError::BadParam { name: "iterations", value: 0.0 });
    }
    let eps = geom.eps();
    let max_h = field
        .domain()
        .size()
        .iter()
        .zip(field.resolution())
        .map(|(s, &r)| s / (r - 1) as f64)
        .fold(0.0_f64, f64::max);
    let theta_last = eps / 2.0_f64.powi(iterations as i32 + 1);
    if theta_last < max_h {
        return Err(AppError::BudgetInfeasible { name: "theta", value: theta_last, limit: max_h });
    }
    let mut current = field.clone();
    let mut logs = Vec::with_capacity(iterations);
    for k in 1..=iterations {
        let delta = 1.0 / k as f64;
        let theta = eps / 2.0_f64.powi(k as i32 + 1);
        let step = baire_refine(&current, geom, delta, theta)?;
        current = step.field;
        logs.push(step.report);
    }
    Ok((current, logs))
}
