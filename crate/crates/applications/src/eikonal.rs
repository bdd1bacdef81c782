//! Front end for the constrained vectorial eikonal problem: build the
//! boundary field, validate the theorem hypotheses, run one of the two
//! solution routes, and measure the conclusions.

use crate::baire::{baire_iterate, BaireReport};
use crate::boundary::AffineBoundary;
use crate::geometry::EikonalGeometry;
use crate::report::HypothesisCheck;
use crate::shells::eikonal_family;
use crate::{tol, AppError, Result};
use integrator::{
    solve_in_approx, GradientField, IterationSchedule, SolveReport,
};
use matcore::{vec_norm, LinearConstraint, Mat};
use oscillation::BoxDomain;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Which route builds the solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EikonalMethod {
    /// The explicit shell family, run for this many stages. Requires the
    /// constraint weights to be injective as a vector map.
    InApprox { stages: usize },
    /// The density-refinement iteration (`δ_k = 1/k`), run for this many
    /// steps. Applies to any constraint.
    Baire { iterations: usize },
}

/// Full problem statement for one run.
#[derive(Debug)]
pub struct EikonalParams {
    pub domain: BoxDomain,
    pub resolution: Vec<usize>,
    pub eta: Mat,
    pub gamma: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub constraint: LinearConstraint,
    pub eps: f64,
    pub method: EikonalMethod,
    /// Seeds the free choices of the construction (shell placement inside
    /// each band); different seeds give numerically distinct solutions.
    pub seed: u64,
}

/// Measured outcome of a run.
#[derive(Debug, Clone, Serialize)]
pub struct EikonalReport {
    pub method: String,
    pub seed: u64,
    /// Theorem preconditions, each with its measured value.
    pub hypotheses: Vec<HypothesisCheck>,
    /// Shell offset (shell route only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k0: Option<usize>,
    /// Strip half-width `α_ε`.
    pub alpha: f64,
    /// Measured arc diameters on the sphere slice.
    pub arc_diameters: (f64, f64),
    /// Arc distances the stage oracles aimed for (shell route only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shell_targets: Option<Vec<f64>>,
    /// Fraction of input (affine) nodes with `||∇v| − 1| < ε`: strictly
    /// interior boundary gradients make this 0 — the affine map alone is
    /// never a solution.
    pub input_unit_fraction: f64,
    /// Fraction of output nodes with `||∇u| − 1| < ε`.
    pub unit_fraction: f64,
    /// Fraction of output nodes with `dist(∇u, {η⁺, η⁻}) < ε`.
    pub pair_fraction: f64,
    /// The `ε` both fractions are measured against.
    pub eps: f64,
    /// Max `|𝓛(∇u) − t|` over nodes.
    pub max_constraint_deviation: f64,
    /// Boundary-layer nodes carry the affine data bit-identically.
    pub boundary_exact: bool,
    /// Measured `sup |u − v_{η,γ}|` over nodes.
    pub sup_deviation: f64,
    /// The theorem's bound `ε` on the deviation.
    pub deviation_bound: f64,
    /// Staged-solve report (shell route only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveReport>,
    /// Per-iteration logs (refinement route only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refinement: Option<Vec<BaireReport>>,
}

/// A produced field plus its report.
#[derive(Debug)]
pub struct EikonalOutcome {
    pub field: GradientField,
    pub report: EikonalReport,
}

/// Two fields count as numerically distinct when their sup-distance
/// exceeds this many units in the last place of the field scale;
/// bit-identical reruns measure exactly zero against it.
pub fn distinctness_threshold(field: &GradientField) -> f64 {
    let mut scale: f64 = 1.0;
    for idx in 0..field.node_count() {
        for u in field.u_at(idx) {
            scale = scale.max(u.abs());
        }
    }
    tol::DISTINCTNESS_ULPS * f64::EPSILON * scale
}

fn unit_fraction(field: &GradientField, eps: f64) -> f64 {
    let n = field.node_count();
    let hits = (0..n)
        .filter(|&i| (field.grad_at(i).norm() - 1.0).abs() < eps)
        .count();
    hits as f64 / n as f64
}

fn pair_fraction(field: &GradientField, geom: &EikonalGeometry) -> f64 {
    let n = field.node_count();
    let hits = (0..n)
        .filter(|&i| geom.dist_to_pair(&field.grad_at(i)) < geom.eps())
        .count();
    hits as f64 / n as f64
}

/// Solves the constrained eikonal problem on a grid.
///
/// Validates every theorem hypothesis (recorded in the report), checks
/// that the affine input is not already a solution, runs the selected
/// route, and measures the conclusions: unit-norm and endpoint-pair
/// fractions, constraint deviation, boundary trace, and sup-distance
/// from the boundary map.
///
/// # Errors
/// Hypothesis violations surface as typed errors
/// ([`AppError::NonInjective`] when the shell route is asked to run on a
/// non-injective constraint map, [`AppError::EtaNormTooLarge`],
/// [`AppError::BadParam`]); engine errors propagate.
pub fn solve_eikonal(params: &EikonalParams) -> Result<EikonalOutcome> {
    let boundary = AffineBoundary::new(params.eta.clone(), params.gamma.clone())?;
    let geometry =
        EikonalGeometry::build(&params.constraint, &params.eta, &params.a, &params.b, params.eps)?;

    let injective = matcore::is_injective_map(&params.constraint);
    let lb = vec_norm(&params.constraint.weights.matvec(&params.b));
    let dir_mass = params.constraint.weights.frob_dot(geometry.direction());
    let mut hypotheses = vec![
        HypothesisCheck::new(
            "eta_norm_below_one",
            params.eta.norm() < 1.0,
            format!("|eta| = {:.6}", params.eta.norm()),
        ),
        HypothesisCheck::new("a_nonzero", vec_norm(&params.a) > 0.0, format!("|a| = {:.6}", vec_norm(&params.a))),
        HypothesisCheck::new("b_nonzero", vec_norm(&params.b) > 0.0, format!("|b| = {:.6}", vec_norm(&params.b))),
        HypothesisCheck::new("weights_times_b_nonzero", lb > 0.0, format!("|L b| = {:.6}", lb)),
        HypothesisCheck::new(
            "direction_constraint_free",
            dir_mass.abs() <= tol::EXACT_IDENTITY_TOL,
            format!("L·(a⊗b) = {:.3e}", dir_mass),
        ),
    ];

    let input = GradientField::from_boundary(
        &params.constraint,
        boundary.field(),
        params.domain.clone(),
        &params.resolution,
    )?;
    let input_unit_fraction = unit_fraction(&input, params.eps);

    let (field, k0, shell_targets, solve, refinement, method_name) = match params.method {
        EikonalMethod::InApprox { stages } => {
            hypotheses.push(HypothesisCheck::new(
                "constraint_map_injective",
                injective,
                "shell route requires an injective weight map".to_owned(),
            ));
            if !injective {
                return Err(AppError::NonInjective);
            }
            // The free choice the construction leaves open: where inside
            // its band each stage's oracle places the split endpoints.
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            let jitter: Vec<f64> = (0..stages).map(|_| 0.35 + 0.3 * rng.gen::<f64>()).collect();
            // The outer shell already holds the boundary gradient, so the
            // solver starts at the first band that forces work; the
            // schedule's largest budget then funds the first conversion.
            let family = eikonal_family(
                &params.constraint,
                &params.eta,
                &params.a,
                &params.b,
                params.eps,
                stages,
                2,
                Some(&jitter),
            )?;
            let schedule = IterationSchedule::new(params.eps, stages)?;
            let outcome = solve_in_approx(
                &params.constraint,
                boundary.field(),
                params.domain.clone(),
                &params.resolution,
                &family.approx,
                &schedule,
                stages,
            )?;
            (
                outcome.field,
                Some(family.k0),
                Some(family.shell_targets.clone()),
                Some(outcome.report),
                None,
                "in_approx",
            )
        }
        EikonalMethod::Baire { iterations } => {
            let geom = std::sync::Arc::new(geometry.clone());
            let (field, logs) = baire_iterate(&input, &geom, iterations)?;
            (field, None, None, None, Some(logs), "baire")
        }
    };

    let sup_deviation = field.sup_change_from(&input);
    let report = EikonalReport {
        method: method_name.to_owned(),
        seed: params.seed,
        hypotheses,
        k0,
        alpha: geometry.alpha(),
        arc_diameters: geometry.arc_diameters(),
        shell_targets,
        input_unit_fraction,
        unit_fraction: unit_fraction(&field, params.eps),
        pair_fraction: pair_fraction(&field, &geometry),
        eps: params.eps,
        max_constraint_deviation: field.max_residual(),
        boundary_exact: field.boundary_nodes_bit_identical(),
        sup_deviation,
        deviation_bound: params.eps,
        solve,
        refinement,
    };
    Ok(EikonalOutcome { field, report })
}
