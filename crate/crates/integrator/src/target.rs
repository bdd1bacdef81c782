//! Target sets, nested open approximations, and iteration schedules.

use crate::{IntError, Result};
use laminates::{dirac, Laminate};
use matcore::{LinearConstraint, Mat};
use std::sync::Arc;

/// An open target set `U` inside the constraint plane, described by the
/// three queries the pipeline needs rather than by geometry.
pub struct TargetSpec {
    contains: Box<dyn Fn(&Mat) -> bool + Send + Sync>,
    boundary_margin: Box<dyn Fn(&Mat) -> f64 + Send + Sync>,
    laminate_oracle: Box<dyn Fn(&Mat) -> Option<Laminate> + Send + Sync>,
}

impl std::fmt::Debug for TargetSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TargetSpec").finish_non_exhaustive()
    }
}

impl TargetSpec {
    pub fn new(
        contains: impl Fn(&Mat) -> bool + Send + Sync + 'static,
        boundary_margin: impl Fn(&Mat) -> f64 + Send + Sync + 'static,
        laminate_oracle: impl Fn(&Mat) -> Option<Laminate> + Send + Sync + 'static,
    ) -> Self {
        TargetSpec {
            contains: Box::new(contains),
            boundary_margin: Box::new(boundary_margin),
            laminate_oracle: Box::new(laminate_oracle),
        }
    }

    /// Membership test for the open set.
    pub fn contains(&self, xi: &Mat) -> bool {
        (self.contains)(xi)
    }

    /// Distance from `xi` to the complement of `U` (0 outside). Used only
    /// for diagnostics, never for correctness.
    pub fn boundary_margin(&self, xi: &Mat) -> f64 {
        (self.boundary_margin)(xi)
    }

    /// A laminate supported in `U` with barycenter `xi`, when the target
    /// knows how to build one.
    pub fn laminate(&self, xi: &Mat) -> Option<Laminate> {
        (self.laminate_oracle)(xi)
    }

    /// The model target: the union of two open balls of `radius` around
    /// atoms `a`, `b` with `a - b` of rank one. The oracle accepts any
    /// query within `radius` of the segment `[b, a]` — the rank-one mixing
    /// hull of the target — and splits it toward the two balls.
    ///
    /// # Errors
    /// [`IntError::BadParam`] for a non-positive radius, mismatched atom
    /// shapes, coincident atoms, or atoms off the constraint plane;
    /// [`IntError::OutsideHull`] when `a - b` is not rank one.
    pub fn two_atom(
        constraint: &LinearConstraint,
        a: Mat,
        b: Mat,
        radius: f64,
    ) -> Result<TargetSpec> {
        if !(radius > 0.0) {
            return Err(IntError::BadParam { name: "radius", value: radius });
        }
        if !a.same_shape(&b) {
            return Err(IntError::BadParam { name: "atom_shape", value: a.rows() as f64 });
        }
        let d = a.sub(&b).expect("same shape checked above");
        matcore::rank_one_decompose(&d).map_err(|_| IntError::OutsideHull {
            what: "two-atom direction is not rank one",
        })?;
        let d_norm2 = d.norm() * d.norm();
        if !(d_norm2 > 0.0) {
            return Err(IntError::BadParam { name: "atom_gap", value: 0.0 });
        }
        for atom in [&a, &b] {
            let res = constraint.residual(atom).abs();
            if res > crate::tol::CONSTRAINT_RESIDUAL_MAX {
                return Err(IntError::BadParam { name: "atom_residual", value: res });
            }
        }
        let seg = Arc::new(Segment { a, b, d, d_norm2, radius });
        let contains = {
            let seg = Arc::clone(&seg);
            move |xi: &Mat| seg.atom_distance(xi) < seg.radius
        };
        let margin = {
            let seg = Arc::clone(&seg);
            move |xi: &Mat| (seg.radius - seg.atom_distance(xi)).max(0.0)
        };
        let oracle = move |xi: &Mat| seg.split_at(xi);
        Ok(TargetSpec::new(contains, margin, oracle))
    }
}

/// The rank-one segment `[b, a]` with `d = a - b`, thickened by `radius`.
struct Segment {
    a: Mat,
    b: Mat,
    d: Mat,
    d_norm2: f64,
    radius: f64,
}

impl Segment {
    /// Distance from `xi` to the nearer of the two atoms; infinite on a
    /// shape mismatch so mismatched queries are never inside.
    fn atom_distance(&self, xi: &Mat) -> f64 {
        if !xi.same_shape(&self.a) {
            return f64::INFINITY;
        }
        xi.dist(&self.a).min(xi.dist(&self.b))
    }

    /// Segment parameter of the orthogonal projection, clamped to `[0, 1]`,
    /// or `None` on a shape mismatch.
    fn parameter(&self, xi: &Mat) -> Option<f64> {
        let gap = xi.sub(&self.b).ok()?;
        Some((gap.frob_dot(&self.d) / self.d_norm2).clamp(0.0, 1.0))
    }

    /// Distance from `xi` to the segment; infinite on a shape mismatch so
    /// mismatched queries are never inside.
    fn distance(&self, xi: &Mat) -> f64 {
        match self.parameter(xi) {
            Some(s) => {
                let proj = self.b.add_scaled(&self.d, s).expect("same shape");
                xi.dist(&proj)
            }
            None => f64::INFINITY,
        }
    }

    /// A laminate with barycenter `xi` supported in the neighborhood.
    ///
    /// The segment is translated to pass through `xi`: with residual
    /// `w = xi - (b + s d)`, the endpoints `b + d + w` and `b + w` are
    /// still within `radius` of the segment and mix back to `xi` exactly,
    /// so the split validates without an on-segment assumption. Queries
    /// projecting onto an endpoint stay a point mass.
    fn split_at(&self, xi: &Mat) -> Option<Laminate> {
        let s = self.parameter(xi)?;
        if self.distance(xi) >= self.radius {
            return None;
        }
        let mut lam = dirac(xi.clone());
        if s > 0.0 && s < 1.0 {
            let proj = self.b.add_scaled(&self.d, s).expect("same shape");
            let w = xi.sub(&proj).expect("same shape");
            let eta1 = self
                .b
                .add_scaled(&self.d, 1.0)
                .and_then(|m| m.add_scaled(&w, 1.0))
                .expect("same shape");
            let eta2 = self.b.add_scaled(&w, 1.0).expect("same shape");
            lam.split(0, eta1, eta2, s).ok()?;
        }
        Some(lam)
    }
}

/// A staged family `U_1, U_2, ...` approaching a target `K`: anything in
/// `U_j` must be splittable toward `U_{j+1}` atoms (spot-checked by
/// [`Self::nesting_violations`]), and gradients in `U_j` sit within
/// `bound(j)` of `K`.
pub struct InApproximation {
    /// The stages, innermost first: `stages[j-1]` is `U_j`.
    pub stages: Vec<TargetSpec>,
    /// Upper bound on `sup { dist(xi, K) : xi in U_j }` by 1-based stage.
    pub bound: Box<dyn Fn(usize) -> f64 + Send + Sync>,
    /// Distance from a gradient to the limiting target `K`.
    pub limit_distance: Box<dyn Fn(&Mat) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for InApproximation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InApproximation")
            .field("stages", &self.stages.len())
            .finish_non_exhaustive()
    }
}

impl InApproximation {
    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// The 1-based stage `U_j`.
    pub fn stage(&self, j: usize) -> &TargetSpec {
        &self.stages[j - 1]
    }

    /// Spot-checks the nesting `U_j subset U_{j+1}` on the given probe
    /// matrices: membership in `U_j` must imply the `U_{j+1}` oracle
    /// succeeds. Returns the number of violations.
    pub fn nesting_violations(&self, probes: &[Mat]) -> usize {
        let mut bad = 0;
        for j in 1..self.stages.len() {
            for xi in probes {
                if self.stages[j - 1].contains(xi) && self.stages[j].laminate(xi).is_none() {
                    bad += 1;
                }
            }
        }
        bad
    }
}

/// Per-stage perturbation budgets for an in-approximation run.
///
/// The first stage may move the field by up to `epsilon / 2`; stage `j > 1`
/// gets `delta_j = min(2^-j epsilon, delta_{j-1} eps_{j-1} / 2)` with
/// `eps_j = 0.9 * 2^-j`, so budgets decay geometrically and the tail after
/// any stage stays below that stage's own allowance.
#[derive(Debug, Clone)]
pub struct IterationSchedule {
    pub epsilon: f64,
    pub deltas: Vec<f64>,
    pub stage_tols: Vec<f64>,
}

impl IterationSchedule {
    /// # Errors
    /// [`IntError::BadParam`] for a non-positive `epsilon` or zero stages.
    pub fn new(epsilon: f64, stages: usize) -> Result<IterationSchedule> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(IntError::BadParam { name: "epsilon", value: epsilon });
        }
        if stages == 0 {
            return Err(IntError::BadParam { name: "stages", value: 0.0 });
        }
        let mut deltas = Vec::with_capacity(stages);
        let mut stage_tols = Vec::with_capacity(stages);
        for j in 1..=stages {
            let eps_j = 0.9 * 2.0_f64.powi(-(j as i32));
            let cap = epsilon * 2.0_f64.powi(-(j as i32));
            let delta = if j == 1 {
                epsilon / 2.0
            } else {
                let prev: f64 = deltas[j - 2];
                let prev_tol: f64 = stage_tols[j - 2];
                cap.min(prev * prev_tol / 2.0)
            };
            deltas.push(delta);
            stage_tols.push(eps_j);
        }
        debug_assert!(deltas.windows(2).all(|w| w[1] <= w[0]));
        Ok(IterationSchedule { epsilon, deltas, stage_tols })
    }

    pub fn stages(&self) -> usize {
        self.deltas.len()
    }

    /// Sum of the budgets from 1-based stage `j` onward.
    pub fn cumulative_tail(&self, j: usize) -> f64 {
        self.deltas[j.saturating_sub(1)..].iter().sum()
    }
}
