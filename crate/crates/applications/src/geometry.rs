//! Strip-and-arc geometry for the constrained eikonal problem.
//!
//! Everything here lives inside the constraint plane `Σ_t = {𝓛 = t}`.
//! The central objects are the rank-one line `{η + s·a⊗b}`, the open
//! strip `V_α` of matrices within `α` of that line, and the two arcs
//! `K± = clos(V_α) ∩ {|ξ| = 1}` around the sphere crossings `η±`. The
//! strip half-width `α` is chosen by bisection so that each arc has
//! diameter below `ε/2`, measured on a sampled two-dimensional sphere
//! slice containing the line.

use crate::endpoints::{eikonal_endpoints, sphere_roots, EikonalEndpoints};
use crate::{tol, AppError, Result};
use laminates::{dirac, Laminate};
use matcore::{LinearConstraint, Mat};

/// Geometry of one eikonal problem instance: boundary gradient, rank-one
/// direction, sphere crossings, strip width, and the measured arc
/// diameters.
#[derive(Debug, Clone)]
pub struct EikonalGeometry {
    eta: Mat,
    t: f64,
    constraint: LinearConstraint,
    direction: Mat,
    dir_norm: f64,
    endpoints: EikonalEndpoints,
    eps: f64,
    alpha: f64,
    arc_diam_plus: f64,
    arc_diam_minus: f64,
}

impl EikonalGeometry {
    /// Builds the geometry for boundary gradient `η`, direction vectors
    /// `a`, `b`, side constraint `c`, and closeness parameter `ε`.
    ///
    /// Checks that the oscillation direction is constraint-free
    /// (`𝓛(a⊗b) = 0`) and that `c`'s weights do not annihilate `b`, then
    /// finds the strip half-width by halving until both arcs on the
    /// sampled slice have diameter `< ε/2` and are disjoint.
    ///
    /// # Errors
    /// Propagates endpoint errors; [`AppError::BadParam`] when the
    /// direction carries constraint mass, `L·b` vanishes, `ε` is out of
    /// range, or no admissible strip width exists at the sampling
    /// resolution.
    pub fn build(
        constraint: &LinearConstraint,
        eta: &Mat,
        a: &[f64],
        b: &[f64],
        eps: f64,
    ) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(AppError::BadParam { name: "eps", value: eps });
        }
        let endpoints = eikonal_endpoints(eta, a, b)?;
        let direction = Mat::outer(a, b);
        let dir_norm = direction.norm();
        let dir_residual = constraint.weights.frob_dot(&direction);
        if dir_residual.abs() > tol::EXACT_IDENTITY_TOL * constraint.weights.norm() * dir_norm {
            return Err(AppError::BadParam { name: "direction_constraint_mass", value: dir_residual });
        }
        let lb = matcore::vec_norm(&constraint.weights.matvec(b));
        if lb <= tol::EXACT_IDENTITY_TOL {
            return Err(AppError::BadParam { name: "weights_times_b", value: lb });
        }
        let t = constraint.weights.frob_dot(eta);
        if (t - constraint.target).abs() > tol::EXACT_IDENTITY_TOL * (1.0 + t.abs()) {
            return Err(AppError::BadParam { name: "eta_constraint_residual", value: t - constraint.target });
        }

        let (alpha, arc_diam_plus, arc_diam_minus) =
            choose_alpha(eta, &direction, &endpoints, eps)?;

        Ok(EikonalGeometry {
            eta: eta.clone(),
            t: constraint.target,
            constraint: constraint.clone(),
            direction,
            dir_norm,
            endpoints,
            eps,
            alpha,
            arc_diam_plus,
            arc_diam_minus,
        })
    }

    pub fn eta(&self) -> &Mat {
        &self.eta
    }

    pub fn constraint(&self) -> &LinearConstraint {
        &self.constraint
    }

    /// The rank-one direction `a⊗b`.
    pub fn direction(&self) -> &Mat {
        &self.direction
    }

    pub fn endpoints(&self) -> &EikonalEndpoints {
        &self.endpoints
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Strip half-width `α_ε`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Measured arc diameters `(diam K⁺, diam K⁻)` on the sphere slice.
    pub fn arc_diameters(&self) -> (f64, f64) {
        (self.arc_diam_plus, self.arc_diam_minus)
    }

    /// Distance from `ξ` to the line `{η + s·a⊗b}`.
    pub fn dist_to_line(&self, xi: &Mat) -> f64 {
        let p = xi.sub(&self.eta).expect("shape checked at construction");
        let along = p.frob_dot(&self.direction) / (self.dir_norm * self.dir_norm);
        p.add_scaled(&self.direction, -along).expect("same shape").norm()
    }

    /// Distance from `ξ` to the arcs `K = K⁺ ∪ K⁻`, measured along the
    /// admissible rank-one direction: the smaller `|s|·|a⊗b|` with
    /// `|ξ + s·a⊗b| = 1`. For points of the strip this is exact arc
    /// distance up to the arc diameter, it vanishes exactly on the unit
    /// sphere, and the splitting oracle can hit any prescribed value of it
    /// in closed form. Returns 0 on or outside the sphere.
    pub fn arc_distance(&self, xi: &Mat) -> f64 {
        match sphere_roots(xi, &self.direction) {
            Some((sp, sm)) => sp.min(-sm) * self.dir_norm,
            None => 0.0,
        }
    }

    /// Frobenius distance from `ξ` to the two-point set `{η⁺, η⁻}`.
    pub fn dist_to_pair(&self, xi: &Mat) -> f64 {
        xi.dist(&self.endpoints.eta_plus).min(xi.dist(&self.endpoints.eta_minus))
    }

    /// Membership in `U = V_α ∩ {|ξ| < 1} ∩ Σ_t` (with the plane tested to
    /// the layer's residual tolerance).
    pub fn in_u(&self, xi: &Mat) -> bool {
        self.on_plane(xi) && xi.norm() < 1.0 && self.dist_to_line(xi) < self.alpha
    }

    /// Plane membership `|𝓛(ξ) − t| ≤ 1e-8·(1 + |t|)`.
    pub fn on_plane(&self, xi: &Mat) -> bool {
        self.constraint.residual(xi).abs() <= tol::CONSTRAINT_RESIDUAL_MAX * (1.0 + self.t.abs())
    }

    /// Splits `ξ` along `a⊗b` into the two points at rank-one arc
    /// distance exactly `target_dist`, weighted so the barycenter is `ξ`.
    /// Returns `None` when `ξ` is not strictly farther from the sphere
    /// than the target, or is outside the strip/ball/plane.
    pub fn split_toward(&self, xi: &Mat, target_dist: f64) -> Option<Laminate> {
        if !self.in_u(xi) || !(target_dist > 0.0) {
            return None;
        }
        let (sp, sm) = sphere_roots(xi, &self.direction)?;
        let pull = target_dist / self.dir_norm;
        let sp_t = sp - pull;
        let sm_t = sm + pull;
        if !(sp_t > 0.0 && sm_t < 0.0) {
            return None;
        }
        let hi = xi.add_scaled(&self.direction, sp_t).ok()?;
        let lo = xi.add_scaled(&self.direction, sm_t).ok()?;
        let weight = -sm_t / (sp_t - sm_t);
        let mut lam = dirac(xi.clone());
        lam.split(0, hi, lo, weight).ok()?;
        Some(lam)
    }
}

/// Finds the strip half-width: starts at a quarter of the endpoint gap
/// and halves until both slice arcs have diameter `< ε/2` and are
/// disjoint (`diam⁺ + diam⁻ < |η⁺ − η⁻|`).
fn choose_alpha(
    eta: &Mat,
    direction: &Mat,
    endpoints: &EikonalEndpoints,
    eps: f64,
) -> Result<(f64, f64, f64)> {
    let (e1, e2) = slice_basis(eta, direction)?;
    let samples: Vec<Mat> = (0..tol::SLICE_SAMPLES)
        .map(|i| {
            let th = 2.0 * std::f64::consts::PI * (i as f64) / (tol::SLICE_SAMPLES as f64);
            e1.scale(th.cos()).add(&e2.scale(th.sin())).expect("same shape")
        })
        .collect();
    let gap = endpoints.eta_plus.dist(&endpoints.eta_minus);
    let dir_norm = direction.norm();
    let dist_line = |xi: &Mat| -> f64 {
        let p = xi.sub(eta).expect("same shape");
        let along = p.frob_dot(direction) / (dir_norm * dir_norm);
        p.add_scaled(direction, -along).expect("same shape").norm()
    };

    let mut alpha = gap / 4.0;
    while alpha > 1e-9 {
        let mut plus: Vec<&Mat> = Vec::new();
        let mut minus: Vec<&Mat> = Vec::new();
        for s in &samples {
            if dist_line(s) <= alpha {
                if s.dist(&endpoints.eta_plus) <= s.dist(&endpoints.eta_minus) {
                    plus.push(s);
                } else {
                    minus.push(s);
                }
            }
        }
        let dp = cluster_diameter(&plus);
        let dm = cluster_diameter(&minus);
        if !plus.is_empty() && !minus.is_empty() && dp < eps / 2.0 && dm < eps / 2.0 && dp + dm < gap
        {
            return Ok((alpha, dp, dm));
        }
        alpha /= 2.0;
    }
    Err(AppError::BadParam { name: "eps_vs_slice_resolution", value: eps })
}

fn cluster_diameter(points: &[&Mat]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            d = d.max(p.dist(q));
        }
    }
    d
}

/// Orthonormal basis of a two-plane through the origin containing the
/// rank-one line `{η + s·D}`: `e₁ = D/|D|`, `e₂` from `η` when it has a
/// component off the direction, otherwise from the first standard basis
/// matrix that does.
fn slice_basis(eta: &Mat, direction: &Mat) -> Result<(Mat, Mat)> {
    let dn = direction.norm();
    if !(dn > 0.0) {
        return Err(AppError::BadParam { name: "direction_norm", value: dn });
    }
    let e1 = direction.scale(1.0 / dn);
    let residual = |m: &Mat| -> Mat {
        m.add_scaled(&e1, -m.frob_dot(&e1)).expect("same shape")
    };
    let r = residual(eta);
    if r.norm() > 1e-9 {
        return Ok((e1.clone(), r.scale(1.0 / r.norm())));
    }
    for i in 0..eta.rows() {
        for j in 0..eta.cols() {
            let basis = Mat::from_fn(eta.rows(), eta.cols(), |r_, c_| {
                if (r_, c_) == (i, j) {
                    1.0
                } else {
                    0.0
                }
            });
            let r = residual(&basis);
            if r.norm() > 1e-6 {
                return Ok((e1, r.scale(1.0 / r.norm())));
            }
        }
    }
    Err(AppError::BadParam { name: "slice_basis", value: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk() -> EikonalGeometry {
        let c = LinearConstraint::new(Mat::diag(&[1.0, 1.0]), 0.5);
        let eta = Mat::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.0]]);
        EikonalGeometry::build(&c, &eta, &[0.0, 1.0], &[1.0, 0.0], 0.1).unwrap()
    }

    #[test]
    fn arcs_are_small_disjoint_and_contain_the_endpoints() {
        let g = desk();
        let (dp, dm) = g.arc_diameters();
        assert!(dp < 0.05 && dm < 0.05, "diameters {dp} {dm}");
        assert!(dp + dm < g.endpoints().eta_plus.dist(&g.endpoints().eta_minus));
        assert!(g.alpha() > 0.0);
        // Endpoints sit on the line, inside the closed strip.
        assert!(g.dist_to_line(&g.endpoints().eta_plus) < 1e-12);
        assert!(g.dist_to_line(&g.endpoints().eta_minus) < 1e-12);
    }

    #[test]
    fn line_and_arc_distances_agree_with_hand_values() {
        let g = desk();
        assert!(g.dist_to_line(g.eta()) < 1e-15);
        // η is on the line, so its rank-one arc distance is |s±|·|a⊗b|.
        let expect = 0.75_f64.sqrt();
        assert!((g.arc_distance(g.eta()) - expect).abs() < 1e-14);
        // On-sphere points are at distance zero.
        assert!(g.arc_distance(&g.endpoints().eta_plus) < 1e-12);
        // A transverse offset leaves the line but not the formulae.
        let off = g.eta().add_scaled(&Mat::from_rows(&[vec![0.0, 0.3], vec![0.0, 0.0]]), 1.0).unwrap();
        assert!((g.dist_to_line(&off) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn split_toward_hits_the_requested_distance_exactly() {
        let g = desk();
        let lam = g.split_toward(g.eta(), 0.09).unwrap();
        assert_eq!(lam.len(), 2);
        assert!(lam.barycenter().dist(g.eta()) < 1e-14);
        for atom in lam.atoms() {
            // Independent check: atoms stay on the line, so their arc
            // distance equals the Frobenius distance to the nearer
            // endpoint matrix.
            assert!((g.dist_to_pair(atom) - 0.09).abs() < 1e-12);
            assert!(g.in_u(atom));
        }
        let w = lam.weights();
        assert!((w[0] + w[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn split_toward_refuses_points_closer_than_the_target() {
        let g = desk();
        // A point 0.02 from the sphere cannot be split to distance 0.09.
        let near = g
            .eta()
            .add_scaled(g.direction(), g.endpoints().s_plus - 0.02)
            .unwrap();
        assert!(g.split_toward(&near, 0.09).is_none());
    }

    #[test]
    fn direction_with_constraint_mass_is_rejected() {
        // 𝓛 = trace does not kill a⊗b for a=(1,0), b=(1,0).
        let c = LinearConstraint::new(Mat::diag(&[1.0, 1.0]), 0.5);
        let eta = Mat::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.0]]);
        let err = EikonalGeometry::build(&c, &eta, &[1.0, 0.0], &[1.0, 0.0], 0.1).unwrap_err();
        assert!(matches!(err, AppError::BadParam { name: "direction_constraint_mass", .. }));
    }
}
