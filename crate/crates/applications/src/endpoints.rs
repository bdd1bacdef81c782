//! The two sphere crossings of a rank-one line through an interior matrix.

use crate::{tol, AppError, Result};
use matcore::{vec_norm, Mat};

/// The two scalars `s⁺ > 0 > s⁻` and matrices `η± = η + s±·a⊗b` with
/// `|η±| = 1`: where the rank-one line through `η` in direction `a⊗b`
/// crosses the unit sphere (Frobenius norm).
#[derive(Debug, Clone)]
pub struct EikonalEndpoints {
    pub s_plus: f64,
    pub s_minus: f64,
    pub eta_plus: Mat,
    pub eta_minus: Mat,
}

/// Solves `|η + s·a⊗b| = 1` for `s`, i.e. the quadratic
/// `|a⊗b|²·s² + 2(η·a⊗b)·s + (|η|² − 1) = 0`.
///
/// Because `|η| < 1`, the constant term is negative, so the two real roots
/// straddle zero; they are labeled `s⁺ > 0 > s⁻`. The roots are computed
/// in the cancellation-free form (`q = −(B + sign(B)√disc)/2`, roots
/// `q/A` and `C/q`), and the endpoint norms are re-checked to 1e-12.
///
/// # Errors
/// [`AppError::EtaNormTooLarge`] when `|η| ≥ 1`; [`AppError::BadParam`]
/// for zero or non-finite `a`, `b`.
pub fn eikonal_endpoints(eta: &Mat, a: &[f64], b: &[f64]) -> Result<EikonalEndpoints> {
    if a.iter().any(|x| !x.is_finite()) || vec_norm(a) == 0.0 {
        return Err(AppError::BadParam { name: "a", value: vec_norm(a) });
    }
    if b.iter().any(|x| !x.is_finite()) || vec_norm(b) == 0.0 {
        return Err(AppError::BadParam { name: "b", value: vec_norm(b) });
    }
    if a.len() != eta.rows() || b.len() != eta.cols() {
        return Err(AppError::BadParam { name: "direction_shape", value: a.len() as f64 });
    }
    let norm = eta.norm();
    if !(norm < 1.0) || !eta.is_finite() {
        return Err(AppError::EtaNormTooLarge { norm });
    }
    let dir = Mat::outer(a, b);
    let (s_plus, s_minus) = sphere_roots(eta, &dir).ok_or(AppError::Numeric {
        what: "sphere_crossing_discriminant",
        value: norm,
    })?;
    let eta_plus = eta.add_scaled(&dir, s_plus)?;
    let eta_minus = eta.add_scaled(&dir, s_minus)?;
    for (m, s) in [(&eta_plus, s_plus), (&eta_minus, s_minus)] {
        let defect = (m.norm() - 1.0).abs();
        if defect > tol::EXACT_IDENTITY_TOL {
            return Err(AppError::Numeric { what: "endpoint_norm", value: s.signum() * defect });
        }
    }
    Ok(EikonalEndpoints { s_plus, s_minus, eta_plus, eta_minus })
}

/// Roots of `|ξ + s·dir| = 1`, positive then negative, when `|ξ| < 1`.
pub(crate) fn sphere_roots(xi: &Mat, dir: &Mat) -> Option<(f64, f64)> {
    let a = dir.frob_dot(dir);
    let b = 2.0 * xi.frob_dot(dir);
    let c = xi.frob_dot(xi) - 1.0;
    if !(a > 0.0) || !(c < 0.0) {
        return None;
    }
    let disc = b * b - 4.0 * a * c;
    if !(disc > 0.0) {
        return None;
    }
    let sq = disc.sqrt();
    let q = if b >= 0.0 { -(b + sq) / 2.0 } else { -(b - sq) / 2.0 };
    let r1 = q / a;
    let r2 = c / q;
    Some((r1.max(r2), r1.min(r2)))
}
