//! Affine boundary data `v(x) = ηx + γ`.

use crate::{AppError, Result};
use integrator::BoundaryField;
use matcore::Mat;

/// An affine map `v(x) = ηx + γ` used as boundary data; its gradient is
/// the constant matrix `η`.
#[derive(Debug, Clone)]
pub struct AffineBoundary {
    eta: Mat,
    gamma: Vec<f64>,
}

impl AffineBoundary {
    /// Builds the boundary map, validating shapes and finiteness.
    ///
    /// # Errors
    /// [`AppError::BadParam`] when `γ` does not match the row count of `η`
    /// or any entry is non-finite.
    pub fn new(eta: Mat, gamma: Vec<f64>) -> Result<Self> {
        if !eta.is_finite() {
            return Err(AppError::BadParam { name: "eta", value: f64::NAN });
        }
        if gamma.len() != eta.rows() {
            return Err(AppError::BadParam { name: "gamma_len", value: gamma.len() as f64 });
        }
        if gamma.iter().any(|g| !g.is_finite()) {
            return Err(AppError::BadParam { name: "gamma", value: f64::NAN });
        }
        Ok(AffineBoundary { eta, gamma })
    }

    pub fn eta(&self) -> &Mat {
        &self.eta
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// Evaluates `ηx + γ`.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut v = self.eta.matvec(x);
        for (vi, gi) in v.iter_mut().zip(&self.gamma) {
            *vi += gi;
        }
        v
    }

    /// The same map as integrator boundary data.
    pub fn field(&self) -> BoundaryField {
        BoundaryField::affine(self.gamma.clone(), self.eta.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_the_affine_map_and_reports_a_constant_gradient() {
        let eta = Mat::from_rows(&[vec![0.5, 0.0], vec![0.25, -1.0]]);
        let vb = AffineBoundary::new(eta.clone(), vec![1.0, -2.0]).unwrap();
        let x = [0.3, 0.7];
        let v = vb.eval(&x);
        assert!((v[0] - (0.5 * 0.3 + 1.0)).abs() < 1e-15);
        assert!((v[1] - (0.25 * 0.3 - 0.7 - 2.0)).abs() < 1e-15);

        let (fv, fg) = vb.field().eval(&x);
        assert_eq!(fv, v);
        assert_eq!(fg.dist(&eta), 0.0);
    }

    #[test]
    fn rejects_mismatched_offset_length() {
        let eta = Mat::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.0]]);
        let err = AffineBoundary::new(eta, vec![1.0]).unwrap_err();
        assert!(matches!(err, AppError::BadParam { name: "gamma_len", .. }));
    }
}
