use crate::decomp::rank;
use crate::mat::Mat;
use crate::tol::RANK_REL_TOL;
use crate::MatError;

/// A scalar linear constraint on matrices: the functional
/// `L(xi) = sum_ij L_ij xi_ij` together with a target value `t`.
///
/// The affine plane `Sigma_t = { xi : L(xi) = t }` is where all admissible
/// gradients live; `L` doubles as an `m x n` linear map `b -> L b` when
/// injectivity matters.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub weights: Mat,
    pub target: f64,
}

impl LinearConstraint {
    /// # Panics
    /// Panics when the weight matrix is identically zero or non-finite; a
    /// zero functional constrains nothing and every downstream formula
    /// divides by `|L|`.
    pub fn new(weights: Mat, target: f64) -> LinearConstraint {
        assert!(weights.is_finite(), "constraint weights must be finite");
        assert!(weights.norm() > 0.0, "constraint weights must not vanish");
        LinearConstraint { weights, target }
    }

    pub fn rows(&self) -> usize {
        self.weights.rows()
    }

    pub fn cols(&self) -> usize {
        self.weights.cols()
    }

    /// Shorthand for [`apply_constraint`] without the shape-check ceremony.
    pub fn apply(&self, xi: &Mat) -> f64 {
        debug_assert!(self.weights.same_shape(xi));
        self.weights.frob_dot(xi)
    }

    /// Signed residual `L(xi) - t`; zero exactly on `Sigma_t`.
    pub fn residual(&self, xi: &Mat) -> f64 {
        self.apply(xi) - self.target
    }
}

/// Evaluates the constraint functional `sum_ij L_ij xi_ij`.
///
/// # Errors
/// [`MatError::ShapeMismatch`] when `xi` does not match the weight shape.
pub fn apply_constraint(c: &LinearConstraint, xi: &Mat) -> Result<f64, MatError> {
    if !c.weights.same_shape(xi) {
        return Err(MatError::ShapeMismatch {
            expected_rows: c.rows(),
            expected_cols: c.cols(),
            got_rows: xi.rows(),
            got_cols: xi.cols(),
        });
    }
    Ok(c.weights.frob_dot(xi))
}

/// Whether the weight matrix, viewed as the linear map `b -> L b` from R^n
/// to R^m, is injective — i.e. has full column rank.
pub fn is_injective_map(c: &LinearConstraint) -> bool {
    if c.rows() < c.cols() {
        return false;
    }
    rank(&c.weights, RANK_REL_TOL) == c.cols()
}

/// Nearest point of `Sigma_t` along the `L` direction:
/// `pi(xi) = xi + s * L/|L|` with `s = (t - L(xi)) / |L|`.
///
/// This is the orthogonal projection onto the constraint plane under the
/// Hilbert-Schmidt inner product; inputs already on the plane come back
/// unchanged up to rounding.
pub fn project_to_sigma(c: &LinearConstraint, xi: &Mat) -> Result<Mat, MatError> {
    if !c.weights.same_shape(xi) {
        return Err(MatError::ShapeMismatch {
            expected_rows: c.rows(),
            expected_cols: c.cols(),
            got_rows: xi.rows(),
            got_cols: xi.cols(),
        });
    }
    let l_norm = c.weights.norm();
    if l_norm == 0.0 {
        return Err(MatError::DegenerateConstraint);
    }
    let s = (c.target - c.apply(xi)) / l_norm;
    xi.add_scaled(&c.weights, s / l_norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tol::ORTHO_TOL;

    #[test]
    fn anti_diagonal_weights_annihilate_diagonal_input() {
        let c = LinearConstraint::new(
            Mat::from_rows(&[vec![0.0, 2.0], vec![1.0, 0.0]]),
            0.0,
        );
        let xi = Mat::diag(&[3.0, -1.0]);
        assert_eq!(apply_constraint(&c, &xi).unwrap(), 0.0);
    }

    #[test]
    fn trace_functional_on_identity() {
        let c = LinearConstraint::new(Mat::identity(2), 0.0);
        assert_eq!(apply_constraint(&c, &Mat::identity(2)).unwrap(), 2.0);
    }

    #[test]
    fn weighted_sum_of_ones() {
        let c = LinearConstraint::new(
            Mat::from_rows(&[vec![1.0, 2.0], vec![0.0, 3.0]]),
            0.0,
        );
        let ones = Mat::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert_eq!(apply_constraint(&c, &ones).unwrap(), 6.0);
    }

    #[test]
    fn injectivity_examples() {
        let id = LinearConstraint::new(Mat::identity(2), 0.0);
        assert!(is_injective_map(&id));

        let anti = LinearConstraint::new(
            Mat::from_rows(&[vec![0.0, 2.0], vec![1.0, 0.0]]),
            0.0,
        );
        assert!(is_injective_map(&anti), "determinant -2, full rank");

        let ones = LinearConstraint::new(
            Mat::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]),
            0.0,
        );
        assert!(!is_injective_map(&ones), "rank 1 < 2");
    }

    #[test]
    fn projection_is_idempotent_on_the_plane() {
        let c = LinearConstraint::new(Mat::identity(2), 1.0);
        let xi = Mat::from_rows(&[vec![0.5, 3.0], vec![-2.0, 0.5]]); // trace 1
        let pi = project_to_sigma(&c, &xi).unwrap();
        assert!(pi.dist(&xi) < ORTHO_TOL, "points on Sigma_t stay put");
    }

    #[test]
    fn projection_of_identity_to_traceless_plane() {
        let c = LinearConstraint::new(Mat::identity(2), 0.0);
        let pi = project_to_sigma(&c, &Mat::identity(2)).unwrap();
        assert!(pi.norm() < ORTHO_TOL, "I2 projects to the zero matrix");
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let c = LinearConstraint::new(Mat::identity(2), 0.0);
        let xi = Mat::zeros(3, 2);
        assert!(matches!(
            apply_constraint(&c, &xi),
            Err(MatError::ShapeMismatch { .. })
        ));
    }
}
