//! Test functions paired with laminates in Jensen-type checks.

use crate::tol::JENSEN_TOL;
use crate::Laminate;
use matcore::Mat;

/// What kind of function a [`TestFunction`] wraps. The tag drives reporting
/// and lets tests pick the invariants that apply (convexity for `Norm` and
/// `DistToConvexSet`, rank-one affinity for the determinant pair).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FnTag {
    Norm,
    PlusDet,
    MinusDet,
    DistToConvexSet,
    User,
}

/// A scalar function on matrix space with a provenance tag.
pub struct TestFunction {
    tag: FnTag,
    eval: Box<dyn Fn(&Mat) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction").field("tag", &self.tag).finish()
    }
}

impl TestFunction {
    pub fn tag(&self) -> FnTag {
        self.tag
    }

    pub fn eval(&self, m: &Mat) -> f64 {
        (self.eval)(m)
    }

    /// Frobenius norm; convex.
    pub fn norm() -> Self {
        TestFunction {
            tag: FnTag::Norm,
            eval: Box::new(|m| m.norm()),
        }
    }

    /// Determinant of a 2x2 matrix; affine along rank-one segments.
    pub fn plus_det() -> Self {
        TestFunction {
            tag: FnTag::PlusDet,
            eval: Box::new(det2),
        }
    }

    /// Negated determinant of a 2x2 matrix; affine along rank-one segments.
    pub fn minus_det() -> Self {
        TestFunction {
            tag: FnTag::MinusDet,
            eval: Box::new(|m| -det2(m)),
        }
    }

    /// Distance to the convex hull of a finite point set; convex.
    ///
    /// The projection is computed by Frank-Wolfe iteration on the simplex of
    /// hull weights, which is deterministic and accurate to far better than
    /// the Jensen slack for the small vertex sets used here.
    pub fn dist_to_convex_set(vertices: Vec<Mat>) -> Self {
        assert!(!vertices.is_empty(), "convex set needs at least one vertex");
        TestFunction {
            tag: FnTag::DistToConvexSet,
            eval: Box::new(move |m| dist_to_hull(m, &vertices)),
        }
    }

    /// Arbitrary caller-supplied function.
    pub fn user<F>(f: F) -> Self
    where
        F: Fn(&Mat) -> f64 + Send + Sync + 'static,
    {
        TestFunction {
            tag: FnTag::User,
            eval: Box::new(f),
        }
    }
}

fn det2(m: &Mat) -> f64 {
    assert_eq!(
        (m.rows(), m.cols()),
        (2, 2),
        "determinant test functions are 2x2 only"
    );
    m.get(0, 0) * m.get(1, 1) - m.get(0, 1) * m.get(1, 0)
}

/// Distance from `m` to `conv{vertices}` via Frank-Wolfe on the weight
/// simplex. 200 iterations give error `O(1/k)` times the hull diameter,
/// ample for test tolerances around 1e-6.
fn dist_to_hull(m: &Mat, vertices: &[Mat]) -> f64 {
    if vertices.len() == 1 {
        return m.dist(&vertices[0]);
    }
    let k = vertices.len();
    let mut w = vec![1.0 / k as f64; k];
    let mut point = combine(vertices, &w);
    for _ in 0..200 {
        // Linear minimization step: the vertex most aligned with -gradient,
        // where the gradient of |point - m|^2 is 2 (point - m).
        let grad = point.sub(m).expect("query must match vertex shape");
        let mut best = 0;
        let mut best_score = f64::INFINITY;
        for (i, v) in vertices.iter().enumerate() {
            let score = grad.frob_dot(v);
            if score < best_score {
                best_score = score;
                best = i;
            }
        }
        let dir = vertices[best].sub(&point).expect("vertices share a shape");
        let denom = dir.frob_dot(&dir);
        if denom <= 1e-30 {
            break;
        }
        // Exact line search for the quadratic objective, clamped to [0, 1].
        let step = (-grad.frob_dot(&dir) / denom).clamp(0.0, 1.0);
        if step <= 0.0 {
            break;
        }
        for wi in w.iter_mut() {
            *wi *= 1.0 - step;
        }
        w[best] += step;
        point = combine(vertices, &w);
    }
    point.dist(m)
}

fn combine(vertices: &[Mat], w: &[f64]) -> Mat {
    let mut acc = Mat::zeros(vertices[0].rows(), vertices[0].cols());
    for (v, wi) in vertices.iter().zip(w) {
        acc = acc.add_scaled(v, *wi).expect("vertices share a shape");
    }
    acc
}

/// Outcome of a Jensen comparison for one laminate and one test function.
#[derive(Debug, Clone, Copy)]
pub struct JensenCheck {
    /// Integral of `f` against the laminate.
    pub lhs: f64,
    /// `f` evaluated at the barycenter.
    pub rhs: f64,
    /// `lhs >= rhs - JENSEN_TOL`.
    pub pass: bool,
}

/// Compares the laminate average of `f` with `f` at the barycenter. For
/// convex `f` the average dominates; for the determinant pair on laminates
/// (whose splits are rank-one) the two sides agree.
pub fn jensen_check(nu: &Laminate, f: &TestFunction) -> JensenCheck {
    let lhs = nu.expectation(f);
    let rhs = f.eval(&nu.barycenter());
    JensenCheck {
        lhs,
        rhs,
        pass: lhs >= rhs - JENSEN_TOL,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirac;

    #[test]
    fn determinant_tags_and_values() {
        let m = Mat::from_rows(&[vec![2.0, 1.0], vec![0.0, 3.0]]);
        let plus = TestFunction::plus_det();
        let minus = TestFunction::minus_det();
        assert_eq!(plus.eval(&m), 6.0);
        assert_eq!(minus.eval(&m), -6.0);
        assert_eq!(plus.tag(), FnTag::PlusDet);
        assert_eq!(minus.tag(), FnTag::MinusDet);
    }

    #[test]
    fn dirac_jensen_is_equality_for_any_function() {
        let xi = Mat::diag(&[0.3, -0.7]);
        let lam = dirac(xi.clone());
        let fns = [
            TestFunction::norm(),
            TestFunction::plus_det(),
            TestFunction::dist_to_convex_set(vec![Mat::diag(&[1.0, 1.0]), Mat::diag(&[-1.0, 1.0])]),
        ];
        for f in &fns {
            let check = jensen_check(&lam, f);
            assert!(
                (check.lhs - check.rhs).abs() <= 1e-12,
                "dirac average must equal the point value for {:?}",
                f.tag()
            );
            assert!(check.pass);
        }
    }

    #[test]
    fn hull_distance_is_zero_inside_and_positive_outside() {
        let verts = vec![Mat::diag(&[1.0, 0.0]), Mat::diag(&[-1.0, 0.0])];
        let f = TestFunction::dist_to_convex_set(verts);
        assert!(f.eval(&Mat::diag(&[0.25, 0.0])) <= 1e-7, "interior point");
        let outside = f.eval(&Mat::diag(&[0.0, 2.0]));
        assert!((outside - 2.0).abs() <= 1e-7, "got {outside}");
    }

    #[test]
    fn norm_jensen_strict_on_symmetric_split() {
        let mut lam = dirac(Mat::diag(&[0.0, 0.0]));
        lam.split(0, Mat::diag(&[1.0, 0.0]), Mat::diag(&[-1.0, 0.0]), 0.5)
            .unwrap();
        let check = jensen_check(&lam, &TestFunction::norm());
        assert!(check.pass);
        assert!(check.lhs > check.rhs + 0.9, "average of norms should be 1, norm of mean 0");
    }
}
