use crate::HullError;
use matcore::tol::RANK_REL_TOL;
use matcore::{rank, LinearConstraint, Mat};
use serde::Serialize;

/// A finite set of matrices of one shape, deduplicated at half its stated
/// resolution so segment sampling cannot blow the set up unboundedly.
#[derive(Debug, Clone)]
pub struct PointCloud {
    rows: usize,
    cols: usize,
    resolution: f64,
    points: Vec<Mat>,
}

impl PointCloud {
    pub fn new(points: Vec<Mat>, resolution: f64) -> Result<PointCloud, HullError> {
        if resolution <= 0.0 {
            return Err(HullError::BadResolution);
        }
        let first = points.first().ok_or(HullError::EmptyCloud)?;
        let (rows, cols) = (first.rows(), first.cols());
        let mut cloud = PointCloud { rows, cols, resolution, points: Vec::new() };
        for p in points {
            if p.rows() != rows || p.cols() != cols {
                return Err(HullError::ShapeMismatch {
                    rows,
                    cols,
                    got_rows: p.rows(),
                    got_cols: p.cols(),
                });
            }
            cloud.insert(p);
        }
        Ok(cloud)
    }

    /// Inserts unless a stored point is already within `resolution/2`.
    /// Returns whether the point was actually added.
    pub fn insert(&mut self, p: Mat) -> bool {
        let threshold = self.resolution / 2.0;
        if self.points.iter().any(|q| q.dist(&p) < threshold) {
            return false;
        }
        self.points.push(p);
        true
    }

    pub fn points(&self) -> &[Mat] {
        &self.points
    }

    /// Common shape `(m, n)` of every stored point.
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn contains_within(&self, p: &Mat, tol: f64) -> bool {
        self.points.iter().any(|q| q.dist(p) <= tol)
    }
}

/// Result of the iterated segment-sampling closure.
#[derive(Debug, Clone)]
pub struct HullResult {
    pub cloud: PointCloud,
    pub converged: bool,
    pub rounds_used: usize,
}

impl HullResult {
    /// JSON-friendly view: nested rows per point plus the convergence flag.
    pub fn report(&self) -> HullReport {
        HullReport {
            point_count: self.cloud.len(),
            converged: self.converged,
            rounds_used: self.rounds_used,
            points: self
                .cloud
                .points()
                .iter()
                .map(|p| (0..p.rows()).map(|i| p.row(i)).collect())
                .collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct HullReport {
    pub point_count: usize,
    pub converged: bool,
    pub rounds_used: usize,
    pub points: Vec<Vec<Vec<f64>>>,
}

/// Closes a finite set under sampled rank-one segments.
///
/// Each round scans every pair of current points; when the difference has
/// numeric rank one, `samples_per_segment` evenly spaced points of the
/// closed segment are inserted (deduplicated at the cloud's resolution).
/// Rounds repeat until a full round adds nothing, so the result is a
/// fixpoint up to resolution, or until `max_rounds` is hit, in which case
/// the partial result is returned flagged non-converged.
pub fn lamination_hull_discrete(
    cloud: &PointCloud,
    samples_per_segment: usize,
    max_rounds: usize,
) -> Result<HullResult, HullError> {
    if samples_per_segment < 2 {
        return Err(HullError::TooFewSamples { got: samples_per_segment });
    }
    let mut current = cloud.clone();
    for round in 1..=max_rounds {
        let snapshot = current.points().to_vec();
        let mut added = false;
        for i in 0..snapshot.len() {
            for j in (i + 1)..snapshot.len() {
                let diff = snapshot[i].sub(&snapshot[j]).expect("same shape by invariant");
                if diff.norm() < current.resolution() / 2.0 {
                    continue;
                }
                if rank(&diff, RANK_REL_TOL) != 1 {
                    continue;
                }
                for k in 0..samples_per_segment {
                    let s = k as f64 / (samples_per_segment - 1) as f64;
                    let sample = snapshot[j].add_scaled(&diff, s).expect("same shape");
                    if current.insert(sample) {
                        added = true;
                    }
                }
            }
        }
        if !added {
            return Ok(HullResult { cloud: current, converged: true, rounds_used: round });
        }
    }
    Ok(HullResult { cloud: current, converged: false, rounds_used: max_rounds })
}

/// Report of the constraint-plane agreement check: the discrete lamination
/// hull of a set inside `Sigma_t` must stay inside `Sigma_t`, because
/// rank-one segments between constrained points keep the constraint.
#[derive(Debug, Clone, Serialize)]
pub struct AgreementReport {
    pub max_residual: f64,
    pub hull_points: usize,
    pub input_points: usize,
    pub converged: bool,
    /// Agreement verdict at the 1e-10 residual budget.
    pub within_tolerance: bool,
}

pub fn relative_hull_agreement_check(
    k: &PointCloud,
    c: &LinearConstraint,
    samples_per_segment: usize,
    max_rounds: usize,
) -> Result<AgreementReport, HullError> {
    let hull = lamination_hull_discrete(k, samples_per_segment, max_rounds)?;
    let mut max_residual: f64 = 0.0;
    for p in hull.cloud.points() {
        max_residual = max_residual.max(c.residual(p).abs());
    }
    Ok(AgreementReport {
        max_residual,
        hull_points: hull.cloud.len(),
        input_points: k.len(),
        converged: hull.converged,
        within_tolerance: max_residual < 1e-10,
    })
}
