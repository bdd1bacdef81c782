use crate::HullError;
use matcore::Mat;

/// The four-point configuration without rank-one connections, together with
/// the square corners of its hull. In diagonal coordinates `(x, y)` the
/// corner matrices sit at `(3,-1), (1,3), (-3,1), (-1,-3)` and the hull is
/// the square `[-1,1]^2` plus four protruding segments reaching out to the
/// corners.
#[derive(Debug, Clone)]
pub struct T4Config {
    corners: [Mat; 4],
    inner: [Mat; 4],
}

impl T4Config {
    pub fn standard() -> T4Config {
        T4Config {
            corners: [
                Mat::diag(&[3.0, -1.0]),
                Mat::diag(&[1.0, 3.0]),
                Mat::diag(&[-3.0, 1.0]),
                Mat::diag(&[-1.0, -3.0]),
            ],
            inner: [
                Mat::diag(&[-1.0, -1.0]),
                Mat::diag(&[1.0, -1.0]),
                Mat::diag(&[1.0, 1.0]),
                Mat::diag(&[-1.0, 1.0]),
            ],
        }
    }

    /// The four corner matrices `A_1..A_4` (antipodal in pairs).
    pub fn corners(&self) -> &[Mat; 4] {
        &self.corners
    }

    /// The square corners `J_1..J_4` where the protruding segments attach.
    pub fn inner_corners(&self) -> &[Mat; 4] {
        &self.inner
    }

    /// Diagonal coordinates of corner `i` (0-based).
    pub fn corner_xy(&self, i: usize) -> (f64, f64) {
        (self.corners[i].get(0, 0), self.corners[i].get(1, 1))
    }

    pub fn inner_xy(&self, i: usize) -> (f64, f64) {
        (self.inner[i].get(0, 0), self.inner[i].get(1, 1))
    }
}

fn diagonal_coords(xi: &Mat) -> Result<(f64, f64), HullError> {
    if xi.rows() != 2 || xi.cols() != 2 {
        return Err(HullError::ShapeMismatch {
            rows: 2,
            cols: 2,
            got_rows: xi.rows(),
            got_cols: xi.cols(),
        });
    }
    let off = xi.get(0, 1).abs().max(xi.get(1, 0).abs());
    if off > 1e-12 {
        return Err(HullError::NotDiagonal { off });
    }
    Ok((xi.get(0, 0), xi.get(1, 1)))
}

const MEMBER_TOL: f64 = 1e-12;

/// Whether a diagonal 2x2 matrix lies in the explicit hull of the four-point
/// set: the closed square `[-1,1]^2` in diagonal coordinates plus the four
/// closed segments reaching the corners along the square's edge lines.
pub fn t4_hull_membership(xi: &Mat) -> Result<bool, HullError> {
    let (x, y) = diagonal_coords(xi)?;
    Ok(t4_hull_membership_xy(x, y))
}

/// Coordinate-level membership used by lattice scans.
pub fn t4_hull_membership_xy(x: f64, y: f64) -> bool {
    let t = MEMBER_TOL;
    if x.abs() <= 1.0 + t && y.abs() <= 1.0 + t {
        return true;
    }
    // Segments [A1,J2], [A2,J3], [A3,J4], [A4,J1]; each runs along an edge
    // line of the square, so membership is a one-coordinate pin plus a range.
    let on = |pin: f64, lock: f64, v: f64, a: f64, b: f64| {
        (pin - lock).abs() <= t && v >= a - t && v <= b + t
    };
    on(y, -1.0, x, 1.0, 3.0)       // A1=(3,-1) to J2=(1,-1)
        || on(x, 1.0, y, 1.0, 3.0) // A2=(1,3) to J3=(1,1)
        || on(y, 1.0, x, -3.0, -1.0) // A3=(-3,1) to J4=(-1,1)
        || on(x, -1.0, y, -3.0, -1.0) // A4=(-1,-3) to J1=(-1,-1)
}

/// Distance (in diagonal coordinates, which is the Hilbert-Schmidt distance
/// restricted to the diagonal plane) from `(x, y)` to the four corners.
pub fn t4_dist(x: f64, y: f64) -> f64 {
    let t4 = T4Config::standard();
    (0..4)
        .map(|i| {
            let (cx, cy) = t4.corner_xy(i);
            ((x - cx).powi(2) + (y - cy).powi(2)).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}
