//! Staircase decomposition in the four-point frame.
//!
//! The frame consists of four extremal corners `A1..A4` and the four inner
//! corners `J1..J4` of the unit square (diagonal coordinates). Every inner
//! corner is the midpoint of the segment from the preceding extremal corner
//! to the preceding inner corner, so a Dirac mass sitting on an inner corner
//! can shed half its weight onto an extremal corner per step while the
//! remainder walks the inner square. Iterating drives all but a geometrically
//! small remainder onto the corners through axis-parallel rank-one splits.

use crate::tol::{CORNER_NUDGE, MAX_STAIRCASE_DEPTH};
use crate::{dirac, LamError, Laminate};
use hulls::{t4_hull_membership_xy, T4Config};
use matcore::{Mat, MatError};

/// Points closer than this coincide with a frame vertex.
const COINCIDE_TOL: f64 = 1e-12;

/// From inner corner `J_i`, the deposit corner and the next inner corner
/// share the index `(i + 3) mod 4`: `J2 -> (A1, J1)`, `J1 -> (A4, J4)`,
/// `J4 -> (A3, J3)`, `J3 -> (A2, J2)`.
fn cycle_next(j_idx: usize) -> usize {
    (j_idx + 3) % 4
}

/// One chain of remainder mass walking the inner square.
struct Chain {
    atom: usize,
    j_idx: usize,
}

/// Builder state: the laminate plus per-corner deposit counters used to keep
/// repeated deposits distinct.
struct Builder {
    lam: Laminate,
    cfg: T4Config,
    visits: [usize; 4],
}

impl Builder {
    fn diag(x: f64, y: f64) -> Mat {
        Mat::diag(&[x, y])
    }

    /// Deposit coordinates for corner `c` on this visit. The first deposit
    /// is the exact corner; revisits are nudged along the split line toward
    /// `toward`, each time by half the previous offset.
    fn deposit_xy(&self, c: usize, toward: (f64, f64)) -> (f64, f64) {
        let (ax, ay) = self.cfg.corner_xy(c);
        let v = self.visits[c];
        if v == 0 {
            return (ax, ay);
        }
        let theta = CORNER_NUDGE * 0.5f64.powi(v as i32 - 1);
        // The segment is axis parallel with length 4; unit direction is a
        // quarter of the coordinate difference.
        let dx = (toward.0 - ax) / 4.0;
        let dy = (toward.1 - ay) / 4.0;
        (ax + theta * dx, ay + theta * dy)
    }

    /// Splits atom `k` (sitting at `(px, py)`) along its axis-parallel line
    /// into a deposit near corner `c` and a remainder exactly at `(rx, ry)`.
    /// Returns the remainder's atom index.
    fn deposit_split(
        &mut self,
        k: usize,
        (px, py): (f64, f64),
        c: usize,
        (rx, ry): (f64, f64),
    ) -> Result<usize, LamError> {
        let (dx, dy) = self.deposit_xy(c, (rx, ry));
        // Solve p = s * d + (1 - s) * r along the varying coordinate.
        let s = if (dx - rx).abs() > (dy - ry).abs() {
            (px - rx) / (dx - rx)
        } else {
            (py - ry) / (dy - ry)
        };
        self.lam
            .split(k, Self::diag(dx, dy), Self::diag(rx, ry), s)?;
        self.visits[c] += 1;
        Ok(self.lam.len() - 1)
    }
}

/// Decomposes `delta_eta`, for diagonal `eta` in the four-point lamination
/// hull, into a laminate supported on the extremal corners up to remainder
/// mass at most `2^-depth` on the inner square.
///
/// All splits are axis parallel (difference matrices are diagonal with a
/// single nonzero entry), so every atom stays diagonal. The remainder is
/// carried by at most two atoms sitting exactly on inner corners; repeated
/// corner deposits are offset by at most [`CORNER_NUDGE`] to keep atoms
/// distinct, which is far below any tolerance the corners are consumed at.
///
/// # Errors
/// - [`LamError::NotDiagonal`] for off-diagonal input;
/// - [`LamError::NotInHull`] when `eta` lies outside the hull;
/// - [`LamError::BadDepth`] for `depth` outside `1..=MAX_STAIRCASE_DEPTH`.
pub fn t4_staircase(eta: &Mat, depth: usize) -> Result<Laminate, LamError> {
    if eta.rows() != 2 || eta.cols() != 2 {
        return Err(LamError::Mat(MatError::ShapeMismatch {
            expected_rows: 2,
            expected_cols: 2,
            got_rows: eta.rows(),
            got_cols: eta.cols(),
        }));
    }
    let off = eta.get(0, 1).abs().max(eta.get(1, 0).abs());
    if off > COINCIDE_TOL {
        return Err(LamError::NotDiagonal { off });
    }
    if depth == 0 || depth > MAX_STAIRCASE_DEPTH {
        return Err(LamError::BadDepth {
            depth,
            max: MAX_STAIRCASE_DEPTH,
        });
    }
    let x = eta.get(0, 0);
    let y = eta.get(1, 1);
    if !t4_hull_membership_xy(x, y) {
        return Err(LamError::NotInHull { x, y });
    }

    let cfg = T4Config::standard();
    let mut b = Builder {
        lam: dirac(eta.clone()),
        cfg,
        visits: [0; 4],
    };

    // Already extremal: nothing to do.
    for i in 0..4 {
        let (ax, ay) = b.cfg.corner_xy(i);
        if (x - ax).abs() <= COINCIDE_TOL && (y - ay).abs() <= COINCIDE_TOL {
            return Ok(b.lam);
        }
    }

    let mut chains: Vec<Chain> = Vec::new();

    // Position the mass: land every chain exactly on an inner corner.
    let on_inner = (0..4).find(|&i| {
        let (jx, jy) = b.cfg.inner_xy(i);
        (x - jx).abs() <= COINCIDE_TOL && (y - jy).abs() <= COINCIDE_TOL
    });
    if let Some(j) = on_inner {
        chains.push(Chain { atom: 0, j_idx: j });
    } else if (y + 1.0).abs() <= COINCIDE_TOL {
        // Bottom line [J1, A1]: deposit A1, remainder J1.
        let r = b.deposit_split(0, (x, y), 0, b.cfg.inner_xy(0))?;
        chains.push(Chain { atom: r, j_idx: 0 });
    } else if (x - 1.0).abs() <= COINCIDE_TOL {
        // Right line [J2, A2]: deposit A2, remainder J2.
        let r = b.deposit_split(0, (x, y), 1, b.cfg.inner_xy(1))?;
        chains.push(Chain { atom: r, j_idx: 1 });
    } else if (y - 1.0).abs() <= COINCIDE_TOL {
        // Top line [A3, J3]: deposit A3, remainder J3.
        let r = b.deposit_split(0, (x, y), 2, b.cfg.inner_xy(2))?;
        chains.push(Chain { atom: r, j_idx: 2 });
    } else if (x + 1.0).abs() <= COINCIDE_TOL {
        // Left line [A4, J4]: deposit A4, remainder J4.
        let r = b.deposit_split(0, (x, y), 3, b.cfg.inner_xy(3))?;
        chains.push(Chain { atom: r, j_idx: 3 });
    } else {
        // Interior: split vertically onto the top and bottom edges, then
        // resolve each edge point. s is the barycentric weight of the top.
        let s = (y + 1.0) / 2.0;
        b.lam
            .split(0, Builder::diag(x, 1.0), Builder::diag(x, -1.0), s)?;
        let top = 0;
        let bottom = b.lam.len() - 1;
        let r_bot = b.deposit_split(bottom, (x, -1.0), 0, b.cfg.inner_xy(0))?;
        chains.push(Chain { atom: r_bot, j_idx: 0 });
        let r_top = b.deposit_split(top, (x, 1.0), 2, b.cfg.inner_xy(2))?;
        chains.push(Chain { atom: r_top, j_idx: 2 });
    }

    // Walk the inner square: each step sheds half a chain's weight onto an
    // extremal corner. Two chains from an interior start stay antipodal, so
    // the inner corner a chain moves to was vacated by the other chain one
    // round earlier and no inner-corner collisions occur.
    let target = 0.5f64.powi(depth as i32);
    let remainder = |lam: &Laminate, chains: &[Chain]| -> f64 {
        chains.iter().map(|c| lam.weights()[c.atom]).sum()
    };
    'rounds: for _ in 0..depth + 4 {
        if remainder(&b.lam, &chains) <= target {
            break;
        }
        for c in 0..chains.len() {
            let nxt = cycle_next(chains[c].j_idx);
            let cur = b.cfg.inner_xy(chains[c].j_idx);
            let r = b.deposit_split(chains[c].atom, cur, nxt, b.cfg.inner_xy(nxt))?;
            chains[c] = Chain { atom: r, j_idx: nxt };
            if remainder(&b.lam, &chains) <= target {
                break 'rounds;
            }
        }
    }
    debug_assert!(remainder(&b.lam, &chains) <= target);
    Ok(b.lam)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corner_mass(lam: &Laminate, tol: f64) -> f64 {
        let cfg = T4Config::standard();
        lam.weights()
            .iter()
            .zip(lam.atoms())
            .filter(|(_, a)| {
                (0..4).any(|i| {
                    let (cx, cy) = cfg.corner_xy(i);
                    a.dist(&Mat::diag(&[cx, cy])) <= tol
                })
            })
            .map(|(w, _)| w)
            .sum()
    }

    #[test]
    fn corner_start_is_dirac() {
        let lam = t4_staircase(&Mat::diag(&[-3.0, 1.0]), 5).unwrap();
        assert_eq!(lam.order(), 0);
        assert_eq!(lam.len(), 1);
    }

    #[test]
    fn inner_corner_depth_one_splits_once() {
        // J2 = diag(1, -1) -> half A1, half J1.
        let lam = t4_staircase(&Mat::diag(&[1.0, -1.0]), 1).unwrap();
        assert_eq!(lam.order(), 1);
        assert_eq!(lam.len(), 2);
        assert_eq!(lam.atoms()[0], Mat::diag(&[3.0, -1.0]));
        assert_eq!(lam.atoms()[1], Mat::diag(&[-1.0, -1.0]));
        assert_eq!(lam.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn center_reaches_requested_remainder() {
        for depth in 1..=8 {
            let lam = t4_staircase(&Mat::diag(&[0.0, 0.0]), depth).unwrap();
            let corner = corner_mass(&lam, 1e-6);
            let bound = 0.5f64.powi(depth as i32);
            assert!(
                corner >= 1.0 - bound - 1e-12,
                "depth {depth}: corner mass {corner} below {}",
                1.0 - bound
            );
            assert!(lam.is_reproducible(), "depth {depth} log must replay");
            let bc = lam.barycenter();
            assert!(bc.norm() <= 1e-12, "barycenter drifted to {bc}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let outside = Mat::diag(&[2.5, 0.5]);
        assert!(matches!(
            t4_staircase(&outside, 3),
            Err(LamError::NotInHull { .. })
        ));
        let skew = Mat::from_rows(&[vec![0.0, 0.3], vec![0.0, 0.0]]);
        assert!(matches!(
            t4_staircase(&skew, 3),
            Err(LamError::NotDiagonal { .. })
        ));
        assert!(matches!(
            t4_staircase(&Mat::diag(&[0.0, 0.0]), 0),
            Err(LamError::BadDepth { .. })
        ));
    }

    #[test]
    fn splits_are_axis_parallel() {
        let lam = t4_staircase(&Mat::diag(&[0.25, -0.4]), 6).unwrap();
        assert!(lam.order() > 0);
        for rec in lam.splits() {
            let d = rec.eta1.sub(&rec.eta2).unwrap();
            let offdiag = d.get(0, 1).abs().max(d.get(1, 0).abs());
            assert_eq!(offdiag, 0.0, "split endpoints must stay diagonal");
            let active = [d.get(0, 0), d.get(1, 1)]
                .iter()
                .filter(|v| v.abs() > 0.0)
                .count();
            assert_eq!(active, 1, "exactly one diagonal entry varies per split");
        }
    }
}
