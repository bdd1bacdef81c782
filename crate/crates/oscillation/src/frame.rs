//! Canonical frame reduction for constrained rank-one oscillation.
//!
//! A patch oscillates along a rank-one direction `a (x) b` under a scalar
//! linear constraint with weight matrix `L`. Three orthogonal maps turn the
//! general data into a canonical one:
//!
//! * `R` aligns `b` with the first input axis,
//! * `P` aligns `L b` with the first output axis, and
//! * a block SVD `(U, V)` diagonalises the remaining `(m-1) x (n-1)` block.
//!
//! The composed maps `S = P U` and `T = R V` satisfy `L'' = S^T L T` and
//! `T e1 = b`. The reduced direction `a'' = S^T a` has a vanishing first
//! component exactly when both endpoints meet the constraint, because that
//! component equals `L(a (x) b) / |L b|`.

use crate::tol::{
    BLOCK_RANK_TOL, CANONICAL_FORM_TOL, DIRECTION_SNAP_TOL, PAIR_CONSTRAINT_TOL,
};
use crate::{OscError, Result};
use matcore::{
    householder_to_e1, rotation_to_e1, svd_small, vec_norm, LinearConstraint, Mat, RankOnePair,
};

/// Which part of the reduction chain is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionCase {
    /// Input was already canonical; every map is the identity.
    AlreadyCanonical,
    /// Direction and leading column were aligned; only the block SVD acts.
    BlockOnly,
    /// General data; the full chain acts.
    Full,
}

/// Orthogonal reduction chain together with the canonical data it produces.
///
/// The canonical weight matrix `l_can` has `|L b| > 0` in the leading entry,
/// zeros below it, a diagonal block in rows and columns `2..rank_r`, and an
/// unconstrained first row. `a_can` is the reduced direction with its first
/// component snapped to exact zero.
#[derive(Debug, Clone)]
pub struct CanonicalFrame {
    pub rows: usize,
    pub cols: usize,
    /// Output reflector with `P (L b) = |L b| e1`.
    pub p: Mat,
    /// Input reflector whose first column is `b`.
    pub r_rot: Mat,
    /// Block-diagonal output rotation from the SVD of the reduced block.
    pub u: Mat,
    /// Block-diagonal input rotation from the SVD of the reduced block.
    pub v: Mat,
    /// Composed output map `S = P U`.
    pub s: Mat,
    /// Composed input map `T = R V`; `T e1 = b`.
    pub t: Mat,
    /// Canonical weight matrix `S^T L T` with sub-tolerance entries snapped.
    pub l_can: Mat,
    /// Reduced direction `S^T a` with the leading component snapped to zero.
    pub a_can: Vec<f64>,
    /// Canonical rank: one for the leading column plus the block rank.
    pub rank_r: usize,
    pub case: ReductionCase,
}

impl CanonicalFrame {
    /// True when the whole chain is the identity.
    pub fn is_identity(&self) -> bool {
        matches!(self.case, ReductionCase::AlreadyCanonical)
    }

    /// Maps a canonical value vector to the physical output frame.
    pub fn value_to_physical(&self, v: &[f64]) -> Vec<f64> {
        if self.is_identity() {
            v.to_vec()
        } else {
            self.s.matvec(v)
        }
    }

    /// Maps a canonical gradient to the physical frame: `S G T^T`.
    pub fn grad_to_physical(&self, g: &Mat) -> Mat {
        if self.is_identity() {
            g.clone()
        } else {
            self.s.matmul(g).matmul(&self.t.transpose())
        }
    }

    /// Maps a physical point into canonical coordinates: `y = T^T x`.
    pub fn point_to_canonical(&self, x: &[f64]) -> Vec<f64> {
        if self.is_identity() {
            x.to_vec()
        } else {
            self.t.transpose().matvec(x)
        }
    }
}

fn is_exact_e1(v: &[f64]) -> bool {
    v[0] == 1.0 && v[1..].iter().all(|&x| x == 0.0)
}

/// Checks that `l` is canonical and returns its rank together with a copy
/// whose sub-tolerance entries are snapped to exact zero.
///
/// Canonical means: a nonzero leading entry, zeros below it in the first
/// column, and a diagonal lower-right block whose nonzero entries form a
/// leading prefix of the diagonal. The first row is unconstrained.
///
/// # Errors
/// [`OscError::NonCanonical`] describing the offending entry.
pub fn canonical_form_check(l: &Mat) -> Result<(usize, Mat)> {
    let m = l.rows();
    let n = l.cols();
    let scale = l.max_abs();
    let tol = CANONICAL_FORM_TOL * scale.max(1.0);
    if l.get(0, 0).abs() <= tol {
        return Err(OscError::NonCanonical {
            reason: format!("leading entry {} is below tolerance", l.get(0, 0)),
        });
    }
    let mut out = l.clone();
    for i in 1..m {
        if l.get(i, 0).abs() > tol {
            return Err(OscError::NonCanonical {
                reason: format!("first column has entry {} in row {i}", l.get(i, 0)),
            });
        }
        out.set(i, 0, 0.0);
    }
    for i in 1..m {
        for j in 1..n {
            if i != j && l.get(i, j).abs() > tol {
                return Err(OscError::NonCanonical {
                    reason: format!("block entry ({i}, {j}) = {} is off-diagonal", l.get(i, j)),
                });
            }
            if i != j {
                out.set(i, j, 0.0);
            }
        }
    }
    let block_len = (m - 1).min(n - 1);
    let diag_tol = BLOCK_RANK_TOL * scale.max(1.0);
    let mut rank_r = 1;
    let mut seen_zero = false;
    for d in 1..=block_len {
        let entry = l.get(d, d);
        if entry.abs() > diag_tol {
            if seen_zero {
                return Err(OscError::NonCanonical {
                    reason: format!("diagonal entry ({d}, {d}) follows a zero entry"),
                });
            }
            rank_r += 1;
        } else {
            seen_zero = true;
            out.set(d, d, 0.0);
        }
    }
    Ok((rank_r, out))
}

/// Reduces a constrained rank-one pair to the canonical frame.
///
/// # Errors
/// * [`OscError::ConstraintViolated`] when the two endpoint matrices
///   evaluate differently under the constraint, or when the reduced
///   direction has a leading component too large to snap.
/// * [`OscError::DegenerateDirection`] when the weights annihilate `b`.
pub fn canonicalize(c: &LinearConstraint, pair: &RankOnePair) -> Result<CanonicalFrame> {
    let m = c.rows();
    let n = c.cols();
    if pair.a_mat.rows() != m || pair.a_mat.cols() != n {
        return Err(OscError::Mat(matcore::MatError::ShapeMismatch {
            expected_rows: m,
            expected_cols: n,
            got_rows: pair.a_mat.rows(),
            got_cols: pair.a_mat.cols(),
        }));
    }

    let la = c.apply(&pair.a_mat);
    let lb_val = c.apply(&pair.b_mat);
    let value_scale = la.abs().max(lb_val.abs()).max(1.0);
    if (la - lb_val).abs() > PAIR_CONSTRAINT_TOL * value_scale {
        return Err(OscError::ConstraintViolated { lhs: la, rhs: lb_val });
    }

    let lb = c.weights.matvec(&pair.b);
    let weight_scale = c.weights.max_abs().max(1.0);
    if vec_norm(&lb) <= 1e-12 * weight_scale {
        return Err(OscError::DegenerateDirection);
    }

    // Shortcut: direction already on the first axis and weights already
    // canonical with a positive leading entry. The chain is exactly the
    // identity, which keeps plateau values bit-exact downstream.
    if is_exact_e1(&pair.b) && c.weights.get(0, 0) > 0.0 {
        if let Ok((rank_r, l_can)) = canonical_form_check(&c.weights) {
            let a_can = snap_leading(pair.a.clone(), la, lb_val)?;
            let eye_m = Mat::identity(m);
            let eye_n = Mat::identity(n);
            return Ok(CanonicalFrame {
                rows: m,
                cols: n,
                p: eye_m.clone(),
                r_rot: eye_n.clone(),
                u: eye_m.clone(),
                v: eye_n.clone(),
                s: eye_m,
                t: eye_n,
                l_can,
                a_can,
                rank_r,
                case: ReductionCase::AlreadyCanonical,
            });
        }
    }

    let r_rot = rotation_to_e1(&pair.b)?;
    let l_after_r = c.weights.matmul(&r_rot);

    // First column of L R is L b; send it to the first output axis. When the
    // tail is already below tolerance, keep P an exact identity (or an exact
    // sign flip) so the BlockOnly case composes without rounding.
    let col: Vec<f64> = (0..m).map(|i| l_after_r.get(i, 0)).collect();
    let col_norm = vec_norm(&col);
    let tail_small = col[1..].iter().all(|&x| x.abs() <= CANONICAL_FORM_TOL * col_norm);
    let p = if tail_small && col[0] > 0.0 {
        Mat::identity(m)
    } else {
        householder_to_e1(&col)?
    };
    let l_prime = p.matmul(&l_after_r);

    // Snap the first column to the exact reflector image |L b| e1.
    let mut l_prime = l_prime;
    let lead = l_prime.get(0, 0);
    debug_assert!((lead - col_norm).abs() <= 1e-9 * col_norm.max(1.0));
    for i in 1..m {
        debug_assert!(l_prime.get(i, 0).abs() <= 1e-9 * col_norm.max(1.0));
        l_prime.set(i, 0, 0.0);
    }

    let (u, v, l_can, rank_r) = if m > 1 && n > 1 {
        let block = l_prime.block(1, m, 1, n);
        if block.max_abs() == 0.0 {
            (Mat::identity(m), Mat::identity(n), l_prime.clone(), 1)
        } else {
            let svd = svd_small(&block)?;
            let sig_max = svd.sigma[0].max(0.0);
            let block_rank = svd
                .sigma
                .iter()
                .filter(|&&s| s > BLOCK_RANK_TOL * sig_max.max(1.0))
                .count();
            let u = svd.u.embed_block_diag(1);
            let v = svd.v.embed_block_diag(1);
            let mut l_can = u.transpose().matmul(&l_prime).matmul(&v);
            // The product reproduces the SVD shape up to rounding; snap it.
            for i in 1..m {
                l_can.set(i, 0, 0.0);
                for j in 1..n {
                    if i == j && i <= block_rank {
                        l_can.set(i, j, svd.sigma[i - 1]);
                    } else {
                        debug_assert!(
                            l_can.get(i, j).abs() <= 1e-9 * sig_max.max(1.0),
                            "block residue at ({i}, {j})"
                        );
                        l_can.set(i, j, 0.0);
                    }
                }
            }
            (u, v, l_can, 1 + block_rank)
        }
    } else {
        (Mat::identity(m), Mat::identity(n), l_prime.clone(), 1)
    };

    let s = p.matmul(&u);
    let t = r_rot.matmul(&v);

    let pa = p.matvec(&pair.a);
    let a_can = snap_leading(u.transpose().matvec(&pa), la, lb_val)?;

    let case = if is_exact_e1(&pair.b) && tail_small && col[0] > 0.0 {
        ReductionCase::BlockOnly
    } else {
        ReductionCase::Full
    };

    let frame = CanonicalFrame {
        rows: m,
        cols: n,
        p,
        r_rot,
        u,
        v,
        s,
        t,
        l_can,
        a_can,
        rank_r,
        case,
    };
    debug_assert!(frame_consistent(&frame, c, pair));
    Ok(frame)
}

/// Validates and zeroes the leading component of the reduced direction.
/// That component equals `L(a (x) b) / |L b|`, which vanishes for a
/// constraint-compatible pair; a large value means the inputs are bad.
fn snap_leading(mut a_can: Vec<f64>, la: f64, lb_val: f64) -> Result<Vec<f64>> {
    let norm = vec_norm(&a_can);
    if a_can[0].abs() > DIRECTION_SNAP_TOL * norm.max(1.0) {
        return Err(OscError::ConstraintViolated { lhs: la, rhs: lb_val });
    }
    a_can[0] = 0.0;
    Ok(a_can)
}

fn frame_consistent(
    frame: &CanonicalFrame,
    c: &LinearConstraint,
    pair: &RankOnePair,
) -> bool {
    let m = frame.rows;
    let n = frame.cols;
    let ortho = |q: &Mat, d: usize| q.transpose().matmul(q).dist(&Mat::identity(d)) < 1e-10;
    if !(ortho(&frame.s, m) && ortho(&frame.t, n)) {
        return false;
    }
    // T e1 = b.
    let te1 = frame.t.matvec(&unit(n, 0));
    let b_err: f64 = te1
        .iter()
        .zip(&pair.b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    if b_err > 1e-10 {
        return false;
    }
    // S^T L T = L'' up to the snapped entries.
    let reduced = frame.s.transpose().matmul(&c.weights).matmul(&frame.t);
    reduced.dist(&frame.l_can) <= 1e-8 * c.weights.max_abs().max(1.0)
}

fn unit(n: usize, k: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[k] = 1.0;
    e
}
