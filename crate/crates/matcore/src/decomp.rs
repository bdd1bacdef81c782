use crate::mat::{vec_norm, Mat};
use crate::tol::{JACOBI_MAX_SWEEPS, JACOBI_ORTH_TOL, RANK_REL_TOL};
use crate::MatError;

/// Full singular value decomposition of a small matrix:
/// `M = U * diag(sigma) * V^T` with `U` (m x m) and `V` (n x n) orthogonal
/// and `sigma` nonincreasing and nonnegative, `len = min(m, n)`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Mat,
    pub sigma: Vec<f64>,
    pub v: Mat,
}

impl Svd {
    /// `U * diag(sigma) * V^T`, for residual checks.
    pub fn reconstruct(&self) -> Mat {
        let m = self.u.rows();
        let n = self.v.rows();
        let k = self.sigma.len();
        let mut scaled = Mat::zeros(m, k);
        for j in 0..k {
            for i in 0..m {
                scaled.set(i, j, self.u.get(i, j) * self.sigma[j]);
            }
        }
        let vk = Mat::from_fn(n, k, |i, j| self.v.get(i, j));
        scaled.matmul(&vk.transpose())
    }
}

/// One-sided Jacobi SVD for matrices up to 8x8.
///
/// Rotations orthogonalize column pairs of a working copy while the same
/// rotations accumulate into `V`; singular values are the final column
/// norms. Columns of `U` beyond the numerical rank are completed to an
/// orthonormal basis from coordinate vectors, deterministically.
///
/// # Errors
/// [`MatError::TooLarge`] above dimension 8, [`MatError::NonFinite`] for
/// NaN/Inf entries, [`MatError::NonConvergence`] if the sweep cap is hit.
pub fn svd_small(m: &Mat) -> Result<Svd, MatError> {
    if m.rows() > 8 || m.cols() > 8 {
        return Err(MatError::TooLarge { dim: m.rows().max(m.cols()) });
    }
    if !m.is_finite() {
        return Err(MatError::NonFinite);
    }
    if m.rows() < m.cols() {
        // Work on the transpose and swap the factors back.
        let t = svd_small(&m.transpose())?;
        return Ok(Svd { u: t.v, sigma: t.sigma, v: t.u });
    }

    let rows = m.rows();
    let cols = m.cols();
    let scale = m.max_abs();
    if scale == 0.0 {
        return Ok(Svd {
            u: Mat::identity(rows),
            sigma: vec![0.0; cols],
            v: Mat::identity(cols),
        });
    }

    let mut w = m.scale(1.0 / scale);
    let mut v = Mat::identity(cols);

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols.saturating_sub(1) {
            for q in (p + 1)..cols {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for i in 0..rows {
                    let wp = w.get(i, p);
                    let wq = w.get(i, q);
                    app += wp * wp;
                    aqq += wq * wq;
                    apq += wp * wq;
                }
                if apq.abs() <= JACOBI_ORTH_TOL * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                // Classic Jacobi angle: the smaller root keeps rotations
                // bounded by pi/4 and the iteration monotone.
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let wp = w.get(i, p);
                    let wq = w.get(i, q);
                    w.set(i, p, c * wp - s * wq);
                    w.set(i, q, s * wp + c * wq);
                }
                for i in 0..cols {
                    let vp = v.get(i, p);
                    let vq = v.get(i, q);
                    v.set(i, p, c * vp - s * vq);
                    v.set(i, q, s * vp + c * vq);
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(MatError::NonConvergence);
    }

    // Column norms are the singular values (on the scaled matrix).
    let mut order: Vec<usize> = (0..cols).collect();
    let norms: Vec<f64> = (0..cols).map(|j| vec_norm(&w.col(j))).collect();
    // Stable sort: descending by norm, index as tie-break for determinism.
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap().then(a.cmp(&b)));

    let sigma_max = norms[order[0]];
    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(rows);
    let mut sigma = Vec::with_capacity(cols);
    let mut v_sorted = Mat::zeros(cols, cols);
    for (slot, &j) in order.iter().enumerate() {
        let mut col = w.col(j);
        let nrm = norms[j];
        sigma.push(nrm * scale);
        if nrm > sigma_max * 1e-15 && nrm > 0.0 {
            for x in col.iter_mut() {
                *x /= nrm;
            }
            u_cols.push(col);
        }
        for i in 0..cols {
            v_sorted.set(i, slot, v.get(i, j));
        }
    }
    complete_orthonormal(&mut u_cols, rows);

    let mut u = Mat::zeros(rows, rows);
    for (j, col) in u_cols.iter().enumerate() {
        for i in 0..rows {
            u.set(i, j, col[i]);
        }
    }

    // Deterministic sign convention: first entry of each V column with
    // magnitude above 1e-12 is positive; U flips along (only affects the
    // factors, not the product).
    let k = sigma.len();
    for j in 0..cols {
        let col = v_sorted.col(j);
        let lead = col.iter().find(|x| x.abs() > 1e-12);
        if let Some(&x) = lead {
            if x < 0.0 {
                for i in 0..cols {
                    v_sorted.set(i, j, -v_sorted.get(i, j));
                }
                if j < k {
                    for i in 0..rows {
                        u.set(i, j, -u.get(i, j));
                    }
                }
            }
        }
    }

    Ok(Svd { u, sigma, v: v_sorted })
}

/// Extends `cols` (orthonormal) to a full orthonormal basis of R^dim by
/// Gram-Schmidt against coordinate vectors, always taking the candidate
/// with the largest residual so the completion is deterministic.
fn complete_orthonormal(cols: &mut Vec<Vec<f64>>, dim: usize) {
    while cols.len() < dim {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for axis in 0..dim {
            let mut cand = vec![0.0; dim];
            cand[axis] = 1.0;
            for c in cols.iter() {
                let proj: f64 = c.iter().zip(&cand).map(|(a, b)| a * b).sum();
                for (x, &ci) in cand.iter_mut().zip(c.iter()) {
                    *x -= proj * ci;
                }
            }
            let nrm = vec_norm(&cand);
            if best.as_ref().map_or(true, |(bn, _)| nrm > *bn + 1e-12) {
                best = Some((nrm, cand));
            }
        }
        let (nrm, mut cand) = best.expect("dimension is positive");
        debug_assert!(nrm > 1e-8, "orthonormal completion degenerated");
        for x in cand.iter_mut() {
            *x /= nrm;
        }
        // Re-orthogonalize once; cheap insurance at these dimensions.
        let copy = cand.clone();
        for c in cols.iter() {
            let proj: f64 = c.iter().zip(&copy).map(|(a, b)| a * b).sum();
            for (x, &ci) in cand.iter_mut().zip(c.iter()) {
                *x -= proj * ci;
            }
        }
        let n2 = vec_norm(&cand);
        for x in cand.iter_mut() {
            *x /= n2;
        }
        cols.push(cand);
    }
}

/// Numeric rank: the number of singular values exceeding `tol * sigma_max`.
/// The zero matrix has rank 0. `tol` must be positive; see
/// [`crate::tol::RANK_REL_TOL`] for the default used elsewhere.
pub fn rank(m: &Mat, tol: f64) -> usize {
    assert!(tol > 0.0, "rank tolerance must be positive");
    let svd = svd_small(m).expect("rank is only called on finite small matrices");
    let sigma_max = svd.sigma.first().copied().unwrap_or(0.0);
    if sigma_max == 0.0 {
        return 0;
    }
    svd.sigma.iter().filter(|&&s| s > tol * sigma_max).count()
}

/// Factors a rank-one matrix as `a (x) b` with `|b| = 1` and the first
/// nonzero entry of `b` positive (the sign convention that makes
/// decompositions reproducible).
///
/// # Errors
/// [`MatError::NotRankOne`] when the second singular value is not
/// negligible against the first, or the matrix is zero.
pub fn rank_one_decompose(m: &Mat) -> Result<(Vec<f64>, Vec<f64>), MatError> {
    let svd = svd_small(m)?;
    let s1 = svd.sigma[0];
    if s1 == 0.0 {
        return Err(MatError::NotRankOne { ratio: f64::NAN });
    }
    let s2 = svd.sigma.get(1).copied().unwrap_or(0.0);
    if s2 > RANK_REL_TOL * s1 {
        return Err(MatError::NotRankOne { ratio: s2 / s1 });
    }
    let mut a: Vec<f64> = svd.u.col(0).iter().map(|x| x * s1).collect();
    let mut b = svd.v.col(0);
    // |b| from the SVD is 1 up to rounding; renormalize so the stored pair
    // satisfies the unit-length invariant as tightly as possible.
    let bn = vec_norm(&b);
    for x in b.iter_mut() {
        *x /= bn;
    }
    for x in a.iter_mut() {
        *x *= bn;
    }
    let lead = b.iter().find(|x| x.abs() > 1e-12);
    if let Some(&x) = lead {
        if x < 0.0 {
            for v in a.iter_mut() {
                *v = -*v;
            }
            for v in b.iter_mut() {
                *v = -*v;
            }
        }
    }
    Ok((a, b))
}

/// Symmetric Householder reflector with `P v = |v| e1`, `P = P^T`, `P^2 = I`.
///
/// The first component of the mirror vector is computed as
/// `-(sum of squares of the tail) / (v1 + |v|)` when `v1 > 0`, avoiding the
/// cancellation that the naive `v1 - |v|` suffers near the `+e1` axis.
///
/// # Errors
/// [`MatError::ZeroVector`] when `|v| = 0`.
pub fn householder_to_e1(v: &[f64]) -> Result<Mat, MatError> {
    let n = v.len();
    assert!(n > 0, "empty vector");
    let norm = vec_norm(v);
    if norm == 0.0 {
        return Err(MatError::ZeroVector);
    }
    let tail_sq: f64 = v[1..].iter().map(|x| x * x).sum();
    if tail_sq == 0.0 {
        // v is on the e1 axis: identity for +e1, a sign flip for -e1.
        let mut p = Mat::identity(n);
        if v[0] < 0.0 {
            p.set(0, 0, -1.0);
        }
        return Ok(p);
    }
    let mut w = v.to_vec();
    w[0] = if v[0] > 0.0 { -tail_sq / (v[0] + norm) } else { v[0] - norm };
    let w_sq: f64 = w.iter().map(|x| x * x).sum();
    let mut p = Mat::identity(n);
    for i in 0..n {
        for j in 0..n {
            p.set(i, j, p.get(i, j) - 2.0 * w[i] * w[j] / w_sq);
        }
    }
    Ok(p)
}

/// Orthogonal `R` with `R^T b = e1` for a unit vector `b` (equivalently,
/// the first column of `R` is `b`). Implemented as the symmetric reflector
/// sending `b` to `e1`, which is its own transpose, so both readings agree.
///
/// # Errors
/// [`MatError::NotUnit`] when `|b|` differs from 1 by more than 1e-9.
pub fn rotation_to_e1(b: &[f64]) -> Result<Mat, MatError> {
    let norm = vec_norm(b);
    if (norm - 1.0).abs() > 1e-9 {
        return Err(MatError::NotUnit { norm });
    }
    householder_to_e1(b)
}
