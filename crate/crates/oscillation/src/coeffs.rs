//! Closed-form coefficient tensor for constraint-free oscillation.
//!
//! Given canonical weights `L` and a reduced direction `a` with `a[0] = 0`,
//! the tensor `t[i][k][l]` defines first-order differential operators whose
//! image automatically satisfies `sum_ij L_ij d_j(phi_i) = 0` for every input
//! function. The defining linear system couples, for every output slot `k`
//! and every unordered pair of input axes `(l, j)`,
//!
//! ```text
//! sum_i ( L[i][j] t[i][k][l] + L[i][l] t[i][k][j] ) = 0      (l != j)
//! sum_i   L[i][j] t[i][k][j]                        = 0      (l == j)
//! ```
//!
//! together with the normalisation `t[j][1][0] = a[j]` (zero-based `k = 1`)
//! and `t[j][k][0] = 0` for every other `k`. One explicit solution populates
//! only the `k = 1` slab; its entries are rational in the canonical weights.

use crate::frame::canonical_form_check;
use crate::{OscError, Result};
use matcore::Mat;

/// Dense `m x m x n` tensor of operator coefficients.
///
/// Only the slab `k = 1` (zero-based) is ever nonzero, which mirrors the
/// normalisation: the oscillation enters through the second component of the
/// vector potential. `rank_r` records the canonical rank the entries were
/// solved for.
#[derive(Debug, Clone)]
pub struct CoefficientTensor {
    rows: usize,
    cols: usize,
    rank_r: usize,
    data: Vec<f64>,
}

impl CoefficientTensor {
    /// Entry `t[i][k][l]`, all indices zero-based.
    pub fn get(&self, i: usize, k: usize, l: usize) -> f64 {
        debug_assert!(i < self.rows && k < self.rows && l < self.cols);
        self.data[(i * self.rows + k) * self.cols + l]
    }

    fn set(&mut self, i: usize, k: usize, l: usize, value: f64) {
        self.data[(i * self.rows + k) * self.cols + l] = value;
    }

    /// Entry of the active slab: `t[i][1][l]`.
    pub fn active(&self, i: usize, l: usize) -> f64 {
        self.get(i, 1, l)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rank_r(&self) -> usize {
        self.rank_r
    }

    /// The active slab as an `m x n` matrix; row `i`, column `l` holds the
    /// weight that `d_l` of the scalar carrier contributes to output `i`.
    pub fn active_matrix(&self) -> Mat {
        Mat::from_fn(self.rows, self.cols, |i, l| self.active(i, l))
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Bound used in amplitude budgets: the Euclidean norm over outputs of
    /// the per-output absolute row sums of the active slab.
    pub fn amplitude_bound(&self) -> f64 {
        (0..self.rows)
            .map(|i| {
                let row: f64 = (0..self.cols).map(|l| self.active(i, l).abs()).sum();
                row * row
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Solves the coefficient system in closed form for canonical inputs.
///
/// `l_can` must pass [`canonical_form_check`]; `a_can` must have a vanishing
/// leading component. The returned tensor satisfies every defining equation
/// to machine precision and the normalisation exactly.
///
/// # Errors
/// [`OscError::NonCanonical`] when the weight matrix is not canonical or the
/// direction has a nonzero leading component.
pub fn solve_coefficients(l_can: &Mat, a_can: &[f64]) -> Result<CoefficientTensor> {
    let m = l_can.rows();
    let n = l_can.cols();
    if a_can.len() != m {
        return Err(OscError::NonCanonical {
            reason: format!("direction has {} components, weights have {m} rows", a_can.len()),
        });
    }
    if a_can[0] != 0.0 {
        return Err(OscError::NonCanonical {
            reason: format!("leading direction component {} is not zero", a_can[0]),
        });
    }
    let (rank_r, l) = canonical_form_check(l_can)?;

    let mut t = CoefficientTensor {
        rows: m,
        cols: n,
        rank_r,
        data: vec![0.0; m * m * n],
    };
    let lead = l.get(0, 0);

    // Normalisation: t[j][1][0] = a[j]. The leading component is zero, so
    // the j = 0 entry stays zero and the first operator has no d_1 term.
    for j in 1..m {
        t.set(j, 1, 0, a_can[j]);
    }

    // Diagonal-block columns 1..rank_r pair with the first row.
    for j in 1..rank_r.min(n) {
        let sj = l.get(j, j);
        let f0j = l.get(0, j);
        t.set(0, 1, j, -(sj / lead) * a_can[j]);
        t.set(j, 1, j, (f0j / lead) * a_can[j]);
    }
    for j in 2..rank_r.min(n) {
        for p in 1..j {
            let sj = l.get(j, j);
            let sp = l.get(p, p);
            let f0j = l.get(0, j);
            let f0p = l.get(0, p);
            t.set(p, 1, j, (f0p * sj * a_can[j] + f0j * sp * a_can[p]) / (sp * lead));
            // The mirrored entry stays zero: the pair equation for (p, j)
            // is already balanced by the entry above.
        }
    }

    // Columns beyond the canonical rank only meet the first row of L.
    for j in rank_r..n {
        let f0j = l.get(0, j);
        for p in 1..rank_r.min(m) {
            t.set(p, 1, j, (f0j / lead) * a_can[p]);
        }
    }

    debug_assert!(
        coefficient_residual(&t, &l) <= 1e-12 * l.max_abs().max(1.0) * tensor_scale(a_can),
        "closed-form solution violates its own system"
    );
    Ok(t)
}

fn tensor_scale(a: &[f64]) -> f64 {
    a.iter().fold(1.0_f64, |m, x| m.max(x.abs()))
}

/// Largest residual over every defining equation of the tensor, every output
/// slot `k` and every unordered axis pair included.
pub fn coefficient_residual(t: &CoefficientTensor, l_can: &Mat) -> f64 {
    let m = t.rows();
    let n = t.cols();
    let mut worst = 0.0_f64;
    for k in 0..m {
        for l in 0..n {
            for j in l..n {
                let mut acc = 0.0;
                for i in 0..m {
                    if l == j {
                        acc += l_can.get(i, j) * t.get(i, k, j);
                    } else {
                        acc += l_can.get(i, j) * t.get(i, k, l) + l_can.get(i, l) * t.get(i, k, j);
                    }
                }
                worst = worst.max(acc.abs());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frozen_two_by_two_example() {
        let l = Mat::from_rows(&[vec![2.0, 1.0], vec![0.0, 3.0]]);
        let t = solve_coefficients(&l, &[0.0, 5.0]).unwrap();
        assert_eq!(t.active(0, 1), -7.5, "t[0][1][1] = -(3/2) * 5");
        assert_eq!(t.active(1, 0), 5.0, "normalisation entry");
        assert_eq!(t.active(1, 1), 2.5, "t[1][1][1] = (1/2) * 5");
        assert_eq!(t.active(0, 0), 0.0, "leading entry stays zero");
        // Every non-active slab is zero.
        for i in 0..2 {
            for l_idx in 0..2 {
                assert_eq!(t.get(i, 0, l_idx), 0.0);
            }
        }
        assert!(coefficient_residual(&t, &l) < 1e-12);
    }

    #[test]
    fn zero_direction_gives_zero_tensor() {
        let l = Mat::from_rows(&[vec![2.0, 1.0], vec![0.0, 3.0]]);
        let t = solve_coefficients(&l, &[0.0, 0.0]).unwrap();
        assert_eq!(t.max_abs(), 0.0);
    }

    #[test]
    fn rank_one_weights_keep_only_the_normalisation() {
        // Canonical rank 1: the block vanishes, so only t[j][1][0] survive.
        let l = Mat::from_rows(&[vec![1.5, -0.25, 0.75], vec![0.0, 0.0, 0.0]]);
        let t = solve_coefficients(&l, &[0.0, 2.0]).unwrap();
        assert_eq!(t.active(1, 0), 2.0);
        let nonzero: usize = (0..2)
            .flat_map(|i| (0..3).map(move |l_idx| (i, l_idx)))
            .filter(|&(i, l_idx)| t.active(i, l_idx) != 0.0)
            .count();
        assert_eq!(nonzero, 1, "only the normalisation entry is populated");
        assert!(coefficient_residual(&t, &l) < 1e-12);
    }

    #[test]
    fn non_canonical_inputs_are_rejected() {
        let skew = Mat::from_rows(&[vec![2.0, 1.0], vec![0.5, 3.0]]);
        assert!(matches!(
            solve_coefficients(&skew, &[0.0, 1.0]),
            Err(OscError::NonCanonical { .. })
        ));
        let l = Mat::from_rows(&[vec![2.0, 1.0], vec![0.0, 3.0]]);
        assert!(matches!(
            solve_coefficients(&l, &[0.5, 1.0]),
            Err(OscError::NonCanonical { .. })
        ));
    }

    #[test]
    fn full_rank_four_by_four_solves_exactly() {
        let l = Mat::from_rows(&[
            vec![2.0, -1.0, 0.5, 3.0],
            vec![0.0, 1.5, 0.0, 0.0],
            vec![0.0, 0.0, 0.8, 0.0],
            vec![0.0, 0.0, 0.0, 2.5],
        ]);
        let a = [0.0, 1.0, -2.0, 0.5];
        let t = solve_coefficients(&l, &a).unwrap();
        let scale = l.max_abs() * a.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        assert!(coefficient_residual(&t, &l) <= 1e-13 * scale.max(1.0));
        for j in 1..4 {
            assert_eq!(t.active(j, 0), a[j], "normalisation row {j}");
        }
    }
}
