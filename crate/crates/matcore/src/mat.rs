use crate::MatError;
use std::fmt;

/// Dense row-major matrix of `f64`.
///
/// The only norm used anywhere is the Hilbert-Schmidt (Frobenius) norm, so
/// `norm` means that throughout.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Mat {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Mat {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds from nested rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Mat {
        assert!(!rows.is_empty(), "need at least one row");
        let cols = rows[0].len();
        assert!(cols > 0, "need at least one column");
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Mat { rows: rows.len(), cols, data }
    }

    /// Builds from a flat row-major slice.
    pub fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Mat {
        assert_eq!(data.len(), rows * cols, "flat data length mismatch");
        Mat { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Mat {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Diagonal square matrix from the given entries.
    pub fn diag(entries: &[f64]) -> Mat {
        let mut m = Mat::zeros(entries.len(), entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m.set(i, i, e);
        }
        m
    }

    /// Outer product `a (x) b`, an `len(a) x len(b)` matrix.
    pub fn outer(a: &[f64], b: &[f64]) -> Mat {
        let mut m = Mat::zeros(a.len(), b.len());
        for i in 0..a.len() {
            for j in 0..b.len() {
                m.set(i, j, a[i] * b[j]);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn same_shape(&self, other: &Mat) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    fn shape_check(&self, other: &Mat) -> Result<(), MatError> {
        if !self.same_shape(other) {
            return Err(MatError::ShapeMismatch {
                expected_rows: self.rows,
                expected_cols: self.cols,
                got_rows: other.rows,
                got_cols: other.cols,
            });
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn add(&self, other: &Mat) -> Result<Mat, MatError> {
        self.shape_check(other)?;
        let data = self.data.iter().zip(&other.data).map(|(x, y)| x + y).collect();
        Ok(Mat { rows: self.rows, cols: self.cols, data })
    }

    pub fn sub(&self, other: &Mat) -> Result<Mat, MatError> {
        self.shape_check(other)?;
        let data = self.data.iter().zip(&other.data).map(|(x, y)| x - y).collect();
        Ok(Mat { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, s: f64) -> Mat {
        let data = self.data.iter().map(|x| x * s).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    /// `self + s * other`, the common axpy step.
    pub fn add_scaled(&self, other: &Mat, s: f64) -> Result<Mat, MatError> {
        self.shape_check(other)?;
        let data = self.data.iter().zip(&other.data).map(|(x, y)| x + s * y).collect();
        Ok(Mat { rows: self.rows, cols: self.cols, data })
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let lik = self.get(i, k);
                if lik == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += lik * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    /// Matrix-vector product `self * x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "vector length must match columns");
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += self.get(i, j) * x[j];
            }
            out[i] = acc;
        }
        out
    }

    /// Hilbert-Schmidt inner product `sum_ij self_ij other_ij`.
    pub fn frob_dot(&self, other: &Mat) -> f64 {
        debug_assert!(self.same_shape(other));
        self.data.iter().zip(&other.data).map(|(x, y)| x * y).sum()
    }

    /// Hilbert-Schmidt norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self.get(i, j)).collect()
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Contiguous sub-block `[r0..r1) x [c0..c1)`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Mat {
        assert!(r0 < r1 && r1 <= self.rows && c0 < c1 && c1 <= self.cols);
        Mat::from_fn(r1 - r0, c1 - c0, |i, j| self.get(r0 + i, c0 + j))
    }

    /// Block-diagonal embedding: identity of size `lead` in the top-left
    /// corner, `self` in the bottom-right.
    pub fn embed_block_diag(&self, lead: usize) -> Mat {
        let mut out = Mat::identity(lead + self.rows.max(self.cols));
        // Only meaningful for square blocks; asserted to catch misuse.
        assert_eq!(self.rows, self.cols, "block-diagonal embedding needs a square block");
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(lead + i, lead + j, self.get(i, j));
            }
        }
        out
    }

    pub fn dist(&self, other: &Mat) -> f64 {
        debug_assert!(self.same_shape(other));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }
}

impl fmt::Display for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:+.6e}", self.get(i, j))?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

// ── vector helpers ──────────────────────────────────────────────────────────

pub fn vec_dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn vec_norm(a: &[f64]) -> f64 {
    vec_dot(a, a).sqrt()
}

pub fn vec_scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn vec_sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_against_hand_computation() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let b = Mat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let c = a.matmul(&b);
        assert_eq!(c, Mat::from_rows(&[vec![2.0, 1.0], vec![4.0, 3.0]]));
    }

    #[test]
    fn outer_product_shape_and_values() {
        let m = Mat::outer(&[1.0, 2.0, 3.0], &[4.0, 5.0]);
        assert_eq!(m.rows(), 3);
        assert_eq!(m.cols(), 2);
        assert_eq!(m.get(2, 1), 15.0);
    }

    #[test]
    fn block_extraction() {
        let m = Mat::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0], vec![7.0, 8.0, 9.0]]);
        let b = m.block(1, 3, 1, 3);
        assert_eq!(b, Mat::from_rows(&[vec![5.0, 6.0], vec![8.0, 9.0]]));
    }
}
