//! Weighted atom lists with recorded rank-one split logs.

use crate::tol::{ATOM_DISTINCT_TOL, ON_SEGMENT_TOL};
use crate::{LamError, TestFunction};
use matcore::{rank_one_decompose, Mat, MatError};

/// One entry of the construction log: atom `atom_index` (holding matrix
/// `replaced`) was split into `eta1` with fraction `s` of its weight and
/// `eta2` with the rest.
#[derive(Debug, Clone)]
pub struct SplitRecord {
    pub atom_index: usize,
    pub replaced: Mat,
    pub eta1: Mat,
    pub eta2: Mat,
    pub s: f64,
}

/// A laminate of finite order: a probability measure `sum_j w_j delta_{xi_j}`
/// on `m x n` matrices, together with the split log that produced it from a
/// single Dirac mass.
///
/// Atom ordering is deterministic: a split replaces the atom in place with
/// its first endpoint and appends the second endpoint at the end of the
/// list. Replaying the log therefore reproduces the atom list bit for bit.
#[derive(Debug, Clone)]
pub struct Laminate {
    rows: usize,
    cols: usize,
    root: Mat,
    weights: Vec<f64>,
    atoms: Vec<Mat>,
    splits: Vec<SplitRecord>,
}

/// Creates the order-zero laminate `delta_{xi}`.
pub fn dirac(xi: Mat) -> Laminate {
    Laminate {
        rows: xi.rows(),
        cols: xi.cols(),
        root: xi.clone(),
        weights: vec![1.0],
        atoms: vec![xi],
        splits: Vec::new(),
    }
}

impl Laminate {
    /// Number of splits applied since the root Dirac.
    pub fn order(&self) -> usize {
        self.splits.len()
    }

    /// Number of atoms currently carrying mass.
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Matrix shape `(rows, cols)` shared by every atom.
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn atoms(&self) -> &[Mat] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The matrix the construction started from.
    pub fn root(&self) -> &Mat {
        &self.root
    }

    pub fn splits(&self) -> &[SplitRecord] {
        &self.splits
    }

    /// Sum of atom weights; 1 up to floating-point summation error.
    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// First moment `sum_j w_j xi_j`, accumulated in atom order.
    pub fn barycenter(&self) -> Mat {
        let mut acc = Mat::zeros(self.rows, self.cols);
        for (w, xi) in self.weights.iter().zip(&self.atoms) {
            acc = acc.add_scaled(xi, *w).expect("atoms share the laminate shape");
        }
        acc
    }

    /// Integral `sum_j w_j f(xi_j)`, accumulated in atom order.
    pub fn expectation(&self, f: &TestFunction) -> f64 {
        self.weights
            .iter()
            .zip(&self.atoms)
            .map(|(w, xi)| w * f.eval(xi))
            .sum()
    }

    /// Index of the atom within `tol` of `m`, if any.
    pub fn find_atom(&self, m: &Mat, tol: f64) -> Option<usize> {
        self.atoms.iter().position(|a| a.dist(m) <= tol)
    }

    /// Splits atom `k` into `eta1` (keeping fraction `s` of its weight) and
    /// `eta2` (the remaining fraction). `eta1` takes the atom's slot; `eta2`
    /// is appended at the end of the list.
    ///
    /// Requirements, in the order they are checked:
    /// - `k` indexes an existing atom and `s` lies strictly in `(0, 1)`;
    /// - `eta1 - eta2` has rank one;
    /// - the replaced atom lies on the segment `[eta2, eta1]` at parameter
    ///   `s`, within [`ON_SEGMENT_TOL`];
    /// - neither endpoint duplicates any *other* atom, nor the two endpoints
    ///   each other, within [`ATOM_DISTINCT_TOL`]. Merging coincident atoms
    ///   is deliberately unsupported; callers perturb instead.
    ///
    /// The barycenter is unchanged up to the on-segment residual times the
    /// split weight.
    pub fn split(&mut self, k: usize, eta1: Mat, eta2: Mat, s: f64) -> Result<(), LamError> {
        if k >= self.atoms.len() {
            return Err(LamError::BadIndex {
                index: k,
                count: self.atoms.len(),
            });
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(LamError::BadWeight { s });
        }
        if eta1.rows() != self.rows || eta1.cols() != self.cols {
            return Err(LamError::Mat(MatError::ShapeMismatch {
                expected_rows: self.rows,
                expected_cols: self.cols,
                got_rows: eta1.rows(),
                got_cols: eta1.cols(),
            }));
        }
        if eta2.rows() != self.rows || eta2.cols() != self.cols {
            return Err(LamError::Mat(MatError::ShapeMismatch {
                expected_rows: self.rows,
                expected_cols: self.cols,
                got_rows: eta2.rows(),
                got_cols: eta2.cols(),
            }));
        }

        let diff = eta1.sub(&eta2).expect("shapes checked above");
        match rank_one_decompose(&diff) {
            Ok(_) => {}
            Err(MatError::NotRankOne { ratio }) => {
                let ratio = if ratio.is_finite() { ratio } else { 1.0 };
                return Err(LamError::NotRankOne { ratio });
            }
            Err(e) => return Err(LamError::Mat(e)),
        }

        let mut mix = eta1.scale(s);
        mix = mix.add_scaled(&eta2, 1.0 - s).expect("shapes checked above");
        let dist = self.atoms[k].dist(&mix);
        if dist > ON_SEGMENT_TOL {
            return Err(LamError::NotOnSegment {
                dist,
                tol: ON_SEGMENT_TOL,
            });
        }

        // eta1 will sit at index k, eta2 at the current end of the list.
        for (j, atom) in self.atoms.iter().enumerate() {
            if j == k {
                continue;
            }
            if atom.dist(&eta1) < ATOM_DISTINCT_TOL || atom.dist(&eta2) < ATOM_DISTINCT_TOL {
                return Err(LamError::DuplicateAtom { index: j });
            }
        }
        if eta1.dist(&eta2) < ATOM_DISTINCT_TOL {
            return Err(LamError::DuplicateAtom { index: k });
        }

        let w = self.weights[k];
        self.splits.push(SplitRecord {
            atom_index: k,
            replaced: self.atoms[k].clone(),
            eta1: eta1.clone(),
            eta2: eta2.clone(),
            s,
        });
        self.atoms[k] = eta1;
        self.weights[k] = w * s;
        self.atoms.push(eta2);
        self.weights.push(w * (1.0 - s));
        Ok(())
    }

    /// Re-runs the split log from `dirac(root)` and returns the rebuilt
    /// laminate. Errors if any recorded split no longer validates.
    pub fn replay(&self) -> Result<Laminate, LamError> {
        let mut lam = dirac(self.root.clone());
        for rec in &self.splits {
            lam.split(rec.atom_index, rec.eta1.clone(), rec.eta2.clone(), rec.s)?;
        }
        Ok(lam)
    }

    /// True when replaying the log reproduces the atom list and weights bit
    /// for bit.
    pub fn is_reproducible(&self) -> bool {
        let rebuilt = match self.replay() {
            Ok(l) => l,
            Err(_) => return false,
        };
        if rebuilt.atoms.len() != self.atoms.len() {
            return false;
        }
        let weights_match = rebuilt
            .weights
            .iter()
            .zip(&self.weights)
            .all(|(a, b)| a.to_bits() == b.to_bits());
        let atoms_match = rebuilt.atoms.iter().zip(&self.atoms).all(|(a, b)| {
            a.data()
                .iter()
                .zip(b.data())
                .all(|(x, y)| x.to_bits() == y.to_bits())
        });
        weights_match && atoms_match
    }
}
