//! JSON serialization of laminates: atoms as `[weight, rows]` pairs plus the
//! full split log, so files carry the same construction certificate as the
//! in-memory type.

use crate::{dirac, LamError, Laminate};
use matcore::Mat;
use serde::{Deserialize, Serialize};

#[derive(Serialize, Deserialize)]
struct LaminateJson {
    rows: usize,
    cols: usize,
    root: Vec<Vec<f64>>,
    atoms: Vec<(f64, Vec<Vec<f64>>)>,
    splits: Vec<SplitJson>,
}

#[derive(Serialize, Deserialize)]
struct SplitJson {
    atom_index: usize,
    replaced: Vec<Vec<f64>>,
    eta1: Vec<Vec<f64>>,
    eta2: Vec<Vec<f64>>,
    s: f64,
}

fn mat_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn rows_mat(rows: &[Vec<f64>], want: (usize, usize)) -> Result<Mat, LamError> {
    if rows.len() != want.0 || rows.iter().any(|r| r.len() != want.1) {
        return Err(LamError::BadJson {
            reason: format!("matrix shape does not match {}x{}", want.0, want.1),
        });
    }
    Ok(Mat::from_rows(rows))
}

/// Renders a laminate as pretty-printed JSON. Field order is fixed by the
/// struct layout, and floats round-trip exactly, so equal laminates produce
/// byte-identical output.
pub fn laminate_to_json(lam: &Laminate) -> String {
    let doc = LaminateJson {
        rows: lam.shape().0,
        cols: lam.shape().1,
        root: mat_rows(lam.root()),
        atoms: lam
            .weights()
            .iter()
            .zip(lam.atoms())
            .map(|(w, a)| (*w, mat_rows(a)))
            .collect(),
        splits: lam
            .splits()
            .iter()
            .map(|r| SplitJson {
                atom_index: r.atom_index,
                replaced: mat_rows(&r.replaced),
                eta1: mat_rows(&r.eta1),
                eta2: mat_rows(&r.eta2),
                s: r.s,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("laminate JSON serialization cannot fail")
}

/// Parses a laminate from JSON and revalidates it by replaying the split log
/// from the root. The stored atom list must match the replayed one bit for
/// bit; anything else is rejected rather than repaired.
pub fn laminate_from_json(text: &str) -> Result<Laminate, LamError> {
    let doc: LaminateJson = serde_json::from_str(text).map_err(|e| LamError::BadJson {
        reason: e.to_string(),
    })?;
    if doc.rows == 0 || doc.cols == 0 {
        return Err(LamError::BadJson {
            reason: "matrix dimensions must be positive".into(),
        });
    }
    let shape = (doc.rows, doc.cols);
    let root = rows_mat(&doc.root, shape)?;
    if !root.is_finite() {
        return Err(LamError::BadJson {
            reason: "root matrix has non-finite entries".into(),
        });
    }

    let mut lam = dirac(root);
    for (i, s) in doc.splits.iter().enumerate() {
        let replaced = rows_mat(&s.replaced, shape)?;
        if s.atom_index >= lam.len() || lam.atoms()[s.atom_index].dist(&replaced) > 0.0 {
            return Err(LamError::BadJson {
                reason: format!("split {i} does not apply to the replayed state"),
            });
        }
        lam.split(
            s.atom_index,
            rows_mat(&s.eta1, shape)?,
            rows_mat(&s.eta2, shape)?,
            s.s,
        )?;
    }

    if doc.atoms.len() != lam.len() {
        return Err(LamError::BadJson {
            reason: format!(
                "stored atom count {} does not match replayed count {}",
                doc.atoms.len(),
                lam.len()
            ),
        });
    }
    for (i, (w, rows)) in doc.atoms.iter().enumerate() {
        let atom = rows_mat(rows, shape)?;
        let same_w = w.to_bits() == lam.weights()[i].to_bits();
        let same_a = atom
            .data()
            .iter()
            .zip(lam.atoms()[i].data())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        if !same_w || !same_a {
            return Err(LamError::BadJson {
                reason: format!("stored atom {i} disagrees with the replayed laminate"),
            });
        }
    }
    Ok(lam)
}
