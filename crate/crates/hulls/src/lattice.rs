use crate::HullError;
use std::io::{self, Write};

/// Scalar function sampled on a square lattice of diagonal 2x2 matrices
/// `diag(x, y)`, the plane where axis-parallel lines are exactly the
/// rank-one directions between diagonal matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagLattice {
    lo: f64,
    hi: f64,
    step: f64,
    n: usize,
    /// Row-major over x (outer) then y (inner).
    values: Vec<f64>,
}

impl DiagLattice {
    /// Builds by sampling `f(x, y)` at every node of `[lo, hi]^2` with the
    /// given step. The step must divide the range to within 1e-9.
    pub fn from_fn(
        lo: f64,
        hi: f64,
        step: f64,
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> Result<DiagLattice, HullError> {
        if !(step > 0.0) || hi <= lo {
            return Err(HullError::BadStep { lo, hi, step });
        }
        let count = (hi - lo) / step;
        if (count - count.round()).abs() > 1e-9 {
            return Err(HullError::BadStep { lo, hi, step });
        }
        let n = count.round() as usize + 1;
        let mut values = Vec::with_capacity(n * n);
        for ix in 0..n {
            let x = lo + ix as f64 * step;
            for iy in 0..n {
                let y = lo + iy as f64 * step;
                values.push(f(x, y));
            }
        }
        Ok(DiagLattice { lo, hi, step, n, values })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn coord(&self, index: usize) -> f64 {
        self.lo + index as f64 * self.step
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[ix * self.n + iy]
    }

    #[inline]
    pub fn set(&mut self, ix: usize, iy: usize, v: f64) {
        self.values[ix * self.n + iy] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs_diff(&self, other: &DiagLattice) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// RFC-4180-style dump with the mandatory `x,y,value` header, rows
    /// ordered x-outer/y-inner. Floats print in Rust's shortest
    /// round-trip form, which is deterministic.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "x,y,value")?;
        for ix in 0..self.n {
            for iy in 0..self.n {
                writeln!(out, "{},{},{}", self.coord(ix), self.coord(iy), self.get(ix, iy))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EnvelopeResult {
    pub lattice: DiagLattice,
    pub converged: bool,
    pub sweeps_used: usize,
    pub last_change: f64,
}

/// Largest lattice function below the input that is convex along every row
/// and every column, to tolerance `tol`.
///
/// Alternates exact 1-D lower-convex-envelope passes over all rows and all
/// columns until a full sweep changes no value by more than `tol`. Each 1-D
/// pass only lowers values, and the separately convex envelope bounds the
/// iteration from below, so the sweep limit is a safety valve, reported via
/// the `converged` flag rather than an error.
pub fn separately_convex_envelope(
    lat: &DiagLattice,
    tol: f64,
    max_sweeps: usize,
) -> EnvelopeResult {
    let mut current = lat.clone();
    let n = current.size();
    let mut line = vec![0.0; n];
    let mut hull: Vec<usize> = Vec::with_capacity(n);
    let mut last_change = f64::INFINITY;
    for sweep in 1..=max_sweeps {
        let mut change: f64 = 0.0;
        // Rows: y varies along the line for fixed x.
        for ix in 0..n {
            for iy in 0..n {
                line[iy] = current.get(ix, iy);
            }
            lower_envelope_1d(&mut line, &mut hull);
            for iy in 0..n {
                let old = current.get(ix, iy);
                change = change.max(old - line[iy]);
                current.set(ix, iy, line[iy]);
            }
        }
        // Columns: x varies for fixed y.
        for iy in 0..n {
            for ix in 0..n {
                line[ix] = current.get(ix, iy);
            }
            lower_envelope_1d(&mut line, &mut hull);
            for ix in 0..n {
                let old = current.get(ix, iy);
                change = change.max(old - line[ix]);
                current.set(ix, iy, line[ix]);
            }
        }
        last_change = change;
        if change <= tol {
            return EnvelopeResult { lattice: current, converged: true, sweeps_used: sweep, last_change };
        }
    }
    EnvelopeResult { lattice: current, converged: false, sweeps_used: max_sweeps, last_change }
}

/// Replaces `line` by its lower convex envelope on the uniform index grid.
///
/// Monotone-chain over `(index, value)` pairs: a stacked vertex is popped
/// when it lies on or above the chord between its neighbor candidates, so
/// the result is exact for the given data (collinear points collapse onto
/// the chord, which keeps flat stretches bit-exact, e.g. chords between
/// equal zeros evaluate to 0.0 exactly).
fn lower_envelope_1d(line: &mut [f64], hull: &mut Vec<usize>) {
    let n = line.len();
    hull.clear();
    for i in 0..n {
        while hull.len() >= 2 {
            let i0 = hull[hull.len() - 2];
            let i1 = hull[hull.len() - 1];
            // Pop i1 if it is not strictly below the chord i0 -> i.
            let lhs = (line[i1] - line[i0]) * (i - i0) as f64;
            let rhs = (line[i] - line[i0]) * (i1 - i0) as f64;
            if lhs >= rhs {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    // Evaluate the envelope at every index by walking hull segments.
    let mut seg = 0;
    for i in 0..n {
        while seg + 1 < hull.len() && hull[seg + 1] <= i {
            seg += 1;
        }
        if hull[seg] == i {
            continue; // hull vertex keeps its exact value
        }
        let a = hull[seg];
        let b = hull[seg + 1];
        let t = (i - a) as f64 / (b - a) as f64;
        line[i] = line[a] + (line[b] - line[a]) * t;
    }
}
