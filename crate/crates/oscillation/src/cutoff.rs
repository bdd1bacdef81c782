//! Tensor-product cutoff bumps on the unit cube.
//!
//! A cutoff multiplies the oscillation in every direction transverse to the
//! rank-one axis. It equals one on a large inner plateau, vanishes near the
//! boundary, and its gradient and Hessian obey recorded bounds that the
//! amplitude budget of a patch consumes. Each axis carries the same one
//! dimensional bump: a margin of width `ramp / 4`, a C^4 smoothstep ramp of
//! width `ramp`, the plateau, and the mirrored descent.

use crate::smoothstep::{s4, s4_d1, s4_d2, S4_D1_MAX, S4_D2_MAX};
use crate::tol::CUTOFF_RAMP_DENOM;
use crate::{OscError, Result};
use serde::Serialize;

/// Smooth bump on (0, 1)^dims with a recorded plateau and derivative bounds.
#[derive(Debug, Clone, Serialize)]
pub struct Cutoff {
    dims: usize,
    tau: f64,
    /// Per-axis ramp width.
    ramp: f64,
    /// Per-axis margin between the support and the cube boundary.
    margin: f64,
    /// Per-axis plateau interval.
    plateau_lo: f64,
    plateau_hi: f64,
    /// Recorded bound on the Euclidean norm of the gradient.
    grad_bound: f64,
    /// Recorded bound on the Frobenius norm of the Hessian.
    hess_bound: f64,
}

impl Cutoff {
    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn ramp_width(&self) -> f64 {
        self.ramp
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// Per-axis plateau interval `[lo, hi]`.
    pub fn plateau(&self) -> (f64, f64) {
        (self.plateau_lo, self.plateau_hi)
    }

    /// Recorded bound on `sup |grad eta|`.
    pub fn grad_bound(&self) -> f64 {
        self.grad_bound
    }

    /// Recorded bound on `sup |hess eta|` in Frobenius norm.
    pub fn hess_bound(&self) -> f64 {
        self.hess_bound
    }

    /// Measure of the cube minus the plateau.
    pub fn plateau_loss(&self) -> f64 {
        1.0 - (self.plateau_hi - self.plateau_lo).powi(self.dims as i32)
    }

    /// Fraction of the cube covered by the plateau.
    pub fn plateau_fraction(&self) -> f64 {
        (self.plateau_hi - self.plateau_lo).powi(self.dims as i32)
    }

    /// One-dimensional factor: value, first, and second derivative.
    pub fn axis_eval(&self, z: f64) -> (f64, f64, f64) {
        let m = self.margin;
        let r = self.ramp;
        if z <= m || z >= 1.0 - m {
            return (0.0, 0.0, 0.0);
        }
        if z >= self.plateau_lo && z <= self.plateau_hi {
            return (1.0, 0.0, 0.0);
        }
        if z < self.plateau_lo {
            let u = (z - m) / r;
            (s4(u), s4_d1(u) / r, s4_d2(u) / (r * r))
        } else {
            let u = (1.0 - m - z) / r;
            (s4(u), -s4_d1(u) / r, s4_d2(u) / (r * r))
        }
    }

    /// True when every coordinate lies in the per-axis plateau.
    pub fn in_plateau(&self, z: &[f64]) -> bool {
        debug_assert_eq!(z.len(), self.dims);
        z.iter().all(|&x| x >= self.plateau_lo && x <= self.plateau_hi)
    }

    /// Full evaluation: value, gradient, and Hessian at `z`.
    ///
    /// The Hessian comes back as a flat row-major `dims x dims` buffer.
    pub fn eval(&self, z: &[f64]) -> CutoffEval {
        debug_assert_eq!(z.len(), self.dims);
        let axes: Vec<(f64, f64, f64)> = z.iter().map(|&x| self.axis_eval(x)).collect();
        let value = axes.iter().map(|a| a.0).product::<f64>();
        let d = self.dims;
        let mut grad = vec![0.0; d];
        let mut hess = vec![0.0; d * d];
        for i in 0..d {
            grad[i] = axes[i].1 * product_excluding(&axes, &[i]);
            for j in 0..d {
                hess[i * d + j] = if i == j {
                    axes[i].2 * product_excluding(&axes, &[i])
                } else {
                    axes[i].1 * axes[j].1 * product_excluding(&axes, &[i, j])
                };
            }
        }
        CutoffEval { value, grad, hess }
    }
}

/// Product of axis values with some axes excluded.
fn product_excluding(axes: &[(f64, f64, f64)], skip: &[usize]) -> f64 {
    axes.iter()
        .enumerate()
        .filter(|(k, _)| !skip.contains(k))
        .map(|(_, a)| a.0)
        .product()
}

/// Value, gradient, and row-major Hessian of a cutoff at one point.
#[derive(Debug, Clone)]
pub struct CutoffEval {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

/// Builds the cutoff for `dims` transverse axes at scale `tau`.
///
/// The per-axis ramp width is `tau / (6 dims)`, which keeps the total
/// plateau measure loss below `tau / 2` with margin: each axis loses
/// `2.5 ramp`, and the union bound over axes gives `2.5 tau / 6 < tau / 2`.
///
/// # Errors
/// [`OscError::BadParam`] when `dims` is zero or `tau` is out of range.
pub fn build_cutoff(dims: usize, tau: f64) -> Result<Cutoff> {
    build_cutoff_shaped(dims, tau, f64::INFINITY)
}

/// Builds a cutoff whose per-axis ramp width is additionally capped.
///
/// A binding `ramp_cap` narrows the transition shell (less plateau loss)
/// at the price of larger derivative bounds; the recorded `grad_bound` and
/// `hess_bound` account for the actual ramp, so downstream amplitude
/// budgets stay valid either way.
pub fn build_cutoff_shaped(dims: usize, tau: f64, ramp_cap: f64) -> Result<Cutoff> {
    if dims == 0 {
        return Err(OscError::BadParam { name: "dims", value: 0.0 });
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(OscError::BadParam { name: "tau", value: tau });
    }
    if !(ramp_cap > 0.0) {
        return Err(OscError::BadParam { name: "ramp_cap", value: ramp_cap });
    }
    let ramp = (tau / (CUTOFF_RAMP_DENOM * dims as f64)).min(ramp_cap);
    let margin = 0.25 * ramp;
    let plateau_lo = margin + ramp;
    let plateau_hi = 1.0 - margin - ramp;
    assert!(plateau_hi > plateau_lo, "plateau stays non-degenerate for tau <= 1");

    let axis_d1 = S4_D1_MAX / ramp;
    let axis_d2 = S4_D2_MAX / (ramp * ramp);
    let d = dims as f64;
    // Gradient: at most one ramp factor per component, others at most one.
    let grad_bound = d.sqrt() * axis_d1;
    // Hessian: diagonal entries bounded by the second-derivative peak,
    // off-diagonal ones by products of first-derivative peaks.
    let hess_bound = (d * axis_d2 * axis_d2 + d * (d - 1.0) * axis_d1.powi(4)).sqrt();

    Ok(Cutoff {
        dims,
        tau,
        ramp,
        margin,
        plateau_lo,
        plateau_hi,
        grad_bound,
        hess_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_is_exactly_one_and_support_compact() {
        let c = build_cutoff(2, 0.1).unwrap();
        let (lo, hi) = c.plateau();
        let e = c.eval(&[0.5 * (lo + hi), lo]);
        assert_eq!(e.value, 1.0, "plateau value");
        assert!(e.grad.iter().all(|&g| g == 0.0), "plateau gradient");
        assert!(e.hess.iter().all(|&h| h == 0.0), "plateau Hessian");
        for z in [0.0, c.margin() * 0.5, 1.0 - c.margin() * 0.5, 1.0] {
            let e = c.eval(&[z, 0.5]);
            assert_eq!(e.value, 0.0, "support at {z}");
        }
    }

    #[test]
    fn measure_loss_stays_below_half_tau() {
        for dims in 1..=3 {
            for tau in [0.05, 0.1, 0.5] {
                let c = build_cutoff(dims, tau).unwrap();
                assert!(
                    c.plateau_loss() < 0.5 * tau,
                    "loss {} vs tau {tau} in {dims} axes",
                    c.plateau_loss()
                );
            }
        }
    }

    #[test]
    fn recorded_bounds_dominate_dense_samples() {
        let c = build_cutoff(2, 0.2).unwrap();
        let mut max_grad: f64 = 0.0;
        let mut max_hess: f64 = 0.0;
        let steps = 400;
        for i in 0..=steps {
            for j in 0..=steps {
                let z = [i as f64 / steps as f64, j as f64 / steps as f64];
                let e = c.eval(&z);
                assert!((0.0..=1.0).contains(&e.value), "range at {z:?}");
                let g = e.grad.iter().map(|x| x * x).sum::<f64>().sqrt();
                let h = e.hess.iter().map(|x| x * x).sum::<f64>().sqrt();
                max_grad = max_grad.max(g);
                max_hess = max_hess.max(h);
            }
        }
        assert!(max_grad <= c.grad_bound(), "{max_grad} vs {}", c.grad_bound());
        assert!(max_hess <= c.hess_bound(), "{max_hess} vs {}", c.hess_bound());
        assert!(max_grad > 0.3 * c.grad_bound(), "gradient bound is not vacuous");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let c = build_cutoff(3, 0.3).unwrap();
        let probe = [
            c.margin() + 0.5 * c.ramp_width(),
            0.5,
            1.0 - c.margin() - 0.3 * c.ramp_width(),
        ];
        let h = 1e-6;
        let e = c.eval(&probe);
        for axis in 0..3 {
            let mut zp = probe;
            let mut zm = probe;
            zp[axis] += h;
            zm[axis] -= h;
            let fd = (c.eval(&zp).value - c.eval(&zm).value) / (2.0 * h);
            assert!(
                (fd - e.grad[axis]).abs() < 1e-4 * c.grad_bound(),
                "axis {axis}: fd {fd} vs {}",
                e.grad[axis]
            );
        }
    }
}
