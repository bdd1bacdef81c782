//! Piecewise-polynomial oscillation profiles.
//!
//! A profile is a scalar function on [0, 1], compactly supported in
//! [margin, 1 - margin], whose second derivative oscillates between the two
//! plateau levels `1 - lambda` (on the set `I1`) and `-lambda` (on `I2`).
//! The support splits into `n_cells` identical cells; each cell is a hump
//! followed by its exact time reversal, so the value and the first
//! derivative return to exact zero at every cell boundary. Only one hump is
//! stored: evaluation anywhere reduces, by cell-index arithmetic and
//! mirroring, to one of five closed-form pieces. Storage is O(1) no matter
//! how many cells the amplitude budget demands.
//!
//! Hump layout (second-derivative level against local offset):
//!
//! ```text
//!  1-l |   ____
//!      |  /    \
//!    0 |_/      \        ___
//!      |         \      /
//!   -l |          \____/
//!       r   p1   r  p2  r
//! ```
//!
//! With `p1 = lambda c/2 - r (1 + lambda)` and
//! `p2 = (1 - lambda) c/2 - r (2 - lambda)` the hump closes both running
//! integrals for any ramp width `r`, which is what makes every cell
//! self-contained.

use crate::smoothstep::{ramp_eval, ramp_full_int1, ramp_full_int2, s4};
use crate::tol::{
    MAX_PROFILE_CELLS, PROFILE_MARGIN_FRACTION, PROFILE_RAMP_FRACTION,
};
use crate::{OscError, Result};
use serde::Serialize;

/// Number of closed-form pieces in one hump.
const HUMP_PIECES: usize = 5;

/// Compactly supported oscillation profile with plateau second derivative.
///
/// `eval` returns the triple (value, first derivative, second derivative).
/// The certified bounds `sup_deriv_bound` and `sup_value_bound` dominate the
/// true suprema of |value'| and |value| and are both below `delta`.
#[derive(Debug, Clone, Serialize)]
pub struct Profile {
    lambda: f64,
    delta: f64,
    n_cells: usize,
    margin: f64,
    cell: f64,
    half: f64,
    ramp: f64,
    p1: f64,
    p2: f64,
    hi: f64,
    lo: f64,
    /// Local offsets of the hump piece boundaries, `bounds[0] = 0` through
    /// `bounds[5] = half`.
    bounds: [f64; 6],
    /// Start and end level of each hump piece (equal on plateaus).
    levels: [(f64, f64); HUMP_PIECES],
    widths: [f64; HUMP_PIECES],
    /// First derivative at each piece start, accumulated exactly once.
    w1_start: [f64; HUMP_PIECES],
    /// Value at each piece start.
    w_start: [f64; HUMP_PIECES],
    sup_deriv_bound: f64,
    sup_value_bound: f64,
}

impl Profile {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Certified amplitude bound: both suprema are strictly below it.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Support margin: the profile vanishes outside [margin, 1 - margin].
    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// Cell length; the support tiles into `n_cells` of these.
    pub fn cell_len(&self) -> f64 {
        self.cell
    }

    pub fn ramp_width(&self) -> f64 {
        self.ramp
    }

    /// Exact supremum of the profile value over [0, 1].
    pub fn sup_value_bound(&self) -> f64 {
        self.sup_value_bound
    }

    /// Upper bound for the supremum of the first derivative.
    pub fn sup_deriv_bound(&self) -> f64 {
        self.sup_deriv_bound
    }

    /// Hump piece boundaries as local offsets from a cell start.
    pub fn hump_bounds(&self) -> [f64; 6] {
        self.bounds
    }

    /// High-plateau intervals inside one cell, relative to the cell start.
    /// The second interval is the mirror image inside the dip.
    pub fn i1_local(&self) -> [(f64, f64); 2] {
        let (a, b) = (self.bounds[1], self.bounds[2]);
        [(a, b), (self.cell - b, self.cell - a)]
    }

    /// Low-plateau intervals inside one cell, relative to the cell start.
    pub fn i2_local(&self) -> [(f64, f64); 2] {
        let (a, b) = (self.bounds[3], self.bounds[4]);
        [(a, b), (self.cell - b, self.cell - a)]
    }

    /// Total measure of the high plateau set `I1`.
    pub fn i1_measure(&self) -> f64 {
        2.0 * self.p1 * self.n_cells as f64
    }

    /// Total measure of the low plateau set `I2`.
    pub fn i2_measure(&self) -> f64 {
        2.0 * self.p2 * self.n_cells as f64
    }

    /// Cell index and local offset for a point inside the support.
    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let pos = x - self.margin;
        let end = self.cell * self.n_cells as f64;
        if pos <= 0.0 || pos >= end {
            return None;
        }
        let idx = ((pos / self.cell) as usize).min(self.n_cells - 1);
        let local = (pos - idx as f64 * self.cell).clamp(0.0, self.cell);
        Some((idx, local))
    }

    /// Profile value, first derivative, and second derivative at `x`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        match self.locate(x) {
            None => (0.0, 0.0, 0.0),
            Some((_, local)) => {
                if local <= self.half {
                    self.hump(local)
                } else {
                    // Exact time reversal: value mirrors, derivative flips.
                    let (w, w1, w2) = self.hump(self.cell - local);
                    (w, -w1, w2)
                }
            }
        }
    }

    /// Closed-form hump evaluation at local offset `t` in [0, half].
    fn hump(&self, t: f64) -> (f64, f64, f64) {
        let t = t.clamp(0.0, self.half);
        let mut piece = HUMP_PIECES - 1;
        for p in 0..HUMP_PIECES {
            if t <= self.bounds[p + 1] {
                piece = p;
                break;
            }
        }
        let local = t - self.bounds[piece];
        let (alpha, beta) = self.levels[piece];
        let (d2, i1, i2) = ramp_eval(alpha, beta, self.widths[piece], local);
        let w1 = self.w1_start[piece] + i1;
        let w = self.w_start[piece] + self.w1_start[piece] * local + i2;
        (w, w1, d2)
    }

    /// True when `x` lies in the high plateau set `I1`.
    pub fn in_i1(&self, x: f64) -> bool {
        match self.locate(x) {
            None => false,
            Some((_, local)) => {
                let [(a0, b0), (a1, b1)] = self.i1_local();
                (local >= a0 && local <= b0) || (local >= a1 && local <= b1)
            }
        }
    }

    /// True when `x` lies in the low plateau set `I2`.
    pub fn in_i2(&self, x: f64) -> bool {
        match self.locate(x) {
            None => false,
            Some((_, local)) => {
                let [(a0, b0), (a1, b1)] = self.i2_local();
                (local >= a0 && local <= b0) || (local >= a1 && local <= b1)
            }
        }
    }
}

/// Builds a profile whose value and derivative stay strictly below `delta`.
///
/// See [`build_profile_min_cells`]; this entry point imposes no extra floor
/// on the cell count.
pub fn build_profile(lambda: f64, tau: f64, delta: f64) -> Result<Profile> {
    build_profile_min_cells(lambda, tau, delta, 1)
}

/// Builds a profile with at least `min_cells` oscillation cells.
///
/// The plateau measures satisfy `| |I1| - lambda | < tau / 2` and
/// `| |I2| - (1 - lambda) | < tau / 2`; margins and ramp fractions are fixed
/// multiples of `tau`, so both deviations come in near `tau / 4`.
///
/// # Errors
/// * [`OscError::BadParam`] for parameters outside their ranges.
/// * [`OscError::ProfileInfeasible`] when meeting `delta` needs more cells
///   than the cap; the error carries the required count.
pub fn build_profile_min_cells(
    lambda: f64,
    tau: f64,
    delta: f64,
    min_cells: usize,
) -> Result<Profile> {
    build_profile_shaped(lambda, tau, delta, min_cells, f64::INFINITY, f64::INFINITY)
}

/// Builds a profile with explicit caps on the dead zones.
///
/// `margin_cap` bounds the end margin and `ramp_cap` the relative ramp
/// width; both default to the `tau`-proportional values when the caps do
/// not bind. Shrinking the dead zones leaves all certified bounds intact
/// (they only ever get smaller) but steepens the transition interiors, so
/// callers stacking many patches use it to keep the off-plateau residue
/// thin without paying for a smaller `tau` everywhere.
pub fn build_profile_shaped(
    lambda: f64,
    tau: f64,
    delta: f64,
    min_cells: usize,
    margin_cap: f64,
    ramp_cap: f64,
) -> Result<Profile> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(OscError::BadParam { name: "lambda", value: lambda });
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(OscError::BadParam { name: "tau", value: tau });
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(OscError::BadParam { name: "delta", value: delta });
    }
    if !(margin_cap > 0.0) {
        return Err(OscError::BadParam { name: "margin_cap", value: margin_cap });
    }
    if !(ramp_cap > 0.0) {
        return Err(OscError::BadParam { name: "ramp_cap", value: ramp_cap });
    }

    let margin = (tau * PROFILE_MARGIN_FRACTION).min(margin_cap);
    // Relative ramp width, shrunk for extreme volume fractions so that both
    // plateaus keep at least half their nominal share of the cell.
    let rho = (tau * PROFILE_RAMP_FRACTION)
        .min(ramp_cap)
        .min(lambda / (4.0 * (1.0 + lambda)))
        .min((1.0 - lambda) / (4.0 * (2.0 - lambda)));
    let support = 1.0 - 2.0 * margin;

    // Coarse supremum model: sup |w'| ~ K1 * cell, so N ~ K1 * support / delta.
    let k1 = (1.0 - lambda) * (0.5 * lambda + 2.0 * rho);
    let estimate = ((k1 * support / delta).ceil() as usize).max(1);
    let mut n = estimate.max(min_cells);

    loop {
        if n > MAX_PROFILE_CELLS {
            return Err(OscError::ProfileInfeasible {
                required_n: n,
                cap: MAX_PROFILE_CELLS,
            });
        }
        let profile = assemble(lambda, delta, margin, rho, n)?;
        if profile.sup_deriv_bound < delta && profile.sup_value_bound < delta {
            return Ok(profile);
        }
        n *= 2;
    }
}

fn assemble(lambda: f64, delta: f64, margin: f64, rho: f64, n: usize) -> Result<Profile> {
    let support = 1.0 - 2.0 * margin;
    let cell_nominal = support / n as f64;
    let r = rho * cell_nominal;
    let hi = 1.0 - lambda;
    let lo = -lambda;
    let p1 = lambda * cell_nominal * 0.5 - r * (1.0 + lambda);
    let p2 = hi * cell_nominal * 0.5 - r * (2.0 - lambda);
    assert!(p1 > 0.0 && p2 > 0.0, "ramp fraction keeps plateaus positive");

    let widths = [r, p1, r, p2, r];
    let levels = [(0.0, hi), (hi, hi), (hi, lo), (lo, lo), (lo, 0.0)];

    // Accumulated piece boundaries are authoritative: the cell length is
    // twice the accumulated half so the pieces tile it bit-exactly.
    let mut bounds = [0.0; 6];
    for p in 0..HUMP_PIECES {
        bounds[p + 1] = bounds[p] + widths[p];
    }
    let half = bounds[5];
    let cell = 2.0 * half;

    let mut w1_start = [0.0; HUMP_PIECES];
    let mut w_start = [0.0; HUMP_PIECES];
    for p in 0..HUMP_PIECES - 1 {
        let (alpha, beta) = levels[p];
        let w = widths[p];
        w1_start[p + 1] = w1_start[p] + ramp_full_int1(alpha, beta, w);
        w_start[p + 1] = w_start[p] + w1_start[p] * w + ramp_full_int2(alpha, beta, w);
    }

    let mut profile = Profile {
        lambda,
        delta,
        n_cells: n,
        margin,
        cell,
        half,
        ramp: r,
        p1,
        p2,
        hi,
        lo,
        bounds,
        levels,
        widths,
        w1_start,
        w_start,
        sup_deriv_bound: 0.0,
        sup_value_bound: 0.0,
    };

    // The derivative peaks inside the descending ramp where the second
    // derivative crosses zero; solve s4(u) = hi by bisection and evaluate.
    let u_cross = invert_s4(hi);
    let (_, i1, _) = ramp_eval(hi, lo, r, u_cross * r);
    let deriv_peak = w1_start[2] + i1;
    // The value grows monotonically across the hump and peaks at its end.
    let (value_peak, end_slope, _) = profile.hump(half);
    debug_assert!(end_slope.abs() <= 1e-12 * deriv_peak.max(1e-300));
    profile.sup_deriv_bound = deriv_peak * (1.0 + 1e-9);
    profile.sup_value_bound = value_peak * (1.0 + 1e-9);
    Ok(profile)
}

/// Inverse of the smoothstep on [0, 1] by bisection; exact to the last bit
/// after 64 halvings because s4 is strictly monotone there.
fn invert_s4(target: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = 1.0;
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if s4(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_near(a: f64, b: f64, tol: f64, msg: &str) {
        assert!((a - b).abs() <= tol, "{msg}: {a} vs {b}");
    }

    #[test]
    fn balanced_profile_has_balanced_plateaus() {
        let p = build_profile(0.5, 0.1, 0.01).unwrap();
        assert!(p.i1_measure() > 0.45 && p.i1_measure() < 0.55, "half split");
        assert!((p.i1_measure() - 0.5).abs() < 0.05, "within tau/2");
        assert!((p.i2_measure() - 0.5).abs() < 0.05, "within tau/2");
    }

    #[test]
    fn second_derivative_integrates_to_zero() {
        // Gauss-Legendre with 10 nodes is exact on each degree-9 piece, so
        // the quadrature checks the construction rather than roundoff noise.
        let nodes = [
            -0.973_906_528_517_171_7,
            -0.865_063_366_688_984_5,
            -0.679_409_568_299_024_4,
            -0.433_395_394_129_247_2,
            -0.148_874_338_981_631_2,
            0.148_874_338_981_631_2,
            0.433_395_394_129_247_2,
            0.679_409_568_299_024_4,
            0.865_063_366_688_984_5,
            0.973_906_528_517_171_7,
        ];
        let weights = [
            0.066_671_344_308_688_1,
            0.149_451_349_150_580_6,
            0.219_086_362_515_982_0,
            0.269_266_719_309_996_3,
            0.295_524_224_714_752_9,
            0.295_524_224_714_752_9,
            0.269_266_719_309_996_3,
            0.219_086_362_515_982_0,
            0.149_451_349_150_580_6,
            0.066_671_344_308_688_1,
        ];
        let p = build_profile(0.3, 0.1, 0.05).unwrap();
        let bounds = p.hump_bounds();
        let mut total = 0.0;
        for cell in 0..p.n_cells() {
            let base = p.margin() + cell as f64 * p.cell_len();
            for half in 0..2 {
                for piece in 0..5 {
                    let (a, b) = if half == 0 {
                        (base + bounds[piece], base + bounds[piece + 1])
                    } else {
                        (
                            base + p.cell_len() - bounds[piece + 1],
                            base + p.cell_len() - bounds[piece],
                        )
                    };
                    let mid = 0.5 * (a + b);
                    let scale = 0.5 * (b - a);
                    for (x, w) in nodes.iter().zip(&weights) {
                        total += w * scale * p.eval(mid + scale * x).2;
                    }
                }
            }
        }
        assert_near(total, 0.0, 1e-10, "integral of the second derivative");
    }

    #[test]
    fn dense_samples_respect_all_certified_bounds() {
        let lambda = 0.3;
        let delta = 0.01;
        let p = build_profile(lambda, 0.05, delta).unwrap();
        let mut sup_v: f64 = 0.0;
        let mut sup_d: f64 = 0.0;
        let mut hi_count = 0usize;
        let samples = 400_000;
        for k in 0..=samples {
            let x = k as f64 / samples as f64;
            let (w, w1, w2) = p.eval(x);
            sup_v = sup_v.max(w.abs());
            sup_d = sup_d.max(w1.abs());
            assert!(
                w2 >= -lambda - 1e-12 && w2 <= 1.0 - lambda + 1e-12,
                "second derivative range at {x}: {w2}"
            );
            if (w2 - (1.0 - lambda)).abs() < 1e-12 {
                hi_count += 1;
            }
            if p.in_i1(x) {
                assert_eq!(w2, 1.0 - lambda, "plateau level is exact at {x}");
            }
            if p.in_i2(x) {
                assert_eq!(w2, -lambda, "low plateau level is exact at {x}");
            }
        }
        assert!(sup_v < delta, "value sup {sup_v} below delta");
        assert!(sup_d < delta, "derivative sup {sup_d} below delta");
        assert!(sup_v <= p.sup_value_bound(), "value bound certified");
        assert!(sup_d <= p.sup_deriv_bound(), "derivative bound certified");
        let sampled_hi = hi_count as f64 / samples as f64;
        assert_near(sampled_hi, lambda, 0.025, "sampled high-plateau measure");
        assert_near(p.i1_measure(), lambda, 0.025, "exact high-plateau measure");
    }

    #[test]
    fn support_is_compact_with_exact_zeros() {
        let p = build_profile(0.5, 0.1, 0.001).unwrap();
        for x in [0.0, 0.001, p.margin() - 1e-12, 0.9938, 0.999, 1.0] {
            let (w, w1, w2) = p.eval(x);
            assert_eq!((w, w1, w2), (0.0, 0.0, 0.0), "outside support at {x}");
        }
        // Cell boundaries: value and derivative return to zero. The point
        // itself may round one ulp into the neighbouring ramp, whose four
        // flat derivatives keep anything it picks up far below 1e-30.
        for cell in 0..p.n_cells() {
            let x = p.margin() + cell as f64 * p.cell_len();
            let (w, w1, _) = p.eval(x);
            assert!(w.abs() < 1e-30, "value at cell boundary {cell}: {w}");
            assert!(w1.abs() < 1e-30, "derivative at cell boundary {cell}: {w1}");
        }
    }

    #[test]
    fn min_cells_floor_is_respected() {
        let p = build_profile_min_cells(0.4, 0.1, 0.01, 977).unwrap();
        assert!(p.n_cells() >= 977);
        let q = build_profile(0.4, 0.1, 0.01).unwrap();
        assert!(q.n_cells() < 977, "floor genuinely raised the count");
    }

    #[test]
    fn infeasible_delta_reports_required_cells() {
        match build_profile(0.5, 0.1, 1e-12) {
            Err(OscError::ProfileInfeasible { required_n, cap }) => {
                assert!(required_n > cap);
            }
            other => panic!("expected ProfileInfeasible, got {other:?}"),
        }
    }

    #[test]
    fn bad_parameters_are_rejected() {
        assert!(matches!(
            build_profile(0.0, 0.1, 0.01),
            Err(OscError::BadParam { name: "lambda", .. })
        ));
        assert!(matches!(
            build_profile(0.5, 0.0, 0.01),
            Err(OscError::BadParam { name: "tau", .. })
        ));
        assert!(matches!(
            build_profile(0.5, 0.1, -1.0),
            Err(OscError::BadParam { name: "delta", .. })
        ));
    }
}
