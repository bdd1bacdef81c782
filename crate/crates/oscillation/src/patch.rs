//! Oscillation patches: assembly, evaluation, and dumps.
//!
//! A patch perturbs an affine field whose gradient is the barycentre
//! `lambda A + (1 - lambda) B` of a rank-one pair. Inside its box the
//! perturbation gradient stays within `tau` of the segment
//! `[-lambda (A - B), (1 - lambda) (A - B)]`, hits the endpoints exactly on
//! two plateau regions of nearly the right measure, and keeps the constraint
//! functional identically zero. The box lives in the canonical coordinates
//! of the reduction frame; the first axis is the oscillation direction.
//!
//! Anisotropy: the scalar carrier is `d1^2 eta(zeta') w(zeta_1)` in
//! box-normalised coordinates, so the plateau gradient values are exact for
//! every box shape while all noise terms scale with the aspect ratio, which
//! the amplitude budget absorbs.

use crate::coeffs::{solve_coefficients, CoefficientTensor};
use crate::cutoff::{build_cutoff_shaped, Cutoff};
use crate::frame::{canonicalize, CanonicalFrame, ReductionCase};
use crate::profile::{build_profile_shaped, Profile};
use crate::tol::{DOMAIN_SLACK, NOISE_BUDGET_DIVISOR};
use crate::{OscError, Result};
use matcore::{LinearConstraint, Mat, RankOnePair};
use serde::Serialize;

/// Axis-aligned box given by origin and edge lengths.
#[derive(Debug, Clone, Serialize)]
pub struct BoxDomain {
    origin: Vec<f64>,
    size: Vec<f64>,
}

impl BoxDomain {
    /// # Errors
    /// [`OscError::BadParam`] for empty, mismatched, or non-positive data.
    pub fn new(origin: Vec<f64>, size: Vec<f64>) -> Result<BoxDomain> {
        if origin.is_empty() || origin.len() != size.len() {
            return Err(OscError::BadParam { name: "box_dims", value: origin.len() as f64 });
        }
        for &s in &size {
            if !(s > 0.0 && s.is_finite()) {
                return Err(OscError::BadParam { name: "box_size", value: s });
            }
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(OscError::BadParam { name: "box_origin", value: f64::NAN });
        }
        Ok(BoxDomain { origin, size })
    }

    /// Unit cube in `n` axes.
    pub fn unit(n: usize) -> BoxDomain {
        BoxDomain { origin: vec![0.0; n], size: vec![1.0; n] }
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn size(&self) -> &[f64] {
        &self.size
    }

    pub fn volume(&self) -> f64 {
        self.size.iter().product()
    }

    /// True when `y` lies in the closed box, with `slack` per unit edge.
    pub fn contains(&self, y: &[f64], slack: f64) -> bool {
        y.len() == self.dim()
            && y.iter().enumerate().all(|(k, &v)| {
                let pad = slack * self.size[k];
                v >= self.origin[k] - pad && v <= self.origin[k] + self.size[k] + pad
            })
    }

    /// Box-normalised coordinates of `y`.
    pub fn to_local(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .enumerate()
            .map(|(k, &v)| (v - self.origin[k]) / self.size[k])
            .collect()
    }
}

/// A fully assembled oscillation patch.
///
/// Evaluation points are canonical coordinates (the frame's input basis);
/// returned values and gradients are physical (composed through the frame).
#[derive(Debug, Clone)]
pub struct OscillationPatch {
    constraint: LinearConstraint,
    pair: RankOnePair,
    lambda: f64,
    tau: f64,
    domain: BoxDomain,
    frame: CanonicalFrame,
    tensor: CoefficientTensor,
    profile: Profile,
    cutoff: Cutoff,
    /// Amplitude bound of the coefficient tensor used in the budgets.
    coeff_bound: f64,
    /// Certified bound on the gradient distance to the rank-one segment.
    noise_bound: f64,
    /// Certified bound on the sup of the perturbation values.
    value_bound: f64,
    /// Per-axis ratio `size[0] / size[l]`; entry 0 is one.
    ratio: Vec<f64>,
}

impl OscillationPatch {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn frame(&self) -> &CanonicalFrame {
        &self.frame
    }

    pub fn tensor(&self) -> &CoefficientTensor {
        &self.tensor
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn cutoff(&self) -> &Cutoff {
        &self.cutoff
    }

    pub fn constraint(&self) -> &LinearConstraint {
        &self.constraint
    }

    pub fn pair(&self) -> &RankOnePair {
        &self.pair
    }

    pub fn noise_bound(&self) -> f64 {
        self.noise_bound
    }

    pub fn value_bound(&self) -> f64 {
        self.value_bound
    }

    pub fn coeff_bound(&self) -> f64 {
        self.coeff_bound
    }

    /// Measure of the high plateau region, where the gradient equals
    /// `(1 - lambda) (A - B)`.
    pub fn region_a_measure(&self) -> f64 {
        self.profile.i1_measure() * self.cutoff.plateau_fraction() * self.domain.volume()
    }

    /// Measure of the low plateau region, where the gradient equals
    /// `-lambda (A - B)`.
    pub fn region_b_measure(&self) -> f64 {
        self.profile.i2_measure() * self.cutoff.plateau_fraction() * self.domain.volume()
    }

    /// True when the canonical point lies in the high plateau region.
    pub fn region_a_contains(&self, y: &[f64]) -> bool {
        self.region_contains(y, true)
    }

    /// True when the canonical point lies in the low plateau region.
    pub fn region_b_contains(&self, y: &[f64]) -> bool {
        self.region_contains(y, false)
    }

    fn region_contains(&self, y: &[f64], high: bool) -> bool {
        if !self.domain.contains(y, 0.0) {
            return false;
        }
        let local = self.domain.to_local(y);
        let on_axis = if high {
            self.profile.in_i1(local[0])
        } else {
            self.profile.in_i2(local[0])
        };
        on_axis && self.cutoff.in_plateau(&local[1..])
    }

    /// Raw canonical evaluation at box-local coordinates.
    ///
    /// Writes the perturbation values into `phi` (length m) and its gradient
    /// into `grad` (row-major m x n). The caller guarantees buffer sizes.
    fn eval_local_into(&self, local: &[f64], phi: &mut [f64], grad: &mut [f64]) {
        let m = self.tensor.rows();
        let n = self.tensor.cols();
        let d1 = self.domain.size[0];
        let (w0, w1, w2) = self.profile.eval(local[0]);
        phi.fill(0.0);
        grad.fill(0.0);
        if w0 == 0.0 && w1 == 0.0 && w2 == 0.0 {
            return;
        }
        let cut = self.cutoff.eval(&local[1..]);
        let eta = cut.value;
        let t = n - 1;

        for i in 0..m {
            let a0 = self.tensor.active(i, 0);
            // s_i = sum over transverse axes of coefficient * scaled gradient.
            let mut s_i = 0.0;
            for l in 0..t {
                s_i += self.tensor.active(i, l + 1) * self.ratio[l + 1] * cut.grad[l];
            }
            phi[i] = d1 * (a0 * eta * w1 + w0 * s_i);
            grad[i * n] = a0 * eta * w2 + w1 * s_i;
            for j in 0..t {
                let mut h_ij = 0.0;
                for l in 0..t {
                    h_ij += self.tensor.active(i, l + 1) * self.ratio[l + 1] * cut.hess[l * t + j];
                }
                grad[i * n + j + 1] =
                    self.ratio[j + 1] * (a0 * cut.grad[j] * w1 + w0 * h_ij);
            }
        }
    }

    /// Canonical-frame evaluation: perturbation vector and gradient in the
    /// reduced coordinates, before composing with the frame.
    pub fn evaluate_canonical(&self, y: &[f64]) -> Result<(Vec<f64>, Mat)> {
        self.check_domain(y)?;
        let m = self.tensor.rows();
        let n = self.tensor.cols();
        let local = self.domain.to_local(y);
        let mut phi = vec![0.0; m];
        let mut grad = vec![0.0; m * n];
        self.eval_local_into(&local, &mut phi, &mut grad);
        Ok((phi, Mat::from_flat(m, n, grad)))
    }

    fn check_domain(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.domain.dim() {
            return Err(OscError::OutOfDomain { axis: y.len(), coord: f64::NAN });
        }
        for (k, &v) in y.iter().enumerate() {
            let pad = DOMAIN_SLACK * self.domain.size[k];
            if v < self.domain.origin[k] - pad || v > self.domain.origin[k] + self.domain.size[k] + pad
            {
                return Err(OscError::OutOfDomain { axis: k, coord: v });
            }
        }
        Ok(())
    }
}

/// Distance from a gradient matrix to the segment
/// `{ s * direction : s in [-lambda, 1 - lambda] }`.
pub fn distance_to_segment(g: &Mat, direction: &Mat, lambda: f64) -> f64 {
    let denom = direction.frob_dot(direction);
    let s = (g.frob_dot(direction) / denom).clamp(-lambda, 1.0 - lambda);
    let mut acc = 0.0;
    for i in 0..g.rows() {
        for j in 0..g.cols() {
            let d = g.get(i, j) - s * direction.get(i, j);
            acc += d * d;
        }
    }
    acc.sqrt()
}

/// Assembles an oscillation patch on `domain` in canonical coordinates.
///
/// The construction chain: canonical frame, closed-form coefficients, a
/// cutoff sized for the measure target, then a profile whose amplitude
/// satisfies the noise budget `tau` with the cutoff constants and the box
/// aspect folded in.
///
/// # Errors
/// Propagates frame and coefficient errors; [`OscError::BadParam`] for bad
/// scalars or boxes; [`OscError::ProfileInfeasible`] when the budget cannot
/// be met under the cell cap.
pub fn make_patch(
    c: &LinearConstraint,
    pair: &RankOnePair,
    lambda: f64,
    domain: BoxDomain,
    tau: f64,
) -> Result<OscillationPatch> {
    make_patch_with(c, pair, lambda, domain, tau, &PatchOptions::default())
}

/// Shape knobs for [`make_patch_with`].
///
/// The defaults leave every dead zone at its `tau`-proportional width. A
/// binding cap thins the margins or transition ramps without changing any
/// certified bound; iterative callers use this to keep the region that no
/// later refinement can convert (ramps have genuinely non-constant
/// gradients) a small fixed fraction of each patch box.
#[derive(Debug, Clone)]
pub struct PatchOptions {
    /// Upper bound on the profile end margin (fraction of the box).
    pub profile_margin_cap: f64,
    /// Upper bound on the profile ramp width (fraction of one cell).
    pub profile_ramp_cap: f64,
    /// Upper bound on the cutoff ramp width (fraction of the box).
    pub cutoff_ramp_cap: f64,
}

impl Default for PatchOptions {
    fn default() -> Self {
        PatchOptions {
            profile_margin_cap: f64::INFINITY,
            profile_ramp_cap: f64::INFINITY,
            cutoff_ramp_cap: f64::INFINITY,
        }
    }
}

/// [`make_patch`] with explicit [`PatchOptions`].
pub fn make_patch_with(
    c: &LinearConstraint,
    pair: &RankOnePair,
    lambda: f64,
    domain: BoxDomain,
    tau: f64,
    opts: &PatchOptions,
) -> Result<OscillationPatch> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(OscError::BadParam { name: "lambda", value: lambda });
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(OscError::BadParam { name: "tau", value: tau });
    }
    let m = c.rows();
    let n = c.cols();
    if m < 2 || n < 2 {
        return Err(OscError::BadParam { name: "dims", value: m.min(n) as f64 });
    }
    if domain.dim() != n {
        return Err(OscError::BadParam { name: "box_dims", value: domain.dim() as f64 });
    }

    let frame = canonicalize(c, pair)?;
    let tensor = solve_coefficients(&frame.l_can, &frame.a_can)?;
    let coeff_bound = tensor.amplitude_bound().max(1e-300);

    // Measure targets are absolute, so large boxes tighten the unit-cube
    // target proportionally.
    let volume = domain.volume();
    let tau_meas = (tau / volume.max(1.0)).min(1.0);
    let cutoff = build_cutoff_shaped(n - 1, tau_meas, opts.cutoff_ramp_cap)?;

    let d1 = domain.size()[0];
    let aspect = domain.size()[1..]
        .iter()
        .map(|&dl| d1 / dl)
        .fold(0.0_f64, f64::max);

    // Two-scale amplitude budget: the profile derivative pairs with the
    // cutoff gradient, the profile value with the cutoff Hessian. Each term
    // receives tau / 4; the value bound gets the same split.
    let q = NOISE_BUDGET_DIVISOR * coeff_bound;
    let delta_deriv = (tau / (q * aspect * cutoff.grad_bound()))
        .min(tau / (q * d1));
    let delta_value = (tau / (q * aspect * aspect * cutoff.hess_bound()))
        .min(tau / (q * d1 * aspect.max(d1) * cutoff.grad_bound()));

    let mut min_cells = 1;
    let profile = loop {
        let p = build_profile_shaped(
            lambda,
            tau_meas,
            delta_deriv,
            min_cells,
            opts.profile_margin_cap,
            opts.profile_ramp_cap,
        )?;
        if p.sup_value_bound() <= delta_value {
            break p;
        }
        // The value bound shrinks quadratically with the cell count.
        let factor = (p.sup_value_bound() / delta_value).sqrt().ceil().max(2.0);
        min_cells = (p.n_cells() as f64 * factor) as usize;
    };

    let noise_bound = coeff_bound
        * (aspect * cutoff.grad_bound() * profile.sup_deriv_bound()
            + aspect * aspect * cutoff.hess_bound() * profile.sup_value_bound());
    let value_bound = coeff_bound
        * d1
        * (profile.sup_deriv_bound()
            + aspect.max(d1) * cutoff.grad_bound() * profile.sup_value_bound());
    debug_assert!(noise_bound < tau, "noise budget violated: {noise_bound} vs {tau}");
    debug_assert!(value_bound < tau, "value budget violated: {value_bound} vs {tau}");

    let mut ratio = vec![1.0; n];
    for l in 1..n {
        ratio[l] = d1 / domain.size()[l];
    }

    Ok(OscillationPatch {
        constraint: c.clone(),
        pair: pair.clone(),
        lambda,
        tau,
        domain,
        frame,
        tensor,
        profile,
        cutoff,
        coeff_bound,
        noise_bound,
        value_bound,
        ratio,
    })
}

/// Physical evaluation of a patch at canonical coordinates `x`.
///
/// Returns the perturbation values and the gradient, both composed through
/// the frame into the physical bases.
///
/// # Errors
/// [`OscError::OutOfDomain`] when `x` leaves the closed box.
pub fn evaluate_patch(p: &OscillationPatch, x: &[f64]) -> Result<(Vec<f64>, Mat)> {
    let (phi, grad) = p.evaluate_canonical(x)?;
    if p.frame.is_identity() {
        return Ok((phi, grad));
    }
    Ok((p.frame.value_to_physical(&phi), p.frame.grad_to_physical(&grad)))
}

/// Visits a regular sample grid over the patch box.
///
/// `counts` gives per-axis sample counts; samples sit at cell centres, so
/// averages over the visits are midpoint quadratures. The callback receives
/// the canonical point, the physical values, the physical gradient, and the
/// physical constraint residual `L(grad)`.
pub fn for_each_sample(
    p: &OscillationPatch,
    counts: &[usize],
    mut visit: impl FnMut(&[f64], &[f64], &Mat, f64),
) {
    let n = p.domain.dim();
    assert_eq!(counts.len(), n, "one count per axis");
    assert!(counts.iter().all(|&c| c > 0), "counts must be positive");
    let m = p.tensor.rows();

    let mut index = vec![0usize; n];
    let mut point = vec![0.0; n];
    let mut local = vec![0.0; n];
    let mut phi = vec![0.0; m];
    let mut grad = vec![0.0; m * n];
    let mut phi_phys = vec![0.0; m];
    let identity = p.frame.is_identity();
    let s = &p.frame.s;
    let t = &p.frame.t;
    let weights = &p.constraint.weights;

    loop {
        for k in 0..n {
            let frac = (index[k] as f64 + 0.5) / counts[k] as f64;
            local[k] = frac;
            point[k] = p.domain.origin[k] + p.domain.size[k] * frac;
        }
        p.eval_local_into(&local, &mut phi, &mut grad);

        let (value_slice, grad_mat) = if identity {
            (&phi[..], Mat::from_flat(m, n, grad.clone()))
        } else {
            // phi_phys = S phi; grad_phys = S grad T^T, hand-rolled to keep
            // the sampling path allocation-light.
            for i in 0..m {
                let mut acc = 0.0;
                for k in 0..m {
                    acc += s.get(i, k) * phi[k];
                }
                phi_phys[i] = acc;
            }
            let mut tmp = vec![0.0; m * n];
            for i in 0..m {
                for j in 0..n {
                    let mut acc = 0.0;
                    for k in 0..m {
                        acc += s.get(i, k) * grad[k * n + j];
                    }
                    tmp[i * n + j] = acc;
                }
            }
            let mut out = vec![0.0; m * n];
            for i in 0..m {
                for j in 0..n {
                    let mut acc = 0.0;
                    for k in 0..n {
                        acc += tmp[i * n + k] * t.get(j, k);
                    }
                    out[i * n + j] = acc;
                }
            }
            (&phi_phys[..], Mat::from_flat(m, n, out))
        };

        let residual = weights.frob_dot(&grad_mat);
        visit(&point, value_slice, &grad_mat, residual);

        // Odometer increment over the grid.
        let mut axis = n;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            index[axis] += 1;
            if index[axis] < counts[axis] {
                break;
            }
            index[axis] = 0;
        }
    }
}

#[derive(Serialize)]
struct PatchDump<'a> {
    lambda: f64,
    tau: f64,
    domain: &'a BoxDomain,
    rank: usize,
    case: &'a str,
    weights: Vec<Vec<f64>>,
    target: f64,
    l_canonical: Vec<Vec<f64>>,
    a_canonical: &'a [f64],
    output_frame: Vec<Vec<f64>>,
    input_frame: Vec<Vec<f64>>,
    active_coefficients: Vec<Vec<f64>>,
    profile: &'a Profile,
    cutoff: &'a Cutoff,
    coeff_bound: f64,
    noise_bound: f64,
    value_bound: f64,
    region_a_measure: f64,
    region_b_measure: f64,
}

fn mat_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i)).collect()
}

/// Serialises the patch data needed to audit or rebuild it: coefficients,
/// plateau geometry, reduction matrices, and certified bounds.
pub fn patch_to_json(p: &OscillationPatch) -> String {
    let case = match p.frame.case {
        ReductionCase::AlreadyCanonical => "already_canonical",
        ReductionCase::BlockOnly => "block_only",
        ReductionCase::Full => "full",
    };
    let dump = PatchDump {
        lambda: p.lambda,
        tau: p.tau,
        domain: &p.domain,
        rank: p.frame.rank_r,
        case,
        weights: mat_rows(&p.constraint.weights),
        target: p.constraint.target,
        l_canonical: mat_rows(&p.frame.l_can),
        a_canonical: &p.frame.a_can,
        output_frame: mat_rows(&p.frame.s),
        input_frame: mat_rows(&p.frame.t),
        active_coefficients: mat_rows(&p.tensor.active_matrix()),
        profile: &p.profile,
        cutoff: &p.cutoff,
        coeff_bound: p.coeff_bound,
        noise_bound: p.noise_bound,
        value_bound: p.value_bound,
        region_a_measure: p.region_a_measure(),
        region_b_measure: p.region_b_measure(),
    };
    let mut s = serde_json::to_string_pretty(&dump).expect("plain data serialises");
    s.push('\n');
    s
}

/// Writes a sampled field as CSV: coordinates, values, gradient entries in
/// row-major order, and the constraint residual.
pub fn sample_to_csv(p: &OscillationPatch, per_axis: usize) -> String {
    let n = p.domain.dim();
    let m = p.tensor.rows();
    let mut out = String::new();
    for k in 0..n {
        out.push_str(&format!("x{},", k + 1));
    }
    for i in 0..m {
        out.push_str(&format!("phi{},", i + 1));
    }
    for i in 0..m {
        for j in 0..n {
            out.push_str(&format!("g{}{},", i + 1, j + 1));
        }
    }
    out.push_str("constraint_residual\n");
    for_each_sample(p, &vec![per_axis; n], |x, phi, grad, residual| {
        for v in x {
            out.push_str(&format!("{v},"));
        }
        for v in phi {
            out.push_str(&format!("{v},"));
        }
        for i in 0..m {
            for j in 0..n {
                out.push_str(&format!("{},", grad.get(i, j)));
            }
        }
        out.push_str(&format!("{residual}\n"));
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_near(a: f64, b: f64, tol: f64, msg: &str) {
        assert!((a - b).abs() <= tol, "{msg}: {a} vs {b}");
    }

    fn canonical_fixture() -> (LinearConstraint, RankOnePair) {
        let c = LinearConstraint::new(Mat::from_rows(&[vec![2.0, 1.0], vec![0.0, 3.0]]), 0.0);
        let diff = Mat::outer(&[0.0, 5.0], &[1.0, 0.0]);
        let pair = RankOnePair::new(diff, Mat::zeros(2, 2)).unwrap();
        (c, pair)
    }

    #[test]
    fn plateau_gradients_are_exact_in_the_identity_frame() {
        let (c, pair) = canonical_fixture();
        let p = make_patch(&c, &pair, 0.4, BoxDomain::unit(2), 0.1).unwrap();
        let dir = pair.direction();
        let hi = Mat::from_fn(2, 2, |i, j| 0.6 * dir.get(i, j));
        let lo = Mat::from_fn(2, 2, |i, j| -0.4 * dir.get(i, j));
        let mut seen_a = 0;
        let mut seen_b = 0;
        for_each_sample(&p, &[257, 31], |x, _phi, grad, residual| {
            assert!(residual.abs() < 1e-10, "constraint residual at {x:?}");
            if p.region_a_contains(x) {
                seen_a += 1;
                assert!(grad.dist(&hi) <= 1e-12, "high plateau at {x:?}");
            }
            if p.region_b_contains(x) {
                seen_b += 1;
                assert!(grad.dist(&lo) <= 1e-12, "low plateau at {x:?}");
            }
        });
        assert!(seen_a > 100, "high plateau sampled: {seen_a}");
        assert!(seen_b > 100, "low plateau sampled: {seen_b}");
    }

    #[test]
    fn gradient_stays_near_the_segment_and_values_small() {
        let (c, pair) = canonical_fixture();
        let tau = 0.1;
        let p = make_patch(&c, &pair, 0.3, BoxDomain::unit(2), tau).unwrap();
        let dir = pair.direction();
        let mut max_phi: f64 = 0.0;
        for_each_sample(&p, &[211, 37], |_, phi, grad, _| {
            let d = distance_to_segment(grad, &dir, 0.3);
            assert!(d < tau, "segment distance {d}");
            let pn = phi.iter().map(|v| v * v).sum::<f64>().sqrt();
            max_phi = max_phi.max(pn);
        });
        assert!(max_phi < tau, "sup of values {max_phi}");
        assert!(max_phi > 0.0, "patch is not trivial");
        assert!(p.noise_bound() < tau / 2.0);
        assert!(p.value_bound() < tau);
    }

    #[test]
    fn plateau_measures_meet_the_absolute_target() {
        let (c, pair) = canonical_fixture();
        let lambda = 0.35;
        let tau = 0.1;
        let domain = BoxDomain::new(vec![0.25, -0.5], vec![0.5, 0.75]).unwrap();
        let volume = domain.volume();
        let p = make_patch(&c, &pair, lambda, domain, tau).unwrap();
        assert!(
            (p.region_a_measure() - lambda * volume).abs() < tau,
            "high plateau measure {} vs {}",
            p.region_a_measure(),
            lambda * volume
        );
        assert!(
            (p.region_b_measure() - (1.0 - lambda) * volume).abs() < tau,
            "low plateau measure"
        );
        // Regions are disjoint: no sampled point belongs to both.
        for_each_sample(&p, &[101, 23], |x, _, _, _| {
            assert!(
                !(p.region_a_contains(x) && p.region_b_contains(x)),
                "regions overlap at {x:?}"
            );
        });
    }

    #[test]
    fn boundary_adjacent_points_vanish() {
        let (c, pair) = canonical_fixture();
        let p = make_patch(&c, &pair, 0.5, BoxDomain::unit(2), 0.1).unwrap();
        for x in [
            [0.0, 0.5],
            [1.0, 0.5],
            [0.5, 0.0],
            [0.5, 1.0],
            [0.0005, 0.9999],
            [0.9999, 0.0005],
        ] {
            let (phi, grad) = evaluate_patch(&p, &x).unwrap();
            assert!(phi.iter().all(|&v| v == 0.0), "value near boundary {x:?}");
            assert_eq!(grad.max_abs(), 0.0, "gradient near boundary {x:?}");
        }
    }

    #[test]
    fn out_of_domain_points_error() {
        let (c, pair) = canonical_fixture();
        let p = make_patch(&c, &pair, 0.5, BoxDomain::unit(2), 0.1).unwrap();
        assert!(matches!(
            evaluate_patch(&p, &[1.5, 0.5]),
            Err(OscError::OutOfDomain { axis: 0, .. })
        ));
        assert!(matches!(
            evaluate_patch(&p, &[0.5, -0.2]),
            Err(OscError::OutOfDomain { axis: 1, .. })
        ));
    }

    #[test]
    fn rotated_pair_reproduces_plateaus_through_the_frame() {
        // b = e2 exercises the full reduction; plateau gradients must come
        // back as multiples of a (x) b in physical coordinates.
        let c = LinearConstraint::new(Mat::from_rows(&[vec![2.0, 1.0], vec![0.0, 3.0]]), 0.0);
        let b = [0.0, 1.0];
        let lb = c.weights.matvec(&b);
        let raw = [1.0, -1.0];
        let dot: f64 = raw.iter().zip(&lb).map(|(x, y)| x * y).sum();
        let nsq: f64 = lb.iter().map(|x| x * x).sum();
        let a: Vec<f64> = raw.iter().zip(&lb).map(|(x, y)| x - dot / nsq * y).collect();
        let diff = Mat::outer(&a, &b);
        let pair = RankOnePair::new(diff.clone(), Mat::zeros(2, 2)).unwrap();
        let lambda = 0.45;
        let p = make_patch(&c, &pair, lambda, BoxDomain::unit(2), 0.1).unwrap();
        let hi = Mat::from_fn(2, 2, |i, j| (1.0 - lambda) * diff.get(i, j));
        let mut seen = 0;
        for_each_sample(&p, &[301, 31], |x, _, grad, residual| {
            assert!(residual.abs() < 1e-10, "constraint residual at {x:?}");
            if p.region_a_contains(x) {
                seen += 1;
                assert!(grad.dist(&hi) <= 1e-12, "plateau through frame at {x:?}");
            }
        });
        assert!(seen > 50, "plateau sampled through the frame: {seen}");
    }

    #[test]
    fn dumps_are_deterministic() {
        let (c, pair) = canonical_fixture();
        let p = make_patch(&c, &pair, 0.5, BoxDomain::unit(2), 0.1).unwrap();
        let j1 = patch_to_json(&p);
        let j2 = patch_to_json(&p);
        assert_eq!(j1, j2, "JSON dump is stable");
        assert!(j1.contains("\"noise_bound\""));
        let c1 = sample_to_csv(&p, 7);
        let c2 = sample_to_csv(&p, 7);
        assert_eq!(c1, c2, "CSV dump is stable");
        let header = c1.lines().next().unwrap();
        assert_eq!(
            header,
            "x1,x2,phi1,phi2,g11,g12,g21,g22,constraint_residual"
        );
        assert_eq!(c1.lines().count(), 1 + 49, "7 x 7 samples plus header");
    }
}
