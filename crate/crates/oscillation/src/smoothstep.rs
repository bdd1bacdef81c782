//! Degree-nine smoothstep and its integrals.
//!
//! `s4` rises from 0 to 1 over [0, 1] with four vanishing derivatives at both
//! ends, so any ramp built from it joins its neighbours with C^4 regularity.
//! The symmetry s4(t) + s4(1 - t) = 1 makes every full-ramp integral exact:
//! a ramp from level `alpha` to `beta` over width `r` integrates to
//! `r * (alpha + beta) / 2`.

/// Smoothstep value; clamps outside [0, 1].
pub fn s4(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let t2 = t * t;
    t2 * t2 * t * (126.0 + t * (-420.0 + t * (540.0 + t * (-315.0 + 70.0 * t))))
}

/// First derivative of `s4`: 630 t^4 (1-t)^4 on [0, 1], zero outside.
pub fn s4_d1(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let a = t * (1.0 - t);
    let a2 = a * a;
    630.0 * a2 * a2
}

/// Second derivative of `s4`: 2520 t^3 (1-t)^3 (1-2t) on [0, 1], zero outside.
pub fn s4_d2(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let a = t * (1.0 - t);
    2520.0 * a * a * a * (1.0 - 2.0 * t)
}

/// Integral of `s4` from 0 to t, for t in [0, 1]. At t = 1 it equals 1/2.
pub fn s4_int(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 0.5 + (t - 1.0);
    }
    let t2 = t * t;
    let t3 = t2 * t;
    t3 * t3 * (21.0 + t * (-60.0 + t * (67.5 + t * (-35.0 + 7.0 * t))))
}

/// Full double integral of `s4` over [0, 1]: 3 - 7.5 + 7.5 - 3.5 + 7/11.
pub const S4_INT2_FULL: f64 = 3.0 / 22.0;

/// Double integral of `s4` from 0 to t, for t in [0, 1]. At t = 1 it equals 3/22.
pub fn s4_int2(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        let e = t - 1.0;
        return S4_INT2_FULL + 0.5 * e + 0.5 * e * e;
    }
    let t2 = t * t;
    let t3 = t2 * t;
    t3 * t3 * t * (3.0 + t * (-7.5 + t * (7.5 + t * (-3.5 + (7.0 / 11.0) * t))))
}

/// Max of |s4'| over [0, 1], attained at t = 1/2: 630 / 256.
pub const S4_D1_MAX: f64 = 2.4609375;

/// Upper bound on |s4''| over [0, 1]. The extrema sit at t = 1/2 +- 1/(2 sqrt 7)
/// where |s4''| = 5040 (3/14)^3 / sqrt(28), about 9.37197; a small cushion
/// keeps the constant an upper bound.
pub const S4_D2_MAX: f64 = 9.3725;

/// Evaluate a C^4 ramp from level `alpha` to level `beta` over width `r` at
/// local offset `t` in [0, r]. Returns the ramp value together with its
/// running first and second integrals from the ramp start.
pub fn ramp_eval(alpha: f64, beta: f64, r: f64, t: f64) -> (f64, f64, f64) {
    let u = t / r;
    let d = beta - alpha;
    let value = alpha + d * s4(u);
    let int1 = alpha * t + d * r * s4_int(u);
    let int2 = 0.5 * alpha * t * t + d * r * r * s4_int2(u);
    (value, int1, int2)
}

/// Integral of a full ramp from `alpha` to `beta` over width `r`.
pub fn ramp_full_int1(alpha: f64, beta: f64, r: f64) -> f64 {
    r * 0.5 * (alpha + beta)
}

/// Double integral of a full ramp from `alpha` to `beta` over width `r`.
pub fn ramp_full_int2(alpha: f64, beta: f64, r: f64) -> f64 {
    0.5 * alpha * r * r + (beta - alpha) * r * r * S4_INT2_FULL
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_near(a: f64, b: f64, tol: f64, msg: &str) {
        assert!((a - b).abs() <= tol, "{msg}: {a} vs {b}");
    }

    #[test]
    fn endpoint_values_and_flat_joins() {
        assert_eq!(s4(0.0), 0.0);
        assert_eq!(s4(1.0), 1.0);
        assert_eq!(s4_d1(0.0), 0.0);
        assert_eq!(s4_d1(1.0), 0.0);
        assert_eq!(s4_d2(0.0), 0.0);
        assert_eq!(s4_d2(1.0), 0.0);
        assert_near(s4(0.5), 0.5, 1e-15, "midpoint");
        assert_near(s4_d1(0.5), S4_D1_MAX, 1e-12, "derivative peak");
    }

    #[test]
    fn symmetry_and_integrals() {
        for k in 0..=40 {
            let t = k as f64 / 40.0;
            // Degree-nine Horner evaluation carries a few hundred ulps.
            assert_near(s4(t) + s4(1.0 - t), 1.0, 1e-12, "point symmetry");
        }
        assert_near(s4_int(1.0), 0.5, 1e-15, "full integral");
        assert_near(s4_int2(1.0), 3.0 / 22.0, 1e-15, "full double integral");
    }

    #[test]
    fn integrals_match_quadrature() {
        let steps = 20_000;
        let h = 1.0 / steps as f64;
        let mut acc = 0.0;
        let mut acc2 = 0.0;
        for k in 0..steps {
            let t0 = k as f64 * h;
            let t1 = t0 + h;
            let mid = 0.5 * (t0 + t1);
            acc += h * (s4(t0) + 4.0 * s4(mid) + s4(t1)) / 6.0;
            acc2 += h * (s4_int(t0) + 4.0 * s4_int(mid) + s4_int(t1)) / 6.0;
            // Tolerance covers roundoff accumulated over 20k partial sums.
            assert_near(s4_int(t1), acc, 1e-11, "running integral");
            assert_near(s4_int2(t1), acc2, 1e-11, "running double integral");
        }
    }

    #[test]
    fn derivative_bounds_hold_on_dense_grid() {
        let mut max_d1: f64 = 0.0;
        let mut max_d2: f64 = 0.0;
        for k in 0..=100_000 {
            let t = k as f64 / 100_000.0;
            max_d1 = max_d1.max(s4_d1(t).abs());
            max_d2 = max_d2.max(s4_d2(t).abs());
        }
        assert!(max_d1 <= S4_D1_MAX + 1e-12, "d1 bound: {max_d1}");
        assert!(max_d2 <= S4_D2_MAX, "d2 bound: {max_d2}");
        assert!(max_d2 >= S4_D2_MAX - 0.01, "d2 bound is tight: {max_d2}");
    }

    #[test]
    fn ramp_matches_direct_forms() {
        let (v, i1, i2) = ramp_eval(-0.3, 0.7, 0.25, 0.1);
        assert_near(v, -0.3 + 1.0 * s4(0.4), 1e-15, "ramp value");
        assert_near(i1, -0.3 * 0.1 + 0.25 * s4_int(0.4), 1e-15, "ramp int1");
        assert_near(
            i2,
            -0.15 * 0.01 + 0.0625 * s4_int2(0.4),
            1e-15,
            "ramp int2",
        );
        assert_near(
            ramp_full_int1(-0.3, 0.7, 0.25),
            0.25 * 0.2,
            1e-15,
            "full ramp integral",
        );
        let (_, i1_end, i2_end) = ramp_eval(-0.3, 0.7, 0.25, 0.25);
        assert_near(i1_end, ramp_full_int1(-0.3, 0.7, 0.25), 1e-15, "int1 end");
        assert_near(i2_end, ramp_full_int2(-0.3, 0.7, 0.25), 1e-15, "int2 end");
    }
}
