//! Cross-checks between the three hull views: discrete lamination closure,
//! separately convex envelope zero-sets, and explicit membership.

use hulls::{
    lamination_hull_discrete, relative_hull_agreement_check, separately_convex_envelope,
    t4_dist, t4_hull_membership_xy, DiagLattice, PointCloud, T4Config,
};
use matcore::{LinearConstraint, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Threshold below which an envelope value counts as "zero" for zero-set
/// extraction; sits far above the sweep tolerance and far below the smallest
/// genuine positive envelope values near the hull boundary (~1e-3 at h=0.05).
const ZERO_SET_THRESHOLD: f64 = 1e-6;

#[test]
fn envelope_zero_set_matches_explicit_membership() {
    let h = 0.05;
    let lat = DiagLattice::from_fn(-4.0, 4.0, h, t4_dist).unwrap();
    let result = separately_convex_envelope(&lat, 1e-11, 20_000);
    assert!(result.converged, "sweeps exhausted (last change {:.3e})", result.last_change);

    let n = result.lattice.size();
    let mut zero_set = Vec::new();
    let mut members = Vec::new();
    for ix in 0..n {
        for iy in 0..n {
            let x = result.lattice.coord(ix);
            let y = result.lattice.coord(iy);
            if result.lattice.get(ix, iy) <= ZERO_SET_THRESHOLD {
                zero_set.push((x, y));
            }
            if t4_hull_membership_xy(x, y) {
                members.push((x, y));
            }
        }
    }
    assert!(!zero_set.is_empty() && !members.is_empty());

    let hausdorff = hausdorff(&zero_set, &members);
    assert!(
        hausdorff <= 2.0 * h + 1e-12,
        "zero set vs membership set Hausdorff distance {hausdorff:.4} exceeds 2h"
    );
}

fn hausdorff(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let one_sided = |from: &[(f64, f64)], to: &[(f64, f64)]| {
        from.iter()
            .map(|p| {
                to.iter()
                    .map(|q| ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0f64, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

#[test]
fn envelope_vanishes_at_all_eight_distinguished_points_and_not_at_2_2() {
    let lat = DiagLattice::from_fn(-4.0, 4.0, 0.05, t4_dist).unwrap();
    let result = separately_convex_envelope(&lat, 1e-11, 20_000);
    let t4 = T4Config::standard();
    let idx = |v: f64| ((v - (-4.0)) / 0.05).round() as usize;
    for i in 0..4 {
        let (x, y) = t4.corner_xy(i);
        assert!(result.lattice.get(idx(x), idx(y)).abs() <= 1e-9, "corner {i}");
        let (x, y) = t4.inner_xy(i);
        assert!(result.lattice.get(idx(x), idx(y)).abs() <= ZERO_SET_THRESHOLD, "square corner {i}");
    }
    let at_2_2 = result.lattice.get(idx(2.0), idx(2.0));
    assert!(at_2_2 > 0.1, "strictly positive away from the hull, got {at_2_2}");
}

#[test]
fn lamination_hull_is_monotone_and_idempotent() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..20 {
        let k = rng.gen_range(2..6);
        let points: Vec<Mat> = (0..k)
            .map(|_| Mat::from_fn(2, 2, |_, _| rng.gen_range(-2.0..2.0)))
            .collect();
        let cloud = match PointCloud::new(points, 0.1) {
            Ok(c) => c,
            Err(_) => continue,
        };
        let hull = lamination_hull_discrete(&cloud, 4, 12).unwrap();
        // Monotone: every input point survives in the output.
        for p in cloud.points() {
            assert!(hull.cloud.contains_within(p, 1e-12));
        }
        if hull.converged {
            let again = lamination_hull_discrete(&hull.cloud, 4, 12).unwrap();
            assert_eq!(again.cloud.len(), hull.cloud.len(), "fixpoint is stable");
        }
    }
}

#[test]
fn round_cap_flags_non_convergence() {
    // A rank-one pair at fine resolution cannot close in a single round.
    let cloud = PointCloud::new(
        vec![Mat::zeros(2, 2), Mat::from_rows(&[vec![4.0, 0.0], vec![0.0, 0.0]])],
        1e-4,
    )
    .unwrap();
    let hull = lamination_hull_discrete(&cloud, 64, 1).unwrap();
    assert!(!hull.converged);
    assert!(hull.report().point_count >= 2);
}

#[test]
fn random_constrained_rank_one_fans_stay_on_the_plane() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let weights = Mat::from_fn(2, 2, |_, _| rng.gen_range(-2.0..2.0));
        if weights.norm() < 0.5 {
            continue;
        }
        let c = LinearConstraint::new(weights.clone(), 0.0);
        // Build rank-one directions annihilated by the weights: for b fixed,
        // the a-condition is a single linear equation sum_i a_i (L b)_i = 0.
        let mut points = vec![Mat::zeros(2, 2)];
        for _ in 0..3 {
            let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let b = vec![angle.cos(), angle.sin()];
            let lb = weights.matvec(&b);
            // A vector orthogonal to lb (2-D: rotate by 90 degrees).
            let a = vec![-lb[1], lb[0]];
            let dir = Mat::outer(&a, &b);
            if dir.norm() < 1e-6 {
                continue;
            }
            let scale = rng.gen_range(0.5..2.0);
            points.push(dir.scale(scale));
        }
        let cloud = match PointCloud::new(points, 0.05) {
            Ok(c) => c,
            Err(_) => continue,
        };
        let report = relative_hull_agreement_check(&cloud, &c, 4, 6).unwrap();
        assert!(
            report.max_residual < 1e-10,
            "hull left the constraint plane: {:.3e}",
            report.max_residual
        );
    }
}
