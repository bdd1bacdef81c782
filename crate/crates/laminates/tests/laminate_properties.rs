//! Randomized and structural checks for laminates: split sequences preserve
//! mass and barycenter, determinants behave affinely along rank-one
//! segments, and the staircase lands where it claims.

use laminates::{
    dirac, jensen_check, laminate_from_json, laminate_to_json, t4_staircase, Laminate,
    TestFunction,
};
use matcore::Mat;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn assert_near(a: f64, b: f64, tol: f64, msg: &str) {
    assert!((a - b).abs() <= tol, "{msg}: {a} vs {b}");
}

/// Splits a random atom along a random rank-one direction, placing the atom
/// at parameter `s` of the new segment so the mixture is exact by
/// construction.
fn random_split(lam: &mut Laminate, rng: &mut ChaCha8Rng) {
    let (m, n) = lam.shape();
    for _ in 0..20 {
        let k = rng.gen_range(0..lam.len());
        let a: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dir = Mat::outer(&a, &b);
        if dir.norm() < 1e-3 {
            continue;
        }
        let s: f64 = rng.gen_range(0.1..0.9);
        let t: f64 = rng.gen_range(0.2..1.0);
        let eta1 = lam.atoms()[k].add_scaled(&dir, (1.0 - s) * t).unwrap();
        let eta2 = lam.atoms()[k].add_scaled(&dir, -s * t).unwrap();
        if lam.split(k, eta1, eta2, s).is_ok() {
            return;
        }
    }
    panic!("could not find a valid random split in 20 draws");
}

#[test]
fn random_split_sequences_preserve_mass_and_barycenter() {
    let mut rng = ChaCha8Rng::seed_from_u64(7001);
    for _case in 0..60 {
        let m = rng.gen_range(2..=3);
        let n = rng.gen_range(2..=3);
        let root = Mat::from_fn(m, n, |_, _| rng.gen_range(-2.0..2.0));
        let mut lam = dirac(root.clone());
        for _ in 0..40 {
            random_split(&mut lam, &mut rng);
        }
        assert_eq!(lam.order(), 40);
        assert_eq!(lam.len(), 41);
        assert_near(lam.weight_sum(), 1.0, 1e-12, "weight sum");
        assert!(
            lam.barycenter().dist(&root) <= 1e-12,
            "barycenter drifted by {}",
            lam.barycenter().dist(&root)
        );
        assert!(lam.is_reproducible(), "split log must replay bitwise");
    }
}

#[test]
fn determinant_is_affine_along_rank_one_splits() {
    // Every split direction is rank one, so the average of det over the
    // laminate equals det at the barycenter, from both sides.
    let mut rng = ChaCha8Rng::seed_from_u64(7002);
    let plus = TestFunction::plus_det();
    let minus = TestFunction::minus_det();
    for _case in 0..40 {
        let root = Mat::from_fn(2, 2, |_, _| rng.gen_range(-2.0..2.0));
        let mut lam = dirac(root);
        for _ in 0..30 {
            random_split(&mut lam, &mut rng);
        }
        for f in [&plus, &minus] {
            let check = jensen_check(&lam, f);
            assert!(check.pass);
            assert_near(check.lhs, check.rhs, 1e-10, "det must be affine");
        }
        let norm_check = jensen_check(&lam, &TestFunction::norm());
        assert!(norm_check.pass, "norm is convex, average must dominate");
    }
}

#[test]
fn symmetric_endpoint_split_recovers_interior_point() {
    // An interior matrix eta with endpoints eta + s_pm a (x) b at unit norm:
    // the split weight -s_minus / (s_plus - s_minus) recovers eta exactly.
    let eta = Mat::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.0]]);
    let s_plus = 0.75f64.sqrt();
    let s_minus = -s_plus;
    let ab = Mat::outer(&[0.0, 1.0], &[1.0, 0.0]);
    let plus = eta.add_scaled(&ab, s_plus).unwrap();
    let minus = eta.add_scaled(&ab, s_minus).unwrap();
    let s = -s_minus / (s_plus - s_minus);
    assert_near(s, 0.5, 1e-15, "interior parameter");

    let mut lam = dirac(eta.clone());
    lam.split(0, plus.clone(), minus.clone(), s).unwrap();
    assert!(lam.barycenter().dist(&eta) <= 1e-12);
    for atom in lam.atoms() {
        assert_near(atom.norm(), 1.0, 1e-12, "endpoints sit on the unit sphere");
    }
}

#[test]
fn staircase_mass_remainder_and_constraint() {
    let probes = [
        (0.0, 0.0),
        (0.3, -0.55),
        (-0.9, 0.2),
        (2.0, -1.0),
        (1.0, 2.5),
        (-1.0, -2.0),
        (0.7, 1.0),
    ];
    let corners: Vec<Mat> = (0..4)
        .map(|i| {
            let cfg = hulls::T4Config::standard();
            let (x, y) = cfg.corner_xy(i);
            Mat::diag(&[x, y])
        })
        .collect();
    let inner: Vec<Mat> = (0..4)
        .map(|i| {
            let cfg = hulls::T4Config::standard();
            let (x, y) = cfg.inner_xy(i);
            Mat::diag(&[x, y])
        })
        .collect();

    for &(x, y) in &probes {
        for depth in [1usize, 3, 6, 9] {
            let lam = t4_staircase(&Mat::diag(&[x, y]), depth).unwrap();
            let bound = 0.5f64.powi(depth as i32);

            let mut corner_mass = 0.0;
            let mut remainder_mass = 0.0;
            let mut remainder_atoms = 0;
            for (w, atom) in lam.weights().iter().zip(lam.atoms()) {
                if corners.iter().any(|c| atom.dist(c) <= 1e-6) {
                    corner_mass += w;
                } else {
                    assert!(
                        inner.iter().any(|j| atom.dist(j) <= 1e-12),
                        "non-corner atom must sit exactly on an inner corner, got {atom}"
                    );
                    remainder_mass += w;
                    remainder_atoms += 1;
                }
            }
            assert!(
                corner_mass >= 1.0 - bound - 1e-12,
                "({x},{y}) depth {depth}: corner mass {corner_mass}"
            );
            assert!(remainder_mass <= bound + 1e-12);
            assert!(remainder_atoms <= 2, "at most two chains of remainder");

            // Diagonal atoms satisfy the off-diagonal constraint row
            // k * xi_12 + xi_21 = 0 exactly, for every k.
            for k in [1.0, -1.0, 7.3] {
                for atom in lam.atoms() {
                    let r = k * atom.get(0, 1) + atom.get(1, 0);
                    assert_eq!(r, 0.0, "constraint must hold exactly");
                }
            }

            assert!(lam.is_reproducible());
            assert!(
                lam.barycenter().dist(&Mat::diag(&[x, y])) <= 1e-12,
                "staircase must not move the barycenter"
            );
        }
    }
}

#[test]
fn staircase_round_trips_through_json() {
    let lam = t4_staircase(&Mat::diag(&[0.25, -0.4]), 6).unwrap();
    let text = laminate_to_json(&lam);
    let back = laminate_from_json(&text).unwrap();
    assert_eq!(back.len(), lam.len());
    assert_eq!(laminate_to_json(&back), text);
}
