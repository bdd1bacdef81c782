//! Randomized property oracles for the kernel operations: each property is
//! checked over 1000 seeded inputs so failures reproduce exactly.

use matcore::tol::{ORTHO_TOL, RANK_REL_TOL, RECON_TOL};
use matcore::{
    apply_constraint, householder_to_e1, project_to_sigma, rank, rank_one_decompose,
    rotation_to_e1, svd_small, LinearConstraint, Mat,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_mat(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.gen_range(-5.0..5.0))
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.1 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

#[test]
fn projections_land_on_the_constraint_plane() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..1000 {
        let m = rng.gen_range(2..=4);
        let n = rng.gen_range(2..=4);
        let mut weights = random_mat(&mut rng, m, n);
        if weights.norm() < 1e-6 {
            weights = Mat::identity(m.min(n)); // vanishing draw; any nonzero works
        }
        let c = LinearConstraint::new(weights, rng.gen_range(-3.0..3.0));
        let xi = random_mat(&mut rng, m, n);
        let pi = project_to_sigma(&c, &xi).unwrap();
        let achieved = apply_constraint(&c, &pi).unwrap();
        assert!(
            (achieved - c.target).abs() < ORTHO_TOL * (1.0 + c.target.abs()),
            "constraint after projection: {achieved} vs {}",
            c.target
        );
        // The correction is parallel to the weights.
        let diff = pi.sub(&xi).unwrap();
        let cross = diff.norm() * c.weights.norm() - diff.frob_dot(&c.weights).abs();
        assert!(cross.abs() < 1e-9 * (1.0 + diff.norm() * c.weights.norm()));
    }
}

#[test]
fn rank_one_round_trip_over_1000_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for _ in 0..1000 {
        let m = rng.gen_range(2..=5);
        let n = rng.gen_range(2..=5);
        let a: Vec<f64> = (0..m).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let b = random_unit(&mut rng, n);
        let mat = Mat::outer(&a, &b);
        if mat.norm() < 1e-3 {
            continue; // a drew too close to zero to be a meaningful case
        }
        let (ar, br) = rank_one_decompose(&mat).unwrap();
        let rebuilt = Mat::outer(&ar, &br);
        assert!(
            rebuilt.dist(&mat) < RECON_TOL * (1.0 + mat.norm()),
            "reconstruction drift {:.3e}",
            rebuilt.dist(&mat)
        );
        let bn = br.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((bn - 1.0).abs() < 1e-12, "b stays unit");
        let lead = br.iter().find(|x| x.abs() > 1e-12).unwrap();
        assert!(*lead > 0.0, "sign convention: leading entry of b positive");
        assert_eq!(rank(&mat, RANK_REL_TOL), 1);
    }
}

#[test]
fn reflectors_are_symmetric_involutions_over_1000_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for _ in 0..1000 {
        let n = rng.gen_range(2..=6);
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue;
        }
        let p = householder_to_e1(&v).unwrap();
        let id = Mat::identity(n);
        assert!(p.transpose().dist(&p) < ORTHO_TOL, "symmetry");
        assert!(p.matmul(&p).dist(&id) < ORTHO_TOL, "involution");
        assert!(p.transpose().matmul(&p).dist(&id) < ORTHO_TOL, "orthogonality");
        let image = p.matvec(&v);
        assert!((image[0] - norm).abs() < ORTHO_TOL * (1.0 + norm));
        for x in &image[1..] {
            assert!(x.abs() < ORTHO_TOL * (1.0 + norm), "tail vanishes");
        }
    }
}

#[test]
fn rotations_send_b_to_e1_over_1000_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for _ in 0..1000 {
        let n = rng.gen_range(2..=6);
        let b = random_unit(&mut rng, n);
        let r = rotation_to_e1(&b).unwrap();
        let id = Mat::identity(n);
        assert!(r.transpose().matmul(&r).dist(&id) < ORTHO_TOL);
        let e1 = r.transpose().matvec(&b);
        assert!((e1[0] - 1.0).abs() < ORTHO_TOL);
        for x in &e1[1..] {
            assert!(x.abs() < ORTHO_TOL);
        }
    }
}

#[test]
fn svd_reconstructs_random_small_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for _ in 0..1000 {
        let m = rng.gen_range(1..=8);
        let n = rng.gen_range(1..=8);
        let mat = random_mat(&mut rng, m, n);
        let svd = svd_small(&mat).unwrap();
        assert!(
            svd.reconstruct().dist(&mat) < RECON_TOL * (1.0 + mat.norm()),
            "reconstruction at {m}x{n}"
        );
        for w in svd.sigma.windows(2) {
            assert!(w[0] >= w[1], "singular values nonincreasing");
        }
        assert!(svd.sigma.iter().all(|&s| s >= 0.0));
        let iu = Mat::identity(m);
        let iv = Mat::identity(n);
        assert!(svd.u.transpose().matmul(&svd.u).dist(&iu) < ORTHO_TOL);
        assert!(svd.v.transpose().matmul(&svd.v).dist(&iv) < ORTHO_TOL);
    }
}
