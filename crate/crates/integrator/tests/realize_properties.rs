//! Realization properties: a Dirac laminate is a no-op, split weights
//! reappear as gradient-region fractions, staircase mass lands on the
//! four-point corners, and sampled fractions track the exact measures.

use integrator::{realize_laminate, BoundaryField, GradientField};
use laminates::{dirac, t4_staircase, Laminate};
use matcore::{LinearConstraint, Mat};
use oscillation::BoxDomain;

fn constraint() -> LinearConstraint {
    LinearConstraint::new(Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]), 0.3)
}

fn center() -> Mat {
    Mat::from_rows(&[vec![0.3, 0.0], vec![0.0, 0.0]])
}

fn direction() -> Mat {
    Mat::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]])
}

fn cube() -> BoxDomain {
    BoxDomain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()
}

#[test]
fn dirac_laminate_is_a_no_op() {
    let xi = center();
    let (field, stats) = realize_laminate(&xi, &dirac(xi.clone()), &cube(), &constraint(), 0.1, 8)
        .unwrap();

    let plain = GradientField::from_boundary(
        &constraint(),
        BoundaryField::affine(vec![0.0, 0.0], xi.clone()),
        cube(),
        &[64, 64],
    )
    .unwrap();
    assert_eq!(field.node_count(), plain.node_count());
    for i in 0..field.node_count() {
        for (a, b) in field.u_at(i).iter().zip(plain.u_at(i)) {
            assert_eq!(a.to_bits(), b.to_bits(), "node {i}");
        }
    }
    assert_eq!(stats.sup_value, 0.0);
    assert_eq!(stats.atom_fractions, vec![1.0]);
    assert_eq!(stats.exceptional_fraction, 0.0);
}

#[test]
fn split_weights_reappear_as_region_fractions() {
    let xi = center();
    let s = 0.3;
    let d = direction();
    // Barycenter balance: xi = s * hi + (1 - s) * lo.
    let hi = xi.add(&d.scale(1.0 - s)).unwrap();
    let lo = xi.add(&d.scale(-s)).unwrap();
    let mut lam = dirac(xi.clone());
    lam.split(0, hi, lo, s).unwrap();

    let eps = 0.1;
    let (field, stats) = realize_laminate(&xi, &lam, &cube(), &constraint(), eps, 8).unwrap();

    assert_eq!(stats.atom_fractions.len(), 2);
    assert!(
        (stats.atom_fractions[0] - s).abs() < eps,
        "high-plateau fraction {} vs weight {s}",
        stats.atom_fractions[0],
    );
    assert!(
        (stats.atom_fractions[1] - (1.0 - s)).abs() < eps,
        "low-plateau fraction {} vs weight {}",
        stats.atom_fractions[1],
        1.0 - s,
    );
    // Sampled fractions track the exact plateau measures.
    for (grid, exact) in stats.atom_fractions.iter().zip(&stats.analytic_atom_fractions) {
        assert!((grid - exact).abs() < 0.05, "sampled {grid} vs exact {exact}");
    }
    assert!(stats.analytic_exceptional < 0.05);
    assert!(stats.sup_value < eps);
    assert!(stats.sup_value_bound < eps);
    assert!(stats.max_residual < 1e-8);
    assert!(!stats.depth_exhausted);
    assert!(field.boundary_nodes_bit_identical());
}

#[test]
fn staircase_mass_reaches_the_four_corners() {
    // Anti-diagonal functional: zero on every diagonal matrix, so the
    // whole staircase sits on the constraint plane L(M) = 0.
    let c = LinearConstraint::new(Mat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]), 0.0);
    let eta = Mat::diag(&[0.0, 0.0]);
    let depth = 4;
    let eps = 0.25;
    let lam: Laminate = t4_staircase(&eta, depth).unwrap();

    let (field, stats) = realize_laminate(&eta, &lam, &cube(), &c, eps, 12).unwrap();

    let corners = [
        Mat::diag(&[3.0, -1.0]),
        Mat::diag(&[1.0, 3.0]),
        Mat::diag(&[-3.0, 1.0]),
        Mat::diag(&[-1.0, -3.0]),
    ];
    let count = field.node_count();
    let near = (0..count)
        .filter(|&i| {
            let g = field.grad_at(i);
            corners.iter().any(|a| g.dist(a) < eps)
        })
        .count();
    let mass = near as f64 / count as f64;
    let floor = 1.0 - 0.5_f64.powi(depth as i32) - eps;
    assert!(mass >= floor, "corner mass {mass} below {floor}");
    assert!(stats.max_residual < 1e-8);
    assert!(stats.sup_value < eps);
    assert!(!stats.depth_exhausted);
}
