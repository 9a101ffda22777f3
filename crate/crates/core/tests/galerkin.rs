//! Properties of the Galerkin eigensolver on mapped disks.

use polyshape::discretization::form_entry;
use polyshape::quadrature::QuadratureRule;
use polyshape::{Discretization, DomainMap, Poly2, Problem};

fn disc(n: usize, m: usize, degree: usize) -> Discretization {
    Discretization::new(Problem::new(n, m).unwrap(), degree, QuadratureRule::default()).unwrap()
}

fn skewed() -> DomainMap {
    DomainMap::custom(
        Poly2::from_terms(&[(1, 0, 1.0), (2, 0, 0.06), (0, 2, -0.04), (1, 1, 0.03)]),
        Poly2::from_terms(&[(0, 1, 1.1), (1, 1, 0.05), (2, 0, -0.03), (0, 3, 0.02)]),
    )
    .unwrap()
}

#[test]
fn eigenvalues_decrease_with_degree() {
    // Nested trial spaces give monotone upper bounds.
    for (n, m) in [(1, 0), (2, 1)] {
        let coarse = disc(n, m, 8 + 2 * n).solve(&skewed(), 6).unwrap();
        let mid = disc(n, m, 12).solve(&skewed(), 6).unwrap();
        let fine = disc(n, m, 16).solve(&skewed(), 6).unwrap();
        for j in 0..6 {
            let slack = 1e-12 * fine.eigenvalues[j];
            assert!(coarse.eigenvalues[j] >= mid.eigenvalues[j] - slack, "P{n}{m} λ{}", j + 1);
            assert!(mid.eigenvalues[j] >= fine.eigenvalues[j] - slack, "P{n}{m} λ{}", j + 1);
        }
    }
}

#[test]
fn rigid_motions_preserve_the_spectrum() {
    let d = disc(2, 0, 14);
    let base = d.solve(&skewed(), 5).unwrap();
    for angle in [0.3, 1.1, 2.5] {
        let rot = d.solve(&skewed().rotated(angle), 5).unwrap();
        for (a, b) in base.eigenvalues.iter().zip(&rot.eigenvalues) {
            assert!(((a - b) / a).abs() < 1e-9, "{a} vs {b}");
        }
    }
    let moved = DomainMap::custom(
        skewed().component(0) + &Poly2::constant(0.7),
        skewed().component(1) + &Poly2::constant(-0.2),
    )
    .unwrap();
    let shifted = d.solve(&moved, 5).unwrap();
    for (a, b) in base.eigenvalues.iter().zip(&shifted.eigenvalues) {
        assert!(((a - b) / a).abs() < 1e-9);
    }
}

#[test]
fn eigenfunctions_satisfy_rayleigh_and_orthogonality() {
    let phi = skewed();
    for (n, m) in [(1, 0), (2, 1), (3, 2)] {
        let d = disc(n, m, 12);
        let res = d.solve(&phi, 4).unwrap();
        let rule = &d.quadrature().disk;
        let u: Vec<Poly2> = (0..4).map(|j| d.eigenfunction(&res, j)).collect();
        for j in 0..4 {
            let a = form_entry(&phi, &u[j], &u[j], n, rule).unwrap();
            let b = form_entry(&phi, &u[j], &u[j], m, rule).unwrap();
            assert!((a - 1.0).abs() < 1e-9, "energy normalization {a}");
            assert!(((a / b) - res.eigenvalues[j]).abs() < 1e-9 * res.eigenvalues[j]);
            for k in 0..j {
                let cross = form_entry(&phi, &u[j], &u[k], m, rule).unwrap();
                assert!(cross.abs() < 1e-9 * b, "B-orthogonality ({j},{k}) {cross}");
            }
        }
    }
}

#[test]
fn quadrature_is_resolved() {
    let phi = DomainMap::ellipse(0.2);
    let p = Problem::new(2, 0).unwrap();
    let fine = Discretization::with_defaults(p).unwrap().solve(&phi, 6).unwrap();
    let coarse = Discretization::new(p, 16, QuadratureRule::new(30, 72).unwrap())
        .unwrap()
        .solve(&phi, 6)
        .unwrap();
    for (a, b) in fine.eigenvalues.iter().zip(&coarse.eigenvalues) {
        assert!(((a - b) / a).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn forms_are_symmetric_and_fingerprinted() {
    let d = disc(2, 1, 10);
    let f = d.assemble(&skewed()).unwrap();
    assert!(f.symmetry_residual() < 1e-13);
    assert_eq!(f.fingerprint, d.assemble(&skewed()).unwrap().fingerprint);
    assert_ne!(f.fingerprint, d.assemble(&DomainMap::ellipse(0.1)).unwrap().fingerprint);
}

#[test]
fn ellipse_family_keeps_area_and_splits_the_double_pair() {
    let d = disc(1, 0, 16);
    let disk = d.solve(&DomainMap::identity(), 3).unwrap();
    let e = d.solve(&DomainMap::ellipse(0.1), 3).unwrap();
    // Faber-Krahn: the disk minimizes λ₁ at fixed area.
    assert!(e.eigenvalues[0] > disk.eigenvalues[0]);
    assert!(e.eigenvalues[2] - e.eigenvalues[1] > 1e-2);
    assert!(disk.eigenvalues[2] - disk.eigenvalues[1] < 1e-10);
}
