//! Hadamard derivatives, traces and the volume-constrained optimality tests.

use polyshape::discretization::Solution;
use polyshape::geometry::boundary_sample;
use polyshape::shape_calculus::{
    hadamard_dlambda, lagrange_fit, normal_derivative_n, HadamardKernel,
};
use polyshape::spectrum::Cluster;
use polyshape::{Discretization, DomainMap, PerturbationField, Poly2, Problem};

fn near_map() -> DomainMap {
    DomainMap::custom(
        Poly2::from_terms(&[(1, 0, 1.0), (2, 0, 0.05), (0, 2, -0.03), (1, 1, 0.02)]),
        Poly2::from_terms(&[(0, 1, 1.0), (1, 1, 0.04), (2, 0, -0.02), (0, 3, 0.01)]),
    )
    .unwrap()
}

fn setup(n: usize, m: usize, phi: &DomainMap) -> (Discretization, Solution) {
    let d = Discretization::with_defaults(Problem::new(n, m).unwrap()).unwrap();
    let s = d.solve_full(phi, 6).unwrap();
    (d, s)
}

fn fields() -> Vec<PerturbationField> {
    vec![
        PerturbationField::dilation(),
        PerturbationField::harmonic_re(2).unwrap(),
        PerturbationField::harmonic_im(3).unwrap(),
        PerturbationField::custom(
            Poly2::from_terms(&[(2, 0, 1.0), (0, 1, 0.3)]),
            Poly2::from_terms(&[(1, 2, -0.5)]),
        )
        .unwrap(),
    ]
}

#[test]
fn derivative_is_linear_in_the_field() {
    let (d, s) = setup(2, 0, &near_map());
    let c = Cluster::from_range(&s.result.eigenvalues, 0, 1).unwrap();
    let k = HadamardKernel::new(&d, &s, &c, 1).unwrap();
    let f = fields();
    let combo = PerturbationField::linear_combination(&[(0.7, &f[1]), (-1.3, &f[3])]);
    let lhs = k.apply(&combo);
    let rhs = 0.7 * k.apply(&f[1]) - 1.3 * k.apply(&f[3]);
    assert!((lhs - rhs).abs() < 1e-12 * (lhs.abs() + rhs.abs()).max(1.0));
}

#[test]
fn rigid_motions_do_not_move_eigenvalues() {
    let (d, s) = setup(1, 0, &near_map());
    let c = Cluster::from_range(&s.result.eigenvalues, 0, 1).unwrap();
    let scale = c.mean;
    for psi in [
        PerturbationField::harmonic_re(1).unwrap(),
        PerturbationField::harmonic_im(1).unwrap(),
    ] {
        let dl = hadamard_dlambda(&d, &s, &c, &psi, 1).unwrap();
        assert!(dl.abs() < 1e-9 * scale, "{dl}");
    }
    // Rotation of the physical domain is ζ = J z, i.e. ψ = J φ.
    let phi = near_map();
    let rot = PerturbationField::custom(phi.component(1).scale(-1.0), phi.component(0).clone()).unwrap();
    assert!(hadamard_dlambda(&d, &s, &c, &rot, 1).unwrap().abs() < 1e-9 * scale);
}

#[test]
fn cluster_derivative_ignores_the_eigenbasis_within_the_cluster() {
    let (d, s) = setup(1, 0, &DomainMap::identity());
    let c = Cluster::from_range(&s.result.eigenvalues, 1, 2).unwrap();
    let mut mixed = s.clone();
    let (sn, cs) = 0.8f64.sin_cos();
    let (a, b) = (s.result.vectors.column(1).clone_owned(), s.result.vectors.column(2).clone_owned());
    mixed.result.vectors.set_column(1, &(&a * cs + &b * sn));
    mixed.result.vectors.set_column(2, &(&b * cs - &a * sn));
    let f = fields();
    let psi = PerturbationField::linear_combination(&[(0.5, &f[0]), (1.0, &f[1]), (0.4, &f[3])]);
    for h in 1..=2 {
        let x = HadamardKernel::new(&d, &s, &c, h).unwrap().apply(&psi);
        let y = HadamardKernel::new(&d, &mixed, &c, h).unwrap().apply(&psi);
        assert!((x - y).abs() < 1e-10 * x.abs(), "h={h}: {x} vs {y}");
    }
}

#[test]
fn first_trace_matches_normal_difference_quotient() {
    // Affine maps invert in closed form, so v = u ∘ φ⁻¹ is explicit.
    let a = [[1.2, 0.3], [0.1, 0.9]];
    let phi = DomainMap::affine(a, [0.0, 0.0]);
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let inv = |z: [f64; 2]| {
        [
            (a[1][1] * z[0] - a[0][1] * z[1]) / det,
            (-a[1][0] * z[0] + a[0][0] * z[1]) / det,
        ]
    };
    for (n, m) in [(1, 0), (2, 0)] {
        let (d, s) = setup(n, m, &phi);
        let u = d.eigenfunction(&s.result, 0);
        let coeffs: Vec<f64> = d.raw_coefficients(&s.result).column(0).iter().copied().collect();
        let samples = boundary_sample(&phi, 24).unwrap();
        let traces = normal_derivative_n(&d, &phi, &coeffs, &samples).unwrap();
        let v = |z: [f64; 2]| u.eval(inv(z));
        let e = 1e-3;
        for (smp, t) in samples.iter().zip(&traces) {
            let (z, nu) = (smp.image, smp.normal);
            let at = |k: f64| v([z[0] + k * e * nu[0], z[1] + k * e * nu[1]]);
            // Fourth-order central stencils.
            let fd = if n == 1 {
                (at(-2.0) - 8.0 * at(-1.0) + 8.0 * at(1.0) - at(2.0)) / (12.0 * e)
            } else {
                (-at(-2.0) + 16.0 * at(-1.0) - 30.0 * at(0.0) + 16.0 * at(1.0) - at(2.0)) / (12.0 * e * e)
            };
            assert!((fd - t).abs() < 1e-6 * t.abs().max(1.0), "n={n}: {fd} vs {t}");
        }
    }
}

#[test]
fn disk_admits_a_lagrange_multiplier_and_the_ellipse_does_not() {
    let (d, s) = setup(2, 1, &DomainMap::identity());
    let c = Cluster::from_range(&s.result.eigenvalues, 0, 1).unwrap();
    let fit = lagrange_fit(&d, &s, &c, &fields(), 1).unwrap();
    assert!(!fit.degenerate);
    assert!(fit.deviation < 1e-8, "{}", fit.deviation);
    // Dilation fixes the ratio: dλ = -2(n-m)λ₁ against dV = 2π.
    let want = -2.0 * c.mean / (2.0 * std::f64::consts::PI);
    assert!(((fit.multiplier - want) / want).abs() < 1e-8, "{} vs {want}", fit.multiplier);

    let (d, s) = setup(1, 0, &DomainMap::ellipse(0.3));
    let c = Cluster::from_range(&s.result.eigenvalues, 0, 1).unwrap();
    let fit = lagrange_fit(&d, &s, &c, &fields(), 1).unwrap();
    assert!(fit.deviation > 0.05, "{}", fit.deviation);
}
