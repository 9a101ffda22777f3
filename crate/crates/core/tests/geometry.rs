//! Maps, boundary samples and volumes against finite differences.

use std::f64::consts::PI;

use polyshape::geometry::{boundary_sample, boundary_sample_with_field, volume, volume_derivative};
use polyshape::quadrature::DiskRule;
use polyshape::{DomainMap, PerturbationField, Poly2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_map(rng: &mut ChaCha8Rng) -> DomainMap {
    let mut comp = |lead: (usize, usize)| {
        let mut t = vec![(lead.0, lead.1, 1.0)];
        for (i, j) in [(2, 0), (1, 1), (0, 2), (3, 0), (1, 2)] {
            t.push((i, j, rng.gen_range(-0.05..0.05)));
        }
        Poly2::from_terms(&t)
    };
    DomainMap::custom(comp((1, 0)), comp((0, 1))).unwrap()
}

#[test]
fn affine_volume_is_det_times_pi() {
    let rule = DiskRule::new(10, 16).unwrap();
    let phi = DomainMap::affine([[1.3, 0.4], [-0.2, 0.8]], [0.5, -1.0]);
    let det = 1.3 * 0.8 + 0.4 * 0.2;
    assert!((volume(&phi, &rule) - PI * det).abs() < 1e-13);
}

#[test]
fn jacobian_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let phi = random_map(&mut rng);
    let h = 1e-5;
    for p in [[0.1, 0.2], [-0.5, 0.4], [0.7, -0.6]] {
        let j = phi.jacobian(p);
        for c in 0..2 {
            let mut a = p;
            let mut b = p;
            a[c] += h;
            b[c] -= h;
            let (fa, fb) = (phi.eval(a), phi.eval(b));
            for r in 0..2 {
                assert!(((fa[r] - fb[r]) / (2.0 * h) - j[r][c]).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn boundary_samples_are_unit_outward_and_sum_to_perimeter() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let phi = random_map(&mut rng);
    let m = 400;
    let s = boundary_sample(&phi, m).unwrap();
    let mut perimeter = 0.0;
    for (k, smp) in s.iter().enumerate() {
        let nu = smp.normal;
        assert!((nu[0].hypot(nu[1]) - 1.0).abs() < 1e-14);
        // Tangent by differencing neighbouring images.
        let next = s[(k + 1) % m].image;
        let prev = s[(k + m - 1) % m].image;
        let t = [next[0] - prev[0], next[1] - prev[1]];
        assert!((t[0] * nu[0] + t[1] * nu[1]).abs() < 1e-3 * t[0].hypot(t[1]));
        // Near-identity maps are star-shaped about φ(0).
        let c = phi.eval([0.0, 0.0]);
        assert!((smp.image[0] - c[0]) * nu[0] + (smp.image[1] - c[1]) * nu[1] > 0.0);
        perimeter += (next[0] - smp.image[0]).hypot(next[1] - smp.image[1]);
    }
    let weights: f64 = s.iter().map(|x| x.weight).sum();
    assert!(((weights - perimeter) / perimeter).abs() < 1e-4, "{weights} vs {perimeter}");
}

#[test]
fn volume_derivative_matches_fd_on_random_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rule = DiskRule::new(20, 48).unwrap();
    for _ in 0..4 {
        let phi = random_map(&mut rng);
        let psi = PerturbationField::custom(
            Poly2::from_terms(&[(0, 0, rng.gen_range(-1.0..1.0)), (2, 1, 1.0), (0, 2, 0.3)]),
            Poly2::from_terms(&[(1, 0, rng.gen_range(-1.0..1.0)), (0, 3, -0.7)]),
        )
        .unwrap();
        let dv = volume_derivative(&phi, &psi, 128).unwrap();
        let t = 1e-4;
        let fd = (volume(&phi.perturbed(&psi, t), &rule) - volume(&phi.perturbed(&psi, -t), &rule)) / (2.0 * t);
        assert!((dv - fd).abs() < 1e-7 * fd.abs().max(1.0), "{dv} vs {fd}");
    }
}

#[test]
fn field_samples_follow_the_reference_points() {
    let phi = DomainMap::ellipse(0.2);
    let psi = PerturbationField::harmonic_re(2).unwrap();
    for s in boundary_sample_with_field(&phi, &psi, 32).unwrap() {
        assert_eq!(s.field.unwrap(), psi.eval(s.reference));
    }
}
