//! Boundary traces, Hadamard derivatives of `Λ_{F,h}`, criticality and the
//! operator differentials, each with a finite-difference counterpart.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::discretization::{form_entry, Discretization, Solution};
use crate::error::{Error, Result};
use crate::geometry::{
    bilipschitz_check, boundary_sample, boundary_sample_with_field, volume_derivative,
    BoundarySample, DomainMap, PerturbationField,
};
use crate::jets::{binomial, derivative_tensor_apply, factorial, index, n_coeffs, ComposeTable, Jet};
use crate::poly::Poly2;
use crate::quadrature::DiskRule;
use crate::spectrum::{elementary_symmetric, Cluster};

/// Central-difference steps of the FD protocol.
pub const FD_STEPS: [f64; 3] = [1e-3, 5e-4, 2.5e-4];

/// Largest tolerated `max |VᵀAV - I|` before a Hadamard evaluation.
pub const ORTHONORMALITY_TOL: f64 = 1e-8;

/// Formula value against finite differences.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeReport {
    pub formula: f64,
    pub steps: Vec<f64>,
    /// Central differences, one per step.
    pub fd: Vec<f64>,
    pub richardson: f64,
    pub rel_err: f64,
    /// Observed order `log2(|D₁ - D₂| / |D₂ - D₃|)`; `None` when the
    /// differences are at roundoff level (the FD is exact).
    pub order: Option<f64>,
}

impl DerivativeReport {
    pub fn order_in(&self, lo: f64, hi: f64) -> bool {
        self.order.is_none_or(|p| p >= lo && p <= hi)
    }
}

/// Runs the FD protocol on a vector-valued `f(t)`. The report carries the
/// component with the largest extrapolated magnitude; `rel_err` is the
/// max-norm error relative to `max(‖R‖∞, floor)`.
pub fn fd_compare_vec<F>(formula: &[f64], floor: f64, f: F) -> Result<DerivativeReport>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
{
    let evals: Vec<Vec<f64>> = FD_STEPS
        .par_iter()
        .flat_map_iter(|t| [*t, -*t])
        .map(&f)
        .collect::<Result<_>>()?;
    let len = formula.len();
    if evals.iter().any(|e| e.len() != len) {
        return Err(Error::Structural("FD evaluations changed length".into()));
    }
    let diffs: Vec<Vec<f64>> = FD_STEPS
        .iter()
        .enumerate()
        .map(|(k, t)| {
            (0..len)
                .map(|i| (evals[2 * k][i] - evals[2 * k + 1][i]) / (2.0 * t))
                .collect()
        })
        .collect();
    let rich: Vec<f64> = (0..len)
        .map(|i| (4.0 * diffs[2][i] - diffs[1][i]) / 3.0)
        .collect();
    let amax = |v: &mut dyn Iterator<Item = f64>| v.fold(0.0, |m: f64, x| m.max(x.abs()));
    let scale = amax(&mut rich.iter().copied()).max(floor);
    let err = amax(&mut (0..len).map(|i| formula[i] - rich[i]));
    let d12 = amax(&mut (0..len).map(|i| diffs[0][i] - diffs[1][i]));
    let d23 = amax(&mut (0..len).map(|i| diffs[1][i] - diffs[2][i]));
    // Cancellation in f(t) - f(-t) leaves about eps·|f|/t in each difference.
    let fmax = evals.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    let noise = (1e-11 * scale).max(100.0 * f64::EPSILON * fmax / FD_STEPS[2]);
    let order = if d12 <= noise && d23 <= noise {
        None
    } else {
        Some((d12 / d23).log2())
    };
    let pick = (0..len)
        .max_by(|&a, &b| rich[a].abs().total_cmp(&rich[b].abs()))
        .unwrap_or(0);
    Ok(DerivativeReport {
        formula: formula.get(pick).copied().unwrap_or(0.0),
        steps: FD_STEPS.to_vec(),
        fd: diffs.iter().map(|d| d.get(pick).copied().unwrap_or(0.0)).collect(),
        richardson: rich.get(pick).copied().unwrap_or(0.0),
        rel_err: err / scale,
        order,
    })
}

/// Scalar form of [`fd_compare_vec`].
pub fn fd_compare<F>(formula: f64, floor: f64, f: F) -> Result<DerivativeReport>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    fd_compare_vec(&[formula], floor, |t| f(t).map(|v| vec![v]))
}

/// `(∇φ)⁻¹ ν`, the reference direction whose `n`-th derivative of `u` is `∂ⁿv/∂νⁿ`.
fn pulled_back_normal(phi: &DomainMap, s: &BoundarySample) -> Result<[f64; 2]> {
    let j = phi.jacobian(s.reference);
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if !(det.abs() > 0.0) {
        return Err(Error::SingularJacobian { det });
    }
    let nu = s.normal;
    Ok([
        (j[1][1] * nu[0] - j[0][1] * nu[1]) / det,
        (-j[1][0] * nu[0] + j[0][0] * nu[1]) / det,
    ])
}

/// Weights of `u ↦ Dⁿu[a, …, a]` on jet coefficients of order `n`.
fn directional_weights(a: [f64; 2], n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n_coeffs(n)];
    let nf = factorial(n);
    for i in 0..=n {
        w[index(i, n - i)] = nf * a[0].powi(i as i32) * a[1].powi((n - i) as i32);
    }
    w
}

/// `∂ⁿv/∂νⁿ` of every raw basis function at every sample (rows = samples).
pub fn trace_matrix(
    disc: &Discretization,
    phi: &DomainMap,
    samples: &[BoundarySample],
) -> Result<DMatrix<f64>> {
    let n = disc.problem().n();
    let basis = disc.basis();
    let rows: Vec<Vec<f64>> = samples
        .par_iter()
        .map(|s| {
            let a = pulled_back_normal(phi, s)?;
            Ok(basis
                .node_tables(s.reference, n)
                .apply(&directional_weights(a, n)))
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_row_iterator(
        samples.len(),
        basis.len(),
        rows.into_iter().flatten(),
    ))
}

/// `∂ⁿv/∂νⁿ` at the samples for raw basis coefficients `coeffs`.
///
/// Since `v` and its derivatives below order `n` vanish on the boundary,
/// `Dⁿv` there is `∂ⁿv/∂νⁿ · ν⊗…⊗ν`, and `Dⁿu[a, …, a]` with
/// `a = (∇φ)⁻¹ν` recovers the normal derivative.
pub fn normal_derivative_n(
    disc: &Discretization,
    phi: &DomainMap,
    coeffs: &[f64],
    samples: &[BoundarySample],
) -> Result<Vec<f64>> {
    if coeffs.len() != disc.basis().len() {
        return Err(Error::InvalidInput(format!(
            "{} coefficients for a basis of {}",
            coeffs.len(),
            disc.basis().len()
        )));
    }
    let m = trace_matrix(disc, phi, samples)?;
    Ok((0..samples.len())
        .map(|i| m.row(i).iter().zip(coeffs).map(|(a, b)| a * b).sum())
        .collect())
}

/// Traces of the cluster eigenvectors: one column per member.
fn cluster_traces(
    disc: &Discretization,
    sol: &Solution,
    cluster: &Cluster,
    samples: &[BoundarySample],
) -> Result<DMatrix<f64>> {
    let raw = disc.transform() * sol.result.vectors.columns(cluster.start, cluster.len);
    Ok(trace_matrix(disc, &sol.phi, samples)? * raw)
}

fn check_cluster(sol: &Solution, cluster: &Cluster, h: usize) -> Result<()> {
    if cluster.start + cluster.len > sol.result.len() {
        return Err(Error::InvalidInput(
            "cluster exceeds the computed eigenvalues".into(),
        ));
    }
    if h == 0 || h > cluster.len {
        return Err(Error::InvalidInput(format!(
            "h = {h} outside 1..={}",
            cluster.len
        )));
    }
    cluster.check_separated()?;
    let defect = sol.orthonormality_defect(cluster.indices());
    if !(defect <= ORTHONORMALITY_TOL) {
        return Err(Error::InvalidInput(format!(
            "eigenvectors are not energy-orthonormal (defect {defect:.3e})"
        )));
    }
    Ok(())
}

/// The Hadamard derivative of `Λ_{F,h}` as a boundary density: for any
/// field `ψ`, `dΛ_{F,h}[ψ] = Σ_i density_i · ψ(x_i)·ν_i`.
#[derive(Clone, Debug)]
pub struct HadamardKernel {
    pub samples: Vec<BoundarySample>,
    /// `-λ_F^h C(|F|-1, h-1) Σ_l (∂ⁿv_l/∂νⁿ)² w_i`.
    pub density: Vec<f64>,
}

impl HadamardKernel {
    pub fn new(disc: &Discretization, sol: &Solution, cluster: &Cluster, h: usize) -> Result<Self> {
        check_cluster(sol, cluster, h)?;
        let samples = boundary_sample(&sol.phi, disc.quadrature().boundary)?;
        let traces = cluster_traces(disc, sol, cluster, &samples)?;
        let factor = -cluster.mean.powi(h as i32) * binomial(cluster.len - 1, h - 1);
        let density = samples
            .iter()
            .enumerate()
            .map(|(i, s)| factor * s.weight * traces.row(i).iter().map(|t| t * t).sum::<f64>())
            .collect();
        Ok(Self { samples, density })
    }

    pub fn apply(&self, psi: &PerturbationField) -> f64 {
        self.samples
            .iter()
            .zip(&self.density)
            .map(|(s, d)| {
                let z = psi.eval(s.reference);
                d * (z[0] * s.normal[0] + z[1] * s.normal[1])
            })
            .sum()
    }
}

/// `dΛ_{F,h}[ψ] = -λ_F^h C(|F|-1, h-1) Σ_{l∈F} ∮ (∂ⁿv_l/∂νⁿ)² ζ·ν dσ`.
///
/// Requires energy-orthonormal eigenvectors and a separated cluster.
pub fn hadamard_dlambda(
    disc: &Discretization,
    sol: &Solution,
    cluster: &Cluster,
    psi: &PerturbationField,
    h: usize,
) -> Result<f64> {
    Ok(HadamardKernel::new(disc, sol, cluster, h)?.apply(psi))
}

/// `Λ_{F,h}` at `φ + tψ`, with `F` taken by index.
pub fn lambda_along(
    disc: &Discretization,
    phi: &DomainMap,
    psi: &PerturbationField,
    cluster: &Cluster,
    h: usize,
    t: f64,
) -> Result<f64> {
    let res = disc.solve(&phi.perturbed(psi, t), cluster.start + cluster.len + 1)?;
    elementary_symmetric(&res.eigenvalues[cluster.indices()], h)
}

/// Hadamard formula against central FD of `Λ_{F,h}(φ + tψ)`.
pub fn hadamard_check(
    disc: &Discretization,
    sol: &Solution,
    cluster: &Cluster,
    psi: &PerturbationField,
    h: usize,
) -> Result<DerivativeReport> {
    let formula = hadamard_dlambda(disc, sol, cluster, psi, h)?;
    let lam = elementary_symmetric(&sol.result.eigenvalues[cluster.indices()], h)?;
    fd_compare(formula, 1e-6 * lam.abs(), |t| {
        lambda_along(disc, &sol.phi, psi, cluster, h, t)
    })
}

/// `S(y) = Σ_{l∈F} (∂ⁿv_l/∂νⁿ)²` on the boundary and its deviation from a constant.
#[derive(Clone, Debug)]
pub struct CriticalityReport {
    pub values: Vec<f64>,
    /// Arc-length weighted mean of `values`.
    pub mean: f64,
    /// `max |S - C| / C`.
    pub residual: f64,
    /// The traces vanish identically; the residual is meaningless.
    pub degenerate: bool,
}

pub fn criticality_residual(
    disc: &Discretization,
    sol: &Solution,
    cluster: &Cluster,
) -> Result<CriticalityReport> {
    check_cluster(sol, cluster, 1)?;
    let samples = boundary_sample(&sol.phi, disc.quadrature().boundary)?;
    let traces = cluster_traces(disc, sol, cluster, &samples)?;
    let values: Vec<f64> = (0..samples.len())
        .map(|i| traces.row(i).iter().map(|t| t * t).sum())
        .collect();
    let total: f64 = samples.iter().map(|s| s.weight).sum();
    let mean = samples
        .iter()
        .zip(&values)
        .map(|(s, v)| s.weight * v)
        .sum::<f64>()
        / total;
    let peak = values.iter().fold(0.0f64, |m, v| m.max(*v));
    let degenerate = !(mean > 1e-14 * peak.max(f64::MIN_POSITIVE));
    let residual = if degenerate {
        f64::NAN
    } else {
        values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max) / mean
    };
    Ok(CriticalityReport {
        values,
        mean,
        residual,
        degenerate,
    })
}

/// Least-squares fit `dΛ_{F,h}[ψ_k] ≈ c · dV[ψ_k]` over a field list.
#[derive(Clone, Debug)]
pub struct LagrangeFit {
    pub multiplier: f64,
    /// `max_k |dΛ_k - c dV_k| / max_k |dΛ_k|`.
    pub deviation: f64,
    pub d_lambda: Vec<f64>,
    pub d_volume: Vec<f64>,
    /// Fewer than two fields: the deviation is zero by construction.
    pub degenerate: bool,
}

pub fn lagrange_fit(
    disc: &Discretization,
    sol: &Solution,
    cluster: &Cluster,
    fields: &[PerturbationField],
    h: usize,
) -> Result<LagrangeFit> {
    let kernel = HadamardKernel::new(disc, sol, cluster, h)?;
    let m = disc.quadrature().boundary;
    let d_lambda: Vec<f64> = fields.iter().map(|f| kernel.apply(f)).collect();
    let d_volume: Vec<f64> = fields
        .iter()
        .map(|f| volume_derivative(&sol.phi, f, m))
        .collect::<Result<_>>()?;
    let vol_scale: f64 = boundary_sample(&sol.phi, m)?.iter().map(|s| s.weight).sum();
    if d_volume.iter().all(|v| v.abs() <= 1e-10 * vol_scale) {
        return Err(Error::InvalidInput(
            "no field in the list changes the volume".into(),
        ));
    }
    let num: f64 = d_lambda.iter().zip(&d_volume).map(|(a, b)| a * b).sum();
    let den: f64 = d_volume.iter().map(|b| b * b).sum();
    let multiplier = num / den;
    let worst = d_lambda
        .iter()
        .zip(&d_volume)
        .map(|(a, b)| (a - multiplier * b).abs())
        .fold(0.0, f64::max);
    let scale = d_lambda.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    Ok(LagrangeFit {
        multiplier,
        deviation: if scale > 0.0 { worst / scale } else { 0.0 },
        d_lambda,
        d_volume,
        degenerate: fields.len() < 2,
    })
}

fn fd_map(phi: &DomainMap, psi: &PerturbationField, t: f64, rule: &DiskRule) -> Result<DomainMap> {
    let mapped = phi.perturbed(psi, t);
    bilipschitz_check(&mapped, rule.nodes(), crate::geometry::DEFAULT_BILIP_DELTA)?;
    Ok(mapped)
}

/// `d(det ∇φ)[ψ] = div ζ(φ(x)) · det ∇φ(x)` at `points`, against FD.
pub fn d_det_check(
    phi: &DomainMap,
    psi: &PerturbationField,
    points: &[[f64; 2]],
) -> Result<DerivativeReport> {
    let rule = DiskRule::new(8, 16)?;
    let formula: Vec<f64> = points
        .iter()
        .map(|p| {
            let j = phi.jacobian(*p);
            let g = psi.jet(*p, 1).linear_part();
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if !(det.abs() > 0.0) {
                return Err(Error::SingularJacobian { det });
            }
            // tr(∇ψ (∇φ)⁻¹)
            let div = (g[0][0] * j[1][1] - g[0][1] * j[1][0] - g[1][0] * j[0][1]
                + g[1][1] * j[0][0])
                / det;
            Ok(div * det)
        })
        .collect::<Result<_>>()?;
    fd_compare_vec(&formula, 1e-12, |t| {
        let mapped = fd_map(phi, psi, t, &rule)?;
        Ok(points.iter().map(|p| mapped.det(*p)).collect())
    })
}

/// Jets of `v = u ∘ φ⁻¹` and `ζ = ψ ∘ φ⁻¹` at `φ(x)`.
fn physical_jets(
    phi: &DomainMap,
    psi: &PerturbationField,
    u: &Poly2,
    x: [f64; 2],
    order: usize,
) -> Result<(Jet, [Jet; 2])> {
    let inv = phi.map_jet(x, order).inverse()?;
    let table = ComposeTable::new(&inv, x, order)?;
    let v = table.apply(&u.jet(x, order))?;
    let pj = psi.jet(x, order);
    Ok((v, [table.apply(pj.component(0))?, table.apply(pj.component(1))?]))
}

/// `dΔ_φ[ψ]u = -2 Σ v_{,ij} ζ_{j,i} - Σ v_{,j} Δζ_j` (composed with `φ`) at
/// `points`, against FD of `Δ_{φ+tψ}u`.
pub fn d_laplacian_check(
    phi: &DomainMap,
    psi: &PerturbationField,
    u: &Poly2,
    points: &[[f64; 2]],
) -> Result<DerivativeReport> {
    let rule = DiskRule::new(8, 16)?;
    let formula: Vec<f64> = points
        .iter()
        .map(|x| {
            let (v, zeta) = physical_jets(phi, psi, u, *x, 3)?;
            let mut total = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    let mut a = [0usize; 2];
                    a[i] += 1;
                    a[j] += 1;
                    let mut e = [0usize; 2];
                    e[i] += 1;
                    total -= 2.0 * v.derivative(a[0], a[1]) * zeta[j].derivative(e[0], e[1]);
                }
            }
            for (j, z) in zeta.iter().enumerate() {
                let mut e = [0usize; 2];
                e[j] += 1;
                total -= v.derivative(e[0], e[1]) * z.laplacian_power(1)?;
            }
            Ok(total)
        })
        .collect::<Result<_>>()?;
    let scale = points
        .iter()
        .map(|x| u.laplacian().eval(*x).abs())
        .fold(1e-12, f64::max);
    fd_compare_vec(&formula, 1e-6 * scale, |t| {
        let mapped = fd_map(phi, psi, t, &rule)?;
        points
            .iter()
            .map(|x| {
                crate::jets::pullback_laplacian_power(&u.jet(*x, 2), &mapped.map_jet(*x, 2), 1)
            })
            .collect()
    })
}

/// Derivative of `(-Δ_φ)^p[u₁][u₂]` along `ψ`:
/// `-∮ ∂ᵖv₁ ∂ᵖv₂ ζ·ν dσ - ∫ ((-Δ)ᵖv₁ ∇v₂ + (-Δ)ᵖv₂ ∇v₁)·ζ dy`.
///
/// `u₁`, `u₂` must vanish with their derivatives below order `p` on the
/// unit circle.
pub fn d_polyform_formula(
    phi: &DomainMap,
    psi: &PerturbationField,
    u1: &Poly2,
    u2: &Poly2,
    power: usize,
    rule: &DiskRule,
    boundary: usize,
) -> Result<f64> {
    if power == 0 || 2 * power > 6 {
        return Err(Error::Unsupported(format!(
            "operator derivative for power {power} needs jets of order {}",
            2 * power
        )));
    }
    let samples = boundary_sample_with_field(phi, psi, boundary)?;
    let edge: f64 = samples
        .iter()
        .map(|s| {
            let a = pulled_back_normal(phi, s)?;
            let t1 = derivative_tensor_apply(&u1.jet(s.reference, power), a, power)?;
            let t2 = derivative_tensor_apply(&u2.jet(s.reference, power), a, power)?;
            let z = s.field.expect("field requested");
            Ok(s.weight * t1 * t2 * (z[0] * s.normal[0] + z[1] * s.normal[1]))
        })
        .sum::<Result<f64>>()?;
    let sign = if power.is_multiple_of(2) { 1.0 } else { -1.0 };
    let bulk: Vec<f64> = rule
        .nodes()
        .par_iter()
        .zip(rule.weights().par_iter())
        .map(|(x, w)| {
            let order = 2 * power;
            let inv = phi.map_jet(*x, order).inverse()?;
            let table = ComposeTable::new(&inv, *x, order)?;
            let v1 = table.apply(&u1.jet(*x, order))?;
            let v2 = table.apply(&u2.jet(*x, order))?;
            let l1 = sign * v1.laplacian_power(power)?;
            let l2 = sign * v2.laplacian_power(power)?;
            let (g1, g2) = (v1.gradient(), v2.gradient());
            let z = psi.eval(*x);
            let integrand = (l1 * g2[0] + l2 * g1[0]) * z[0] + (l1 * g2[1] + l2 * g1[1]) * z[1];
            Ok(w * phi.det(*x).abs() * integrand)
        })
        .collect::<Result<_>>()?;
    Ok(-edge - bulk.iter().sum::<f64>())
}

/// [`d_polyform_formula`] against FD of the assembled entry.
pub fn d_polyform_check(
    disc: &Discretization,
    phi: &DomainMap,
    psi: &PerturbationField,
    u1: &Poly2,
    u2: &Poly2,
    power: usize,
) -> Result<DerivativeReport> {
    let quad = disc.quadrature();
    let formula = d_polyform_formula(phi, psi, u1, u2, power, &quad.disk, quad.boundary)?;
    let base = form_entry(phi, u1, u2, power, &quad.disk)?;
    let floor = 1e-6 * (form_entry(phi, u1, u1, power, &quad.disk)?
        * form_entry(phi, u2, u2, power, &quad.disk)?)
    .sqrt()
    .max(base.abs());
    fd_compare(formula, floor, |t| {
        let mapped = fd_map(phi, psi, t, &quad.disk)?;
        form_entry(&mapped, u1, u2, power, &quad.disk)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::Problem;
    use crate::quadrature::QuadratureRule;
    use crate::spectrum::cluster_eigenvalues;

    fn small(n: usize, m: usize) -> Discretization {
        Discretization::new(
            Problem::new(n, m).unwrap(),
            10,
            QuadratureRule::new(24, 48).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn fd_protocol_on_known_functions() {
        let r = fd_compare(3.0, 1e-12, |t| Ok((3.0 * t).sin() + 1.0)).unwrap();
        assert!(r.rel_err < 1e-10, "{r:?}");
        let p = r.order.unwrap();
        assert!((p - 2.0).abs() < 0.05, "{p}");
        // Exact for quadratics.
        let r = fd_compare(1.0, 1e-12, |t| Ok(t + t * t)).unwrap();
        assert_eq!(r.order, None);
        assert!(r.rel_err < 1e-12);
    }

    #[test]
    fn boundary_trace_of_weighted_polynomial() {
        // u = (1 - r²)ⁿ p on the unit disk has ∂ⁿu/∂νⁿ = (-2)ⁿ n! p.
        for n in 1..=3 {
            let disc = small(n, 0);
            let k = 4;
            let mut coeffs = vec![0.0; disc.basis().len()];
            coeffs[k] = 1.0;
            let phi = DomainMap::identity();
            let samples = boundary_sample(&phi, 32).unwrap();
            let got = normal_derivative_n(&disc, &phi, &coeffs, &samples).unwrap();
            let factor = (-2.0f64).powi(n as i32) * factorial(n);
            for (s, g) in samples.iter().zip(&got) {
                let (a, b) = disc.basis().indices()[k];
                let legendre = |deg: usize, x: f64| match deg {
                    0 => 1.0,
                    1 => x,
                    2 => 1.5 * x * x - 0.5,
                    _ => unreachable!(),
                };
                let want = factor * legendre(a, s.reference[0]) * legendre(b, s.reference[1]);
                assert!((g - want).abs() < 1e-11 * factor.abs(), "n={n}: {g} vs {want}");
            }
        }
    }

    #[test]
    fn rotation_field_has_zero_derivative() {
        let disc = small(1, 0);
        let sol = disc.solve_full(&DomainMap::identity(), 4).unwrap();
        let c = Cluster::from_range(&sol.result.eigenvalues, 0, 1).unwrap();
        let d = hadamard_dlambda(&disc, &sol, &c, &PerturbationField::rotation(), 1).unwrap();
        assert!(d.abs() < 1e-9 * c.mean);
    }

    #[test]
    fn dilation_gives_scaling_law() {
        let disc = small(2, 1);
        let sol = disc.solve_full(&DomainMap::identity(), 4).unwrap();
        let c = Cluster::from_range(&sol.result.eigenvalues, 0, 1).unwrap();
        let d = hadamard_dlambda(&disc, &sol, &c, &PerturbationField::dilation(), 1).unwrap();
        let want = -2.0 * c.mean;
        assert!((d - want).abs() < 1e-6 * want.abs(), "{d} vs {want}");
    }

    #[test]
    fn refuses_unseparated_cluster() {
        let disc = small(1, 0);
        let sol = disc.solve_full(&DomainMap::identity(), 4).unwrap();
        let c = Cluster::from_range(&sol.result.eigenvalues, 1, 1).unwrap();
        assert!(matches!(
            hadamard_dlambda(&disc, &sol, &c, &PerturbationField::dilation(), 1),
            Err(Error::ClusterNotSeparated { .. })
        ));
        let clusters = cluster_eigenvalues(&sol.result.eigenvalues, 1e-6).unwrap();
        assert_eq!(clusters[1].len, 2);
        assert!(hadamard_dlambda(&disc, &sol, &clusters[1], &PerturbationField::dilation(), 2).is_ok());
    }

    #[test]
    fn refuses_mass_normalized_vectors() {
        let disc = small(1, 0);
        let mut sol = disc.solve_full(&DomainMap::identity(), 2).unwrap();
        let lam = sol.result.eigenvalues[0];
        sol.result.vectors.column_mut(0).scale_mut(1.0 / lam.sqrt());
        let c = Cluster::from_range(&sol.result.eigenvalues, 0, 1).unwrap();
        assert!(hadamard_dlambda(&disc, &sol, &c, &PerturbationField::dilation(), 1).is_err());
    }

    #[test]
    fn zero_field_derivatives_vanish() {
        let phi = DomainMap::ellipse(0.1);
        let zero = PerturbationField::zero();
        let pts = [[0.1, 0.2], [-0.3, 0.4]];
        let u = Poly2::from_terms(&[(3, 0, 1.0), (1, 2, -0.5)]);
        let r = d_laplacian_check(&phi, &zero, &u, &pts).unwrap();
        assert_eq!(r.formula, 0.0);
        assert_eq!(r.richardson, 0.0);
        let r = d_det_check(&phi, &zero, &pts).unwrap();
        assert_eq!(r.formula, 0.0);
    }
}
