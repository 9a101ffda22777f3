//! Galerkin discretization of `(-Δ)^n u = λ (-Δ)^m u` on `φ(Ω)`, pulled back
//! to the unit disk.
//!
//! For a power `p = 2s` the form is `∫ Δ_φ^s u_i Δ_φ^s u_j |det ∇φ| dx`; for
//! `p = 2s + 1` it is `∫ ∇_y Δ^s v_i · ∇_y Δ^s v_j |det ∇φ| dx` with
//! `v = u ∘ φ⁻¹`. Both are read pointwise from jets of `v`, obtained by
//! composing the basis jets with the formal inverse of `φ`'s jet.
//!
//! The basis is orthonormalized once against the energy form at `φ = id`
//! (Cholesky of the reference Gram matrix), so the matrices handed to the
//! eigensolver stay close to the identity for maps near the identity.

mod basis;

pub use basis::{build_basis, BasisSet, NodeTables, MAX_OPERATOR_ORDER};

use std::fmt::Write as _;

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fingerprint::{Fingerprint, FingerprintBuilder};
use crate::geometry::{bilipschitz_check, DomainMap, DEFAULT_BILIP_DELTA};
use crate::jets::{ComposeTable, Jet};
use crate::kv;
use crate::poly::Poly2;
use crate::quadrature::{DiskRule, QuadratureRule};
use crate::spectrum::SpectralResult;

/// Default angular polynomial degree of the basis.
pub const DEFAULT_DEGREE: usize = 16;

/// Operator orders of `(-Δ)^n u = λ (-Δ)^m u`, with `0 ≤ m < n ≤ 3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Problem {
    n: usize,
    m: usize,
}

impl Problem {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if n == 0 || n > MAX_OPERATOR_ORDER || m >= n {
            return Err(Error::InvalidInput(format!(
                "need 0 ≤ m < n ≤ {MAX_OPERATOR_ORDER}, got n = {n}, m = {m}"
            )));
        }
        Ok(Self { n, m })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `n - m`, the homogeneity that drives the dilation law `λ(cΩ) = c^{-2(n-m)} λ(Ω)`.
    pub fn order_gap(&self) -> usize {
        self.n - self.m
    }

    /// All supported `(n, m)` pairs.
    pub fn all() -> Vec<Problem> {
        (1..=MAX_OPERATOR_ORDER)
            .flat_map(|n| (0..n).map(move |m| Problem { n, m }))
            .collect()
    }
}

impl std::fmt::Display for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "P{}{}", self.n, self.m)
    }
}

/// Matrices of `(-Δ_φ)^n` and `(-Δ_φ)^m` in the orthonormalized basis.
#[derive(Clone, Debug)]
pub struct AssembledForms {
    /// Energy form; also the Gram matrix of the pulled-back scalar product.
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub problem: Problem,
    pub degree: usize,
    pub radial: usize,
    pub angular: usize,
    pub fingerprint: Fingerprint,
}

impl AssembledForms {
    /// `max |A - Aᵀ| / max |A|` before symmetrization is always zero here;
    /// this reports the residual of the stored matrices.
    pub fn symmetry_residual(&self) -> f64 {
        let rel = |m: &DMatrix<f64>| {
            let scale = m.amax();
            (m - m.transpose()).amax() / scale
        };
        rel(&self.a).max(rel(&self.b))
    }
}

/// Matrix as CSV, 17 significant digits.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| kv::format_f64(m[(i, j)])).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Linear functionals on the jet of `v = u ∘ φ⁻¹` that produce the
/// integrand factors of a power-`p` form.
fn target_weights(power: usize) -> Vec<Vec<f64>> {
    let s = power / 2;
    if power.is_multiple_of(2) {
        vec![Jet::laplacian_power_weights(s, power)]
    } else {
        vec![
            Jet::grad_laplacian_power_weights(s, 0, power),
            Jet::grad_laplacian_power_weights(s, 1, power),
        ]
    }
}

/// Functionals on the jet of `u` at `p` (and `det ∇φ(p)`) realizing the
/// targets of [`target_weights`] after the change of variables.
pub(crate) fn pulled_back_functionals(
    phi: &DomainMap,
    p: [f64; 2],
    targets: &[Vec<f64>],
    order: usize,
) -> Result<(Vec<Vec<f64>>, f64)> {
    if order == 0 {
        return Ok((targets.to_vec(), phi.det(p)));
    }
    let jet = phi.map_jet(p, order);
    let inv = jet.inverse()?;
    let table = ComposeTable::new(&inv, p, order)?;
    Ok((
        targets
            .iter()
            .map(|w| table.pullback_functional(w))
            .collect(),
        jet.det(),
    ))
}

/// Rows `sqrt(w_q |det|) · T_c(u_k)(x_q)` for every node `q`, component
/// `c` and basis function `k`, in node-major order.
fn value_matrix(
    basis: &BasisSet,
    phi: &DomainMap,
    power: usize,
    rule: &DiskRule,
) -> Result<DMatrix<f64>> {
    let targets = target_weights(power);
    let comps = targets.len();
    let nb = basis.len();
    let rows: Vec<Vec<f64>> = rule
        .nodes()
        .par_iter()
        .zip(rule.weights().par_iter())
        .map(|(p, w)| {
            let (functionals, det) = pulled_back_functionals(phi, *p, &targets, power)?;
            let tables = basis.node_tables(*p, power);
            let scale = (w * det.abs()).sqrt();
            let mut out = Vec::with_capacity(comps * nb);
            for f in &functionals {
                out.extend(tables.apply(f).into_iter().map(|v| v * scale));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_row_iterator(
        rows.len() * comps,
        nb,
        rows.into_iter().flatten(),
    ))
}

/// Basis, quadrature and reference orthonormalization for one problem.
#[derive(Clone, Debug)]
pub struct Discretization {
    problem: Problem,
    basis: BasisSet,
    quad: QuadratureRule,
    /// Upper-triangular `T` with `Tᵀ A_ref T = I`.
    transform: DMatrix<f64>,
    bilip_delta: f64,
}

impl Discretization {
    pub fn new(problem: Problem, degree: usize, quad: QuadratureRule) -> Result<Self> {
        let basis = build_basis(problem.n(), degree)?;
        let v = value_matrix(&basis, &DomainMap::identity(), problem.n(), &quad.disk)?;
        let a_ref = symmetrize(&v.tr_mul(&v));
        let nb = basis.len();
        let chol = Cholesky::new(a_ref).ok_or(Error::NotCoercive)?;
        let transform = chol
            .l()
            .transpose()
            .solve_upper_triangular(&DMatrix::identity(nb, nb))
            .ok_or(Error::NotCoercive)?;
        Ok(Self {
            problem,
            basis,
            quad,
            transform,
            bilip_delta: DEFAULT_BILIP_DELTA,
        })
    }

    /// Defaults: degree 16, 40 radial × 96 angular nodes.
    pub fn with_defaults(problem: Problem) -> Result<Self> {
        Self::new(problem, DEFAULT_DEGREE, QuadratureRule::default())
    }

    pub fn with_bilip_delta(mut self, delta: f64) -> Self {
        self.bilip_delta = delta;
        self
    }

    pub fn problem(&self) -> Problem {
        self.problem
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quad
    }

    pub fn transform(&self) -> &DMatrix<f64> {
        &self.transform
    }

    pub fn bilip_delta(&self) -> f64 {
        self.bilip_delta
    }

    pub fn fingerprint(&self, phi: &DomainMap) -> Fingerprint {
        phi.hash_into(FingerprintBuilder::new())
            .u64(self.problem.n as u64)
            .u64(self.problem.m as u64)
            .u64(self.basis.degree() as u64)
            .u64(self.quad.radial() as u64)
            .u64(self.quad.angular() as u64)
            .finish()
    }

    /// Rejects maps that fail the bi-Lipschitz heuristic.
    pub fn check_map(&self, phi: &DomainMap) -> Result<()> {
        bilipschitz_check(phi, self.quad.disk.nodes(), self.bilip_delta).map(|_| ())
    }

    /// Power-`p` form in the raw (non-orthonormalized) basis.
    pub fn raw_form(&self, phi: &DomainMap, power: usize) -> Result<DMatrix<f64>> {
        let v = value_matrix(&self.basis, phi, power, &self.quad.disk)?;
        Ok(symmetrize(&v.tr_mul(&v)))
    }

    fn form(&self, phi: &DomainMap, power: usize) -> Result<DMatrix<f64>> {
        let v = value_matrix(&self.basis, phi, power, &self.quad.disk)? * &self.transform;
        Ok(symmetrize(&v.tr_mul(&v)))
    }

    pub fn assemble(&self, phi: &DomainMap) -> Result<AssembledForms> {
        self.check_map(phi)?;
        Ok(AssembledForms {
            a: self.form(phi, self.problem.n)?,
            b: self.form(phi, self.problem.m)?,
            problem: self.problem,
            degree: self.basis.degree(),
            radial: self.quad.radial(),
            angular: self.quad.angular(),
            fingerprint: self.fingerprint(phi),
        })
    }

    /// Assemble and solve for the lowest `count` eigenpairs.
    pub fn solve(&self, phi: &DomainMap, count: usize) -> Result<SpectralResult> {
        eigensolve(&self.assemble(phi)?, count)
    }

    /// Like [`solve`](Self::solve), keeping the map and matrices.
    pub fn solve_full(&self, phi: &DomainMap, count: usize) -> Result<Solution> {
        let forms = self.assemble(phi)?;
        let result = eigensolve(&forms, count)?;
        Ok(Solution {
            phi: phi.clone(),
            forms,
            result,
        })
    }

    /// Eigenvector coefficients with respect to the raw basis functions.
    pub fn raw_coefficients(&self, result: &SpectralResult) -> DMatrix<f64> {
        &self.transform * &result.vectors
    }

    /// Polynomial of eigenvector `j` (zero-based) in the raw basis.
    pub fn eigenfunction(&self, result: &SpectralResult, j: usize) -> Poly2 {
        let coeffs = self.raw_coefficients(result);
        (0..self.basis.len()).fold(Poly2::zero(), |acc, k| {
            &acc + &self.basis.function(k).scale(coeffs[(k, j)])
        })
    }
}

/// A solved problem: the map, its matrices and the spectrum.
#[derive(Clone, Debug)]
pub struct Solution {
    pub phi: DomainMap,
    pub forms: AssembledForms,
    pub result: SpectralResult,
}

impl Solution {
    /// `max |VᵀAV - I|` over the given eigenvector columns.
    pub fn orthonormality_defect(&self, columns: std::ops::Range<usize>) -> f64 {
        let v = self
            .result
            .vectors
            .columns(columns.start, columns.len())
            .clone_owned();
        let gram = v.transpose() * &self.forms.a * &v;
        (gram - DMatrix::identity(columns.len(), columns.len())).amax()
    }
}

/// `A u = λ B u` through the Cholesky factor of `A`: the reduced matrix
/// `L⁻¹ B L⁻ᵀ` is the discrete solution operator `T_φ`, whose eigenvalues
/// are `μ = 1/λ`. Eigenvectors come out `A`-orthonormal.
pub fn eigensolve(forms: &AssembledForms, count: usize) -> Result<SpectralResult> {
    let nb = forms.a.nrows();
    if count == 0 || count > nb {
        return Err(Error::InvalidInput(format!(
            "requested {count} eigenpairs from a basis of size {nb}"
        )));
    }
    let chol = Cholesky::new(forms.a.clone()).ok_or(Error::NotCoercive)?;
    let l = chol.l();
    let lb = l
        .solve_lower_triangular(&forms.b)
        .ok_or(Error::NotCoercive)?;
    let reduced = l
        .solve_lower_triangular(&lb.transpose())
        .ok_or(Error::NotCoercive)?;
    let eig = SymmetricEigen::new(symmetrize(&reduced));

    let mut order: Vec<usize> = (0..nb).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let lt = l.transpose();
    let mut eigenvalues = Vec::with_capacity(count);
    let mut vectors = DMatrix::zeros(nb, count);
    for (col, &idx) in order.iter().take(count).enumerate() {
        let mu = eig.eigenvalues[idx];
        if !(mu > 0.0) {
            return Err(Error::InvalidInput(
                "second form is not positive definite on the basis span".into(),
            ));
        }
        eigenvalues.push(1.0 / mu);
        let mut w = eig.eigenvectors.column(idx).clone_owned();
        // Fix the sign so results do not depend on solver internals.
        let pivot = w.iamax();
        if w[pivot] < 0.0 {
            w.neg_mut();
        }
        let u = lt.solve_upper_triangular(&w).ok_or(Error::NotCoercive)?;
        vectors.set_column(col, &u);
    }
    Ok(SpectralResult {
        eigenvalues,
        vectors,
        fingerprint: forms.fingerprint,
    })
}

/// `(-Δ_φ)^p [u₁][u₂]` for arbitrary polynomials, by disk quadrature.
pub fn form_entry(
    phi: &DomainMap,
    u1: &Poly2,
    u2: &Poly2,
    power: usize,
    rule: &DiskRule,
) -> Result<f64> {
    let targets = target_weights(power);
    let terms: Vec<f64> = rule
        .nodes()
        .par_iter()
        .zip(rule.weights().par_iter())
        .map(|(p, w)| {
            let (functionals, det) = pulled_back_functionals(phi, *p, &targets, power)?;
            let j1 = u1.jet(*p, power);
            let j2 = u2.jet(*p, power);
            let value: f64 = functionals
                .iter()
                .map(|f| crate::jets::dot(f, j1.coeffs()) * crate::jets::dot(f, j2.coeffs()))
                .sum();
            Ok(w * det.abs() * value)
        })
        .collect::<Result<_>>()?;
    Ok(terms.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn problem_validation() {
        assert!(Problem::new(1, 0).is_ok());
        assert!(Problem::new(3, 2).is_ok());
        assert!(Problem::new(2, 2).is_err());
        assert!(Problem::new(4, 0).is_err());
        assert_eq!(Problem::all().len(), 6);
    }

    #[test]
    fn single_function_rayleigh_quotient() {
        // u = 1 - r²: ∫|∇u|² = 2π, ∫u² = π/3, quotient 6.
        let disc = Discretization::new(
            Problem::new(1, 0).unwrap(),
            0,
            QuadratureRule::new(10, 16).unwrap(),
        )
        .unwrap();
        let phi = DomainMap::identity();
        let a = disc.raw_form(&phi, 1).unwrap();
        let b = disc.raw_form(&phi, 0).unwrap();
        assert!((a[(0, 0)] - 2.0 * PI).abs() < 1e-13);
        assert!((b[(0, 0)] - PI / 3.0).abs() < 1e-13);
        let res = disc.solve(&phi, 1).unwrap();
        assert!((res.eigenvalues[0] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn orthonormalized_energy_is_identity_at_reference() {
        let disc = Discretization::new(
            Problem::new(2, 1).unwrap(),
            8,
            QuadratureRule::new(20, 48).unwrap(),
        )
        .unwrap();
        let forms = disc.assemble(&DomainMap::identity()).unwrap();
        let dev = (&forms.a - DMatrix::identity(forms.a.nrows(), forms.a.ncols())).amax();
        assert!(dev < 1e-10, "{dev}");
        assert!(forms.symmetry_residual() <= 1e-10);
    }

    #[test]
    fn count_is_validated() {
        let disc = Discretization::new(
            Problem::new(1, 0).unwrap(),
            2,
            QuadratureRule::new(8, 16).unwrap(),
        )
        .unwrap();
        let forms = disc.assemble(&DomainMap::identity()).unwrap();
        assert!(eigensolve(&forms, 0).is_err());
        assert!(eigensolve(&forms, 7).is_err());
        assert!(eigensolve(&forms, 6).is_ok());
    }

    #[test]
    fn refuses_folded_maps() {
        let disc = Discretization::new(
            Problem::new(1, 0).unwrap(),
            2,
            QuadratureRule::new(8, 16).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            disc.assemble(&DomainMap::dilation(0.0)),
            Err(Error::NotBiLipschitz { .. })
        ));
    }

    #[test]
    fn form_entry_matches_raw_matrix() {
        let disc = Discretization::new(
            Problem::new(2, 0).unwrap(),
            3,
            QuadratureRule::new(16, 32).unwrap(),
        )
        .unwrap();
        let phi = DomainMap::custom(
            Poly2::from_terms(&[(1, 0, 1.0), (0, 2, 0.1)]),
            Poly2::from_terms(&[(0, 1, 1.0), (1, 1, -0.05)]),
        )
        .unwrap();
        for power in [0, 1, 2] {
            let raw = disc.raw_form(&phi, power).unwrap();
            let u1 = disc.basis().function(1);
            let u2 = disc.basis().function(4);
            let e = form_entry(&phi, &u1, &u2, power, &disc.quadrature().disk).unwrap();
            assert!((e - raw[(1, 4)]).abs() < 1e-11 * raw.amax(), "power {power}");
        }
    }
}
