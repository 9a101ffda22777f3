//! Truncated Taylor algebra in two variables.
//!
//! A [`Jet`] stores the Taylor-normalized coefficients `c_α = D^α f(base) / α!`
//! of a scalar function for every multi-index `|α| ≤ K`, in graded order
//! `(0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...`. A [`MapJet`] pairs two jets
//! into the expansion of a planar map. Composition and formal inversion of map
//! jets are what make the pulled-back operator `Δ_φ^s u = (Δ^s (u∘φ⁻¹))∘φ`
//! computable exactly on polynomial data.

use crate::error::{Error, Result};

/// Highest supported truncation order.
pub const MAX_ORDER: usize = 8;
/// Coefficient count at [`MAX_ORDER`].
pub const MAX_COEFFS: usize = n_coeffs(MAX_ORDER);

/// Absolute tolerance on base-point agreement in composition.
pub const BASE_TOL: f64 = 1e-12;

/// Number of multi-indices with `|α| ≤ order`.
pub const fn n_coeffs(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

/// Graded position of the multi-index `(i, j)`.
#[inline]
pub const fn index(i: usize, j: usize) -> usize {
    let k = i + j;
    k * (k + 1) / 2 + j
}

const MULTI: [(usize, usize); MAX_COEFFS] = {
    let mut table = [(0, 0); MAX_COEFFS];
    let mut k = 0;
    while k <= MAX_ORDER {
        let mut j = 0;
        while j <= k {
            table[k * (k + 1) / 2 + j] = (k - j, j);
            j += 1;
        }
        k += 1;
    }
    table
};

/// Inverse of [`index`].
#[inline]
pub fn multi_index(idx: usize) -> (usize, usize) {
    MULTI[idx]
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, v| acc * v as f64)
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Truncated Taylor expansion of a scalar function of two variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    base: [f64; 2],
    order: usize,
    coeffs: [f64; MAX_COEFFS],
}

impl Jet {
    /// The zero jet. Panics if `order > MAX_ORDER`.
    pub fn zero(base: [f64; 2], order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        Self {
            base,
            order,
            coeffs: [0.0; MAX_COEFFS],
        }
    }

    pub fn constant(base: [f64; 2], order: usize, value: f64) -> Self {
        let mut jet = Self::zero(base, order);
        jet.coeffs[0] = value;
        jet
    }

    /// The coordinate function `x_axis` expanded at `base`.
    pub fn variable(base: [f64; 2], order: usize, axis: usize) -> Self {
        let mut jet = Self::constant(base, order, base[axis]);
        if order >= 1 {
            jet.coeffs[if axis == 0 { index(1, 0) } else { index(0, 1) }] = 1.0;
        }
        jet
    }

    /// Builds a jet from graded coefficients; the slice must hold exactly
    /// `n_coeffs(order)` finite values.
    pub fn from_coeffs(base: [f64; 2], order: usize, coeffs: &[f64]) -> Result<Self> {
        if order > MAX_ORDER {
            return Err(Error::Unsupported(format!(
                "jet order {order} exceeds {MAX_ORDER}"
            )));
        }
        if coeffs.len() != n_coeffs(order) {
            return Err(Error::Structural(format!(
                "expected {} coefficients for order {order}, got {}",
                n_coeffs(order),
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite jet coefficient".into()));
        }
        let mut jet = Self::zero(base, order);
        jet.coeffs[..coeffs.len()].copy_from_slice(coeffs);
        Ok(jet)
    }

    pub fn base(&self) -> [f64; 2] {
        self.base
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        n_coeffs(self.order)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs[..n_coeffs(self.order)]
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        let len = n_coeffs(self.order);
        &mut self.coeffs[..len]
    }

    /// Coefficient of `(x-x0)^i (y-y0)^j`; zero beyond the truncation order.
    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        if i + j > self.order {
            0.0
        } else {
            self.coeffs[index(i, j)]
        }
    }

    pub fn set_coeff(&mut self, i: usize, j: usize, value: f64) {
        assert!(i + j <= self.order, "multi-index beyond truncation order");
        self.coeffs[index(i, j)] = value;
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// `D^(i,j) f(base)`.
    pub fn derivative(&self, i: usize, j: usize) -> f64 {
        self.coeff(i, j) * factorial(i) * factorial(j)
    }

    pub fn gradient(&self) -> [f64; 2] {
        [self.coeff(1, 0), self.coeff(0, 1)]
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs().iter().all(|c| c.is_finite())
    }

    /// Drops all terms above `order` (which must not exceed the current order).
    pub fn truncated(&self, order: usize) -> Self {
        assert!(order <= self.order);
        let mut out = Self::zero(self.base, order);
        out.coeffs[..n_coeffs(order)].copy_from_slice(&self.coeffs[..n_coeffs(order)]);
        out
    }

    fn check_compatible(&self, other: &Jet) -> Result<()> {
        if self.order != other.order {
            return Err(Error::Structural(format!(
                "jet orders differ ({} vs {})",
                self.order, other.order
            )));
        }
        if !same_point(self.base, other.base) {
            return Err(Error::Structural(format!(
                "jet base points differ ({:?} vs {:?})",
                self.base, other.base
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        Ok(self.add_unchecked(other))
    }

    pub fn sub(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        Ok(self.axpy_unchecked(-1.0, other))
    }

    pub fn mul(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub fn scale(&self, factor: f64) -> Jet {
        let mut out = *self;
        out.coeffs_mut().iter_mut().for_each(|c| *c *= factor);
        out
    }

    pub(crate) fn add_unchecked(&self, other: &Jet) -> Jet {
        self.axpy_unchecked(1.0, other)
    }

    /// `self + alpha * other`.
    pub(crate) fn axpy_unchecked(&self, alpha: f64, other: &Jet) -> Jet {
        let mut out = *self;
        let len = n_coeffs(self.order);
        for (o, b) in out.coeffs[..len].iter_mut().zip(&other.coeffs[..len]) {
            *o += alpha * b;
        }
        out
    }

    /// Truncated Cauchy product.
    pub(crate) fn mul_unchecked(&self, other: &Jet) -> Jet {
        let order = self.order;
        let mut out = Jet::zero(self.base, order);
        for (&a, &(pi, pj)) in self.coeffs.iter().zip(&MULTI[..n_coeffs(order)]) {
            if a == 0.0 {
                continue;
            }
            let rest = order - (pi + pj);
            for (&b, &(qi, qj)) in other.coeffs.iter().zip(&MULTI[..n_coeffs(rest)]) {
                out.coeffs[index(pi + qi, pj + qj)] += a * b;
            }
        }
        out
    }

    /// Graded weights `w` such that `Δ^s f(base) = Σ w_α c_α`.
    pub fn laplacian_power_weights(s: usize, order: usize) -> Vec<f64> {
        let mut w = vec![0.0; n_coeffs(order)];
        if 2 * s <= order {
            for k in 0..=s {
                let (i, j) = (2 * k, 2 * s - 2 * k);
                w[index(i, j)] = binomial(s, k) * factorial(i) * factorial(j);
            }
        }
        w
    }

    /// Weights for `∂_axis Δ^s f(base)`.
    pub fn grad_laplacian_power_weights(s: usize, axis: usize, order: usize) -> Vec<f64> {
        let mut w = vec![0.0; n_coeffs(order)];
        if 2 * s < order {
            for k in 0..=s {
                let (mut i, mut j) = (2 * k, 2 * s - 2 * k);
                if axis == 0 {
                    i += 1;
                } else {
                    j += 1;
                }
                w[index(i, j)] = binomial(s, k) * factorial(i) * factorial(j);
            }
        }
        w
    }

    /// `Δ^s f` at the base point.
    pub fn laplacian_power(&self, s: usize) -> Result<f64> {
        if 2 * s > self.order {
            return Err(Error::InvalidInput(format!(
                "order {} too low for Δ^{s}",
                self.order
            )));
        }
        let w = Self::laplacian_power_weights(s, self.order);
        Ok(dot(&w, self.coeffs()))
    }

    /// `∇Δ^s f` at the base point.
    pub fn grad_laplacian_power(&self, s: usize) -> Result<[f64; 2]> {
        if 2 * s + 1 > self.order {
            return Err(Error::InvalidInput(format!(
                "order {} too low for ∇Δ^{s}",
                self.order
            )));
        }
        let gx = Self::grad_laplacian_power_weights(s, 0, self.order);
        let gy = Self::grad_laplacian_power_weights(s, 1, self.order);
        Ok([dot(&gx, self.coeffs()), dot(&gy, self.coeffs())])
    }

    /// `D^k f(base)[a, ..., a] = k! Σ_{|α|=k} c_α a^α`.
    pub fn directional(&self, a: [f64; 2], k: usize) -> Result<f64> {
        if k > self.order {
            return Err(Error::InvalidInput(format!(
                "order {} too low for a {k}-th derivative",
                self.order
            )));
        }
        let mut sum = 0.0;
        for j in 0..=k {
            let i = k - j;
            sum += self.coeffs[index(i, j)] * a[0].powi(i as i32) * a[1].powi(j as i32);
        }
        Ok(factorial(k) * sum)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn same_point(a: [f64; 2], b: [f64; 2]) -> bool {
    (a[0] - b[0]).abs() <= BASE_TOL && (a[1] - b[1]).abs() <= BASE_TOL
}

/// Truncated expansion of a planar map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapJet {
    comps: [Jet; 2],
}

impl MapJet {
    pub fn new(x: Jet, y: Jet) -> Result<Self> {
        x.check_compatible(&y)?;
        Ok(Self { comps: [x, y] })
    }

    pub fn identity(base: [f64; 2], order: usize) -> Self {
        Self {
            comps: [
                Jet::variable(base, order, 0),
                Jet::variable(base, order, 1),
            ],
        }
    }

    pub fn component(&self, r: usize) -> &Jet {
        &self.comps[r]
    }

    pub fn components(&self) -> &[Jet; 2] {
        &self.comps
    }

    pub fn base(&self) -> [f64; 2] {
        self.comps[0].base
    }

    pub fn order(&self) -> usize {
        self.comps[0].order
    }

    /// Image of the base point.
    pub fn value(&self) -> [f64; 2] {
        [self.comps[0].value(), self.comps[1].value()]
    }

    /// Jacobian matrix, `[r][c] = ∂g_r/∂x_c`.
    pub fn linear_part(&self) -> [[f64; 2]; 2] {
        let g = |r: usize| self.comps[r].gradient();
        [g(0), g(1)]
    }

    pub fn det(&self) -> f64 {
        let l = self.linear_part();
        l[0][0] * l[1][1] - l[0][1] * l[1][0]
    }

    /// `self ∘ inner`, expanded at `inner`'s base point.
    pub fn compose(&self, inner: &MapJet) -> Result<MapJet> {
        let table = ComposeTable::new(inner, self.base(), self.order())?;
        Ok(MapJet {
            comps: [
                table.apply_unchecked(&self.comps[0]),
                table.apply_unchecked(&self.comps[1]),
            ],
        })
    }

    /// Formal inverse, expanded at `self.value()`. The linear part is inverted
    /// once; each sweep then cancels the lowest remaining order of
    /// `self ∘ h - id`.
    pub fn inverse(&self) -> Result<MapJet> {
        let order = self.order();
        if order == 0 {
            return Err(Error::InvalidInput("cannot invert an order-0 map jet".into()));
        }
        let l = self.linear_part();
        let det = self.det();
        let scale = l.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(det.abs() > 1e-14 * scale * scale) {
            return Err(Error::SingularJacobian { det });
        }
        let inv = [[l[1][1] / det, -l[0][1] / det], [-l[1][0] / det, l[0][0] / det]];
        let x0 = self.base();
        let y0 = self.value();

        let mut h = [Jet::zero(y0, order), Jet::zero(y0, order)];
        for r in 0..2 {
            h[r].coeffs[0] = x0[r];
            h[r].coeffs[index(1, 0)] = inv[r][0];
            h[r].coeffs[index(0, 1)] = inv[r][1];
        }
        let id = MapJet::identity(y0, order);
        for _ in 1..order {
            let inner = MapJet { comps: h };
            let gh = self.compose(&inner)?;
            let e = [
                gh.comps[0].axpy_unchecked(-1.0, &id.comps[0]),
                gh.comps[1].axpy_unchecked(-1.0, &id.comps[1]),
            ];
            for r in 0..2 {
                h[r] = h[r]
                    .axpy_unchecked(-inv[r][0], &e[0])
                    .axpy_unchecked(-inv[r][1], &e[1]);
            }
        }
        Ok(MapJet { comps: h })
    }
}

/// Jets of the monomials `(g₁ - y₀₁)^i (g₂ - y₀₂)^j` for an inner map `g`.
///
/// Composition `f ∘ g` is linear in `f`, so one table serves every outer
/// function expanded at the same point.
#[derive(Clone, Debug)]
pub struct ComposeTable {
    outer_base: [f64; 2],
    order: usize,
    cols: Vec<Jet>,
}

impl ComposeTable {
    pub fn new(inner: &MapJet, outer_base: [f64; 2], order: usize) -> Result<Self> {
        if inner.order() != order {
            return Err(Error::Structural(format!(
                "compose orders differ ({} vs {order})",
                inner.order()
            )));
        }
        let value = inner.value();
        if !same_point(value, outer_base) {
            return Err(Error::Structural(format!(
                "inner map value {value:?} does not match outer base {outer_base:?}"
            )));
        }
        let base = inner.base();
        let mut dx = inner.comps[0];
        let mut dy = inner.comps[1];
        dx.coeffs[0] = 0.0;
        dy.coeffs[0] = 0.0;

        let mut px = Vec::with_capacity(order + 1);
        let mut py = Vec::with_capacity(order + 1);
        px.push(Jet::constant(base, order, 1.0));
        py.push(Jet::constant(base, order, 1.0));
        for k in 1..=order {
            px.push(px[k - 1].mul_unchecked(&dx));
            py.push(py[k - 1].mul_unchecked(&dy));
        }
        let cols = (0..n_coeffs(order))
            .map(|a| {
                let (i, j) = MULTI[a];
                px[i].mul_unchecked(&py[j])
            })
            .collect();
        Ok(Self {
            outer_base,
            order,
            cols,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn apply(&self, f: &Jet) -> Result<Jet> {
        if f.order != self.order || !same_point(f.base, self.outer_base) {
            return Err(Error::Structural(
                "outer jet does not match the composition table".into(),
            ));
        }
        Ok(self.apply_unchecked(f))
    }

    fn apply_unchecked(&self, f: &Jet) -> Jet {
        let mut out = Jet::zero(self.cols[0].base, self.order);
        for (c, col) in f.coeffs().iter().zip(&self.cols) {
            if *c != 0.0 {
                out = out.axpy_unchecked(*c, col);
            }
        }
        out
    }

    /// Pulls a linear functional on the composed jet back to one on the
    /// outer jet's coefficients.
    pub fn pullback_functional(&self, w: &[f64]) -> Vec<f64> {
        self.cols.iter().map(|col| dot(w, col.coeffs())).collect()
    }
}

pub fn jet_add(a: &Jet, b: &Jet) -> Result<Jet> {
    a.add(b)
}

pub fn jet_mul(a: &Jet, b: &Jet) -> Result<Jet> {
    a.mul(b)
}

/// `f ∘ g` where `g(x₀)` must equal `f`'s base point.
pub fn jet_compose(f: &Jet, g: &MapJet) -> Result<Jet> {
    if f.order != g.order() {
        return Err(Error::Structural(format!(
            "compose orders differ ({} vs {})",
            f.order,
            g.order()
        )));
    }
    ComposeTable::new(g, f.base, f.order)?.apply(f)
}

pub fn map_invert(g: &MapJet) -> Result<MapJet> {
    g.inverse()
}

/// `Δ_φ^s u` at the common base point, via `v = u ∘ φ⁻¹`.
pub fn pullback_laplacian_power(u: &Jet, phi: &MapJet, s: usize) -> Result<f64> {
    if u.order != phi.order() || !same_point(u.base, phi.base()) {
        return Err(Error::Structural(
            "u and φ jets must share order and base point".into(),
        ));
    }
    if u.order < 2 * s {
        return Err(Error::InvalidInput(format!(
            "order {} too low for Δ_φ^{s}",
            u.order
        )));
    }
    let inv = phi.inverse()?;
    let v = ComposeTable::new(&inv, u.base, u.order)?.apply(u)?;
    v.laplacian_power(s)
}

pub fn derivative_tensor_apply(f: &Jet, direction: [f64; 2], k: usize) -> Result<f64> {
    f.directional(direction, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly_jet(base: [f64; 2], order: usize, terms: &[(usize, usize, f64)]) -> Jet {
        let mut j = Jet::zero(base, order);
        for &(i, k, c) in terms {
            j.set_coeff(i, k, c);
        }
        j
    }

    #[test]
    fn graded_indexing_round_trips() {
        for idx in 0..MAX_COEFFS {
            let (i, j) = multi_index(idx);
            assert_eq!(index(i, j), idx);
        }
        assert_eq!(n_coeffs(2), 6);
        assert_eq!(n_coeffs(6), 28);
    }

    #[test]
    fn product_of_linear_factors() {
        let one_x = poly_jet([0.0, 0.0], 2, &[(0, 0, 1.0), (1, 0, 1.0)]);
        let one_y = poly_jet([0.0, 0.0], 2, &[(0, 0, 1.0), (0, 1, 1.0)]);
        let p = jet_mul(&one_x, &one_y).unwrap();
        let want = poly_jet(
            [0.0, 0.0],
            2,
            &[(0, 0, 1.0), (1, 0, 1.0), (0, 1, 1.0), (1, 1, 1.0)],
        );
        assert_eq!(p, want);
        let zero = Jet::zero([0.0, 0.0], 2);
        assert_eq!(jet_mul(&one_x, &zero).unwrap(), zero);
    }

    #[test]
    fn mismatched_jets_are_rejected() {
        let a = Jet::zero([0.0, 0.0], 2);
        let b = Jet::zero([0.0, 0.0], 3);
        let c = Jet::zero([0.5, 0.0], 2);
        assert!(matches!(jet_add(&a, &b), Err(Error::Structural(_))));
        assert!(matches!(jet_mul(&a, &c), Err(Error::Structural(_))));
    }

    #[test]
    fn compose_with_identity_is_noop() {
        let base = [0.3, -0.2];
        let f = poly_jet(base, 3, &[(0, 0, 1.0), (2, 1, 0.7), (0, 3, -2.0), (1, 0, 0.1)]);
        let g = MapJet::identity(base, 3);
        assert_eq!(jet_compose(&f, &g).unwrap(), f);
    }

    #[test]
    fn compose_square_with_shear() {
        // f = y1², g = (x1 + x2, x2) → (x1 + x2)²
        let f = poly_jet([0.0, 0.0], 2, &[(2, 0, 1.0)]);
        let gx = poly_jet([0.0, 0.0], 2, &[(1, 0, 1.0), (0, 1, 1.0)]);
        let gy = poly_jet([0.0, 0.0], 2, &[(0, 1, 1.0)]);
        let g = MapJet::new(gx, gy).unwrap();
        let h = jet_compose(&f, &g).unwrap();
        let want = poly_jet([0.0, 0.0], 2, &[(2, 0, 1.0), (1, 1, 2.0), (0, 2, 1.0)]);
        assert_eq!(h, want);
    }

    #[test]
    fn compose_rejects_base_mismatch() {
        let f = Jet::zero([1.0, 0.0], 2);
        let g = MapJet::identity([0.0, 0.0], 2);
        assert!(matches!(jet_compose(&f, &g), Err(Error::Structural(_))));
    }

    #[test]
    fn invert_identity_and_linear() {
        let id = MapJet::identity([0.2, 0.1], 4);
        assert_eq!(map_invert(&id).unwrap(), MapJet::identity([0.2, 0.1], 4));

        let a = [[2.0, 1.0], [0.5, 3.0]];
        let gx = poly_jet([0.0, 0.0], 3, &[(1, 0, a[0][0]), (0, 1, a[0][1])]);
        let gy = poly_jet([0.0, 0.0], 3, &[(1, 0, a[1][0]), (0, 1, a[1][1])]);
        let inv = map_invert(&MapJet::new(gx, gy).unwrap()).unwrap();
        let det = 2.0 * 3.0 - 0.5;
        let want = [[3.0 / det, -1.0 / det], [-0.5 / det, 2.0 / det]];
        let got = inv.linear_part();
        for r in 0..2 {
            for c in 0..2 {
                assert!((got[r][c] - want[r][c]).abs() < 1e-15);
            }
            for k in 3..n_coeffs(3) {
                assert_eq!(inv.component(r).coeffs()[k], 0.0);
            }
        }
    }

    #[test]
    fn invert_singular_fails() {
        let gx = poly_jet([0.0, 0.0], 2, &[(1, 0, 1.0), (0, 1, 2.0)]);
        let gy = poly_jet([0.0, 0.0], 2, &[(1, 0, 2.0), (0, 1, 4.0)]);
        let g = MapJet::new(gx, gy).unwrap();
        assert!(matches!(map_invert(&g), Err(Error::SingularJacobian { .. })));
    }

    #[test]
    fn laplacian_of_radius_squared() {
        let u = poly_jet([0.0, 0.0], 2, &[(2, 0, 1.0), (0, 2, 1.0)]);
        let phi = MapJet::identity([0.0, 0.0], 2);
        assert_eq!(pullback_laplacian_power(&u, &phi, 1).unwrap(), 4.0);
    }

    #[test]
    fn dilation_scales_laplacian() {
        let c = 1.7;
        let base = [0.2, -0.4];
        let u = poly_jet(base, 2, &[(0, 0, 0.3), (2, 0, 1.5), (1, 1, 0.2), (0, 2, -0.25)]);
        let lap = u.laplacian_power(1).unwrap();
        let phi = MapJet::identity(base, 2);
        let phi = MapJet::new(phi.component(0).scale(c), phi.component(1).scale(c)).unwrap();
        let got = pullback_laplacian_power(&u, &phi, 1).unwrap();
        assert!((got - lap / (c * c)).abs() < 1e-14);
    }

    #[test]
    fn order_too_low_is_rejected() {
        let u = Jet::zero([0.0, 0.0], 3);
        let phi = MapJet::identity([0.0, 0.0], 3);
        assert!(pullback_laplacian_power(&u, &phi, 2).is_err());
        assert!(derivative_tensor_apply(&u, [1.0, 0.0], 4).is_err());
    }

    #[test]
    fn directional_derivatives() {
        let x2 = poly_jet([0.0, 0.0], 2, &[(2, 0, 1.0)]);
        assert_eq!(derivative_tensor_apply(&x2, [1.0, 0.0], 2).unwrap(), 2.0);
        let xy = poly_jet([0.0, 0.0], 2, &[(1, 1, 1.0)]);
        assert_eq!(derivative_tensor_apply(&xy, [1.0, 1.0], 2).unwrap(), 2.0);
    }

    #[test]
    fn grad_laplacian_weights_match_definition() {
        // f = x³ + x y²: Δf = 8x, ∇Δf = (8, 0)
        let f = poly_jet([0.0, 0.0], 3, &[(3, 0, 1.0), (1, 2, 1.0)]);
        assert_eq!(f.grad_laplacian_power(1).unwrap(), [8.0, 0.0]);
    }
}
