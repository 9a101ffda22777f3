//! Dense bivariate polynomials with graded coefficient storage.

use std::ops::{Add, Mul, Sub};

use crate::jets::{binomial, index, multi_index, n_coeffs, Jet, MAX_ORDER};

/// `Σ c_ij x^i y^j` with `i + j ≤ degree`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly2 {
    degree: usize,
    coeffs: Vec<f64>,
}

impl Default for Poly2 {
    fn default() -> Self {
        Self::zero()
    }
}

impl Poly2 {
    pub fn zero() -> Self {
        Self::with_degree(0)
    }

    pub fn with_degree(degree: usize) -> Self {
        Self {
            degree,
            coeffs: vec![0.0; n_coeffs(degree)],
        }
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Self::zero();
        p.coeffs[0] = c;
        p
    }

    pub fn x() -> Self {
        Self::from_terms(&[(1, 0, 1.0)])
    }

    pub fn y() -> Self {
        Self::from_terms(&[(0, 1, 1.0)])
    }

    /// Builds a polynomial from `(i, j, c)` triples; repeated terms add up.
    pub fn from_terms(terms: &[(usize, usize, f64)]) -> Self {
        let degree = terms.iter().map(|t| t.0 + t.1).max().unwrap_or(0);
        let mut p = Self::with_degree(degree);
        for &(i, j, c) in terms {
            p.coeffs[index(i, j)] += c;
        }
        p
    }

    /// Storage degree (coefficients above it are zero by construction).
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Highest total degree carrying a nonzero coefficient.
    pub fn effective_degree(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|c| *c != 0.0)
            .map(|idx| {
                let (i, j) = multi_index_any(idx);
                i + j
            })
            .unwrap_or(0)
    }

    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        if i + j > self.degree {
            0.0
        } else {
            self.coeffs[index(i, j)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        if i + j > self.degree {
            self.grow(i + j);
        }
        self.coeffs[index(i, j)] = value;
    }

    fn grow(&mut self, degree: usize) {
        self.coeffs.resize(n_coeffs(degree), 0.0);
        self.degree = degree;
    }

    /// Nonzero terms in graded order.
    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(idx, c)| {
                let (i, j) = multi_index_any(idx);
                (i, j, *c)
            })
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }

    pub fn eval(&self, p: [f64; 2]) -> f64 {
        let xp = powers(p[0], self.degree);
        let yp = powers(p[1], self.degree);
        self.coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let (i, j) = multi_index_any(idx);
                c * xp[i] * yp[j]
            })
            .sum()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::constant(1.0), |acc, _| &acc * self)
    }

    pub fn partial(&self, axis: usize) -> Self {
        let mut out = Self::with_degree(self.degree.saturating_sub(1));
        for (i, j, c) in self.terms() {
            match axis {
                0 if i > 0 => out.coeffs[index(i - 1, j)] += c * i as f64,
                1 if j > 0 => out.coeffs[index(i, j - 1)] += c * j as f64,
                _ => {}
            }
        }
        out
    }

    pub fn laplacian(&self) -> Self {
        &self.partial(0).partial(0) + &self.partial(1).partial(1)
    }

    /// Exact Taylor shift to `point`, truncated at `order`.
    pub fn jet(&self, point: [f64; 2], order: usize) -> Jet {
        assert!(order <= MAX_ORDER);
        let xp = powers(point[0], self.degree);
        let yp = powers(point[1], self.degree);
        let mut jet = Jet::zero(point, order);
        let out = jet.coeffs_mut();
        for (bi, bj, c) in self.terms() {
            for ai in 0..=bi.min(order) {
                for aj in 0..=bj.min(order - ai) {
                    out[index(ai, aj)] +=
                        c * binomial(bi, ai) * binomial(bj, aj) * xp[bi - ai] * yp[bj - aj];
                }
            }
        }
        jet
    }
}

fn powers(x: f64, degree: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(degree + 1);
    let mut acc = 1.0;
    for _ in 0..=degree {
        out.push(acc);
        acc *= x;
    }
    out
}

/// Graded multi-index lookup without the jet-order cap.
pub(crate) fn multi_index_any(idx: usize) -> (usize, usize) {
    if idx < n_coeffs(MAX_ORDER) {
        return multi_index(idx);
    }
    let mut k = 0;
    while n_coeffs(k) <= idx {
        k += 1;
    }
    let j = idx - k * (k + 1) / 2;
    (k - j, j)
}

impl Add for &Poly2 {
    type Output = Poly2;

    fn add(self, rhs: &Poly2) -> Poly2 {
        let degree = self.degree.max(rhs.degree);
        let mut out = Poly2::with_degree(degree);
        for (o, c) in out.coeffs.iter_mut().zip(&self.coeffs) {
            *o += c;
        }
        for (o, c) in out.coeffs.iter_mut().zip(&rhs.coeffs) {
            *o += c;
        }
        out
    }
}

impl Sub for &Poly2 {
    type Output = Poly2;

    fn sub(self, rhs: &Poly2) -> Poly2 {
        self + &rhs.scale(-1.0)
    }
}

impl Mul for &Poly2 {
    type Output = Poly2;

    fn mul(self, rhs: &Poly2) -> Poly2 {
        let mut out = Poly2::with_degree(self.degree + rhs.degree);
        for (ai, aj, a) in self.terms() {
            for (bi, bj, b) in rhs.terms() {
                out.coeffs[index(ai + bi, aj + bj)] += a * b;
            }
        }
        out
    }
}

impl Add for Poly2 {
    type Output = Poly2;

    fn add(self, rhs: Poly2) -> Poly2 {
        &self + &rhs
    }
}

impl Mul for Poly2 {
    type Output = Poly2;

    fn mul(self, rhs: Poly2) -> Poly2 {
        &self * &rhs
    }
}
