//! Conforming basis `(1 - x² - y²)^n P_a(x) P_b(y)`, `a + b ≤ d`.
//!
//! The Legendre factors span the same space as the monomials `x^a y^b` but
//! keep the Gram matrices far better conditioned at high degree.

use crate::error::{Error, Result};
use crate::jets::{index, multi_index, n_coeffs, Jet, MAX_ORDER};
use crate::poly::Poly2;

/// Highest supported operator order (jets of order `2n` must fit).
pub const MAX_OPERATOR_ORDER: usize = 3;

#[derive(Clone, Debug)]
pub struct BasisSet {
    n: usize,
    degree: usize,
    indices: Vec<(usize, usize)>,
    weight: Poly2,
}

/// Basis for `W^{n,2}_0` of the unit disk with angular polynomial degree `d`.
pub fn build_basis(n: usize, degree: usize) -> Result<BasisSet> {
    if n == 0 || n > MAX_OPERATOR_ORDER {
        return Err(Error::Unsupported(format!(
            "operator order n = {n} outside 1..={MAX_OPERATOR_ORDER}"
        )));
    }
    let indices = (0..n_coeffs(degree))
        .map(|k| {
            let (a, b) = crate::poly::multi_index_any(k);
            (a, b)
        })
        .collect();
    let one_minus_r2 = Poly2::from_terms(&[(0, 0, 1.0), (2, 0, -1.0), (0, 2, -1.0)]);
    Ok(BasisSet {
        n,
        degree,
        indices,
        weight: one_minus_r2.pow(n as u32),
    })
}

impl BasisSet {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Legendre degrees `(a, b)` of function `k`.
    pub fn indices(&self) -> &[(usize, usize)] {
        &self.indices
    }

    /// `(1 - r²)^n`.
    pub fn weight(&self) -> &Poly2 {
        &self.weight
    }

    /// Exact coefficient table of function `k`.
    pub fn function(&self, k: usize) -> Poly2 {
        let (a, b) = self.indices[k];
        let pa = legendre_coefficients(a);
        let pb = legendre_coefficients(b);
        let mut factor = Poly2::with_degree(a + b);
        for (i, ca) in pa.iter().enumerate() {
            for (j, cb) in pb.iter().enumerate() {
                if *ca != 0.0 && *cb != 0.0 {
                    factor.set(i, j, ca * cb);
                }
            }
        }
        &self.weight * &factor
    }

    /// Per-point tables from which every basis jet up to `order` follows cheaply.
    pub fn node_tables(&self, p: [f64; 2], order: usize) -> NodeTables<'_> {
        assert!(order <= MAX_ORDER);
        NodeTables {
            order,
            lx: legendre_table(p[0], self.degree, order),
            ly: legendre_table(p[1], self.degree, order),
            weight: self.weight.jet(p, order),
            indices: &self.indices,
        }
    }

    /// Jets of all basis functions at `p`.
    pub fn jets_at(&self, p: [f64; 2], order: usize) -> Vec<Jet> {
        let tables = self.node_tables(p, order);
        (0..self.len()).map(|k| tables.jet(k)).collect()
    }
}

/// `P_a^{(i)}(x) / i!` for `a ≤ degree`, `i ≤ order`.
fn legendre_table(x: f64, degree: usize, order: usize) -> Vec<[f64; MAX_ORDER + 1]> {
    let mut d = vec![[0.0; MAX_ORDER + 1]; degree + 1];
    d[0][0] = 1.0;
    if degree >= 1 {
        d[1][0] = x;
        d[1][1] = 1.0;
    }
    for a in 1..degree {
        let af = a as f64;
        for i in 0..=order {
            let lower = if i > 0 { i as f64 * d[a][i - 1] } else { 0.0 };
            d[a + 1][i] = ((2.0 * af + 1.0) * (x * d[a][i] + lower) - af * d[a - 1][i]) / (af + 1.0);
        }
    }
    for row in d.iter_mut() {
        let mut fact = 1.0;
        for (i, v) in row.iter_mut().enumerate().take(order + 1) {
            if i > 0 {
                fact *= i as f64;
            }
            *v /= fact;
        }
    }
    d
}

/// Monomial coefficients of the Legendre polynomial `P_a`.
fn legendre_coefficients(a: usize) -> Vec<f64> {
    let mut p0 = vec![1.0];
    if a == 0 {
        return p0;
    }
    let mut p1 = vec![0.0, 1.0];
    for k in 1..a {
        let kf = k as f64;
        let mut next = vec![0.0; k + 2];
        for (i, c) in p1.iter().enumerate() {
            next[i + 1] += (2.0 * kf + 1.0) * c / (kf + 1.0);
        }
        for (i, c) in p0.iter().enumerate() {
            next[i] -= kf * c / (kf + 1.0);
        }
        p0 = std::mem::replace(&mut p1, next);
    }
    p1
}

/// Basis evaluation data at one point.
pub struct NodeTables<'a> {
    order: usize,
    lx: Vec<[f64; MAX_ORDER + 1]>,
    ly: Vec<[f64; MAX_ORDER + 1]>,
    weight: Jet,
    indices: &'a [(usize, usize)],
}

impl NodeTables<'_> {
    pub fn jet(&self, k: usize) -> Jet {
        let (a, b) = self.indices[k];
        let mut factor = Jet::zero(self.weight.base(), self.order);
        let c = factor.coeffs_mut();
        for (idx, v) in c.iter_mut().enumerate() {
            let (i, j) = multi_index(idx);
            *v = self.lx[a][i] * self.ly[b][j];
        }
        self.weight.mul_unchecked(&factor)
    }

    /// Applies a linear functional on jet coefficients (graded, order
    /// `self.order`) to every basis function.
    pub fn apply(&self, functional: &[f64]) -> Vec<f64> {
        let order = self.order;
        let w = self.weight.coeffs();
        // Fold the weight factor into the functional.
        let mut g = vec![0.0; n_coeffs(order)];
        for (beta, gb) in g.iter_mut().enumerate() {
            let (bi, bj) = multi_index(beta);
            let rest = order - bi - bj;
            for (alpha, wa) in w.iter().enumerate().take(n_coeffs(rest)) {
                let (ai, aj) = multi_index(alpha);
                *gb += functional[index(ai + bi, aj + bj)] * wa;
            }
        }
        self.indices
            .iter()
            .map(|&(a, b)| {
                g.iter()
                    .enumerate()
                    .map(|(beta, gb)| {
                        let (i, j) = multi_index(beta);
                        gb * self.lx[a][i] * self.ly[b][j]
                    })
                    .sum()
            })
            .collect()
    }
}
