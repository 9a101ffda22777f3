//! Eigenvalue clusters and elementary symmetric functions of their values.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fingerprint::Fingerprint;

/// Default relative threshold for grouping eigenvalues.
pub const DEFAULT_CLUSTER_RTOL: f64 = 1e-6;

/// Hadamard evaluation is refused when the gap is below this multiple of the spread.
pub const GAP_SPREAD_FACTOR: f64 = 10.0;

/// Ascending eigenvalues with energy-orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct SpectralResult {
    /// `λ_1 ≤ λ_2 ≤ ...`, all positive.
    pub eigenvalues: Vec<f64>,
    /// Column `j` holds the coefficients of the `j`-th eigenvector in the
    /// discretization's orthonormalized basis; columns are orthonormal in
    /// the energy product of the problem.
    pub vectors: DMatrix<f64>,
    pub fingerprint: Fingerprint,
}

impl SpectralResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `μ_j = 1 / λ_j`, the eigenvalues of the discrete solution operator.
    pub fn inverse_eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| 1.0 / l).collect()
    }

    /// Values at zero-based indices `cluster.indices()`.
    pub fn values(&self, cluster: &Cluster) -> Vec<f64> {
        cluster.indices().map(|j| self.eigenvalues[j]).collect()
    }
}

/// A contiguous run of (nearly) coincident eigenvalues.
#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    /// Zero-based index of the first member.
    pub start: usize,
    pub len: usize,
    /// Mean of the member values, `λ_F`.
    pub mean: f64,
    /// `(max - min) / mean` over the members.
    pub spread: f64,
    /// Relative distance to the nearest computed eigenvalue outside the
    /// cluster; `∞` when there is none.
    pub gap: f64,
}

impl Cluster {
    /// Builds the cluster for zero-based indices `start..start+len` of `values`.
    pub fn from_range(values: &[f64], start: usize, len: usize) -> Result<Self> {
        if len == 0 || start + len > values.len() {
            return Err(Error::InvalidInput(format!(
                "cluster {start}..{} outside the {} computed eigenvalues",
                start + len,
                values.len()
            )));
        }
        let members = &values[start..start + len];
        let mean = members.iter().sum::<f64>() / len as f64;
        let (lo, hi) = members
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(*v), hi.max(*v))
            });
        let spread = (hi - lo) / mean.abs();
        let below = start.checked_sub(1).map(|j| (lo - values[j]) / mean.abs());
        let above = values.get(start + len).map(|v| (v - hi) / mean.abs());
        let gap = below
            .into_iter()
            .chain(above)
            .fold(f64::INFINITY, f64::min);
        Ok(Self {
            start,
            len,
            mean,
            spread,
            gap,
        })
    }

    pub fn indices(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }

    /// One-based labels, as used in reports (`F = {2, 3}`).
    pub fn labels(&self) -> Vec<usize> {
        self.indices().map(|j| j + 1).collect()
    }

    /// Errors unless the gap exceeds both `GAP_SPREAD_FACTOR × spread` and
    /// the default clustering tolerance.
    pub fn check_separated(&self) -> Result<()> {
        if !(self.gap > GAP_SPREAD_FACTOR * self.spread) || !(self.gap > DEFAULT_CLUSTER_RTOL) {
            return Err(Error::ClusterNotSeparated {
                gap: self.gap,
                spread: self.spread,
            });
        }
        Ok(())
    }
}

/// Greedy grouping of consecutive eigenvalues whose relative difference is at
/// most `rtol`.
pub fn cluster_eigenvalues(values: &[f64], rtol: f64) -> Result<Vec<Cluster>> {
    if !(rtol > 0.0 && rtol < 0.1) {
        return Err(Error::InvalidInput(format!(
            "cluster tolerance {rtol} outside (0, 0.1)"
        )));
    }
    let mut out = Vec::new();
    let mut start = 0;
    while start < values.len() {
        let mut len = 1;
        while start + len < values.len() {
            let (a, b) = (values[start + len - 1], values[start + len]);
            if (b - a).abs() <= rtol * a.abs().max(b.abs()) {
                len += 1;
            } else {
                break;
            }
        }
        out.push(Cluster::from_range(values, start, len)?);
        start += len;
    }
    Ok(out)
}

/// Cluster id (zero-based) of every eigenvalue.
pub fn cluster_ids(clusters: &[Cluster]) -> Vec<usize> {
    clusters
        .iter()
        .enumerate()
        .flat_map(|(id, c)| std::iter::repeat_n(id, c.len))
        .collect()
}

/// All elementary symmetric polynomials `e_0 .. e_|values|` via the
/// expanding product `Π (1 + v_i z)`.
fn elementary_all(values: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; values.len() + 1];
    e[0] = 1.0;
    for (i, v) in values.iter().enumerate() {
        for h in (1..=i + 1).rev() {
            e[h] += v * e[h - 1];
        }
    }
    e
}

fn check_h(values: &[f64], h: usize) -> Result<()> {
    if h == 0 || h > values.len() {
        return Err(Error::InvalidInput(format!(
            "h = {h} outside 1..={}",
            values.len()
        )));
    }
    Ok(())
}

/// `Λ_{F,h}`: sum of all `h`-fold products of distinct cluster values.
pub fn elementary_symmetric(values: &[f64], h: usize) -> Result<f64> {
    check_h(values, h)?;
    // Sorting makes the result independent of the input permutation.
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(elementary_all(&sorted)[h])
}

fn check_positive(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidInput(
            "symmetric functions of μ need positive eigenvalues".into(),
        ));
    }
    Ok(())
}

/// `Γ_{F,h}`: elementary symmetric function of `μ = 1/λ`; `h = 0` gives 1.
pub fn gamma_symmetric(values: &[f64], h: usize) -> Result<f64> {
    check_positive(values)?;
    if h > values.len() {
        return Err(Error::InvalidInput(format!(
            "h = {h} outside 0..={}",
            values.len()
        )));
    }
    let mut mu: Vec<f64> = values.iter().map(|v| 1.0 / v).collect();
    mu.sort_by(f64::total_cmp);
    Ok(elementary_all(&mu)[h])
}

/// `max_h |Λ_{F,h} - Γ_{F,|F|-h} / Γ_{F,|F|}| / Λ_{F,h}`.
pub fn duality_check(values: &[f64]) -> Result<f64> {
    check_positive(values)?;
    let f = values.len();
    let top = gamma_symmetric(values, f)?;
    let mut worst: f64 = 0.0;
    for h in 1..=f {
        let lam = elementary_symmetric(values, h)?;
        let dual = gamma_symmetric(values, f - h)? / top;
        worst = worst.max((lam - dual).abs() / lam.abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_functions_by_hand() {
        assert_eq!(elementary_symmetric(&[1.0, 2.0, 3.0], 2).unwrap(), 11.0);
        assert_eq!(elementary_symmetric(&[1.0, 2.0, 3.0], 3).unwrap(), 6.0);
        let a = 14.68197;
        assert_eq!(elementary_symmetric(&[a, a], 1).unwrap(), 2.0 * a);
        assert_eq!(elementary_symmetric(&[a, a], 2).unwrap(), a * a);
        assert!(elementary_symmetric(&[1.0], 2).is_err());
        assert!(elementary_symmetric(&[1.0], 0).is_err());
    }

    #[test]
    fn gamma_of_a_double_value() {
        let a = 3.0;
        assert!((gamma_symmetric(&[a, a], 1).unwrap() - 2.0 / a).abs() < 1e-16);
        assert!((gamma_symmetric(&[a, a], 2).unwrap() - 1.0 / (a * a)).abs() < 1e-16);
        assert_eq!(gamma_symmetric(&[a, a], 0).unwrap(), 1.0);
        assert_eq!(duality_check(&[a, a]).unwrap(), 0.0);
        assert!(gamma_symmetric(&[1.0, -1.0], 1).is_err());
    }

    #[test]
    fn duality_on_triples() {
        for triple in [[1.0, 2.0, 3.0], [5.78, 14.68, 14.68], [0.1, 7.0, 1e3]] {
            assert!(duality_check(&triple).unwrap() <= 1e-13);
        }
    }

    #[test]
    fn clustering_rules() {
        let distinct = [1.0, 2.0, 3.0];
        let c = cluster_eigenvalues(&distinct, 1e-6).unwrap();
        assert_eq!(c.len(), 3);
        assert!(c.iter().all(|c| c.len == 1 && c.spread == 0.0));

        let rtol = 1e-6;
        let close = [1.0, 1.0 + 0.5 * rtol, 2.0];
        let c = cluster_eigenvalues(&close, rtol).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].len, 2);
        assert!((c[0].gap - (2.0 - (1.0 + 0.5 * rtol)) / c[0].mean).abs() < 1e-15);
        assert_eq!(cluster_ids(&c), vec![0, 0, 1]);
        assert!(cluster_eigenvalues(&close, 0.2).is_err());
    }

    #[test]
    fn separation_guard() {
        let values = [1.0, 1.0 + 1e-3, 1.0 + 2e-3];
        let c = Cluster::from_range(&values, 0, 2).unwrap();
        assert!(c.check_separated().is_err());
        let c = Cluster::from_range(&[1.0, 2.0, 2.0, 3.0], 1, 2).unwrap();
        assert!(c.check_separated().is_ok());
        assert_eq!(c.labels(), vec![2, 3]);
    }
}
