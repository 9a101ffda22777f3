//! Gauss–Legendre × trapezoid quadrature on the unit disk.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Default radial Gauss points.
pub const DEFAULT_RADIAL: usize = 40;
/// Default angular points (disk and boundary).
pub const DEFAULT_ANGULAR: usize = 96;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor rule on the unit disk: Gauss–Legendre in `r ∈ [0, 1]` with the
/// Jacobian `r` folded into the weights, uniform in angle.
#[derive(Clone, Debug)]
pub struct DiskRule {
    radial: usize,
    angular: usize,
    nodes: Vec<[f64; 2]>,
    weights: Vec<f64>,
}

impl DiskRule {
    pub fn new(radial: usize, angular: usize) -> Result<Self> {
        if radial == 0 || angular < 3 {
            return Err(Error::InvalidInput(format!(
                "disk rule needs radial ≥ 1 and angular ≥ 3 (got {radial}, {angular})"
            )));
        }
        let gl = GaussLegendre::new(radial);
        let dtheta = 2.0 * PI / angular as f64;
        let mut nodes = Vec::with_capacity(radial * angular);
        let mut weights = Vec::with_capacity(radial * angular);
        for (xi, wi) in gl.nodes.iter().zip(&gl.weights) {
            let r = 0.5 * (xi + 1.0);
            let wr = 0.5 * wi * r * dtheta;
            for j in 0..angular {
                let theta = dtheta * j as f64;
                nodes.push([r * theta.cos(), r * theta.sin()]);
                weights.push(wr);
            }
        }
        Ok(Self {
            radial,
            angular,
            nodes,
            weights,
        })
    }

    pub fn radial(&self) -> usize {
        self.radial
    }

    pub fn angular(&self) -> usize {
        self.angular
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn([f64; 2]) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(*p))
            .sum()
    }
}

/// Disk rule plus the number of uniform boundary points.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub disk: DiskRule,
    pub boundary: usize,
}

impl QuadratureRule {
    pub fn new(radial: usize, angular: usize) -> Result<Self> {
        Ok(Self {
            disk: DiskRule::new(radial, angular)?,
            boundary: angular,
        })
    }

    pub fn with_boundary(mut self, boundary: usize) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn radial(&self) -> usize {
        self.disk.radial
    }

    pub fn angular(&self) -> usize {
        self.disk.angular
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::new(DEFAULT_RADIAL, DEFAULT_ANGULAR).expect("default rule is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let gl = GaussLegendre::new(7);
        assert!(gl.weights.iter().all(|w| *w > 0.0));
        for k in 0..=13 {
            let got: f64 = gl
                .nodes
                .iter()
                .zip(&gl.weights)
                .map(|(x, w)| w * x.powi(k))
                .sum();
            let want = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert!((got - want).abs() < 1e-14, "k={k}: {got} vs {want}");
        }
    }

    #[test]
    fn disk_moments() {
        let rule = DiskRule::new(10, 24).unwrap();
        assert!((rule.integrate(|_| 1.0) - PI).abs() < 1e-14);
        // ∫ r² = π/2, ∫ x⁴ = π/8
        assert!((rule.integrate(|p| p[0] * p[0] + p[1] * p[1]) - PI / 2.0).abs() < 1e-14);
        assert!((rule.integrate(|p| p[0].powi(4)) - PI / 8.0).abs() < 1e-14);
        assert!(rule.integrate(|p| p[0] * p[1].powi(3)).abs() < 1e-15);
    }

    #[test]
    fn rejects_empty_rules() {
        assert!(DiskRule::new(0, 10).is_err());
        assert!(DiskRule::new(4, 2).is_err());
    }
}
