//! Isovolumetric projected-gradient descent of `Λ_{F,h}` over maps
//! `φ = id + Σ c_k ψ_k`.
//!
//! The first dictionary field is always the dilation `x`, so restoring the
//! volume by a uniform scaling `s φ` stays inside the parametrization:
//! `c_0 ← s(1 + c_0) - 1`, `c_k ← s c_k`.

use crate::discretization::{Discretization, Solution};
use crate::error::{Error, Result};
use crate::geometry::{volume, volume_derivative, DomainMap, FieldTag, PerturbationField};
use crate::shape_calculus::{criticality_residual, HadamardKernel};
use crate::spectrum::{cluster_eigenvalues, elementary_symmetric, Cluster, DEFAULT_CLUSTER_RTOL};

/// Dilation plus `∇Re zᵏ`, `∇Im zᵏ` for `1 ≤ k ≤ max_degree`. Rotation is a
/// null direction of every objective and is left out.
pub fn default_dictionary(max_degree: u32) -> Result<Vec<PerturbationField>> {
    let mut out = vec![PerturbationField::dilation()];
    for k in 1..=max_degree {
        out.push(PerturbationField::harmonic_re(k)?);
        out.push(PerturbationField::harmonic_im(k)?);
    }
    Ok(out)
}

/// Coefficients of `ellipse(t)` in a dictionary that starts with the
/// dilation and contains `∇Re z²`; zero elsewhere.
pub fn ellipse_coefficients(dictionary: &[PerturbationField], t: f64) -> Result<Vec<f64>> {
    let re2 = dictionary
        .iter()
        .position(|f| *f.tag() == FieldTag::HarmonicRe(2))
        .ok_or_else(|| Error::InvalidInput("dictionary lacks ∇Re z²".into()))?;
    // (1+t)x = x + (a + 2b)x,  y/(1+t) = y + (a - 2b)y
    let (p, q) = (t, 1.0 / (1.0 + t) - 1.0);
    let mut c = vec![0.0; dictionary.len()];
    c[0] = 0.5 * (p + q);
    c[re2] = 0.25 * (p - q);
    Ok(c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug)]
pub struct OptimConfig {
    /// Zero-based first index of `F`.
    pub cluster_start: usize,
    pub cluster_len: usize,
    pub h: usize,
    pub dictionary: Vec<PerturbationField>,
    pub initial: Vec<f64>,
    pub target_volume: f64,
    /// Stop when `‖projected gradient‖ ≤ gtol · |Λ|`.
    pub gtol: f64,
    pub max_iters: usize,
    pub direction: Direction,
    /// Largest coefficient change of a single step.
    pub max_step: f64,
    pub armijo: f64,
}

impl OptimConfig {
    /// `F = {1}`, `h = 1`, dictionary degree 4, from `initial`.
    pub fn first_eigenvalue(initial: Vec<f64>, target_volume: f64) -> Result<Self> {
        let dictionary = default_dictionary(4)?;
        if initial.len() != dictionary.len() {
            return Err(Error::InvalidInput(format!(
                "{} initial coefficients for {} fields",
                initial.len(),
                dictionary.len()
            )));
        }
        Ok(Self {
            cluster_start: 0,
            cluster_len: 1,
            h: 1,
            dictionary,
            initial,
            target_volume,
            gtol: 1e-4,
            max_iters: 200,
            direction: Direction::Minimize,
            max_step: 0.05,
            armijo: 1e-4,
        })
    }

    fn validate(&self) -> Result<()> {
        let dil = self
            .dictionary
            .first()
            .is_some_and(|f| *f.tag() == FieldTag::Dilation);
        if !dil {
            return Err(Error::InvalidInput(
                "the first dictionary field must be the dilation".into(),
            ));
        }
        if self.initial.len() != self.dictionary.len() {
            return Err(Error::InvalidInput(
                "initial coefficients and dictionary differ in length".into(),
            ));
        }
        if self.h == 0 || self.h > self.cluster_len {
            return Err(Error::InvalidInput(format!(
                "h = {} outside 1..={}",
                self.h, self.cluster_len
            )));
        }
        let positive = [self.target_volume, self.gtol, self.max_step, self.armijo];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidInput(
                "volume, gtol, max_step and armijo must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One iterate.
#[derive(Clone, Debug)]
pub struct OptimState {
    pub iter: usize,
    pub coeffs: Vec<f64>,
    pub objective: f64,
    pub volume: f64,
    pub proj_grad_norm: f64,
    pub eigenvalues: Vec<f64>,
    pub cluster: Cluster,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIterations,
    LineSearchFailed,
    /// Every trial step left the admissible maps.
    GuardHalted,
}

#[derive(Clone, Debug)]
pub struct OptimOutcome {
    pub trajectory: Vec<OptimState>,
    pub status: Status,
    pub final_map: DomainMap,
    /// Criticality residual of the final iterate.
    pub criticality: f64,
}

impl OptimOutcome {
    pub fn last(&self) -> &OptimState {
        self.trajectory.last().expect("trajectory is never empty")
    }
}

/// `id + Σ c_k ψ_k`.
pub fn map_from_coefficients(dictionary: &[PerturbationField], coeffs: &[f64]) -> Result<DomainMap> {
    let terms: Vec<(f64, &PerturbationField)> = coeffs.iter().copied().zip(dictionary).collect();
    let field = PerturbationField::linear_combination(&terms);
    let id = DomainMap::identity();
    DomainMap::custom(
        id.component(0) + field.component(0),
        id.component(1) + field.component(1),
    )
}

struct Evaluated {
    map: DomainMap,
    solution: Solution,
    cluster: Cluster,
    objective: f64,
    volume: f64,
}

struct Optimizer<'a> {
    disc: &'a Discretization,
    cfg: &'a OptimConfig,
    count: usize,
}

impl Optimizer<'_> {
    fn rescale(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        let map = map_from_coefficients(&self.cfg.dictionary, coeffs)?;
        let v = volume(&map, &self.disc.quadrature().disk);
        if !(v > 0.0) {
            return Err(Error::NotBiLipschitz {
                min_det: 0.0,
                injective: true,
            });
        }
        let s = (self.cfg.target_volume / v).sqrt();
        Ok(coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| if k == 0 { s * (1.0 + c) - 1.0 } else { s * c })
            .collect())
    }

    fn cluster_for(&self, values: &[f64]) -> Result<Cluster> {
        let c = Cluster::from_range(values, self.cfg.cluster_start, self.cfg.cluster_len)?;
        if c.check_separated().is_ok() {
            return Ok(c);
        }
        // The tracked set merged with a neighbour: widen it.
        let widened = cluster_eigenvalues(values, DEFAULT_CLUSTER_RTOL)?
            .into_iter()
            .find(|c| c.indices().contains(&self.cfg.cluster_start))
            .expect("every index belongs to a cluster");
        widened.check_separated()?;
        Ok(widened)
    }

    fn evaluate(&self, coeffs: &[f64]) -> Result<Evaluated> {
        let map = map_from_coefficients(&self.cfg.dictionary, coeffs)?;
        let solution = self.disc.solve_full(&map, self.count)?;
        let cluster = self.cluster_for(&solution.result.eigenvalues)?;
        let h = self.cfg.h.min(cluster.len);
        let objective = elementary_symmetric(&solution.result.values(&cluster), h)?;
        let volume = volume(&map, &self.disc.quadrature().disk);
        Ok(Evaluated {
            map,
            solution,
            cluster,
            objective,
            volume,
        })
    }

    /// Projected gradient in coefficient space.
    fn projected_gradient(&self, e: &Evaluated) -> Result<Vec<f64>> {
        let h = self.cfg.h.min(e.cluster.len);
        let kernel = HadamardKernel::new(self.disc, &e.solution, &e.cluster, h)?;
        let g: Vec<f64> = self.cfg.dictionary.iter().map(|f| kernel.apply(f)).collect();
        let m = self.disc.quadrature().boundary;
        let n: Vec<f64> = self
            .cfg
            .dictionary
            .iter()
            .map(|f| volume_derivative(&e.map, f, m))
            .collect::<Result<_>>()?;
        let gn: f64 = g.iter().zip(&n).map(|(a, b)| a * b).sum();
        let nn: f64 = n.iter().map(|b| b * b).sum();
        Ok(g.iter().zip(&n).map(|(a, b)| a - gn / nn * b).collect())
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Runs the optimizer; the trajectory holds every accepted iterate.
pub fn minimize(disc: &Discretization, cfg: &OptimConfig) -> Result<OptimOutcome> {
    cfg.validate()?;
    let opt = Optimizer {
        disc,
        cfg,
        count: cfg.cluster_start + cfg.cluster_len + 2,
    };
    let sign = match cfg.direction {
        Direction::Minimize => 1.0,
        Direction::Maximize => -1.0,
    };
    let mut coeffs = opt.rescale(&cfg.initial)?;
    let mut current = opt.evaluate(&coeffs)?;
    let mut grad = opt.projected_gradient(&current)?;
    let mut trajectory = vec![state(0, &coeffs, &current, &grad)];
    let mut alpha = f64::INFINITY;
    let mut status = Status::MaxIterations;

    for iter in 1..=cfg.max_iters {
        let gnorm = norm(&grad);
        if gnorm <= cfg.gtol * current.objective.abs() {
            status = Status::Converged;
            break;
        }
        let cap = cfg.max_step / grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        alpha = (2.0 * alpha).min(cap);
        let mut accepted = None;
        let mut any_admissible = false;
        while alpha > 1e-14 * cap {
            let trial: Vec<f64> = coeffs
                .iter()
                .zip(&grad)
                .map(|(c, g)| c - sign * alpha * g)
                .collect();
            let next = opt.rescale(&trial).and_then(|t| Ok((opt.evaluate(&t)?, t)));
            match next {
                Ok((e, t)) => {
                    any_admissible = true;
                    let decrease = sign * (current.objective - e.objective);
                    if decrease >= cfg.armijo * alpha * gnorm * gnorm {
                        accepted = Some((e, t));
                        break;
                    }
                }
                Err(err) if is_guard(&err) => {}
                Err(err) => return Err(err),
            }
            alpha *= 0.5;
        }
        let Some((e, t)) = accepted else {
            status = if any_admissible {
                Status::LineSearchFailed
            } else {
                Status::GuardHalted
            };
            break;
        };
        coeffs = t;
        current = e;
        grad = opt.projected_gradient(&current)?;
        trajectory.push(state(iter, &coeffs, &current, &grad));
    }
    if status == Status::MaxIterations && norm(&grad) <= cfg.gtol * current.objective.abs() {
        status = Status::Converged;
    }
    let criticality = criticality_residual(disc, &current.solution, &current.cluster)?.residual;
    Ok(OptimOutcome {
        trajectory,
        status,
        final_map: current.map,
        criticality,
    })
}

fn is_guard(err: &Error) -> bool {
    matches!(
        err,
        Error::NotBiLipschitz { .. }
            | Error::SingularJacobian { .. }
            | Error::NotCoercive
            | Error::ClusterNotSeparated { .. }
    )
}

fn state(iter: usize, coeffs: &[f64], e: &Evaluated, grad: &[f64]) -> OptimState {
    OptimState {
        iter,
        coeffs: coeffs.to_vec(),
        objective: e.objective,
        volume: e.volume,
        proj_grad_norm: norm(grad),
        eigenvalues: e.solution.result.eigenvalues.clone(),
        cluster: e.cluster.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::Problem;
    use crate::quadrature::QuadratureRule;

    #[test]
    fn ellipse_is_in_the_span() {
        let dict = default_dictionary(2).unwrap();
        for t in [0.15, -0.1, 0.3] {
            let c = ellipse_coefficients(&dict, t).unwrap();
            let map = map_from_coefficients(&dict, &c).unwrap();
            let e = DomainMap::ellipse(t);
            for p in [[0.3, -0.7], [1.0, 0.0], [-0.2, 0.5]] {
                let (a, b) = (map.eval(p), e.eval(p));
                assert!((a[0] - b[0]).abs() < 1e-15 && (a[1] - b[1]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn starting_at_the_disk_stops_immediately() {
        let disc = Discretization::new(
            Problem::new(1, 0).unwrap(),
            8,
            QuadratureRule::new(20, 48).unwrap(),
        )
        .unwrap();
        let cfg = OptimConfig::first_eigenvalue(vec![0.0; 9], std::f64::consts::PI).unwrap();
        let out = minimize(&disc, &cfg).unwrap();
        assert_eq!(out.status, Status::Converged);
        assert_eq!(out.trajectory.len(), 1);
        assert!(out.last().proj_grad_norm <= 1e-4 * out.last().objective);
    }

    #[test]
    fn rejects_dictionary_without_dilation() {
        let mut cfg = OptimConfig::first_eigenvalue(vec![0.0; 9], 1.0).unwrap();
        cfg.dictionary.swap(0, 1);
        let disc = Discretization::new(
            Problem::new(1, 0).unwrap(),
            2,
            QuadratureRule::new(8, 16).unwrap(),
        )
        .unwrap();
        assert!(minimize(&disc, &cfg).is_err());
    }
}
