//! Subcommand implementations. Each returns the rendered output and whether
//! every configured tolerance passed.

use std::fmt::Write as _;

use serde_json::{json, Value};

use polyshape::geometry::{volume, DomainMap, PerturbationField};
use polyshape::kv::format_f64;
use polyshape::optimize::{
    default_dictionary, ellipse_coefficients, minimize, Direction, OptimConfig, OptimOutcome,
};
use polyshape::shape_calculus::{
    criticality_residual, d_det_check, d_laplacian_check, d_polyform_check, hadamard_check,
    lagrange_fit, DerivativeReport,
};
use polyshape::spectrum::{cluster_eigenvalues, cluster_ids, elementary_symmetric, Cluster};
use polyshape::geometry::MapTag;
use polyshape::{Discretization, Error, QuadratureRule, Result};

use crate::config::RunConfig;

pub const TOOL: &str = "polyshape";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Rendered command output.
pub struct Outcome {
    pub text: String,
    pub passed: bool,
}

fn envelope(cfg: &RunConfig, command: &str, body: Value, passed: bool) -> Outcome {
    let mut doc = json!({
        "tool": TOOL,
        "version": VERSION,
        "command": command,
        "config_fingerprint": cfg.fingerprint().to_string(),
        "pass": passed,
    });
    if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
        d.extend(b);
    }
    Outcome {
        text: serde_json::to_string_pretty(&doc).expect("JSON values serialize") + "\n",
        passed,
    }
}

fn csv_header(cfg: &RunConfig, out: &mut String, extra: &str) {
    let _ = writeln!(
        out,
        "# {TOOL} {VERSION} config_fingerprint={} {extra}",
        cfg.fingerprint()
    );
}

fn discretization(cfg: &RunConfig) -> Result<Discretization> {
    Ok(
        Discretization::new(cfg.problem()?, cfg.degree()?, cfg.quadrature()?)?
            .with_bilip_delta(cfg.f64("bilip_delta")?),
    )
}

fn report_json(r: &DerivativeReport, tol: f64) -> Value {
    json!({
        "formula": r.formula,
        "fd": r.fd,
        "steps": r.steps,
        "richardson": r.richardson,
        "rel_err": r.rel_err,
        "order": r.order,
        "tol": tol,
        "pass": r.rel_err <= tol && r.order_in(1.5, 2.5),
    })
}

fn cluster_json(c: &Cluster) -> Value {
    json!({
        "labels": c.labels(),
        "mean": c.mean,
        "spread": c.spread,
        "gap": c.gap,
    })
}

fn tracked_cluster(cfg: &RunConfig, values: &[f64]) -> Result<Cluster> {
    let (start, len) = cfg.cluster()?;
    Cluster::from_range(values, start, len)
}

pub fn solve(cfg: &RunConfig, csv: bool) -> Result<Outcome> {
    let disc = discretization(cfg)?;
    let phi = cfg.map("map")?;
    let count = cfg.usize("count")?;
    let res = disc.solve(&phi, count)?;
    let rtol = cfg.cluster_rtol()?;
    let clusters = cluster_eigenvalues(&res.eigenvalues, rtol)?;
    let ids = cluster_ids(&clusters);

    // Half-resolution pass for the self-convergence delta.
    let quad = disc.quadrature();
    let coarse = Discretization::new(
        disc.problem(),
        disc.basis().degree(),
        QuadratureRule::new(quad.radial().div_ceil(2), quad.angular().div_ceil(2).max(3))?,
    )?
    .solve(&phi, count)?;
    let delta = res
        .eigenvalues
        .iter()
        .zip(&coarse.eigenvalues)
        .map(|(a, b)| ((a - b) / a).abs())
        .fold(0.0, f64::max);

    if csv {
        let mut out = String::new();
        csv_header(
            cfg,
            &mut out,
            &format!(
                "forms_fingerprint={} self_convergence={}",
                res.fingerprint,
                format_f64(delta)
            ),
        );
        out.push_str("j,lambda,cluster\n");
        for (j, (l, id)) in res.eigenvalues.iter().zip(&ids).enumerate() {
            let _ = writeln!(out, "{},{},{}", j + 1, format_f64(*l), id + 1);
        }
        return Ok(Outcome { text: out, passed: true });
    }
    Ok(envelope(
        cfg,
        "solve",
        json!({
            "problem": disc.problem().to_string(),
            "map": phi.tag().to_string(),
            "forms_fingerprint": res.fingerprint.to_string(),
            "eigenvalues": res.eigenvalues,
            "cluster_ids": ids.iter().map(|i| i + 1).collect::<Vec<_>>(),
            "clusters": clusters.iter().map(cluster_json).collect::<Vec<_>>(),
            "cluster_rtol": rtol,
            "self_convergence": delta,
        }),
        true,
    ))
}

fn family_map(family: &str, t: f64) -> Result<DomainMap> {
    match family {
        "ellipse" => Ok(DomainMap::ellipse(t)),
        "dilation" => Ok(DomainMap::dilation(1.0 + t)),
        "constant" => Ok(DomainMap::identity()),
        other => Err(Error::InvalidInput(format!(
            "unknown sweep family `{other}` (ellipse, dilation, constant)"
        ))),
    }
}

/// Sweep grid `t_min + i (t_max - t_min)/(steps - 1)`.
pub fn sweep_grid(cfg: &RunConfig) -> Result<Vec<f64>> {
    let (a, b, k) = (cfg.f64("t_min")?, cfg.f64("t_max")?, cfg.usize("steps")?);
    if k < 2 || !(b > a) {
        return Err(Error::InvalidInput("sweep needs steps ≥ 2 and t_max > t_min".into()));
    }
    Ok((0..k)
        .map(|i| a + (b - a) * i as f64 / (k - 1) as f64)
        .collect())
}

pub fn sweep(cfg: &RunConfig) -> Result<Outcome> {
    let disc = discretization(cfg)?;
    let family = cfg.get("family")?.to_string();
    let count = cfg.usize("count")?;
    let (start, len) = cfg.cluster()?;
    let h = cfg.usize("h")?;
    if start + len > count || h == 0 || h > len {
        return Err(Error::InvalidInput("cluster or h outside the computed range".into()));
    }
    let rtol = cfg.cluster_rtol()?;
    let mut out = String::new();
    csv_header(cfg, &mut out, &format!("family={family}"));
    let mut header = vec!["t".to_string()];
    header.extend((1..=count).map(|j| format!("lambda_{j}")));
    header.extend((1..=count).map(|j| format!("cluster_{j}")));
    let labels: Vec<String> = (start + 1..=start + len).map(|l| l.to_string()).collect();
    header.extend((1..=h).map(|k| format!("Lambda_F{}_h{k}", labels.join("_"))));
    let _ = writeln!(out, "{}", header.join(","));
    for t in sweep_grid(cfg)? {
        let res = disc.solve(&family_map(&family, t)?, count)?;
        let ids = cluster_ids(&cluster_eigenvalues(&res.eigenvalues, rtol)?);
        let mut row = vec![format_f64(t)];
        row.extend(res.eigenvalues.iter().map(|v| format_f64(*v)));
        row.extend(ids.iter().map(|i| (i + 1).to_string()));
        for k in 1..=h {
            row.push(format_f64(elementary_symmetric(
                &res.eigenvalues[start..start + len],
                k,
            )?));
        }
        let _ = writeln!(out, "{}", row.join(","));
    }
    Ok(Outcome { text: out, passed: true })
}

pub fn hadamard(cfg: &RunConfig) -> Result<Outcome> {
    let disc = discretization(cfg)?;
    let phi = cfg.map("map")?;
    let psi = cfg.field("field")?;
    let (start, len) = cfg.cluster()?;
    let h = cfg.usize("h")?;
    let tol = cfg.f64("tol")?;
    let sol = disc.solve_full(&phi, (start + len + 2).max(cfg.usize("count")?))?;
    let cluster = tracked_cluster(cfg, &sol.result.eigenvalues)?;
    let report = hadamard_check(&disc, &sol, &cluster, &psi, h)?;
    let body = report_json(&report, tol);
    let passed = body["pass"].as_bool().unwrap_or(false);
    Ok(envelope(
        cfg,
        "hadamard-check",
        json!({
            "problem": disc.problem().to_string(),
            "map_fingerprint": phi.fingerprint().to_string(),
            "field_fingerprint": psi.fingerprint().to_string(),
            "cluster": cluster_json(&cluster),
            "h": h,
            "report": body,
        }),
        passed,
    ))
}

pub fn opderiv(cfg: &RunConfig) -> Result<Outcome> {
    let phi = cfg.map("map")?;
    let psi = cfg.field("field")?;
    let tol = cfg.f64("tol")?;
    let kind = cfg.get("kind")?.to_string();
    let disc = discretization(cfg)?;
    let (u1i, u2i) = (cfg.usize("u1")?, cfg.usize("u2")?);
    let nb = disc.basis().len();
    if u1i >= nb || u2i >= nb {
        return Err(Error::InvalidInput(format!("basis indices must be below {nb}")));
    }
    let (u1, u2) = (disc.basis().function(u1i), disc.basis().function(u2i));
    let points: Vec<[f64; 2]> = polyshape::quadrature::DiskRule::new(3, 8)?.nodes().to_vec();
    let report = match kind.as_str() {
        "det" => d_det_check(&phi, &psi, &points)?,
        "laplacian" => d_laplacian_check(&phi, &psi, &u1, &points)?,
        "polyform" => {
            let power = match cfg.usize("power")? {
                0 => disc.problem().n(),
                p => p,
            };
            d_polyform_check(&disc, &phi, &psi, &u1, &u2, power)?
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown kind `{other}` (det, laplacian, polyform)"
            )))
        }
    };
    let body = report_json(&report, tol);
    let passed = body["pass"].as_bool().unwrap_or(false);
    Ok(envelope(
        cfg,
        "opderiv-check",
        json!({ "kind": kind, "report": body }),
        passed,
    ))
}

/// Presets used by the Lagrange-multiplier fit.
pub fn lagrange_fields() -> Result<Vec<PerturbationField>> {
    Ok(vec![
        PerturbationField::dilation(),
        PerturbationField::custom(polyshape::Poly2::x(), polyshape::Poly2::zero())?,
        PerturbationField::harmonic_re(2)?,
        PerturbationField::harmonic_im(2)?,
        PerturbationField::harmonic_re(3)?,
        PerturbationField::harmonic_im(3)?,
    ])
}

pub fn criticality(cfg: &RunConfig) -> Result<Outcome> {
    let disc = discretization(cfg)?;
    let phi = cfg.map("map")?;
    let (start, len) = cfg.cluster()?;
    let tol = cfg.f64("tol")?;
    let h = cfg.usize("h")?;
    let sol = disc.solve_full(&phi, (start + len + 2).max(cfg.usize("count")?))?;
    let cluster = tracked_cluster(cfg, &sol.result.eigenvalues)?;
    let report = criticality_residual(&disc, &sol, &cluster)?;
    let fit = lagrange_fit(&disc, &sol, &cluster, &lagrange_fields()?, h)?;
    let passed = !report.degenerate && report.residual <= tol;
    Ok(envelope(
        cfg,
        "criticality",
        json!({
            "problem": disc.problem().to_string(),
            "map_fingerprint": phi.fingerprint().to_string(),
            "cluster": cluster_json(&cluster),
            "residual": report.residual,
            "mean": report.mean,
            "degenerate": report.degenerate,
            "tol": tol,
            "lagrange": {
                "multiplier": fit.multiplier,
                "deviation": fit.deviation,
                "d_lambda": fit.d_lambda,
                "d_volume": fit.d_volume,
                "degenerate": fit.degenerate,
            },
        }),
        passed,
    ))
}

/// Optimizer configuration from the run config. The start map must be an
/// ellipse or the identity so it lies in the dictionary span.
pub fn optim_config(cfg: &RunConfig) -> Result<OptimConfig> {
    let dict = default_dictionary(cfg.usize("dict_degree")? as u32)?;
    let start = cfg.map("map")?;
    let initial = match start.tag() {
        MapTag::Identity => vec![0.0; dict.len()],
        MapTag::Ellipse(t) => ellipse_coefficients(&dict, *t)?,
        MapTag::Dilation(c) => {
            let mut v = vec![0.0; dict.len()];
            v[0] = c - 1.0;
            v
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "optimizer start `{other}` is not in the dictionary span (identity, dilation, ellipse)"
            )))
        }
    };
    let (start, len) = cfg.cluster()?;
    let direction = match cfg.get("direction")? {
        "min" => Direction::Minimize,
        "max" => Direction::Maximize,
        other => return Err(Error::InvalidInput(format!("direction `{other}` (min, max)"))),
    };
    Ok(OptimConfig {
        cluster_start: start,
        cluster_len: len,
        h: cfg.usize("h")?,
        dictionary: dict,
        initial,
        target_volume: cfg.f64("volume")?,
        gtol: cfg.f64("gtol")?,
        max_iters: cfg.usize("max_iters")?,
        direction,
        max_step: 0.05,
        armijo: 1e-4,
    })
}

pub fn trajectory_csv(cfg: &RunConfig, out: &OptimOutcome) -> String {
    let mut text = String::new();
    csv_header(cfg, &mut text, &format!("status={:?}", out.status));
    let k = out.last().coeffs.len();
    let mut header = vec!["iter", "objective", "volume", "proj_grad_norm"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    header.extend((0..k).map(|i| format!("c{i}")));
    let _ = writeln!(text, "{}", header.join(","));
    for s in &out.trajectory {
        let mut row = vec![
            s.iter.to_string(),
            format_f64(s.objective),
            format_f64(s.volume),
            format_f64(s.proj_grad_norm),
        ];
        row.extend(s.coeffs.iter().map(|c| format_f64(*c)));
        let _ = writeln!(text, "{}", row.join(","));
    }
    text
}

pub fn optimize(cfg: &RunConfig) -> Result<(Outcome, String)> {
    let disc = discretization(cfg)?;
    let oc = optim_config(cfg)?;
    let out = minimize(&disc, &oc)?;
    let last = out.last();
    let vol = volume(&out.final_map, &disc.quadrature().disk);
    let passed = out.status == polyshape::optimize::Status::Converged;
    let summary = envelope(
        cfg,
        "optimize",
        json!({
            "problem": disc.problem().to_string(),
            "status": format!("{:?}", out.status),
            "iterations": last.iter,
            "objective": last.objective,
            "eigenvalues": last.eigenvalues,
            "volume": vol,
            "proj_grad_norm": last.proj_grad_norm,
            "criticality": out.criticality,
            "final_map": out.final_map.to_kv("phi"),
        }),
        passed,
    );
    Ok((summary, trajectory_csv(cfg, &out)))
}
