//! Run configuration: built-in defaults, then a key=value file, then
//! command-line overrides.

use std::path::Path;

use polyshape::discretization::DEFAULT_DEGREE;
use polyshape::fingerprint::{Fingerprint, FingerprintBuilder};
use polyshape::geometry::{FieldTag, MapTag};
use polyshape::kv::{self, KvMap};
use polyshape::quadrature::{DEFAULT_ANGULAR, DEFAULT_RADIAL};
use polyshape::spectrum::DEFAULT_CLUSTER_RTOL;
use polyshape::{DomainMap, Error, PerturbationField, Problem, QuadratureRule, Result};

/// Keys understood by at least one command, with their defaults.
pub const DEFAULTS: &[(&str, &str)] = &[
    ("n", "1"),
    ("m", "0"),
    ("degree", "16"),
    ("radial", "40"),
    ("angular", "96"),
    ("boundary", "96"),
    ("bilip_delta", "1e-6"),
    ("cluster_rtol", "1e-6"),
    ("count", "10"),
    ("map", "identity"),
    ("field", "dilation"),
    ("cluster", "1"),
    ("h", "1"),
    ("tol", "1e-5"),
    ("family", "ellipse"),
    ("t_min", "-0.2"),
    ("t_max", "0.2"),
    ("steps", "21"),
    ("kind", "polyform"),
    ("power", "0"),
    ("u1", "0"),
    ("u2", "1"),
    ("seed", "7"),
    ("volume", "3.141592653589793"),
    ("gtol", "1e-4"),
    ("max_iters", "200"),
    ("dict_degree", "4"),
    ("direction", "min"),
];

#[derive(Clone, Debug)]
pub struct RunConfig {
    values: KvMap,
}

impl RunConfig {
    /// Defaults overlaid with `file` (if any) and then `overrides`.
    pub fn load(file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut values: KvMap = DEFAULTS
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
            values.extend(kv::parse(&text)?);
        }
        for (k, v) in overrides {
            values.insert(k.clone(), v.clone());
        }
        for key in values.keys() {
            let known = DEFAULTS.iter().any(|(k, _)| k == key)
                || key.starts_with("map.")
                || key.starts_with("field.");
            if !known {
                return Err(Error::InvalidInput(format!("unknown key `{key}`")));
            }
        }
        let cfg = Self { values };
        cfg.problem()?;
        for key in ["bilip_delta", "cluster_rtol", "tol", "gtol", "volume"] {
            if !(cfg.f64(key)? > 0.0) {
                return Err(Error::InvalidInput(format!("`{key}` must be positive")));
            }
        }
        Ok(cfg)
    }

    pub fn values(&self) -> &KvMap {
        &self.values
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::InvalidInput(format!("missing key `{key}`")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        kv::parse_f64(key, self.get(key)?)
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let raw = self.get(key)?;
        raw.trim()
            .parse()
            .map_err(|_| Error::Parse(format!("`{key}`: expected a non-negative integer, got `{raw}`")))
    }

    pub fn problem(&self) -> Result<Problem> {
        Problem::new(self.usize("n")?, self.usize("m")?)
    }

    pub fn degree(&self) -> Result<usize> {
        self.values
            .get("degree")
            .map(|_| self.usize("degree"))
            .unwrap_or(Ok(DEFAULT_DEGREE))
    }

    pub fn quadrature(&self) -> Result<QuadratureRule> {
        let radial = self.usize("radial").unwrap_or(DEFAULT_RADIAL);
        let angular = self.usize("angular").unwrap_or(DEFAULT_ANGULAR);
        Ok(QuadratureRule::new(radial, angular)?.with_boundary(self.usize("boundary")?))
    }

    pub fn cluster_rtol(&self) -> Result<f64> {
        let r = self.f64("cluster_rtol").unwrap_or(DEFAULT_CLUSTER_RTOL);
        if !(r > 0.0 && r < 0.1) {
            return Err(Error::InvalidInput(format!("cluster_rtol {r} outside (0, 0.1)")));
        }
        Ok(r)
    }

    /// `map` is a preset tag, or `file:<path>` with `phi.*` coefficient lines.
    pub fn map(&self, key: &str) -> Result<DomainMap> {
        let raw = self.get(key)?;
        if let Some(path) = raw.strip_prefix("file:") {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidInput(format!("cannot read {path}: {e}")))?;
            return DomainMap::from_kv(&kv::parse(&text)?, "phi");
        }
        if self.values.keys().any(|k| k.starts_with(&format!("{key}.x.")) || k.starts_with(&format!("{key}.y."))) {
            return DomainMap::from_kv(&self.values, key);
        }
        let tag: MapTag = raw.parse()?;
        DomainMap::from_tag(&tag)
            .ok_or_else(|| Error::InvalidInput(format!("map `{raw}` needs explicit coefficients")))
    }

    /// `field` is a preset tag or a `+`-separated sum such as `dilation+0.5*re(2)`.
    pub fn field(&self, key: &str) -> Result<PerturbationField> {
        let raw = self.get(key)?;
        if self.values.keys().any(|k| k.starts_with(&format!("{key}.x.")) || k.starts_with(&format!("{key}.y."))) {
            return PerturbationField::from_kv(&self.values, key);
        }
        parse_field_sum(raw)
    }

    /// One-based comma-separated contiguous labels, e.g. `2,3`.
    pub fn cluster(&self) -> Result<(usize, usize)> {
        let raw = self.get("cluster")?;
        let labels: Vec<usize> = raw
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("cluster: bad label `{s}`")))
            })
            .collect::<Result<_>>()?;
        let start = *labels.first().ok_or_else(|| Error::Parse("empty cluster".into()))?;
        if start == 0 || labels.iter().enumerate().any(|(i, l)| *l != start + i) {
            return Err(Error::InvalidInput(format!(
                "cluster `{raw}` must list contiguous one-based labels"
            )));
        }
        Ok((start - 1, labels.len()))
    }

    /// Hash of every key and value, in key order.
    pub fn fingerprint(&self) -> Fingerprint {
        self.values
            .iter()
            .fold(FingerprintBuilder::new(), |b, (k, v)| b.str(k).str(v))
            .finish()
    }
}

pub fn parse_field_sum(raw: &str) -> Result<PerturbationField> {
    let mut terms = Vec::new();
    for part in raw.split('+').map(str::trim).filter(|p| !p.is_empty()) {
        let (coef, tag) = match part.split_once('*') {
            Some((c, t)) => (kv::parse_f64("field", c)?, t.trim()),
            None => (1.0, part),
        };
        let tag: FieldTag = tag.parse()?;
        let f = PerturbationField::from_tag(&tag)?
            .ok_or_else(|| Error::InvalidInput(format!("field `{part}` needs explicit coefficients")))?;
        terms.push((coef, f));
    }
    match terms.len() {
        0 => Err(Error::Parse("empty field expression".into())),
        1 if terms[0].0 == 1.0 => Ok(terms.pop().expect("one term").1),
        _ => {
            let refs: Vec<(f64, &PerturbationField)> = terms.iter().map(|(c, f)| (*c, f)).collect();
            Ok(PerturbationField::linear_combination(&refs))
        }
    }
}
