//! Polynomial diffeomorphisms of the unit disk and perturbation fields.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fingerprint::{Fingerprint, FingerprintBuilder};
use crate::jets::{binomial, MapJet};
use crate::kv::{self, KvMap};
use crate::poly::Poly2;
use crate::quadrature::DiskRule;

/// Default lower bound on `det ∇φ` over the disk.
pub const DEFAULT_BILIP_DELTA: f64 = 1e-6;
/// Highest total degree of map and field components.
pub const MAX_MAP_DEGREE: usize = 8;
/// Sample count for the injectivity heuristic.
pub const INJECTIVITY_SAMPLES: usize = 500;

/// How a [`DomainMap`] was constructed.
#[derive(Clone, Debug, PartialEq)]
pub enum MapTag {
    Identity,
    Dilation(f64),
    Affine { a: [[f64; 2]; 2], b: [f64; 2] },
    Ellipse(f64),
    Custom,
}

impl fmt::Display for MapTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapTag::Identity => write!(f, "identity"),
            MapTag::Dilation(c) => write!(f, "dilation({c})"),
            MapTag::Affine { a, b } => write!(
                f,
                "affine({},{},{},{},{},{})",
                a[0][0], a[0][1], a[1][0], a[1][1], b[0], b[1]
            ),
            MapTag::Ellipse(t) => write!(f, "ellipse({t})"),
            MapTag::Custom => write!(f, "custom"),
        }
    }
}

/// `name(a, b)` or `name:a,b`.
fn split_call(s: &str) -> (&str, Vec<&str>) {
    if let Some((name, rest)) = s.split_once(':').filter(|_| !s.contains('(')) {
        let args = rest.split(',').map(str::trim).filter(|a| !a.is_empty()).collect();
        return (name.trim(), args);
    }
    match s.split_once('(') {
        Some((name, rest)) => (
            name.trim(),
            rest.trim_end_matches(')')
                .split(',')
                .map(str::trim)
                .filter(|a| !a.is_empty())
                .collect(),
        ),
        None => (s.trim(), Vec::new()),
    }
}

fn parse_args(args: &[&str], want: usize, what: &str) -> Result<Vec<f64>> {
    if args.len() != want {
        return Err(Error::Parse(format!("{what} expects {want} arguments")));
    }
    args.iter().map(|a| kv::parse_f64(what, a)).collect()
}

impl FromStr for MapTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = split_call(s);
        Ok(match name {
            "identity" => MapTag::Identity,
            "dilation" => MapTag::Dilation(parse_args(&args, 1, "dilation")?[0]),
            "ellipse" => MapTag::Ellipse(parse_args(&args, 1, "ellipse")?[0]),
            "affine" => {
                let v = parse_args(&args, 6, "affine")?;
                MapTag::Affine {
                    a: [[v[0], v[1]], [v[2], v[3]]],
                    b: [v[4], v[5]],
                }
            }
            "custom" => MapTag::Custom,
            other => return Err(Error::Parse(format!("unknown map tag `{other}`"))),
        })
    }
}

fn check_degree(comps: &[Poly2; 2]) -> Result<()> {
    for c in comps {
        if c.effective_degree() > MAX_MAP_DEGREE {
            return Err(Error::Unsupported(format!(
                "polynomial degree {} exceeds {MAX_MAP_DEGREE}",
                c.effective_degree()
            )));
        }
    }
    Ok(())
}

fn eval_pair(comps: &[Poly2; 2], p: [f64; 2]) -> [f64; 2] {
    [comps[0].eval(p), comps[1].eval(p)]
}

fn jet_pair(comps: &[Poly2; 2], p: [f64; 2], order: usize) -> MapJet {
    MapJet::new(comps[0].jet(p, order), comps[1].jet(p, order))
        .expect("component jets share base and order")
}

/// A polynomial map `φ: R² → R²` applied to the closed unit disk.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainMap {
    comps: [Poly2; 2],
    tag: MapTag,
}

impl DomainMap {
    pub fn identity() -> Self {
        Self {
            comps: [Poly2::x(), Poly2::y()],
            tag: MapTag::Identity,
        }
    }

    pub fn dilation(c: f64) -> Self {
        Self {
            comps: [Poly2::x().scale(c), Poly2::y().scale(c)],
            tag: MapTag::Dilation(c),
        }
    }

    /// `x ↦ A x + b`.
    pub fn affine(a: [[f64; 2]; 2], b: [f64; 2]) -> Self {
        let comp = |r: usize| Poly2::from_terms(&[(0, 0, b[r]), (1, 0, a[r][0]), (0, 1, a[r][1])]);
        Self {
            comps: [comp(0), comp(1)],
            tag: MapTag::Affine { a, b },
        }
    }

    /// Area-preserving ellipse `((1+t) x, y / (1+t))`.
    pub fn ellipse(t: f64) -> Self {
        Self {
            comps: [Poly2::x().scale(1.0 + t), Poly2::y().scale(1.0 / (1.0 + t))],
            tag: MapTag::Ellipse(t),
        }
    }

    pub fn custom(x: Poly2, y: Poly2) -> Result<Self> {
        let comps = [x, y];
        check_degree(&comps)?;
        Ok(Self {
            comps,
            tag: MapTag::Custom,
        })
    }

    /// Rebuilds the preset named by `tag`; `Custom` yields `None`.
    pub fn from_tag(tag: &MapTag) -> Option<Self> {
        Some(match *tag {
            MapTag::Identity => Self::identity(),
            MapTag::Dilation(c) => Self::dilation(c),
            MapTag::Affine { a, b } => Self::affine(a, b),
            MapTag::Ellipse(t) => Self::ellipse(t),
            MapTag::Custom => return None,
        })
    }

    pub fn component(&self, r: usize) -> &Poly2 {
        &self.comps[r]
    }

    pub fn tag(&self) -> &MapTag {
        &self.tag
    }

    pub fn eval(&self, p: [f64; 2]) -> [f64; 2] {
        eval_pair(&self.comps, p)
    }

    /// `[r][c] = ∂φ_r/∂x_c`.
    pub fn jacobian(&self, p: [f64; 2]) -> [[f64; 2]; 2] {
        let jet = self.map_jet(p, 1);
        jet.linear_part()
    }

    pub fn det(&self, p: [f64; 2]) -> f64 {
        let j = self.jacobian(p);
        j[0][0] * j[1][1] - j[0][1] * j[1][0]
    }

    /// Exact Taylor expansion of `φ` at `p`.
    pub fn map_jet(&self, p: [f64; 2], order: usize) -> MapJet {
        jet_pair(&self.comps, p, order)
    }

    /// `φ + t ψ`.
    pub fn perturbed(&self, field: &PerturbationField, t: f64) -> Self {
        if t == 0.0 {
            return self.clone();
        }
        Self {
            comps: [
                &self.comps[0] + &field.comps[0].scale(t),
                &self.comps[1] + &field.comps[1].scale(t),
            ],
            tag: MapTag::Custom,
        }
    }

    /// `R_angle ∘ φ`.
    pub fn rotated(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            comps: [
                &self.comps[0].scale(c) - &self.comps[1].scale(s),
                &self.comps[0].scale(s) + &self.comps[1].scale(c),
            ],
            tag: MapTag::Custom,
        }
    }

    /// `c · φ`.
    pub fn scaled(&self, c: f64) -> Self {
        let tag = match self.tag {
            MapTag::Identity => MapTag::Dilation(c),
            MapTag::Dilation(d) => MapTag::Dilation(c * d),
            _ => MapTag::Custom,
        };
        Self {
            comps: [self.comps[0].scale(c), self.comps[1].scale(c)],
            tag,
        }
    }

    pub(crate) fn hash_into(&self, fp: FingerprintBuilder) -> FingerprintBuilder {
        hash_pair(&self.comps, fp)
    }

    /// Hash of the coefficient tables.
    pub fn fingerprint(&self) -> Fingerprint {
        self.hash_into(FingerprintBuilder::new()).finish()
    }

    pub fn to_kv(&self, prefix: &str) -> String {
        let mut out = format!("{prefix}.tag = {}\n", self.tag);
        write_pair(&self.comps, prefix, &mut out);
        out
    }

    pub fn from_kv(map: &KvMap, prefix: &str) -> Result<Self> {
        let comps = read_pair(map, prefix)?;
        check_degree(&comps)?;
        let tag = match map.get(&format!("{prefix}.tag")) {
            Some(t) => t.parse()?,
            None => MapTag::Custom,
        };
        Ok(Self { comps, tag })
    }
}

/// How a [`PerturbationField`] was constructed.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldTag {
    Zero,
    Dilation,
    Rotation,
    HarmonicRe(u32),
    HarmonicIm(u32),
    Custom,
}

impl fmt::Display for FieldTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldTag::Zero => write!(f, "zero"),
            FieldTag::Dilation => write!(f, "dilation"),
            FieldTag::Rotation => write!(f, "rotation"),
            FieldTag::HarmonicRe(k) => write!(f, "re({k})"),
            FieldTag::HarmonicIm(k) => write!(f, "im({k})"),
            FieldTag::Custom => write!(f, "custom"),
        }
    }
}

impl FromStr for FieldTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = split_call(s);
        let order = |what: &str| -> Result<u32> {
            let v = parse_args(&args, 1, what)?[0];
            if v.fract() != 0.0 || v < 1.0 {
                return Err(Error::Parse(format!("{what}: order must be a positive integer")));
            }
            Ok(v as u32)
        };
        Ok(match name {
            "zero" => FieldTag::Zero,
            "dilation" => FieldTag::Dilation,
            "rotation" => FieldTag::Rotation,
            "re" => FieldTag::HarmonicRe(order("re")?),
            "im" => FieldTag::HarmonicIm(order("im")?),
            "custom" => FieldTag::Custom,
            other => return Err(Error::Parse(format!("unknown field tag `{other}`"))),
        })
    }
}

/// Real and imaginary parts of `(x + i y)^p`.
fn complex_power(p: u32) -> (Poly2, Poly2) {
    let p = p as usize;
    let mut re = Poly2::zero();
    let mut im = Poly2::zero();
    for j in 0..=p {
        let c = binomial(p, j);
        // i^j cycles through 1, i, -1, -i
        match j % 4 {
            0 => re.set(p - j, j, c),
            1 => im.set(p - j, j, c),
            2 => re.set(p - j, j, -c),
            _ => im.set(p - j, j, -c),
        }
    }
    (re, im)
}

/// A polynomial vector field `ψ: R² → R²`.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationField {
    comps: [Poly2; 2],
    tag: FieldTag,
}

impl PerturbationField {
    pub fn zero() -> Self {
        Self {
            comps: [Poly2::zero(), Poly2::zero()],
            tag: FieldTag::Zero,
        }
    }

    /// `ψ(x) = x`.
    pub fn dilation() -> Self {
        Self {
            comps: [Poly2::x(), Poly2::y()],
            tag: FieldTag::Dilation,
        }
    }

    /// `ψ(x, y) = (-y, x)`.
    pub fn rotation() -> Self {
        Self {
            comps: [Poly2::y().scale(-1.0), Poly2::x()],
            tag: FieldTag::Rotation,
        }
    }

    /// `∇ Re (x + i y)^k`, `1 ≤ k ≤ 6`.
    pub fn harmonic_re(k: u32) -> Result<Self> {
        check_harmonic_order(k)?;
        let (re, im) = complex_power(k - 1);
        let k = f64::from(k);
        Ok(Self {
            comps: [re.scale(k), im.scale(-k)],
            tag: FieldTag::HarmonicRe(k as u32),
        })
    }

    /// `∇ Im (x + i y)^k`, `1 ≤ k ≤ 6`.
    pub fn harmonic_im(k: u32) -> Result<Self> {
        check_harmonic_order(k)?;
        let (re, im) = complex_power(k - 1);
        let k = f64::from(k);
        Ok(Self {
            comps: [im.scale(k), re.scale(k)],
            tag: FieldTag::HarmonicIm(k as u32),
        })
    }

    pub fn custom(x: Poly2, y: Poly2) -> Result<Self> {
        let comps = [x, y];
        check_degree(&comps)?;
        Ok(Self {
            comps,
            tag: FieldTag::Custom,
        })
    }

    pub fn from_tag(tag: &FieldTag) -> Result<Option<Self>> {
        Ok(Some(match *tag {
            FieldTag::Zero => Self::zero(),
            FieldTag::Dilation => Self::dilation(),
            FieldTag::Rotation => Self::rotation(),
            FieldTag::HarmonicRe(k) => Self::harmonic_re(k)?,
            FieldTag::HarmonicIm(k) => Self::harmonic_im(k)?,
            FieldTag::Custom => return Ok(None),
        }))
    }

    pub fn component(&self, r: usize) -> &Poly2 {
        &self.comps[r]
    }

    pub fn tag(&self) -> &FieldTag {
        &self.tag
    }

    pub fn eval(&self, p: [f64; 2]) -> [f64; 2] {
        eval_pair(&self.comps, p)
    }

    pub fn jet(&self, p: [f64; 2], order: usize) -> MapJet {
        jet_pair(&self.comps, p, order)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            comps: [self.comps[0].scale(factor), self.comps[1].scale(factor)],
            tag: FieldTag::Custom,
        }
    }

    /// `Σ a_k ψ_k`.
    pub fn linear_combination(terms: &[(f64, &PerturbationField)]) -> Self {
        let mut comps = [Poly2::zero(), Poly2::zero()];
        for (a, f) in terms {
            for (c, g) in comps.iter_mut().zip(&f.comps) {
                *c = &*c + &g.scale(*a);
            }
        }
        Self {
            comps,
            tag: FieldTag::Custom,
        }
    }

    pub(crate) fn hash_into(&self, fp: FingerprintBuilder) -> FingerprintBuilder {
        hash_pair(&self.comps, fp)
    }

    /// Hash of the coefficient tables.
    pub fn fingerprint(&self) -> Fingerprint {
        self.hash_into(FingerprintBuilder::new()).finish()
    }

    pub fn to_kv(&self, prefix: &str) -> String {
        let mut out = format!("{prefix}.tag = {}\n", self.tag);
        write_pair(&self.comps, prefix, &mut out);
        out
    }

    pub fn from_kv(map: &KvMap, prefix: &str) -> Result<Self> {
        let comps = read_pair(map, prefix)?;
        check_degree(&comps)?;
        let tag = match map.get(&format!("{prefix}.tag")) {
            Some(t) => t.parse()?,
            None => FieldTag::Custom,
        };
        Ok(Self { comps, tag })
    }
}

fn check_harmonic_order(k: u32) -> Result<()> {
    if !(1..=6).contains(&k) {
        return Err(Error::Unsupported(format!(
            "harmonic field order {k} outside 1..=6"
        )));
    }
    Ok(())
}

fn hash_pair(comps: &[Poly2; 2], mut fp: FingerprintBuilder) -> FingerprintBuilder {
    for c in comps {
        for (i, j, v) in c.terms() {
            fp = fp.u64(i as u64).u64(j as u64).f64(v);
        }
        fp = fp.u64(u64::MAX);
    }
    fp
}

const AXES: [&str; 2] = ["x", "y"];

fn write_pair(comps: &[Poly2; 2], prefix: &str, out: &mut String) {
    for (axis, c) in AXES.iter().zip(comps) {
        for (i, j, v) in c.terms() {
            out.push_str(&format!("{prefix}.{axis}.c{i}{j} = {}\n", kv::format_f64(v)));
        }
    }
}

fn read_pair(map: &KvMap, prefix: &str) -> Result<[Poly2; 2]> {
    let mut comps = [Poly2::zero(), Poly2::zero()];
    for (key, value) in map.range(format!("{prefix}.")..) {
        let Some(rest) = key.strip_prefix(&format!("{prefix}.")) else {
            break;
        };
        if rest == "tag" {
            continue;
        }
        let (axis, term) = rest
            .split_once('.')
            .ok_or_else(|| Error::Parse(format!("malformed key `{key}`")))?;
        let r = AXES
            .iter()
            .position(|a| *a == axis)
            .ok_or_else(|| Error::Parse(format!("unknown component in `{key}`")))?;
        let digits = term
            .strip_prefix('c')
            .filter(|d| d.len() == 2 && d.bytes().all(|b| b.is_ascii_digit()))
            .ok_or_else(|| Error::Parse(format!("malformed coefficient key `{key}`")))?
            .as_bytes();
        let (i, j) = ((digits[0] - b'0') as usize, (digits[1] - b'0') as usize);
        comps[r].set(i, j, kv::parse_f64(key, value)?);
    }
    Ok(comps)
}

/// Outcome of [`bilipschitz_check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BilipReport {
    pub min_det: f64,
    pub injective: bool,
}

/// Reference points for the injectivity heuristic: a sunflower spiral in the
/// interior plus uniformly spaced boundary points.
fn injectivity_points() -> Vec<[f64; 2]> {
    let boundary = INJECTIVITY_SAMPLES / 5;
    let interior = INJECTIVITY_SAMPLES - boundary;
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut pts: Vec<[f64; 2]> = (0..interior)
        .map(|i| {
            let r = ((i as f64 + 0.5) / interior as f64).sqrt();
            let th = golden * i as f64;
            [r * th.cos(), r * th.sin()]
        })
        .collect();
    pts.extend((0..boundary).map(|i| {
        let th = 2.0 * PI * i as f64 / boundary as f64;
        [th.cos(), th.sin()]
    }));
    pts
}

/// Minimum of `det ∇φ` over `nodes` and the boundary, plus a pairwise
/// injectivity heuristic. Fails with `NotBiLipschitz` when the minimum is
/// not above `delta` or two well-separated samples collapse.
pub fn bilipschitz_check(phi: &DomainMap, nodes: &[[f64; 2]], delta: f64) -> Result<BilipReport> {
    let pts = injectivity_points();
    let min_det = nodes
        .iter()
        .chain(&pts)
        .map(|p| phi.det(*p))
        .fold(f64::INFINITY, f64::min);

    let images: Vec<[f64; 2]> = pts.iter().map(|p| phi.eval(*p)).collect();
    let mut injective = true;
    'outer: for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            let dref = dist(pts[a], pts[b]);
            let dimg = dist(images[a], images[b]);
            if dref > 1e-3 && dimg < 1e-9 {
                injective = false;
                break 'outer;
            }
        }
    }
    let report = BilipReport { min_det, injective };
    if !(min_det > delta) || !injective {
        return Err(Error::NotBiLipschitz { min_det, injective });
    }
    Ok(report)
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// One point of the boundary quadrature on `∂φ(Ω)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundarySample {
    /// `(cos θ, sin θ)` on the unit circle.
    pub reference: [f64; 2],
    pub image: [f64; 2],
    /// Outward unit normal at `image`.
    pub normal: [f64; 2],
    /// Arc-length weight `(2π/M) |dφ/dθ|`.
    pub weight: f64,
    /// `ζ(image) = ψ(reference)` when a field was supplied.
    pub field: Option<[f64; 2]>,
}

/// Uniform boundary samples of `φ(∂Ω)`. The orientation of `φ` is assumed
/// positive (enforced by [`bilipschitz_check`]), so the counter-clockwise
/// tangent rotated by `-π/2` points outward.
pub fn boundary_sample(phi: &DomainMap, m: usize) -> Result<Vec<BoundarySample>> {
    boundary_sample_impl(phi, None, m)
}

pub fn boundary_sample_with_field(
    phi: &DomainMap,
    psi: &PerturbationField,
    m: usize,
) -> Result<Vec<BoundarySample>> {
    boundary_sample_impl(phi, Some(psi), m)
}

fn boundary_sample_impl(
    phi: &DomainMap,
    psi: Option<&PerturbationField>,
    m: usize,
) -> Result<Vec<BoundarySample>> {
    if m < 16 {
        return Err(Error::InvalidInput(format!(
            "boundary sampling needs at least 16 points (got {m})"
        )));
    }
    let dtheta = 2.0 * PI / m as f64;
    (0..m)
        .map(|i| {
            let theta = dtheta * i as f64;
            let (s, c) = theta.sin_cos();
            let x = [c, s];
            let jac = phi.jacobian(x);
            let tangent = [
                -jac[0][0] * s + jac[0][1] * c,
                -jac[1][0] * s + jac[1][1] * c,
            ];
            let len = tangent[0].hypot(tangent[1]);
            if !(len > 0.0) {
                return Err(Error::DegenerateBoundary { index: i });
            }
            Ok(BoundarySample {
                reference: x,
                image: phi.eval(x),
                normal: [tangent[1] / len, -tangent[0] / len],
                weight: dtheta * len,
                field: psi.map(|f| f.eval(x)),
            })
        })
        .collect()
}

/// `|φ(Ω)| = ∫_Ω |det ∇φ| dx`.
pub fn volume(phi: &DomainMap, rule: &DiskRule) -> f64 {
    rule.integrate(|p| phi.det(p).abs())
}

/// `dV[ψ] = ∮ ζ·ν dσ` on `∂φ(Ω)`.
pub fn volume_derivative(phi: &DomainMap, psi: &PerturbationField, m: usize) -> Result<f64> {
    let samples = boundary_sample_with_field(phi, psi, m)?;
    Ok(samples
        .iter()
        .map(|s| {
            let z = s.field.expect("field requested");
            s.weight * (z[0] * s.normal[0] + z[1] * s.normal[1])
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::QuadratureRule;

    #[test]
    fn identity_and_dilation_jets() {
        let p = [0.3, -0.6];
        let id = DomainMap::identity().map_jet(p, 4);
        assert_eq!(id, MapJet::identity(p, 4));
        let dil = DomainMap::dilation(2.5).map_jet(p, 3);
        assert_eq!(dil.value(), [0.75, -1.5]);
        assert_eq!(dil.linear_part(), [[2.5, 0.0], [0.0, 2.5]]);
    }

    #[test]
    fn bilipschitz_presets() {
        let rule = QuadratureRule::default();
        let nodes = rule.disk.nodes();
        let id = bilipschitz_check(&DomainMap::identity(), nodes, DEFAULT_BILIP_DELTA).unwrap();
        assert_eq!(id.min_det, 1.0);
        assert!(id.injective);
        assert!(matches!(
            bilipschitz_check(&DomainMap::dilation(0.0), nodes, DEFAULT_BILIP_DELTA),
            Err(Error::NotBiLipschitz { .. })
        ));
        let el = bilipschitz_check(&DomainMap::ellipse(0.3), nodes, DEFAULT_BILIP_DELTA).unwrap();
        assert!((el.min_det - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reflection_is_rejected() {
        let rule = QuadratureRule::default();
        let flip = DomainMap::affine([[1.0, 0.0], [0.0, -1.0]], [0.0, 0.0]);
        assert!(bilipschitz_check(&flip, rule.disk.nodes(), DEFAULT_BILIP_DELTA).is_err());
    }

    #[test]
    fn boundary_of_unit_disk() {
        let samples = boundary_sample(&DomainMap::identity(), 64).unwrap();
        let total: f64 = samples.iter().map(|s| s.weight).sum();
        assert!((total - 2.0 * PI).abs() < 1e-12);
        for s in &samples {
            assert!((s.normal[0] - s.reference[0]).abs() < 1e-15);
            assert!((s.normal[1] - s.reference[1]).abs() < 1e-15);
        }
        let total: f64 = boundary_sample(&DomainMap::dilation(1.5), 64)
            .unwrap()
            .iter()
            .map(|s| s.weight)
            .sum();
        assert!((total - 3.0 * PI).abs() < 1e-12);
        assert!(boundary_sample(&DomainMap::identity(), 8).is_err());
    }

    #[test]
    fn ellipse_perimeter_matches_dense_trapezoid() {
        let t: f64 = 0.3;
        let (a, b) = (1.0 + t, 1.0 / (1.0 + t));
        let n = 200_000;
        let h = 2.0 * PI / n as f64;
        let oracle: f64 = (0..n)
            .map(|i| {
                let th = h * i as f64;
                h * (a * a * th.sin().powi(2) + b * b * th.cos().powi(2)).sqrt()
            })
            .sum();
        let got: f64 = boundary_sample(&DomainMap::ellipse(t), 96)
            .unwrap()
            .iter()
            .map(|s| s.weight)
            .sum();
        assert!((got - oracle).abs() < 1e-10, "{got} vs {oracle}");
    }

    #[test]
    fn volumes_of_presets() {
        let rule = QuadratureRule::default();
        assert!((volume(&DomainMap::identity(), &rule.disk) - PI).abs() < 1e-13);
        assert!((volume(&DomainMap::dilation(1.7), &rule.disk) - 1.7 * 1.7 * PI).abs() < 1e-12);
        assert!((volume(&DomainMap::ellipse(0.3), &rule.disk) - PI).abs() < 1e-10);
    }

    #[test]
    fn volume_derivative_presets() {
        let id = DomainMap::identity();
        let dv = volume_derivative(&id, &PerturbationField::dilation(), 96).unwrap();
        assert!((dv - 2.0 * PI).abs() < 1e-12);
        let dv = volume_derivative(&id, &PerturbationField::rotation(), 96).unwrap();
        assert!(dv.abs() < 1e-13);
        for k in 1..=6 {
            for f in [
                PerturbationField::harmonic_re(k).unwrap(),
                PerturbationField::harmonic_im(k).unwrap(),
            ] {
                assert!(volume_derivative(&id, &f, 96).unwrap().abs() < 1e-10);
            }
        }
    }

    #[test]
    fn harmonic_fields_are_divergence_free() {
        for k in 1..=6 {
            let f = PerturbationField::harmonic_re(k).unwrap();
            let div = &f.component(0).partial(0) + &f.component(1).partial(1);
            assert!(div.terms().all(|(_, _, c)| c.abs() < 1e-12), "k={k}");
        }
        assert!(PerturbationField::harmonic_re(7).is_err());
        // ∇ Re z² = (2x, -2y)
        let f = PerturbationField::harmonic_re(2).unwrap();
        assert_eq!(f.eval([0.5, 0.25]), [1.0, -0.5]);
        let g = PerturbationField::harmonic_im(2).unwrap();
        assert_eq!(g.eval([0.5, 0.25]), [0.5, 1.0]);
    }

    #[test]
    fn rotation_invariance_of_volume_and_weights() {
        let phi = DomainMap::custom(
            Poly2::from_terms(&[(1, 0, 1.0), (2, 0, 0.1), (0, 2, -0.05)]),
            Poly2::from_terms(&[(0, 1, 1.0), (1, 1, 0.08)]),
        )
        .unwrap();
        let rot = phi.rotated(0.7);
        let rule = QuadratureRule::default();
        assert!((volume(&phi, &rule.disk) - volume(&rot, &rule.disk)).abs() < 1e-12);
        let a = boundary_sample(&phi, 96).unwrap();
        let b = boundary_sample(&rot, 96).unwrap();
        for (sa, sb) in a.iter().zip(&b) {
            assert!((sa.weight - sb.weight).abs() < 1e-12);
        }
    }

    #[test]
    fn kv_round_trip_is_bit_exact() {
        let phi = DomainMap::custom(
            Poly2::from_terms(&[(1, 0, 1.0 / 3.0), (3, 2, -1e-7)]),
            Poly2::from_terms(&[(0, 1, std::f64::consts::E), (0, 0, 0.1)]),
        )
        .unwrap();
        let text = phi.to_kv("phi");
        let back = DomainMap::from_kv(&kv::parse(&text).unwrap(), "phi").unwrap();
        assert_eq!(back, phi);

        let el = DomainMap::ellipse(0.3);
        let back = DomainMap::from_kv(&kv::parse(&el.to_kv("phi")).unwrap(), "phi").unwrap();
        assert_eq!(back, el);

        let f = PerturbationField::harmonic_im(4).unwrap();
        let back =
            PerturbationField::from_kv(&kv::parse(&f.to_kv("psi")).unwrap(), "psi").unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn kv_rejects_bad_keys() {
        let bad = kv::parse("phi.z.c10 = 1\n").unwrap();
        assert!(DomainMap::from_kv(&bad, "phi").is_err());
        let bad = kv::parse("phi.x.c1 = 1\n").unwrap();
        assert!(DomainMap::from_kv(&bad, "phi").is_err());
        let high = kv::parse("phi.x.c90 = 1\n").unwrap();
        assert!(matches!(
            DomainMap::from_kv(&high, "phi"),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn tag_syntax() {
        assert_eq!("dilation:2".parse::<MapTag>().unwrap(), MapTag::Dilation(2.0));
        assert_eq!("ellipse(0.3)".parse::<MapTag>().unwrap(), MapTag::Ellipse(0.3));
        let t: MapTag = "affine:1,0,0,2,0.5,0".parse().unwrap();
        assert_eq!(t.to_string(), "affine(1,0,0,2,0.5,0)");
        assert_eq!("re:3".parse::<FieldTag>().unwrap(), FieldTag::HarmonicRe(3));
        assert!("ellipse".parse::<MapTag>().is_err());
        assert!("spiral(1)".parse::<MapTag>().is_err());
    }
}
