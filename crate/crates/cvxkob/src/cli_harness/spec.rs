use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::suites::{find_suite, suite_names};
use super::HarnessError;
use crate::automorphism_dynamics::Automorphism;
use crate::domain_geometry::{AffineMap, ConvexDomain};
use crate::linalg::*;

/// A complex number as `[re, im]`.
pub type ComplexSpec = [f64; 2];
/// Row-major complex matrix.
pub type MatrixSpec = Vec<Vec<ComplexSpec>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKindSpec {
    Ball,
    Ellipsoid,
    Affine,
    Intersection,
}

/// Description of a convex domain. Which optional fields are required depends on `kind`:
/// `ball` takes `radius` and an optional `center`, `ellipsoid` takes `exponents`, `affine` takes
/// `linear`, an optional `offset` and `base`, `intersection` takes `parts`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub dim: usize,
    pub kind: DomainKindSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<ComplexSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponents: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<Vec<ComplexSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Box<DomainSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parts: Option<Vec<DomainSpec>>,
}

/// Either a group matrix (`matrix`, with `block_unitary` for the higher-exponent block of an
/// ellipsoid) or a disc automorphism z -> u (z - a) / (1 - conj(a) z) lifted to an ellipsoid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutomorphismSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<ComplexSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<ComplexSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_unitary: Option<MatrixSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Registered suite name.
    pub name: String,
    pub domain: DomainSpec,
    /// Empty means the suite's defaults.
    #[serde(default)]
    pub automorphisms: Vec<AutomorphismSpec>,
    /// Overrides of the suite's numeric parameters.
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_outputs")]
    pub outputs: String,
}

fn default_outputs() -> String {
    "out".into()
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> HarnessError {
    HarnessError::Validation { field: field.into(), message: message.into() }
}

pub fn parse_spec(path: &Path) -> Result<ExperimentSpec, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    parse_spec_str(&text)
}

/// Parses and validates a JSON spec, constructing every nested domain and automorphism once.
pub fn parse_spec_str(text: &str) -> Result<ExperimentSpec, HarnessError> {
    let spec: ExperimentSpec =
        serde_json::from_str(text).map_err(|e| HarnessError::Parse { line: e.line(), column: e.column(), message: e.to_string() })?;
    validate(&spec)?;
    Ok(spec)
}

/// Pretty-printed JSON with defaults filled in and absent optionals dropped.
pub fn to_canonical_string(spec: &ExperimentSpec) -> String {
    let mut s = serde_json::to_string_pretty(spec).expect("specs always serialize");
    s.push('\n');
    s
}

pub fn validate(spec: &ExperimentSpec) -> Result<(), HarnessError> {
    let suite = find_suite(&spec.name)
        .ok_or_else(|| invalid("name", format!("unknown suite `{}`; registered suites: {}", spec.name, suite_names().join(", "))))?;
    let dom = build_domain(&spec.domain, "domain")?;
    build_automorphisms(&dom, &spec.automorphisms)?;
    if !spec.automorphisms.is_empty() && spec.automorphisms.len() != suite.automorphisms {
        return Err(invalid(
            "automorphisms",
            format!("suite `{}` takes {} automorphisms, got {}", suite.name, suite.automorphisms, spec.automorphisms.len()),
        ));
    }
    for (k, v) in &spec.parameters {
        if !suite.parameters.iter().any(|(name, _)| name == k) {
            let known: Vec<_> = suite.parameters.iter().map(|p| p.0).collect();
            return Err(invalid(format!("parameters.{k}"), format!("not a parameter of `{}`; known: {}", suite.name, known.join(", "))));
        }
        if !v.is_finite() {
            return Err(invalid(format!("parameters.{k}"), "must be finite"));
        }
    }
    Ok(())
}

fn point(xs: &[ComplexSpec]) -> CVec {
    CVec::from_iterator(xs.len(), xs.iter().map(|z| c(z[0], z[1])))
}

pub(crate) fn matrix(m: &MatrixSpec, field: &str) -> Result<CMat, HarnessError> {
    let n = m.len();
    if n == 0 || m.iter().any(|r| r.len() != n) {
        return Err(invalid(field, "must be a nonempty square matrix"));
    }
    Ok(CMat::from_fn(n, n, |i, j| c(m[i][j][0], m[i][j][1])))
}

pub(crate) fn matrix_spec(m: &CMat) -> MatrixSpec {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

fn forbid(d: &DomainSpec, path: &str, fields: &[&str]) -> Result<(), HarnessError> {
    for f in fields {
        let present = match *f {
            "center" => d.center.is_some(),
            "radius" => d.radius.is_some(),
            "exponents" => d.exponents.is_some(),
            "linear" => d.linear.is_some(),
            "offset" => d.offset.is_some(),
            "base" => d.base.is_some(),
            "parts" => d.parts.is_some(),
            _ => false,
        };
        if present {
            return Err(invalid(format!("{path}.{f}"), format!("not used by kind {:?}", d.kind)));
        }
    }
    Ok(())
}

pub fn build_domain(d: &DomainSpec, path: &str) -> Result<ConvexDomain, HarnessError> {
    if d.dim == 0 {
        return Err(invalid(format!("{path}.dim"), "must be positive"));
    }
    let wrap = |field: &str| {
        let f = format!("{path}.{field}");
        move |e: crate::Error| invalid(f.clone(), e.to_string())
    };
    let dom = match d.kind {
        DomainKindSpec::Ball => {
            forbid(d, path, &["exponents", "linear", "offset", "base", "parts"])?;
            let radius = d.radius.ok_or_else(|| invalid(format!("{path}.radius"), "required for a ball"))?;
            let center = d.center.as_deref().map(point).unwrap_or_else(|| CVec::zeros(d.dim));
            if center.len() != d.dim {
                return Err(invalid(format!("{path}.center"), format!("expected {} coordinates", d.dim)));
            }
            ConvexDomain::ball(center, radius).map_err(wrap("radius"))?
        }
        DomainKindSpec::Ellipsoid => {
            forbid(d, path, &["center", "radius", "linear", "offset", "base", "parts"])?;
            let exps = d.exponents.as_ref().ok_or_else(|| invalid(format!("{path}.exponents"), "required for an ellipsoid"))?;
            if exps.len() != d.dim {
                return Err(invalid(format!("{path}.exponents"), format!("expected {} exponents", d.dim)));
            }
            if let Some(i) = exps.iter().position(|&m| m < 1) {
                return Err(invalid(format!("{path}.exponents[{i}]"), "exponent must be >= 1"));
            }
            ConvexDomain::ellipsoid(exps).map_err(wrap("exponents"))?
        }
        DomainKindSpec::Affine => {
            forbid(d, path, &["center", "radius", "exponents", "parts"])?;
            let base_spec = d.base.as_ref().ok_or_else(|| invalid(format!("{path}.base"), "required for an affine image"))?;
            let base = build_domain(base_spec, &format!("{path}.base"))?;
            let lin = d.linear.as_ref().ok_or_else(|| invalid(format!("{path}.linear"), "required for an affine image"))?;
            let lin = matrix(lin, &format!("{path}.linear"))?;
            if lin.nrows() != d.dim || base.dim() != d.dim {
                return Err(invalid(format!("{path}.linear"), format!("dimension must be {}", d.dim)));
            }
            let off = d.offset.as_deref().map(point).unwrap_or_else(|| CVec::zeros(d.dim));
            if off.len() != d.dim {
                return Err(invalid(format!("{path}.offset"), format!("expected {} coordinates", d.dim)));
            }
            let map = AffineMap::new(lin, off).map_err(wrap("linear"))?;
            ConvexDomain::affine_image(map, base).map_err(wrap("linear"))?
        }
        DomainKindSpec::Intersection => {
            forbid(d, path, &["center", "radius", "exponents", "linear", "offset", "base"])?;
            let parts = d.parts.as_ref().ok_or_else(|| invalid(format!("{path}.parts"), "required for an intersection"))?;
            if parts.is_empty() {
                return Err(invalid(format!("{path}.parts"), "must be nonempty"));
            }
            let mut built = Vec::new();
            for (i, p) in parts.iter().enumerate() {
                let q = build_domain(p, &format!("{path}.parts[{i}]"))?;
                if q.dim() != d.dim {
                    return Err(invalid(format!("{path}.parts[{i}].dim"), format!("must be {}", d.dim)));
                }
                built.push(q);
            }
            ConvexDomain::intersection(built).map_err(wrap("parts"))?
        }
    };
    Ok(dom)
}

pub fn build_automorphism(dom: &ConvexDomain, a: &AutomorphismSpec, path: &str) -> Result<Automorphism, HarnessError> {
    let err = |e: crate::Error| invalid(path, e.to_string());
    let rest = |k: usize| -> Result<CMat, HarnessError> {
        match &a.block_unitary {
            Some(m) => {
                let m = matrix(m, &format!("{path}.block_unitary"))?;
                if m.nrows() != dom.dim() - k {
                    return Err(invalid(format!("{path}.block_unitary"), format!("must be {0}x{0}", dom.dim() - k)));
                }
                Ok(m)
            }
            None => Ok(identity(dom.dim() - k)),
        }
    };
    if let Some(m) = &a.matrix {
        if a.a.is_some() || a.u.is_some() {
            return Err(invalid(path, "give either `matrix` or `a`/`u`, not both"));
        }
        let m = matrix(m, &format!("{path}.matrix"))?;
        let k = m.nrows() - 1;
        if k == 0 || k > dom.dim() {
            return Err(invalid(format!("{path}.matrix"), format!("size must be between 2 and {}", dom.dim() + 1)));
        }
        if k == dom.dim() && a.block_unitary.is_none() && dom.exponents().is_none() {
            return Automorphism::ball_mobius(dom, m).map_err(err);
        }
        return Automorphism::ellipsoid_lift(dom, m, rest(k)?).map_err(err);
    }
    if a.a.is_none() && a.u.is_none() {
        return Err(invalid(path, "needs `matrix` or disc parameters `a`/`u`"));
    }
    let ap = a.a.map(|z| c(z[0], z[1])).unwrap_or(c(0.0, 0.0));
    let u = a.u.map(|z| c(z[0], z[1])).unwrap_or(c(1.0, 0.0));
    if (u.norm() - 1.0).abs() > 1e-12 {
        return Err(invalid(format!("{path}.u"), "must have modulus one"));
    }
    Automorphism::disc_lift(dom, ap, u.arg(), rest(1)?).map_err(err)
}

pub fn build_automorphisms(dom: &ConvexDomain, list: &[AutomorphismSpec]) -> Result<Vec<Automorphism>, HarnessError> {
    list.iter().enumerate().map(|(i, a)| build_automorphism(dom, a, &format!("automorphisms[{i}]"))).collect()
}
