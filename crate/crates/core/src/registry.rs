//! Named built-in maps and ODE fields with parameter documentation.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::afp::SelfMap;
use crate::error::{Error, Result};
use crate::linalg::norm;
use crate::ode::{OdeProblem, TimeGrid};
use crate::sets::ConvexBody;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Vector(Vec<f64>),
}

pub type Params = BTreeMap<String, ParamValue>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    Map,
    Field,
}

impl EntryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntryKind::Map => "map",
            EntryKind::Field => "field",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamDoc {
    pub name: &'static str,
    pub default: &'static str,
    pub doc: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegistryEntry {
    pub name: &'static str,
    pub kind: EntryKind,
    pub summary: &'static str,
    pub params: &'static [ParamDoc],
}

const ENTRIES: &[RegistryEntry] = &[
    RegistryEntry {
        name: "identity",
        kind: EntryKind::Map,
        summary: "f(x) = x",
        params: &[],
    },
    RegistryEntry {
        name: "scaling",
        kind: EntryKind::Map,
        summary: "f(x) = c + s (x - c); a self-map of bodies star-shaped about c when |s| <= 1",
        params: &[
            ParamDoc { name: "factor", default: "0.5", doc: "s, any real in [-1, 1]" },
            ParamDoc { name: "center", default: "body centroid", doc: "c, vector of the body dimension" },
        ],
    },
    RegistryEntry {
        name: "rotation",
        kind: EntryKind::Map,
        summary: "rotation by an angle in the (i, j) coordinate plane about c; needs dimension >= 2",
        params: &[
            ParamDoc { name: "angle", default: "pi/2", doc: "radians" },
            ParamDoc { name: "center", default: "body centroid", doc: "c, vector of the body dimension" },
            ParamDoc { name: "plane", default: "[0, 1]", doc: "two distinct 0-based coordinate indices" },
        ],
    },
    RegistryEntry {
        name: "shift-and-clip",
        kind: EntryKind::Map,
        summary: "f(x) = clamp(x + v) into the bounding box; a self-map of box bodies",
        params: &[ParamDoc { name: "shift", default: "0.25 per coordinate", doc: "v, number or vector" }],
    },
    RegistryEntry {
        name: "polynomial",
        kind: EntryKind::Map,
        summary: "coordinatewise p(x_k) = sum_j a_j x_k^j",
        params: &[ParamDoc {
            name: "coefficients",
            default: "[-0.5, 0, 1]",
            doc: "a_0, a_1, ... in increasing degree; the default maps [-1, 1] into itself",
        }],
    },
    RegistryEntry {
        name: "zero",
        kind: EntryKind::Field,
        summary: "f(t, u) = 0; alpha = 0, phi = 1",
        params: &[],
    },
    RegistryEntry {
        name: "linear",
        kind: EntryKind::Field,
        summary: "f(t, u) = lambda u; alpha = |lambda|, phi(s) = 1 + s",
        params: &[ParamDoc { name: "lambda", default: "1", doc: "any real" }],
    },
    RegistryEntry {
        name: "rotation",
        kind: EntryKind::Field,
        summary: "f(t, u) = omega J u with J the quarter turn in the (i, j) plane; alpha = |omega|, phi(s) = 1 + s",
        params: &[
            ParamDoc { name: "omega", default: "1", doc: "angular speed" },
            ParamDoc { name: "plane", default: "[0, 1]", doc: "two distinct 0-based coordinate indices" },
        ],
    },
    RegistryEntry {
        name: "logistic-growth",
        kind: EntryKind::Field,
        summary: "f_k(t, u) = r u_k (1 - u_k / K); alpha = |r|, phi(s) = (1 + s)(1 + s / K)",
        params: &[
            ParamDoc { name: "rate", default: "1", doc: "r, any real" },
            ParamDoc { name: "capacity", default: "10", doc: "K > 0" },
        ],
    },
    RegistryEntry {
        name: "saturating",
        kind: EntryKind::Field,
        summary: "f(t, u) = a u / (1 + ||u||); alpha = |a|, phi = 1",
        params: &[ParamDoc { name: "amplitude", default: "1", doc: "a, any real" }],
    },
];

pub fn entries() -> &'static [RegistryEntry] {
    ENTRIES
}

/// Entries whose name contains `filter` (case-insensitive); an empty filter
/// matches everything.
pub fn list_registry(filter: &str) -> Vec<RegistryEntry> {
    let needle = filter.trim().to_lowercase();
    ENTRIES
        .iter()
        .filter(|e| e.name.contains(&needle))
        .copied()
        .collect()
}

pub fn format_listing(entries: &[RegistryEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        let _ = writeln!(out, "{:<5} {:<16} {}", e.kind.as_str(), e.name, e.summary);
        for p in e.params {
            let _ = writeln!(out, "{:22}{} (default {}): {}", "", p.name, p.default, p.doc);
        }
    }
    out
}

fn lookup(kind: EntryKind, name: &str) -> Result<&'static RegistryEntry> {
    ENTRIES
        .iter()
        .find(|e| e.kind == kind && e.name == name)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown {} '{name}'", kind.as_str())))
}

fn check_known(entry: &RegistryEntry, params: &Params) -> Result<()> {
    for key in params.keys() {
        if !entry.params.iter().any(|p| p.name == key) {
            return Err(Error::InvalidArgument(format!(
                "{} '{}' has no parameter '{key}'",
                entry.kind.as_str(),
                entry.name
            )));
        }
    }
    Ok(())
}

fn number(params: &Params, key: &str, default: f64) -> Result<f64> {
    match params.get(key) {
        None => Ok(default),
        Some(ParamValue::Number(v)) if v.is_finite() => Ok(*v),
        Some(other) => Err(Error::InvalidArgument(format!("'{key}' must be a finite number, got {other:?}"))),
    }
}

/// A vector of length `dim`; a bare number is broadcast.
fn vector(params: &Params, key: &str, dim: usize, default: impl FnOnce() -> Vec<f64>) -> Result<Vec<f64>> {
    let v = match params.get(key) {
        None => return Ok(default()),
        Some(ParamValue::Number(x)) => vec![*x; dim],
        Some(ParamValue::Vector(v)) => v.clone(),
    };
    if v.len() != dim {
        return Err(Error::InvalidArgument(format!("'{key}' needs {dim} entries, got {}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("'{key}' has non-finite entries")));
    }
    Ok(v)
}

fn plane(params: &Params, dim: usize) -> Result<(usize, usize)> {
    if dim < 2 {
        return Err(Error::InvalidArgument("rotation needs dimension >= 2".into()));
    }
    let p = vector(params, "plane", 2, || vec![0.0, 1.0])?;
    let valid = |x: f64| x >= 0.0 && x.fract() == 0.0 && (x as usize) < dim;
    if !valid(p[0]) || !valid(p[1]) || p[0] == p[1] {
        return Err(Error::InvalidArgument(format!("'plane' must hold two distinct indices below {dim}")));
    }
    Ok((p[0] as usize, p[1] as usize))
}

/// Instantiates a built-in map for `body`.
pub fn build_map(name: &str, params: &Params, body: &ConvexBody) -> Result<SelfMap> {
    let entry = lookup(EntryKind::Map, name)?;
    check_known(entry, params)?;
    let dim = body.dim();
    let map = match name {
        "identity" => SelfMap::new(name, |x| x.to_vec()),
        "scaling" => {
            let s = number(params, "factor", 0.5)?;
            if s.abs() > 1.0 {
                return Err(Error::InvalidArgument(format!("'factor' must lie in [-1, 1], got {s}")));
            }
            let c = vector(params, "center", dim, || body.centroid())?;
            SelfMap::new(name, move |x| x.iter().zip(&c).map(|(x, c)| c + s * (x - c)).collect())
        }
        "rotation" => {
            let angle = number(params, "angle", FRAC_PI_2)?;
            let c = vector(params, "center", dim, || body.centroid())?;
            let (i, j) = plane(params, dim)?;
            let (sin, cos) = angle.sin_cos();
            // Snap so that quarter turns are exact.
            let snap = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
            let (sin, cos) = (snap(sin), snap(cos));
            SelfMap::new(name, move |x| {
                let mut y = x.to_vec();
                let (a, b) = (x[i] - c[i], x[j] - c[j]);
                y[i] = c[i] + cos * a - sin * b;
                y[j] = c[j] + sin * a + cos * b;
                y
            })
        }
        "shift-and-clip" => {
            let v = vector(params, "shift", dim, || vec![0.25; dim])?;
            let (lo, hi) = body.bounding_box();
            SelfMap::new(name, move |x| {
                (0..x.len()).map(|k| (x[k] + v[k]).clamp(lo[k], hi[k])).collect()
            })
        }
        "polynomial" => {
            let coeffs = match params.get("coefficients") {
                None => vec![-0.5, 0.0, 1.0],
                Some(ParamValue::Vector(v)) if !v.is_empty() && v.iter().all(|c| c.is_finite()) => v.clone(),
                Some(ParamValue::Number(c)) if c.is_finite() => vec![*c],
                Some(other) => {
                    return Err(Error::InvalidArgument(format!("bad 'coefficients': {other:?}")))
                }
            };
            SelfMap::new(name, move |x| {
                x.iter()
                    .map(|x| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c))
                    .collect()
            })
        }
        _ => unreachable!("registry entry without constructor"),
    };
    Ok(map)
}

/// Instantiates a built-in field as an ODE problem.
pub fn build_problem(name: &str, params: &Params, u0: Vec<f64>, grid: TimeGrid) -> Result<OdeProblem> {
    let entry = lookup(EntryKind::Field, name)?;
    check_known(entry, params)?;
    let dim = u0.len();
    match name {
        "zero" => OdeProblem::new(name, |_, u| vec![0.0; u.len()], |_| 0.0, |_| 1.0, u0, grid),
        "linear" => {
            let lambda = number(params, "lambda", 1.0)?;
            OdeProblem::new(
                name,
                move |_, u| u.iter().map(|v| lambda * v).collect(),
                move |_| lambda.abs(),
                |s| 1.0 + s,
                u0,
                grid,
            )
        }
        "rotation" => {
            let omega = number(params, "omega", 1.0)?;
            let (i, j) = plane(params, dim)?;
            OdeProblem::new(
                name,
                move |_, u| {
                    let mut v = vec![0.0; u.len()];
                    v[i] = -omega * u[j];
                    v[j] = omega * u[i];
                    v
                },
                move |_| omega.abs(),
                |s| 1.0 + s,
                u0,
                grid,
            )
        }
        "logistic-growth" => {
            let r = number(params, "rate", 1.0)?;
            let k = number(params, "capacity", 10.0)?;
            if k <= 0.0 {
                return Err(Error::InvalidArgument(format!("'capacity' must be positive, got {k}")));
            }
            OdeProblem::new(
                name,
                move |_, u| u.iter().map(|v| r * v * (1.0 - v / k)).collect(),
                move |_| r.abs(),
                move |s| (1.0 + s) * (1.0 + s / k),
                u0,
                grid,
            )
        }
        "saturating" => {
            let a = number(params, "amplitude", 1.0)?;
            OdeProblem::new(
                name,
                move |_, u| {
                    let scale = a / (1.0 + norm(u));
                    u.iter().map(|v| scale * v).collect()
                },
                move |_| a.abs(),
                |_| 1.0,
                u0,
                grid,
            )
        }
        _ => unreachable!("registry entry without constructor"),
    }
}
