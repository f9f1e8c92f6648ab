//! Scenario files. See `scenarios/README.md` for the schema and defaults.

use std::path::Path;

use afp_core::registry::Params;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    AfpMap,
    Ode,
    OrbitChain,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub kind: Kind,
    /// Artifact file stem; defaults to the config file stem.
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    pub body: Option<BodySpec>,
    #[serde(default)]
    pub seminorm: SeminormSpec,
    pub map: Option<MapSpec>,
    #[serde(default)]
    pub afp: AfpSpec,
    pub ode: Option<OdeSpec>,
    pub orbit: Option<OrbitSpec>,
    /// Source text, kept for error line lookup.
    #[serde(skip)]
    pub source: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum BodySpec {
    Cube { dim: usize, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Segment { a: f64, b: f64 },
    Generators { points: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeminormSpec {
    /// Number of functionals when none are listed; default `2 * dim`.
    pub count: Option<usize>,
    /// Explicit functional coefficient vectors.
    pub functionals: Option<Vec<Vec<f64>>>,
    /// Names for `functionals`; default `a1, a2, ...`.
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub name: String,
    #[serde(default)]
    pub params: Params,
    pub iterate_power: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AfpSpec {
    pub levels: Vec<usize>,
    pub margin: f64,
    pub max_net_points: usize,
    pub dispersion_fraction: f64,
    pub max_grid_points: usize,
    pub tol: Option<f64>,
    pub audit_samples: usize,
    pub decay_slack: f64,
    pub residual_floor: f64,
    pub extract_tol: Option<f64>,
}

impl Default for AfpSpec {
    fn default() -> Self {
        Self {
            levels: afp_core::afp::DEFAULT_LEVELS.to_vec(),
            margin: 0.1,
            max_net_points: 20_000,
            dispersion_fraction: 0.5,
            max_grid_points: 4_000_000,
            tol: None,
            audit_samples: 1000,
            decay_slack: 1.5,
            residual_floor: 1e-12,
            extract_tol: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeSpec {
    pub field: String,
    #[serde(default)]
    pub params: Params,
    pub u0: Vec<f64>,
    #[serde(default = "one")]
    pub horizon: f64,
    /// Defaults to `horizon * 1e-3`.
    pub step: Option<f64>,
    #[serde(default = "thirty")]
    pub iterations: usize,
    #[serde(default = "default_p")]
    pub p: Vec<f64>,
    /// Defaults to the coordinate functionals.
    pub functionals: Option<Vec<Vec<f64>>>,
    pub labels: Option<Vec<String>>,
    #[serde(default = "big")]
    pub bound_cap: f64,
    #[serde(default = "big")]
    pub osgood_cap: f64,
    #[serde(default = "slack")]
    pub decay_slack: f64,
    #[serde(default = "floor")]
    pub residual_floor: f64,
    /// Accept the Osgood condition without the numerical check.
    #[serde(default)]
    pub osgood_override: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitSpec {
    pub start: Vec<f64>,
    #[serde(default = "three")]
    pub depth: usize,
    #[serde(default = "twelve")]
    pub samples: usize,
}

fn one() -> f64 {
    1.0
}
fn thirty() -> usize {
    30
}
fn three() -> usize {
    3
}
fn twelve() -> usize {
    12
}
fn default_p() -> Vec<f64> {
    vec![2.0]
}
fn big() -> f64 {
    1e12
}
fn slack() -> f64 {
    1.5
}
fn floor() -> f64 {
    1e-12
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut s = Self::parse(&text)?;
        if s.name.is_none() {
            s.name = path.file_stem().map(|n| n.to_string_lossy().into_owned());
        }
        Ok(s)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut s: Scenario = toml::from_str(text).map_err(|e| CliError::ConfigInvalid {
            line: e.span().map_or(0, |r| line_at(text, r.start)),
            reason: e.message().to_string(),
        })?;
        s.source = text.to_string();
        s.validate()?;
        Ok(s)
    }

    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or("scenario")
    }

    /// `ConfigInvalid` pointing at the first line that mentions `key`.
    pub fn invalid(&self, key: &str, reason: impl Into<String>) -> CliError {
        CliError::ConfigInvalid {
            line: line_of(&self.source, key),
            reason: reason.into(),
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let need = |present: bool, table: &str| {
            if present {
                Ok(())
            } else {
                Err(CliError::ConfigInvalid {
                    line: line_of(&self.source, "kind"),
                    reason: format!("this kind needs a [{table}] table"),
                })
            }
        };
        match self.kind {
            Kind::AfpMap => {
                need(self.body.is_some(), "body")?;
                need(self.map.is_some(), "map")?;
            }
            Kind::Ode => need(self.ode.is_some(), "ode")?,
            Kind::OrbitChain => {
                need(self.body.is_some(), "body")?;
                need(self.map.is_some(), "map")?;
                need(self.orbit.is_some(), "orbit")?;
            }
        }
        let a = &self.afp;
        if !(0.0..1.0).contains(&a.margin) {
            return Err(self.invalid("margin", "margin must lie in [0, 1)"));
        }
        if !(a.dispersion_fraction > 0.0 && a.dispersion_fraction <= 1.0) {
            return Err(self.invalid("dispersion_fraction", "dispersion_fraction must lie in (0, 1]"));
        }
        if a.levels.is_empty() || a.levels[0] == 0 || a.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(self.invalid("levels", "levels must be positive and strictly increasing"));
        }
        if a.decay_slack < 1.0 {
            return Err(self.invalid("decay_slack", "decay_slack must be at least 1"));
        }
        if let Some(o) = &self.ode {
            if !(o.horizon.is_finite() && o.horizon > 0.0) {
                return Err(self.invalid("horizon", "horizon must be positive"));
            }
            if o.step.is_some_and(|h| !(h > 0.0 && h <= o.horizon)) {
                return Err(self.invalid("step", "step must lie in (0, horizon]"));
            }
            if o.iterations == 0 {
                return Err(self.invalid("iterations", "iterations must be at least 1"));
            }
            if o.p.is_empty() || o.p.iter().any(|p| !(p.is_finite() && *p > 1.0)) {
                return Err(self.invalid("p", "every exponent must lie in (1, inf)"));
            }
            if o.u0.is_empty() {
                return Err(self.invalid("u0", "u0 must not be empty"));
            }
        }
        if let Some(o) = &self.orbit {
            if o.depth == 0 {
                return Err(self.invalid("depth", "depth must be at least 1"));
            }
        }
        Ok(())
    }
}

fn line_at(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// First line whose key (or table header) is `key`; 0 when absent.
fn line_of(text: &str, key: &str) -> usize {
    text.lines()
        .position(|l| {
            let l = l.trim_start();
            let head = l.trim_start_matches('[').split(['=', ']', ' ']).next().unwrap_or("");
            head == key || head.ends_with(&format!(".{key}"))
        })
        .map_or(0, |i| i + 1)
}
