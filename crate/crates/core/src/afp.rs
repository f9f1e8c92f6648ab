//! Level-by-level construction of approximate fixed point sequences.
//!
//! For each level `n` the driver builds a rho-net of radius `1/n`, composes
//! the Schauder projection with the map and solves the finite-dimensional
//! fixed point problem. The point `u_n` then satisfies
//! `rho(u_n - f(u_n)) < 1/n` up to the solver tolerance.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::audit::{decay_report, fmt_f64, DecayReport};
use crate::brouwer::{default_tol, solve_fixed_point, BrouwerConfig, FixedPointResult};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{dist, sub};
use crate::schauder::SchauderProjection;
use crate::seminorms::AdmissibleSeminorm;
use crate::sets::{build_eps_net, ConvexBody, NetConfig};

pub type MapFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A continuous self-map of a body, given as an evaluator.
#[derive(Clone)]
pub struct SelfMap {
    evaluator: MapFn,
    label: String,
    iterate_power: Option<usize>,
}

impl fmt::Debug for SelfMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SelfMap")
            .field("label", &self.label)
            .field("iterate_power", &self.iterate_power)
            .finish_non_exhaustive()
    }
}

impl SelfMap {
    pub fn new(label: impl Into<String>, f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self {
            evaluator: Arc::new(f),
            label: label.into(),
            iterate_power: None,
        }
    }

    /// Sets `m` for extraction through `f^m`.
    pub fn with_iterate_power(mut self, m: usize) -> Self {
        self.iterate_power = Some(m);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn iterate_power(&self) -> Option<usize> {
        self.iterate_power
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.evaluator)(x)
    }

    pub fn iterate(&self, x: &[f64], m: usize) -> Vec<f64> {
        let mut y = x.to_vec();
        for _ in 0..m {
            y = self.eval(&y);
        }
        y
    }

    /// Largest barycentric re-fit residual of `f(x)` over `samples` body
    /// samples; fails with `MapLeavesHull` at or above `tol`.
    pub fn audit(&self, body: &ConvexBody, samples: usize, seed: u64, tol: f64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for x in body.sample(samples, seed).iter().chain(body.generators()) {
            let y = self.eval(x);
            check_dim(body.dim(), y.len())?;
            let r = if y.iter().any(|v| !v.is_finite()) {
                f64::INFINITY
            } else if body.contains_within(&y, 0.0) {
                0.0
            } else {
                body.barycentric(&y)?.residual
            };
            worst = worst.max(r);
            if r >= tol {
                return Err(Error::MapLeavesHull { residual: r });
            }
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AfpConfig {
    pub net: NetConfig,
    pub brouwer: BrouwerConfig,
    /// Solver tolerance; `None` means `min(1e-8, epsilon / 100)` per level.
    pub tol: Option<f64>,
    /// Grid dispersion as a fraction of `margin * epsilon`.
    pub dispersion_fraction: f64,
    pub max_grid_points: usize,
    pub audit_samples: usize,
    pub seed: u64,
}

impl Default for AfpConfig {
    fn default() -> Self {
        Self {
            net: NetConfig {
                check_membership: false,
                ..NetConfig::default()
            },
            brouwer: BrouwerConfig::default(),
            tol: None,
            dispersion_fraction: 0.5,
            max_grid_points: 4_000_000,
            audit_samples: 1000,
            seed: 0,
        }
    }
}

pub const DEFAULT_LEVELS: [usize; 7] = [1, 2, 4, 8, 16, 32, 64];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AfpLevel {
    pub n: usize,
    pub epsilon: f64,
    pub u_n: Vec<f64>,
    pub f_u_n: Vec<f64>,
    pub rho_residual: f64,
    pub weak_residuals: Vec<f64>,
    /// Barycentric re-fit residual of `u_n` over the body generators.
    pub body_residual: f64,
    pub net_size: usize,
    pub grid_size: usize,
    pub tol: f64,
    pub solver: FixedPointResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelFailure {
    pub n: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AfpTrace {
    pub map_label: String,
    pub functional_labels: Vec<String>,
    pub functional_weights: Vec<f64>,
    pub levels: Vec<AfpLevel>,
    /// First level that failed, if any; `levels` holds everything before it.
    pub failure: Option<LevelFailure>,
}

impl AfpTrace {
    pub fn last(&self) -> Option<&AfpLevel> {
        self.levels.last()
    }

    /// Levels violating `rho(u_n - f(u_n)) < 1/n + tol`.
    pub fn contract_violations(&self) -> Vec<usize> {
        self.levels
            .iter()
            .filter(|l| !(l.rho_residual < l.epsilon + l.tol))
            .map(|l| l.n)
            .collect()
    }

    /// Weak residual series of functional `k` across levels.
    /// Levels whose `u_n` sits farther than `tol` from the body.
    pub fn body_violations(&self, tol: f64) -> Vec<usize> {
        self.levels
            .iter()
            .filter(|l| !(l.body_residual < tol))
            .map(|l| l.n)
            .collect()
    }

    pub fn weak_series(&self, k: usize) -> Vec<f64> {
        self.levels.iter().map(|l| l.weak_residuals[k]).collect()
    }

    pub fn weak_decay(&self, slack: f64, floor: f64) -> Vec<DecayReport> {
        (0..self.functional_labels.len())
            .map(|k| decay_report(&self.weak_series(k), slack, floor))
            .collect()
    }

    /// One row per level: `n, epsilon, net_size, rho_residual,
    /// solver_residual, weak_<label>..., u<k>...`.
    pub fn to_csv(&self) -> String {
        let dim = self.levels.first().map_or(0, |l| l.u_n.len());
        let mut header = vec![
            "n".to_string(),
            "epsilon".into(),
            "net_size".into(),
            "rho_residual".into(),
            "solver_residual".into(),
        ];
        header.extend(self.functional_labels.iter().map(|l| format!("weak_{l}")));
        header.extend((1..=dim).map(|k| format!("u{k}")));
        let mut s = header.join(",");
        s.push('\n');
        for l in &self.levels {
            let mut row = vec![
                l.n.to_string(),
                fmt_f64(l.epsilon),
                l.net_size.to_string(),
                fmt_f64(l.rho_residual),
                fmt_f64(l.solver.residual_norm),
            ];
            row.extend(l.weak_residuals.iter().map(|v| fmt_f64(*v)));
            row.extend(l.u_n.iter().map(|v| fmt_f64(*v)));
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

/// `|<a_k, u - fu>|` for every functional of `rho`, unweighted.
pub fn weak_residuals(rho: &AdmissibleSeminorm, u: &[f64], fu: &[f64]) -> Result<Vec<f64>> {
    check_dim(rho.dim(), u.len())?;
    check_dim(rho.dim(), fu.len())?;
    let d = sub(u, fu);
    Ok(rho.functionals().iter().map(|f| f.apply(&d).abs()).collect())
}

fn audit_rho(rho: &AdmissibleSeminorm, body: &ConvexBody) -> Result<()> {
    check_dim(body.dim(), rho.dim())?;
    let gens = body.generators();
    for i in 0..gens.len() {
        for j in (i + 1)..gens.len() {
            if dist(&gens[i], &gens[j]) > crate::seminorms::DEFAULT_SEPARATION_TOL
                && rho.dist_unchecked(&gens[i], &gens[j]) <= 0.0
            {
                return Err(Error::AdmissibilityFailure(format!(
                    "rho does not separate generators {i} and {j}"
                )));
            }
        }
    }
    Ok(())
}

/// Runs the level schedule. Precondition failures are errors; a failure at
/// some level is recorded in [`AfpTrace::failure`] and ends the run.
pub fn run_afp(
    body: &ConvexBody,
    rho: &AdmissibleSeminorm,
    f: &SelfMap,
    levels: &[usize],
    config: &AfpConfig,
) -> Result<AfpTrace> {
    if levels.is_empty() {
        return Err(Error::EmptyInput("levels"));
    }
    if levels[0] == 0 || levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("levels must be positive and strictly increasing".into()));
    }
    audit_rho(rho, body)?;
    f.audit(body, config.audit_samples, config.seed, 1e-6)?;

    let mut trace = AfpTrace {
        map_label: f.label().to_string(),
        functional_labels: rho.functionals().iter().map(|x| x.label().to_string()).collect(),
        functional_weights: rho.weights().to_vec(),
        levels: Vec::with_capacity(levels.len()),
        failure: None,
    };
    for &n in levels {
        match run_level(body, rho, f, n, config) {
            Ok(level) => trace.levels.push(level),
            Err(e) => {
                log::warn!("level {n} failed: {e}");
                trace.failure = Some(LevelFailure {
                    n,
                    error: e.to_string(),
                });
                break;
            }
        }
    }
    Ok(trace)
}

fn run_level(
    body: &ConvexBody,
    rho: &AdmissibleSeminorm,
    f: &SelfMap,
    n: usize,
    config: &AfpConfig,
) -> Result<AfpLevel> {
    let epsilon = 1.0 / n as f64;
    let dispersion = config.dispersion_fraction * config.net.margin * epsilon;
    let grid = body.rho_lattice(rho, dispersion, config.max_grid_points)?;
    let net = build_eps_net(body, rho, epsilon, &grid, &config.net)?;
    let net_size = net.len();
    let projection = SchauderProjection::new(net);
    let tol = config.tol.unwrap_or_else(|| default_tol(epsilon));
    let brouwer = BrouwerConfig {
        tol,
        seed: config.seed,
        ..config.brouwer
    };
    let composed = |x: &[f64]| projection.project(&f.eval(x));
    let solver = solve_fixed_point(composed, body, &brouwer)?;
    let u_n = solver.point.clone();
    let f_u_n = f.eval(&u_n);
    let rho_residual = rho.dist(&u_n, &f_u_n)?;
    let weak = weak_residuals(rho, &u_n, &f_u_n)?;
    let body_residual = if body.contains_within(&u_n, 0.0) {
        0.0
    } else {
        body.barycentric(&u_n)?.residual
    };
    log::debug!(
        "level {n}: net {net_size}, grid {}, rho residual {rho_residual:e}",
        grid.len()
    );
    Ok(AfpLevel {
        n,
        epsilon,
        u_n,
        f_u_n,
        rho_residual,
        weak_residuals: weak,
        body_residual,
        net_size,
        grid_size: grid.len(),
        tol,
        solver,
    })
}

/// Sampled chain `A_0 = co{a, f(a), ..., f^N(a)}`, `A_{k+1} = co f(S_k)` with
/// `S_k` the generators of `A_k` plus `samples` random points of it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitHullChain {
    pub hulls: Vec<ConvexBody>,
    /// Every image of `S_k` was found among the generators of `A_{k+1}`.
    pub inclusion_verified: bool,
}

impl OrbitHullChain {
    pub fn sizes(&self) -> Vec<usize> {
        self.hulls.iter().map(|h| h.generators().len()).collect()
    }

    pub fn diameters(&self) -> Vec<f64> {
        self.hulls.iter().map(ConvexBody::diameter).collect()
    }
}

const DEDUP_TOL: f64 = 1e-12;

fn push_unique(points: &mut Vec<Vec<f64>>, p: Vec<f64>) {
    if !points.iter().any(|q| dist(q, &p) <= DEDUP_TOL) {
        points.push(p);
    }
}

pub fn orbit_hull_chain(f: &SelfMap, a: &[f64], depth: usize, samples: usize, seed: u64) -> Result<OrbitHullChain> {
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    if a.is_empty() {
        return Err(Error::EmptyInput("orbit start"));
    }
    let mut orbit = Vec::new();
    let mut x = a.to_vec();
    for _ in 0..=samples {
        let next = f.eval(&x);
        check_dim(a.len(), next.len())?;
        push_unique(&mut orbit, x);
        x = next;
    }
    let mut hulls = vec![ConvexBody::new(orbit)?];
    let mut inclusion_verified = true;
    for k in 0..depth {
        let current = &hulls[k];
        let mut pool: Vec<Vec<f64>> = current.generators().to_vec();
        pool.extend(current.sample(samples, seed.wrapping_add(k as u64)));
        let images: Vec<Vec<f64>> = pool.iter().map(|p| f.eval(p)).collect();
        let mut gens = Vec::new();
        for img in &images {
            push_unique(&mut gens, img.clone());
        }
        let next = ConvexBody::new(gens)?;
        inclusion_verified &= images
            .iter()
            .all(|img| next.generators().iter().any(|g| dist(g, img) <= DEDUP_TOL));
        hulls.push(next);
    }
    Ok(OrbitHullChain {
        hulls,
        inclusion_verified,
    })
}

/// Takes the last `u_n`, moves to `p = f^m(u_n)` when the map carries an
/// iterate power, and accepts `p` if `||f(p) - p|| <= tol`.
pub fn extract_fixed_point(trace: &AfpTrace, f: &SelfMap, tol: f64) -> Result<Vec<f64>> {
    let last = trace.last().ok_or(Error::EmptyInput("trace"))?;
    let p = match f.iterate_power() {
        Some(m) => f.iterate(&last.u_n, m),
        None => last.u_n.clone(),
    };
    let residual = dist(&f.eval(&p), &p);
    if residual <= tol {
        Ok(p)
    } else {
        Err(Error::NotFound { best: p, residual })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seminorms::{build_admissible, LinearFunctional};

    fn square_rho() -> (ConvexBody, AdmissibleSeminorm) {
        let body = ConvexBody::cube(2, 1.0);
        let fs = vec![
            LinearFunctional::coordinate(2, 0),
            LinearFunctional::coordinate(2, 1),
        ];
        let rho = build_admissible(&fs, &body).unwrap();
        (body, rho)
    }

    #[test]
    fn weak_residual_cases() {
        let (_, rho) = square_rho();
        assert_eq!(weak_residuals(&rho, &[0.2, 0.3], &[0.2, 0.3]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(weak_residuals(&rho, &[1.5, 0.3], &[0.5, 0.3]).unwrap(), vec![1.0, 0.0]);
        let u = [0.7, -0.1];
        let fu = [0.1, 0.4];
        let w = weak_residuals(&rho, &u, &fu).unwrap();
        let weighted: f64 = w.iter().zip(rho.weights()).map(|(a, b)| a * b).sum();
        assert!((weighted - rho.dist(&u, &fu).unwrap()).abs() < 1e-15);
        assert!(weak_residuals(&rho, &[1.0], &[1.0]).is_err());
    }

    #[test]
    fn identity_has_zero_residual_everywhere() {
        let (body, rho) = square_rho();
        let id = SelfMap::new("identity", |x| x.to_vec());
        let trace = run_afp(&body, &rho, &id, &[1, 2, 4], &AfpConfig::default()).unwrap();
        assert!(trace.failure.is_none());
        assert!(trace.levels.iter().all(|l| l.rho_residual == 0.0));
        assert_eq!(extract_fixed_point(&trace, &id, 1e-12).unwrap(), trace.last().unwrap().u_n);
    }

    #[test]
    fn levels_must_increase() {
        let (body, rho) = square_rho();
        let id = SelfMap::new("identity", |x| x.to_vec());
        assert!(run_afp(&body, &rho, &id, &[2, 2], &AfpConfig::default()).is_err());
        assert!(run_afp(&body, &rho, &id, &[], &AfpConfig::default()).is_err());
    }

    #[test]
    fn map_leaving_body_fails_audit() {
        let (body, rho) = square_rho();
        let push = SelfMap::new("push", |x| vec![x[0] + 0.5, x[1]]);
        assert!(matches!(
            run_afp(&body, &rho, &push, &[1], &AfpConfig::default()),
            Err(Error::MapLeavesHull { .. })
        ));
    }

    #[test]
    fn orbit_chain_identity_is_a_point() {
        let id = SelfMap::new("identity", |x| x.to_vec());
        let chain = orbit_hull_chain(&id, &[0.3, 0.1], 3, 10, 1).unwrap();
        assert_eq!(chain.sizes(), vec![1, 1, 1, 1]);
        assert!(chain.inclusion_verified);
    }

    #[test]
    fn orbit_chain_rotation_cycle() {
        let rot = SelfMap::new("rotation", |x| vec![-x[1], x[0]]);
        let chain = orbit_hull_chain(&rot, &[1.0, 0.0], 3, 12, 5).unwrap();
        assert_eq!(chain.sizes()[0], 4);
        for h in &chain.hulls {
            assert!((h.diameter() - 2.0).abs() < 1e-12);
            for corner in [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]] {
                assert!(h.contains(&corner));
            }
        }
    }

    #[test]
    fn extraction_through_iterate_power() {
        let half = SelfMap::new("half", |x| vec![x[0] / 2.0]).with_iterate_power(3);
        let mut trace = AfpTrace {
            map_label: "half".into(),
            functional_labels: vec!["e1".into()],
            functional_weights: vec![0.25],
            levels: Vec::new(),
            failure: None,
        };
        let level = |u: f64| AfpLevel {
            n: 1,
            epsilon: 1.0,
            u_n: vec![u],
            f_u_n: vec![u / 2.0],
            rho_residual: 0.0,
            weak_residuals: vec![0.0],
            body_residual: 0.0,
            net_size: 1,
            grid_size: 1,
            tol: 1e-8,
            solver: FixedPointResult {
                point: vec![u],
                residual_norm: 0.0,
                iterations: 0,
                method: crate::brouwer::SolverMethod::DampedIteration,
            },
        };
        trace.levels.push(level(8e-4));
        // p = 1e-4, |f(p) - p| = 5e-5
        let p = extract_fixed_point(&trace, &half, 5e-5).unwrap();
        assert!((p[0] - 1e-4).abs() < 1e-18);
        trace.levels[0] = level(8e-3);
        assert!(matches!(
            extract_fixed_point(&trace, &half, 5e-5),
            Err(Error::NotFound { .. })
        ));
    }
}
