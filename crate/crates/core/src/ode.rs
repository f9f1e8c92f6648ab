//! Limiting-weak solutions of `u' = f(t, u)`, `u(0) = u0` on `[0, T]`.
//!
//! The state space is `R^d` and functions of time live on a uniform grid.
//! Under the growth condition `||f(t, x)|| <= alpha(t) phi(||x||)` every
//! iterate of the integral operator
//! `F(u)(t) = u0 + int_0^t f(s, u(s)) ds` stays in the tube
//! `||u(t)|| <= b(t)`, where `b' = alpha phi(b)`, `b(0) = ||u0||`.
//! Picard iteration then supplies a sequence with `u_k - F(u_k) -> 0`
//! tested against a family of linear functionals.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::audit::{decay_report, fmt_f64, DecayReport};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{dist, norm, rank};
use crate::seminorms::LinearFunctional;

pub type FieldFn = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Uniform grid `t_i = i * horizon / steps`, `i = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub horizon: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidArgument(format!("horizon {horizon}")));
        }
        if steps == 0 {
            return Err(Error::InvalidArgument("grid needs at least one step".into()));
        }
        Ok(Self { horizon, steps })
    }

    /// Grid with step close to `h` (rounded so the horizon is a node).
    pub fn with_step(horizon: f64, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidArgument(format!("step {h}")));
        }
        Self::new(horizon, (horizon / h).round().max(1.0) as usize)
    }

    pub fn h(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t(&self, i: usize) -> f64 {
        if i == self.steps {
            self.horizon
        } else {
            i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.t(i)).collect()
    }

    /// Composite trapezoid of node values.
    pub fn trapezoid(&self, values: &[f64]) -> f64 {
        let h = self.h();
        let n = values.len();
        if n < 2 {
            return 0.0;
        }
        h * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1]))
    }
}

#[derive(Clone)]
pub struct OdeProblem {
    pub label: String,
    field: FieldFn,
    alpha: ScalarFn,
    phi: ScalarFn,
    pub u0: Vec<f64>,
    pub p_exponent: f64,
    pub grid: TimeGrid,
}

impl fmt::Debug for OdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OdeProblem")
            .field("label", &self.label)
            .field("u0", &self.u0)
            .field("p_exponent", &self.p_exponent)
            .field("grid", &self.grid)
            .finish_non_exhaustive()
    }
}

impl OdeProblem {
    pub fn new(
        label: impl Into<String>,
        field: impl Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
        alpha: impl Fn(f64) -> f64 + Send + Sync + 'static,
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        u0: Vec<f64>,
        grid: TimeGrid,
    ) -> Result<Self> {
        if u0.is_empty() {
            return Err(Error::EmptyInput("initial value"));
        }
        if u0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite initial value".into()));
        }
        Ok(Self {
            label: label.into(),
            field: Arc::new(field),
            alpha: Arc::new(alpha),
            phi: Arc::new(phi),
            u0,
            p_exponent: 2.0,
            grid,
        })
    }

    pub fn with_p(mut self, p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidArgument(format!("p must lie in (1, inf), got {p}")));
        }
        self.p_exponent = p;
        Ok(self)
    }

    pub fn with_grid(mut self, grid: TimeGrid) -> Self {
        self.grid = grid;
        self
    }

    pub fn dim(&self) -> usize {
        self.u0.len()
    }

    pub fn field(&self, t: f64, u: &[f64]) -> Vec<f64> {
        (self.field)(t, u)
    }

    pub fn alpha(&self, t: f64) -> f64 {
        (self.alpha)(t)
    }

    pub fn phi(&self, s: f64) -> f64 {
        (self.phi)(s)
    }

    fn alpha_nodes(&self) -> Vec<f64> {
        self.grid.nodes().iter().map(|t| self.alpha(*t)).collect()
    }

    /// Checks `||f(t, u)|| <= alpha(t) phi(||u||)` on up to `nodes` grid
    /// times and `per_node` random states inside the tube.
    pub fn audit_growth(&self, bound: &AprioriBound, nodes: usize, per_node: usize, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stride = (self.grid.len() / nodes.max(1)).max(1);
        for i in (0..self.grid.len()).step_by(stride) {
            let t = self.grid.t(i);
            let radius = bound.tube[i];
            for _ in 0..per_node {
                let dir: Vec<f64> = (0..self.dim()).map(|_| rng.sample(StandardNormal)).collect();
                let n = norm(&dir).max(f64::MIN_POSITIVE);
                let r = radius * rng.random::<f64>();
                let u: Vec<f64> = dir.iter().map(|v| v / n * r).collect();
                let fu = self.field(t, &u);
                check_dim(self.dim(), fu.len())?;
                let lhs = norm(&fu);
                let rhs = self.alpha(t) * self.phi(norm(&u));
                if lhs > rhs * (1.0 + 1e-12) + 1e-300 {
                    return Err(Error::GrowthViolation { t, norm: lhs, bound: rhs });
                }
            }
        }
        Ok(())
    }
}

/// Result of testing `int_0^T alpha < int_0^inf ds / phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OsgoodCheck {
    pub alpha_integral: f64,
    /// `None` when the partial integrals of `1/phi` have not settled by the cap.
    pub phi_integral: Option<f64>,
    pub satisfied: bool,
}

/// Integrates `1/phi` over `[0, 1]` and dyadic panels `[2^k, 2^(k+1)]` up to
/// `cap`; the integral is declared divergent if the last panel still adds
/// more than `1e-6` of the running total.
pub fn osgood_check(problem: &OdeProblem, cap: f64) -> OsgoodCheck {
    let alpha_integral = problem.grid.trapezoid(&problem.alpha_nodes());
    let inv_phi = |s: f64| 1.0 / problem.phi(s);
    let mut total = simpson(&inv_phi, 0.0, 1.0, 256);
    let mut lo = 1.0;
    let mut last_panel = total;
    while lo < cap {
        let hi = (2.0 * lo).min(cap);
        last_panel = simpson(&inv_phi, lo, hi, 64);
        total += last_panel;
        lo = hi;
    }
    let converged = last_panel <= 1e-6 * total;
    let phi_integral = converged.then_some(total);
    OsgoodCheck {
        alpha_integral,
        phi_integral,
        satisfied: phi_integral.is_none_or(|v| alpha_integral < v),
    }
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `b(t_i)` from the classical RK4 scheme plus the discrete tube used to
/// confine trapezoid iterates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AprioriBound {
    pub values: Vec<f64>,
    pub sup_norm: f64,
    /// `max(b_i, q_i)` where `q` solves the trapezoid form of
    /// `q(t) = ||u0|| + int_0^t alpha phi(q)`. For nondecreasing `phi`, the
    /// discrete operator maps this tube into itself.
    pub tube: Vec<f64>,
}

impl AprioriBound {
    pub fn tube_sup(&self) -> f64 {
        self.tube.iter().copied().fold(self.sup_norm, f64::max)
    }
}

pub const DEFAULT_BOUND_CAP: f64 = 1e12;

/// Integrates `b' = alpha(t) phi(b)`, `b(0) = ||u0||` with RK4 on the grid.
pub fn apriori_bound(problem: &OdeProblem, cap: f64) -> Result<AprioriBound> {
    let grid = problem.grid;
    let h = grid.h();
    let rhs = |t: f64, b: f64| problem.alpha(t) * problem.phi(b);
    let mut values = Vec::with_capacity(grid.len());
    let mut b = norm(&problem.u0);
    values.push(b);
    for i in 0..grid.steps {
        let t = grid.t(i);
        let k1 = rhs(t, b);
        let k2 = rhs(t + 0.5 * h, b + 0.5 * h * k1);
        let k3 = rhs(t + 0.5 * h, b + 0.5 * h * k2);
        let k4 = rhs(t + h, b + h * k3);
        b += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !b.is_finite() || b > cap {
            return Err(Error::BlowUp { t: grid.t(i + 1), cap });
        }
        values.push(b);
    }
    let sup_norm = values.iter().copied().fold(0.0, f64::max);

    // Discrete trapezoid tube: q_i = q_{i-1} + h/2 (a_{i-1} phi(q_{i-1}) + a_i phi(q_i)).
    let alpha = problem.alpha_nodes();
    let mut tube = Vec::with_capacity(grid.len());
    let mut q = values[0];
    tube.push(q);
    for i in 1..grid.len() {
        let base = q + 0.5 * h * alpha[i - 1] * problem.phi(q);
        let mut z = values[i].max(base);
        for _ in 0..200 {
            let next = base + 0.5 * h * alpha[i] * problem.phi(z);
            if (next - z).abs() <= 1e-15 * next.abs().max(1.0) {
                z = next;
                break;
            }
            z = next;
        }
        if !z.is_finite() || z > cap {
            return Err(Error::BlowUp { t: grid.t(i), cap });
        }
        q = z;
        tube.push(q.max(values[i]));
    }
    Ok(AprioriBound {
        values,
        sup_norm,
        tube,
    })
}

/// Values of a function of time on the problem grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub values: Vec<Vec<f64>>,
    pub grid: TimeGrid,
}

impl GridFunction {
    pub fn new(values: Vec<Vec<f64>>, grid: TimeGrid) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite grid function value".into()));
        }
        Ok(Self { values, grid })
    }

    pub fn constant(value: &[f64], grid: TimeGrid) -> Self {
        Self {
            values: vec![value.to_vec(); grid.len()],
            grid,
        }
    }

    pub fn last(&self) -> &[f64] {
        self.values.last().expect("grid has nodes")
    }

    pub fn norms(&self) -> Vec<f64> {
        self.values.iter().map(|v| norm(v)).collect()
    }

    /// `sup_i ||self_i - other_i||`.
    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| dist(a, b))
            .fold(0.0, f64::max)
    }

    /// Trapezoid `L_p` norm of `t -> ||u(t)||`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let pow: Vec<f64> = self.norms().iter().map(|v| v.powf(p)).collect();
        self.grid.trapezoid(&pow).powf(1.0 / p)
    }

    /// `L_p` norm of the piecewise-constant difference quotients.
    pub fn derivative_lp_norm(&self, p: f64) -> f64 {
        let h = self.grid.h();
        let s: f64 = self
            .values
            .windows(2)
            .map(|w| (dist(&w[1], &w[0]) / h).powf(p) * h)
            .sum();
        s.powf(1.0 / p)
    }

    pub fn to_csv(&self) -> String {
        let d = self.values.first().map_or(0, Vec::len);
        let mut header = vec!["t".to_string()];
        header.extend((1..=d).map(|k| format!("u{k}")));
        let mut s = header.join(",");
        s.push('\n');
        for (i, v) in self.values.iter().enumerate() {
            let mut row = vec![fmt_f64(self.grid.t(i))];
            row.extend(v.iter().map(|x| fmt_f64(*x)));
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeConfig {
    pub bound_cap: f64,
    /// Relative slack on the tube check.
    pub tube_slack: f64,
    /// Relative slack on the L_p inequalities.
    pub lp_slack: f64,
    /// Consecutive growing residuals that count as divergence.
    pub divergence_window: usize,
    /// Residuals below this are round-off and never count as growth.
    pub residual_floor: f64,
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self {
            bound_cap: DEFAULT_BOUND_CAP,
            tube_slack: 1e-9,
            lp_slack: 1e-6,
            divergence_window: 5,
            residual_floor: 1e-12,
        }
    }
}

fn check_tube(u: &GridFunction, bound: &AprioriBound, slack: f64) -> Result<()> {
    for (i, v) in u.values.iter().enumerate() {
        let n = norm(v);
        let allowed = bound.tube[i] * (1.0 + slack) + slack;
        if n > allowed {
            return Err(Error::TubeViolation {
                t: u.grid.t(i),
                norm: n,
                allowed,
            });
        }
    }
    Ok(())
}

/// `F(u)(t_i) = u0 + trapezoid_0^{t_i} f(s, u(s)) ds`, with tube checks on
/// input and output.
pub fn apply_f(problem: &OdeProblem, u: &GridFunction, bound: &AprioriBound, config: &OdeConfig) -> Result<GridFunction> {
    if u.grid != problem.grid {
        return Err(Error::InvalidArgument("grid function lives on a different grid".into()));
    }
    for v in &u.values {
        check_dim(problem.dim(), v.len())?;
    }
    check_tube(u, bound, config.tube_slack)?;
    let out = integrate(problem, u)?;
    check_tube(&out, bound, config.tube_slack)?;
    Ok(out)
}

fn integrate(problem: &OdeProblem, u: &GridFunction) -> Result<GridFunction> {
    let grid = problem.grid;
    let half_h = 0.5 * grid.h();
    let rates: Vec<Vec<f64>> = u
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| problem.field(grid.t(i), v))
        .collect();
    for r in &rates {
        check_dim(problem.dim(), r.len())?;
    }
    let mut values = Vec::with_capacity(grid.len());
    let mut acc = problem.u0.clone();
    values.push(acc.clone());
    for i in 1..grid.len() {
        for k in 0..acc.len() {
            acc[k] += half_h * (rates[i - 1][k] + rates[i][k]);
        }
        values.push(acc.clone());
    }
    GridFunction::new(values, grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateResidual {
    pub k: usize,
    /// `sup_i |<a_j, u_k(t_i) - F(u_k)(t_i)>|` per functional.
    pub weak: Vec<f64>,
    /// `sup_i ||u_k(t_i) - F(u_k)(t_i)||`.
    pub uniform: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitingWeakSolution {
    pub u: GridFunction,
    /// `u_0, u_1, ..., u_K` with `u_{k+1} = F(u_k)`; `u` is `u_K`.
    pub iterates: Vec<GridFunction>,
    pub residuals: Vec<IterateResidual>,
    pub functional_labels: Vec<String>,
    pub bound: AprioriBound,
    /// `max_{k,i} (||u_k(t_i)|| - b(t_i)) / h`, clamped at zero.
    pub tube_excess: f64,
}

impl LimitingWeakSolution {
    pub fn weak_decay(&self, slack: f64, floor: f64) -> Vec<DecayReport> {
        (0..self.functional_labels.len())
            .map(|j| {
                let series: Vec<f64> = self.residuals.iter().map(|r| r.weak[j]).collect();
                decay_report(&series, slack, floor)
            })
            .collect()
    }

    /// `k, uniform, weak_<label>...`
    pub fn residuals_csv(&self) -> String {
        let mut header = vec!["k".to_string(), "uniform".into()];
        header.extend(self.functional_labels.iter().map(|l| format!("weak_{l}")));
        let mut s = header.join(",");
        s.push('\n');
        for r in &self.residuals {
            let mut row = vec![r.k.to_string(), fmt_f64(r.uniform)];
            row.extend(r.weak.iter().map(|v| fmt_f64(*v)));
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// Picard iteration from the constant function `u0`.
///
/// Runs `iterations` applications of `F` and records residuals for every
/// iterate including the returned one.
pub fn solve_limiting_weak(
    problem: &OdeProblem,
    iterations: usize,
    functionals: &[LinearFunctional],
    config: &OdeConfig,
) -> Result<LimitingWeakSolution> {
    if iterations == 0 {
        return Err(Error::InvalidArgument("at least one iterate is required".into()));
    }
    if functionals.is_empty() {
        return Err(Error::EmptyInput("functionals"));
    }
    for f in functionals {
        check_dim(problem.dim(), f.dim())?;
    }
    let rows: Vec<Vec<f64>> = functionals.iter().map(|f| f.coefficients().to_vec()).collect();
    if rank(&rows, 1e-12) < problem.dim() {
        return Err(Error::InvalidArgument(
            "functionals do not separate the state space".into(),
        ));
    }
    let bound = apriori_bound(problem, config.bound_cap)?;
    let h = problem.grid.h();

    let mut iterates = vec![GridFunction::constant(&problem.u0, problem.grid)];
    let mut residuals = Vec::with_capacity(iterations + 1);
    let mut growing = 0;
    let mut tube_excess: f64 = 0.0;
    for k in 0..=iterations {
        let u = &iterates[k];
        let fu = apply_f(problem, u, &bound, config)?;
        let mut weak = vec![0.0_f64; functionals.len()];
        let mut uniform: f64 = 0.0;
        for (a, b) in u.values.iter().zip(&fu.values) {
            let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            uniform = uniform.max(norm(&d));
            for (w, f) in weak.iter_mut().zip(functionals) {
                *w = w.max(f.apply(&d).abs());
            }
        }
        for (v, b) in u.norms().iter().zip(&bound.values) {
            tube_excess = tube_excess.max((v - b) / h);
        }
        if let Some(prev) = residuals.last().map(|r: &IterateResidual| r.uniform) {
            if uniform > prev && uniform > config.residual_floor {
                growing += 1;
                if growing >= config.divergence_window {
                    return Err(Error::Diverged { iterate: k });
                }
            } else {
                growing = 0;
            }
        }
        residuals.push(IterateResidual { k, weak, uniform });
        if k < iterations {
            iterates.push(fu);
        }
    }
    Ok(LimitingWeakSolution {
        u: iterates.last().expect("nonempty").clone(),
        iterates,
        residuals,
        functional_labels: functionals.iter().map(|f| f.label().to_string()).collect(),
        bound,
        tube_excess,
    })
}

/// The norms behind the three L_p estimates and their right-hand sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpReport {
    pub p: f64,
    pub f_u_lp: f64,
    pub u_lp: f64,
    pub dt_f_u_lp: f64,
    pub dt_u_lp: f64,
    pub alpha_l1: f64,
    pub alpha_lp: f64,
    /// `sup` of the tube actually used for `phi(||b||_inf)`.
    pub b_sup: f64,
    /// `||u0|| T^{1/p} + ||alpha||_{L1} phi(||b||_inf) T^{1/p}`
    pub value_bound: f64,
    /// `phi(||b||_inf) ||alpha||_{Lp}`
    pub derivative_bound: f64,
}

/// Checks
/// `||F(u)||_p, ||u||_p <= ||u0|| T^{1/p} + ||alpha||_1 phi(||b||_inf) T^{1/p}` and
/// `||d/dt F(u)||_p, ||d/dt u||_p <= phi(||b||_inf) ||alpha||_p`
/// for `u` in the tube.
pub fn verify_lp_estimates(problem: &OdeProblem, u: &GridFunction, bound: &AprioriBound, config: &OdeConfig) -> Result<LpReport> {
    let p = problem.p_exponent;
    let fu = apply_f(problem, u, bound, config)?;
    let grid = problem.grid;
    let alpha = problem.alpha_nodes();
    let alpha_l1 = grid.trapezoid(&alpha.iter().map(|a| a.abs()).collect::<Vec<_>>());
    let alpha_lp = grid
        .trapezoid(&alpha.iter().map(|a| a.abs().powf(p)).collect::<Vec<_>>())
        .powf(1.0 / p);
    let b_sup = bound.tube_sup();
    let phi_b = problem.phi(b_sup);
    let t_root = grid.horizon.powf(1.0 / p);
    let report = LpReport {
        p,
        f_u_lp: fu.lp_norm(p),
        u_lp: u.lp_norm(p),
        dt_f_u_lp: fu.derivative_lp_norm(p),
        dt_u_lp: u.derivative_lp_norm(p),
        alpha_l1,
        alpha_lp,
        b_sup,
        value_bound: norm(&problem.u0) * t_root + alpha_l1 * phi_b * t_root,
        derivative_bound: phi_b * alpha_lp,
    };
    let ok = |lhs: f64, rhs: f64| lhs <= rhs * (1.0 + config.lp_slack) + 1e-300;
    let checks = [
        ("||F(u)||_Lp", report.f_u_lp, report.value_bound),
        ("||u||_Lp", report.u_lp, report.value_bound),
        ("||dF(u)/dt||_Lp", report.dt_f_u_lp, report.derivative_bound),
        ("||du/dt||_Lp", report.dt_u_lp, report.derivative_bound),
    ];
    for (name, lhs, rhs) in checks {
        if !ok(lhs, rhs) {
            return Err(Error::EstimateViolated(format!("{name} = {lhs} > {rhs} (p = {p})")));
        }
    }
    Ok(report)
}
