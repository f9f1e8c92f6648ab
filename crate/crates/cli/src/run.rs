use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use afp_core::afp::{extract_fixed_point, orbit_hull_chain, run_afp, AfpConfig, SelfMap};
use afp_core::audit::fmt_f64;
use afp_core::brouwer::BrouwerConfig;
use afp_core::ode::{
    apriori_bound, osgood_check, solve_limiting_weak, verify_lp_estimates, OdeConfig, TimeGrid,
};
use afp_core::registry::{build_map, build_problem};
use afp_core::seminorms::{build_admissible, standard_family, weight_cap, AdmissibleSeminorm, LinearFunctional};
use afp_core::sets::{ConvexBody, NetConfig};
use serde::Serialize;

use crate::config::{BodySpec, Kind, Scenario};
use crate::CliError;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Check preconditions and stop before any solve.
    pub audit_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Audit {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Audit {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RunReport {
    pub name: String,
    pub audits: Vec<Audit>,
    pub artifacts: Vec<PathBuf>,
    pub summary: Vec<String>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.audits.iter().all(|a| a.passed)
    }

    fn audit(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) -> bool {
        self.audits.push(Audit::new(name, passed, detail));
        passed
    }

    fn write(&mut self, dir: &Path, file: String, contents: &str) -> Result<(), CliError> {
        let path = dir.join(file);
        fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.artifacts.push(path);
        Ok(())
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario {}", self.name)?;
        for line in &self.summary {
            writeln!(f, "  {line}")?;
        }
        for a in &self.audits {
            let mark = if a.passed { "pass" } else { "FAIL" };
            writeln!(f, "  [{mark}] {}: {}", a.name, a.detail)?;
        }
        for p in &self.artifacts {
            writeln!(f, "  wrote {}", p.display())?;
        }
        write!(f, "  status: {}", if self.passed() { "ok" } else { "audit failure" })
    }
}

pub fn run_scenario(scenario: &Scenario, options: &RunOptions) -> Result<RunReport, CliError> {
    let mut report = RunReport {
        name: scenario.name().to_string(),
        ..RunReport::default()
    };
    if !options.audit_only {
        fs::create_dir_all(&options.out_dir)
            .map_err(|e| CliError::Io(format!("{}: {e}", options.out_dir.display())))?;
    }
    match scenario.kind {
        Kind::AfpMap => run_afp_map(scenario, options, &mut report)?,
        Kind::Ode => run_ode(scenario, options, &mut report)?,
        Kind::OrbitChain => run_orbit(scenario, options, &mut report)?,
    }
    Ok(report)
}

fn body(s: &Scenario) -> Result<ConvexBody, CliError> {
    let spec = s.body.as_ref().expect("validated");
    let built = match spec {
        BodySpec::Cube { dim, radius } => {
            if *dim == 0 || !(radius.is_finite() && *radius > 0.0) {
                return Err(s.invalid("cube", "cube needs dim >= 1 and a positive radius"));
            }
            Ok(ConvexBody::cube(*dim, *radius))
        }
        BodySpec::Box { lo, hi } => ConvexBody::axis_box(lo, hi),
        BodySpec::Segment { a, b } => Ok(ConvexBody::segment(*a, *b)),
        BodySpec::Generators { points } => ConvexBody::new(points.clone()),
    };
    built.map_err(|e| s.invalid("body", e.to_string()))
}

fn explicit_functionals(
    rows: &[Vec<f64>],
    labels: Option<&[String]>,
    dim: usize,
    s: &Scenario,
) -> Result<Vec<LinearFunctional>, CliError> {
    if let Some(labels) = labels {
        if labels.len() != rows.len() {
            return Err(s.invalid("labels", format!("{} labels for {} functionals", labels.len(), rows.len())));
        }
    }
    rows.iter()
        .enumerate()
        .map(|(k, row)| {
            if row.len() != dim {
                return Err(s.invalid("functionals", format!("functional {} needs {dim} entries", k + 1)));
            }
            let label = labels.map_or_else(|| format!("a{}", k + 1), |l| l[k].clone());
            LinearFunctional::new(row.clone(), label)
                .map_err(|e| s.invalid("functionals", e.to_string()))
        })
        .collect()
}

fn map(s: &Scenario, body: &ConvexBody) -> Result<SelfMap, CliError> {
    let spec = s.map.as_ref().expect("validated");
    let f = build_map(&spec.name, &spec.params, body).map_err(|e| s.invalid("name", e.to_string()))?;
    Ok(match spec.iterate_power {
        Some(m) => f.with_iterate_power(m),
        None => f,
    })
}

fn seminorm_audits(rho: &AdmissibleSeminorm, body: &ConvexBody, report: &mut RunReport) {
    let worst = rho
        .functionals()
        .iter()
        .zip(rho.weights())
        .enumerate()
        .map(|(n, (a, c))| {
            let peak = body.generators().iter().map(|g| a.apply(g).abs()).fold(0.0, f64::max);
            c * peak / weight_cap(n)
        })
        .fold(0.0, f64::max);
    report.audit(
        "seminorm rescaling",
        worst <= 1.0 + 1e-12,
        format!("max c_n sup|a_n(g)| / 2^-(n+1) = {worst:.6}"),
    );
    let diameter = rho.body_diameter_bound();
    report.audit(
        "seminorm body diameter",
        diameter <= 1.0 + 1e-12,
        format!("max rho(g - h) over generators = {diameter:.6}"),
    );
}

fn run_afp_map(s: &Scenario, options: &RunOptions, report: &mut RunReport) -> Result<(), CliError> {
    let body = body(s)?;
    let dim = body.dim();
    let functionals = match &s.seminorm.functionals {
        Some(rows) => explicit_functionals(rows, s.seminorm.labels.as_deref(), dim, s)?,
        None => standard_family(dim, s.seminorm.count.unwrap_or(2 * dim), s.seed),
    };
    let rho = build_admissible(&functionals, &body).map_err(CliError::module("seminorm"))?;
    seminorm_audits(&rho, &body, report);
    let f = map(s, &body)?;
    let a = &s.afp;
    match f.audit(&body, a.audit_samples, s.seed, 1e-6) {
        Ok(r) => report.audit("self-map", true, format!("max re-fit residual {r:.3e}")),
        Err(e) => report.audit("self-map", false, e.to_string()),
    };
    if options.audit_only || !report.passed() {
        return Ok(());
    }

    let config = AfpConfig {
        net: NetConfig {
            margin: a.margin,
            max_points: a.max_net_points,
            check_membership: false,
            symmetric: true,
        },
        brouwer: BrouwerConfig::default(),
        tol: a.tol,
        dispersion_fraction: a.dispersion_fraction,
        max_grid_points: a.max_grid_points,
        audit_samples: a.audit_samples,
        seed: s.seed,
    };
    let trace = run_afp(&body, &rho, &f, &a.levels, &config).map_err(CliError::module("afp"))?;
    for l in &trace.levels {
        report.summary.push(format!(
            "n = {:>3}  net {:>5}  rho residual {:.3e} (< {:.3e})  u_n = {:?}",
            l.n,
            l.net_size,
            l.rho_residual,
            l.epsilon,
            l.u_n.iter().map(|v| (v * 1e6).round() / 1e6).collect::<Vec<_>>()
        ));
    }
    match &trace.failure {
        Some(fail) => report.audit("levels", false, format!("level {} failed: {}", fail.n, fail.error)),
        None => report.audit("levels", true, format!("{} levels solved", trace.levels.len())),
    };
    let bad = trace.contract_violations();
    report.audit("residual contract", bad.is_empty(), format!("levels violating rho < 1/n + tol: {bad:?}"));
    let outside = trace.body_violations(1e-8);
    report.audit("trace in body", outside.is_empty(), format!("levels outside: {outside:?}"));
    for (label, d) in trace.functional_labels.iter().zip(trace.weak_decay(a.decay_slack, a.residual_floor)) {
        report.audit(
            format!("weak decay {label}"),
            d.passed(),
            format!("last <= first: {}, jumps at levels {:?}", d.last_le_first, d.jumps),
        );
    }
    if let Some(tol) = a.extract_tol {
        match extract_fixed_point(&trace, &f, tol) {
            Ok(p) => {
                report.audit("fixed point extraction", true, format!("p = {p:?}"));
            }
            Err(e) => {
                report.audit("fixed point extraction", false, e.to_string());
            }
        }
    }
    let name = s.name();
    report.write(&options.out_dir, format!("{name}.csv"), &trace.to_csv())?;
    report.write(&options.out_dir, format!("{name}.json"), &trace.to_json())?;
    Ok(())
}

fn run_ode(s: &Scenario, options: &RunOptions, report: &mut RunReport) -> Result<(), CliError> {
    let o = s.ode.as_ref().expect("validated");
    let grid = TimeGrid::with_step(o.horizon, o.step.unwrap_or(o.horizon * 1e-3))
        .map_err(|e| s.invalid("step", e.to_string()))?;
    let problem = build_problem(&o.field, &o.params, o.u0.clone(), grid)
        .map_err(|e| s.invalid("field", e.to_string()))?;
    let dim = problem.dim();
    let functionals = match &o.functionals {
        Some(rows) => explicit_functionals(rows, o.labels.as_deref(), dim, s)?,
        None => (0..dim).map(|i| LinearFunctional::coordinate(dim, i)).collect(),
    };
    let config = OdeConfig {
        bound_cap: o.bound_cap,
        residual_floor: o.residual_floor,
        ..OdeConfig::default()
    };

    let osgood = osgood_check(&problem, o.osgood_cap);
    let detail = format!(
        "int alpha = {:.6}, int 1/phi = {}",
        osgood.alpha_integral,
        osgood.phi_integral.map_or("divergent".to_string(), |v| format!("{v:.6}"))
    );
    if o.osgood_override {
        report.audit("osgood condition", true, format!("{detail} (override)"));
    } else {
        report.audit("osgood condition", osgood.satisfied, detail);
    }
    let bound = match apriori_bound(&problem, o.bound_cap) {
        Ok(b) => {
            report.audit("a priori bound", true, format!("sup b = {:.6}", b.sup_norm));
            b
        }
        Err(e) => {
            report.audit("a priori bound", false, e.to_string());
            return Ok(());
        }
    };
    match problem.audit_growth(&bound, 100, 20, s.seed) {
        Ok(()) => report.audit("growth condition", true, "100 nodes x 20 tube samples"),
        Err(e) => report.audit("growth condition", false, e.to_string()),
    };
    if options.audit_only || !report.passed() {
        return Ok(());
    }

    let solution = match solve_limiting_weak(&problem, o.iterations, &functionals, &config) {
        Ok(sol) => sol,
        Err(e) => {
            report.audit("picard iteration", false, e.to_string());
            return Ok(());
        }
    };
    report.audit(
        "tube invariance",
        true,
        format!("max (|u_k| - b) / h = {:.3e}", solution.tube_excess.max(0.0)),
    );
    let mut lp_reports = Vec::new();
    for &p in &o.p {
        let pb = problem.clone().with_p(p).map_err(|e| s.invalid("p", e.to_string()))?;
        let mut failure = None;
        for (k, u) in solution.iterates.iter().enumerate() {
            match verify_lp_estimates(&pb, u, &solution.bound, &config) {
                Ok(r) => lp_reports.push((k, r)),
                Err(e) => {
                    failure = Some(format!("iterate {k}: {e}"));
                    break;
                }
            }
        }
        let detail = failure.clone().unwrap_or(format!("{} iterates", solution.iterates.len()));
        report.audit(format!("L_p estimates p = {p}"), failure.is_none(), detail);
    }
    for (label, d) in solution
        .functional_labels
        .iter()
        .zip(solution.weak_decay(o.decay_slack, o.residual_floor))
    {
        report.audit(
            format!("weak decay {label}"),
            d.passed(),
            format!("last <= first: {}, jumps at iterates {:?}", d.last_le_first, d.jumps),
        );
    }
    let end = solution.u.last();
    report.summary.push(format!("u(T) = [{}]", end.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(", ")));
    if let Some(r) = solution.residuals.last() {
        report.summary.push(format!("final uniform residual {:.3e}", r.uniform));
    }

    #[derive(Serialize)]
    struct OdeArtifact<'a> {
        field: &'a str,
        u0: &'a [f64],
        horizon: f64,
        steps: usize,
        bound: &'a afp_core::ode::AprioriBound,
        osgood: afp_core::ode::OsgoodCheck,
        residuals: &'a [afp_core::ode::IterateResidual],
        functional_labels: &'a [String],
        tube_excess: f64,
        lp: Vec<(usize, afp_core::ode::LpReport)>,
    }
    let artifact = OdeArtifact {
        field: &o.field,
        u0: &o.u0,
        horizon: grid.horizon,
        steps: grid.steps,
        bound: &solution.bound,
        osgood,
        residuals: &solution.residuals,
        functional_labels: &solution.functional_labels,
        tube_excess: solution.tube_excess,
        lp: lp_reports,
    };
    let name = s.name();
    report.write(&options.out_dir, format!("{name}_solution.csv"), &solution.u.to_csv())?;
    report.write(&options.out_dir, format!("{name}_residuals.csv"), &solution.residuals_csv())?;
    let json = serde_json::to_string_pretty(&artifact).expect("artifact serializes");
    report.write(&options.out_dir, format!("{name}.json"), &json)?;
    Ok(())
}

fn run_orbit(s: &Scenario, options: &RunOptions, report: &mut RunReport) -> Result<(), CliError> {
    let body = body(s)?;
    let f = map(s, &body)?;
    let o = s.orbit.as_ref().expect("validated");
    if o.start.len() != body.dim() {
        return Err(s.invalid("start", format!("start needs {} entries", body.dim())));
    }
    match f.audit(&body, s.afp.audit_samples, s.seed, 1e-6) {
        Ok(r) => report.audit("self-map", true, format!("max re-fit residual {r:.3e}")),
        Err(e) => report.audit("self-map", false, e.to_string()),
    };
    if options.audit_only {
        return Ok(());
    }
    let chain = orbit_hull_chain(&f, &o.start, o.depth, o.samples, s.seed).map_err(CliError::module("orbit"))?;
    report.audit("hull inclusion", chain.inclusion_verified, "images of each sample are generators of the next hull");
    let mut csv = String::from("k,size,diameter\n");
    for (k, (size, d)) in chain.sizes().iter().zip(chain.diameters()).enumerate() {
        csv.push_str(&format!("{k},{size},{}\n", fmt_f64(d)));
        report.summary.push(format!("A_{k}: {size} generators, diameter {d:.6}"));
    }
    let name = s.name();
    report.write(&options.out_dir, format!("{name}.csv"), &csv)?;
    let json = serde_json::to_string_pretty(&chain).expect("chain serializes");
    report.write(&options.out_dir, format!("{name}.json"), &json)?;
    Ok(())
}
