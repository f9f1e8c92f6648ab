//! Finite-dimensional fixed point solver for continuous self-maps of a
//! convex hull, plus a brute-force grid oracle used for cross-checking.
//!
//! Points are handled in ambient coordinates and every map output is re-fit
//! barycentrically over the hull generators, so iterates stay convex
//! combinations of the generators. The minimization stage parameterizes the
//! hull by softmax barycentric weights.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, combine, dist, lerp};
use crate::sets::ConvexBody;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    DampedIteration,
    MultistartMinimization,
    GridOracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointResult {
    pub point: Vec<f64>,
    /// Euclidean `||map(z) - z||`, re-evaluated at `point`.
    pub residual_norm: f64,
    pub iterations: usize,
    pub method: SolverMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrouwerConfig {
    pub tol: f64,
    /// Cap on map evaluations across all stages.
    pub budget: usize,
    pub starts: usize,
    pub seed: u64,
    /// Allowed barycentric re-fit residual of a map output.
    pub hull_tol: f64,
}

impl Default for BrouwerConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            budget: 20_000,
            starts: 8,
            seed: 0,
            hull_tol: 1e-6,
        }
    }
}

/// `min(1e-8, epsilon / 100)`.
pub fn default_tol(epsilon: f64) -> f64 {
    (epsilon / 100.0).min(1e-8)
}

struct Evaluator<'a, F> {
    map: &'a F,
    hull: &'a ConvexBody,
    hull_tol: f64,
    box_bounds: Option<(Vec<f64>, Vec<f64>)>,
}

impl<'a, F> Evaluator<'a, F>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    fn new(map: &'a F, hull: &'a ConvexBody, hull_tol: f64) -> Self {
        let box_bounds = hull.is_box().then(|| hull.bounding_box());
        Self {
            map,
            hull,
            hull_tol,
            box_bounds,
        }
    }

    /// Map output snapped onto the hull.
    fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let y = (self.map)(x)?;
        check_dim(self.hull.dim(), y.len())?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::MapLeavesHull {
                residual: f64::INFINITY,
            });
        }
        if let Some((lo, hi)) = &self.box_bounds {
            let clamped: Vec<f64> = y
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| v.clamp(*l, *h))
                .collect();
            let residual = dist(&clamped, &y);
            if residual >= self.hull_tol {
                return Err(Error::MapLeavesHull { residual });
            }
            return Ok(clamped);
        }
        let fit = linalg::barycentric_fit(self.hull.generators(), &y);
        if fit.residual >= self.hull_tol {
            return Err(Error::MapLeavesHull {
                residual: fit.residual,
            });
        }
        if fit.residual == 0.0 {
            Ok(y)
        } else {
            Ok(combine(&fit.weights, self.hull.generators()))
        }
    }

    fn residual(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        let y = self.eval(x)?;
        let r = dist(&y, x);
        Ok((y, r))
    }
}

struct StageOutcome {
    point: Vec<f64>,
    residual: f64,
    evals: usize,
}

/// Solves `map(z) = z` on the hull.
///
/// Damped iteration `z <- (1 - lambda) z + lambda map(z)` with lambda halved
/// until the residual drops runs first; if it stalls, Nelder-Mead minimizes
/// `||map(z) - z||^2` from several starts and the best run is polished by
/// damped iteration again.
pub fn solve_fixed_point<F>(map: F, hull: &ConvexBody, config: &BrouwerConfig) -> Result<FixedPointResult>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    if !(config.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {}", config.tol)));
    }
    let ev = Evaluator::new(&map, hull, config.hull_tol);
    let starts = start_weights(hull, config.starts.max(1), config.seed);

    let first = combine(&starts[0], hull.generators());
    let damped_budget = (config.budget / 4).max(1);
    let stage = damped(&ev, first, config.tol, damped_budget)?;
    let mut used = stage.evals;
    if stage.residual <= config.tol {
        return certify(&ev, stage.point, used, SolverMethod::DampedIteration);
    }
    let mut best = (stage.point, stage.residual);

    let per_start = config.budget.saturating_sub(used) / (2 * starts.len()).max(1);
    let runs: Vec<Result<StageOutcome>> = run_starts(&starts, |w| {
        let nm = minimize_from(&ev, w, config.tol, per_start)?;
        let polished = damped(&ev, nm.point, config.tol, per_start)?;
        Ok(StageOutcome {
            point: polished.point,
            residual: polished.residual,
            evals: nm.evals + polished.evals,
        })
    });
    // Ordered reduction: lowest residual, then lowest start index.
    for run in runs {
        let run = run?;
        used += run.evals;
        if run.residual < best.1 {
            best = (run.point, run.residual);
        }
    }
    if best.1 <= config.tol {
        return certify(&ev, best.0, used, SolverMethod::MultistartMinimization);
    }
    Err(Error::NotConverged {
        best_residual: best.1,
        best_point: best.0,
    })
}

#[cfg(feature = "parallel")]
fn run_starts<T: Send>(starts: &[Vec<f64>], f: impl Fn(&[f64]) -> T + Sync) -> Vec<T> {
    use rayon::prelude::*;
    starts.par_iter().map(|w| f(w)).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_starts<T>(starts: &[Vec<f64>], f: impl Fn(&[f64]) -> T) -> Vec<T> {
    starts.iter().map(|w| f(w)).collect()
}

fn certify<F>(ev: &Evaluator<'_, F>, point: Vec<f64>, evals: usize, method: SolverMethod) -> Result<FixedPointResult>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    // Independent re-evaluation, no reuse of solver state.
    let image = (ev.map)(&point)?;
    let residual_norm = dist(&image, &point);
    Ok(FixedPointResult {
        point,
        residual_norm,
        iterations: evals.saturating_sub(1),
        method,
    })
}

/// Barycentric start weights: centroid, generators, then Dirichlet samples.
fn start_weights(hull: &ConvexBody, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = hull.generators().len();
    let mut out = vec![vec![1.0 / n as f64; n]];
    for i in 0..n {
        if out.len() >= count {
            break;
        }
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        out.push(w);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < count {
        let raw: Vec<f64> = (0..n).map(|_| Exp1.sample(&mut rng)).collect();
        let total: f64 = raw.iter().sum();
        out.push(raw.iter().map(|r| r / total).collect());
    }
    out
}

fn damped<F>(ev: &Evaluator<'_, F>, start: Vec<f64>, tol: f64, budget: usize) -> Result<StageOutcome>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    const LAMBDA_MIN: f64 = 1e-10;
    let mut x = start;
    let (mut fx, mut r) = ev.residual(&x)?;
    let mut evals = 1;
    let mut lambda: f64 = 1.0;
    while r > tol && evals < budget {
        let mut accepted = false;
        while lambda >= LAMBDA_MIN && evals < budget {
            let cand = lerp(&x, &fx, lambda);
            let (fc, rc) = ev.residual(&cand)?;
            evals += 1;
            if rc < r {
                x = cand;
                fx = fc;
                r = rc;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
        lambda = (lambda * 2.0).min(1.0);
    }
    Ok(StageOutcome {
        point: x,
        residual: r,
        evals,
    })
}

fn softmax_point(y: &[f64], generators: &[Vec<f64>]) -> Vec<f64> {
    let m = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = y.iter().map(|v| (v - m).exp()).collect();
    let total: f64 = e.iter().sum();
    let w: Vec<f64> = e.iter().map(|v| v / total).collect();
    combine(&w, generators)
}

fn minimize_from<F>(ev: &Evaluator<'_, F>, weights: &[f64], tol: f64, budget: usize) -> Result<StageOutcome>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let gens = ev.hull.generators();
    let y0: Vec<f64> = weights.iter().map(|w| w.max(1e-4).ln()).collect();
    let objective = |y: &[f64]| -> Result<f64> {
        let x = softmax_point(y, gens);
        let (_, r) = ev.residual(&x)?;
        Ok(r * r)
    };
    let (y, fy, evals) = nelder_mead(objective, y0, tol * tol, budget)?;
    Ok(StageOutcome {
        point: softmax_point(&y, gens),
        residual: fy.sqrt(),
        evals,
    })
}

/// Plain Nelder-Mead with restarts around the incumbent.
fn nelder_mead(
    f: impl Fn(&[f64]) -> Result<f64>,
    x0: Vec<f64>,
    target: f64,
    budget: usize,
) -> Result<(Vec<f64>, f64, usize)> {
    let n = x0.len();
    let mut evals = 0;
    let mut best_x = x0.clone();
    let mut best_f = f(&x0)?;
    evals += 1;
    let mut step = 1.0;

    while evals < budget && best_f > target && step > 1e-12 {
        let mut simplex: Vec<(Vec<f64>, f64)> = vec![(best_x.clone(), best_f)];
        for i in 0..n {
            let mut x = best_x.clone();
            x[i] += step;
            let fx = f(&x)?;
            evals += 1;
            simplex.push((x, fx));
        }
        let start_f = best_f;
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let spread = simplex[n].1 - simplex[0].1;
            if simplex[0].1 <= target || evals >= budget || spread <= 1e-30 + 1e-14 * simplex[0].1.abs() {
                break;
            }
            let centroid: Vec<f64> = (0..n)
                .map(|k| simplex[..n].iter().map(|(x, _)| x[k]).sum::<f64>() / n as f64)
                .collect();
            let worst = simplex[n].clone();
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&worst.0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };
            let xr = along(1.0);
            let fr = f(&xr)?;
            evals += 1;
            if fr < simplex[0].1 {
                let xe = along(2.0);
                let fe = f(&xe)?;
                evals += 1;
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else {
                let (xc, fc) = if fr < worst.1 {
                    let xc = along(0.5);
                    let fc = f(&xc)?;
                    (xc, fc)
                } else {
                    let xc = along(-0.5);
                    let fc = f(&xc)?;
                    (xc, fc)
                };
                evals += 1;
                if fc < worst.1.min(fr) {
                    simplex[n] = (xc, fc);
                } else {
                    let x_best = simplex[0].0.clone();
                    for item in simplex.iter_mut().skip(1) {
                        let xs: Vec<f64> = x_best.iter().zip(&item.0).map(|(b, x)| b + 0.5 * (x - b)).collect();
                        let fs = f(&xs)?;
                        evals += 1;
                        *item = (xs, fs);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 < best_f {
            best_x = simplex[0].0.clone();
            best_f = simplex[0].1;
        }
        // Restart with a smaller simplex if the last run made little progress.
        if best_f > 0.5 * start_f {
            step *= 0.1;
        }
    }
    Ok((best_x, best_f, evals))
}

/// Brute-force minimizer of `||map(z) - z||` over a grid of hull points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOracleResult {
    pub point: Vec<f64>,
    pub residual: f64,
    /// Every hull point lies within this Euclidean distance of a grid point.
    pub spacing: f64,
    pub evaluations: usize,
}

impl GridOracleResult {
    pub fn into_fixed_point(self) -> FixedPointResult {
        FixedPointResult {
            point: self.point,
            residual_norm: self.residual,
            iterations: self.evaluations,
            method: SolverMethod::GridOracle,
        }
    }
}

/// Hulls with at most four generators are gridded barycentrically
/// (`w = k / resolution`); larger hulls of affine dimension at most three use
/// a membership-filtered lattice with `resolution` cells across the widest
/// extent. Ties go to the first grid point.
pub fn grid_oracle<F>(map: F, hull: &ConvexBody, resolution: usize) -> Result<GridOracleResult>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let k = hull.affine_dim();
    if k > 3 {
        return Err(Error::DimensionTooHigh { dim: k });
    }
    let resolution = resolution.max(1);
    let gens = hull.generators();
    let (points, spacing): (Vec<Vec<f64>>, f64) = if gens.len() <= 4 {
        let mut edge: f64 = 0.0;
        for i in 0..gens.len() {
            for j in (i + 1)..gens.len() {
                edge = edge.max(dist(&gens[i], &gens[j]));
            }
        }
        let pts = compositions(resolution, gens.len())
            .map(|c| {
                let w: Vec<f64> = c.iter().map(|v| *v as f64 / resolution as f64).collect();
                combine(&w, gens)
            })
            .collect();
        (pts, edge / resolution as f64)
    } else {
        let (lo, hi) = hull.bounding_box();
        let extent = lo.iter().zip(&hi).map(|(l, h)| h - l).fold(0.0, f64::max);
        let h = extent / resolution as f64;
        let pts = hull.lattice(h, 50_000_000)?;
        (pts, h * (k.max(1) as f64).sqrt())
    };

    let mut best: Option<(usize, f64)> = None;
    for (i, z) in points.iter().enumerate() {
        let r = dist(&map(z)?, z);
        if best.is_none_or(|(_, b)| r < b) {
            best = Some((i, r));
        }
    }
    let (i, residual) = best.expect("grid is nonempty");
    Ok(GridOracleResult {
        point: points[i].clone(),
        residual,
        spacing,
        evaluations: points.len(),
    })
}

/// All `parts`-tuples of nonnegative integers summing to `total`, first
/// component descending.
fn compositions(total: usize, parts: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut current = vec![0usize; parts];
    current[0] = total;
    let mut done = parts == 0;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let out = current.clone();
        // Advance: move one unit from the rightmost nonzero non-last slot.
        let last = parts - 1;
        let pivot = (0..last).rev().find(|&i| current[i] > 0);
        match pivot {
            None => done = true,
            Some(i) => {
                let tail = current[last];
                current[last] = 0;
                current[i] -= 1;
                current[i + 1] = tail + 1;
            }
        }
        Some(out)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> ConvexBody {
        ConvexBody::cube(2, 1.0)
    }

    fn rotate(x: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![-x[1], x[0]])
    }

    #[test]
    fn compositions_enumerate_simplex_lattice() {
        let all: Vec<_> = compositions(2, 3).collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], vec![2, 0, 0]);
        assert!(all.iter().all(|c| c.iter().sum::<usize>() == 2));
        let mut sorted = all.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 6);
        assert_eq!(compositions(50, 4).count(), 23426);
    }

    #[test]
    fn identity_returns_start_immediately() {
        let res = solve_fixed_point(|x: &[f64]| Ok(x.to_vec()), &square(), &BrouwerConfig::default()).unwrap();
        assert_eq!(res.point, square().centroid());
        assert_eq!(res.residual_norm, 0.0);
        assert_eq!(res.iterations, 0);
    }

    #[test]
    fn constant_map_one_step() {
        let res = solve_fixed_point(|_: &[f64]| Ok(vec![0.3, -0.4]), &square(), &BrouwerConfig::default()).unwrap();
        assert_eq!(res.point, vec![0.3, -0.4]);
        assert_eq!(res.residual_norm, 0.0);
        assert_eq!(res.iterations, 1);
    }

    #[test]
    fn rotation_center() {
        let cfg = BrouwerConfig::default();
        let res = solve_fixed_point(rotate, &square(), &cfg).unwrap();
        assert!(res.residual_norm <= cfg.tol);
        assert!(linalg::norm(&res.point) < 1e-8);
    }

    #[test]
    fn leaving_the_hull_is_reported() {
        let err = solve_fixed_point(|x: &[f64]| Ok(vec![x[0] + 2.0, x[1]]), &square(), &BrouwerConfig::default())
            .unwrap_err();
        assert!(matches!(err, Error::MapLeavesHull { .. }));
    }

    #[test]
    fn oracle_identity_first_point() {
        let res = grid_oracle(|x: &[f64]| Ok(x.to_vec()), &square(), 10).unwrap();
        assert_eq!(res.point, square().generators()[0]);
        assert_eq!(res.residual, 0.0);
    }

    #[test]
    fn oracle_contraction_on_segment() {
        let seg = ConvexBody::segment(-1.0, 1.0);
        let res = grid_oracle(|x: &[f64]| Ok(vec![x[0] / 2.0]), &seg, 50).unwrap();
        assert!(res.point[0].abs() < 1e-12);
    }

    #[test]
    fn oracle_rotation_near_center() {
        let res = grid_oracle(rotate, &square(), 50).unwrap();
        assert!(linalg::norm(&res.point) <= 2.0 / 50.0 * square().diameter());
    }

    #[test]
    fn oracle_rejects_four_dimensional_hull() {
        let err = grid_oracle(|x: &[f64]| Ok(x.to_vec()), &ConvexBody::cube(4, 1.0), 4).unwrap_err();
        assert_eq!(err, Error::DimensionTooHigh { dim: 4 });
    }
}
