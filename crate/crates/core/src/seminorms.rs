//! Admissible seminorms built from finite families of linear functionals.
//!
//! A family `a_1, ..., a_m` of functionals is turned into the gauge
//! `rho(x) = sum_n c_n |<a_n, x>|` where each weight is chosen so that
//! `c_n |<a_n, x>| <= 2^{-(n+1)}` on the body. The series bound then gives
//! `rho(x - y) <= 1` for every pair of body points.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dist, dot, rank};
use crate::sets::ConvexBody;

/// Default absolute tolerance for telling generators apart.
pub const DEFAULT_SEPARATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFunctional {
    coefficients: Vec<f64>,
    label: String,
}

impl LinearFunctional {
    pub fn new(coefficients: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::EmptyInput("functional coefficients"));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite functional coefficient".into()));
        }
        if coefficients.iter().all(|c| *c == 0.0) {
            return Err(Error::InvalidArgument("functional is identically zero".into()));
        }
        Ok(Self {
            coefficients,
            label: label.into(),
        })
    }

    /// The coordinate functional `x -> x[index]` on `R^dim`.
    pub fn coordinate(dim: usize, index: usize) -> Self {
        assert!(index < dim, "coordinate index out of range");
        let mut coefficients = vec![0.0; dim];
        coefficients[index] = 1.0;
        Self {
            coefficients,
            label: format!("e{}", index + 1),
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.coefficients.len()
    }

    #[inline]
    pub fn apply(&self, x: &[f64]) -> f64 {
        dot(&self.coefficients, x)
    }
}

/// Coordinate functionals followed by seeded Gaussian directions (unit
/// length) up to `count` entries. `count = 2 * dim` is the usual truncation.
pub fn standard_family(dim: usize, count: usize, seed: u64) -> Vec<LinearFunctional> {
    let mut out: Vec<LinearFunctional> = (0..dim.min(count))
        .map(|i| LinearFunctional::coordinate(dim, i))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < count {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = dot(&v, &v).sqrt();
        if n < 1e-6 {
            continue;
        }
        let label = format!("r{}", out.len() + 1);
        out.push(LinearFunctional {
            coefficients: v.iter().map(|c| c / n).collect(),
            label,
        });
    }
    out
}

/// `rho(x) = sum_n c_n |<a_n, x>|`. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleSeminorm {
    functionals: Vec<LinearFunctional>,
    weights: Vec<f64>,
    body_diameter_bound: f64,
}

/// Weight cap for the functional at zero-based position `index`: `2^{-(index+2)}`,
/// i.e. `2^{-(n+1)}` with one-based `n`.
pub fn weight_cap(index: usize) -> f64 {
    0.5_f64.powi(index as i32 + 2)
}

/// Builds the rescaled seminorm for `body` with the default separation tolerance.
pub fn build_admissible(
    functionals: &[LinearFunctional],
    body: &ConvexBody,
) -> Result<AdmissibleSeminorm> {
    build_admissible_with_tol(functionals, body, DEFAULT_SEPARATION_TOL)
}

pub fn build_admissible_with_tol(
    functionals: &[LinearFunctional],
    body: &ConvexBody,
    sep_tol: f64,
) -> Result<AdmissibleSeminorm> {
    if functionals.is_empty() {
        return Err(Error::EmptyInput("functionals"));
    }
    let gens = body.generators();
    if gens.is_empty() {
        return Err(Error::EmptyInput("body"));
    }
    for f in functionals {
        check_dim(body.dim(), f.dim())?;
    }

    // Pairwise separation of the generators.
    for i in 0..gens.len() {
        for j in (i + 1)..gens.len() {
            if dist(&gens[i], &gens[j]) <= sep_tol {
                continue;
            }
            let diff: Vec<f64> = gens[i].iter().zip(&gens[j]).map(|(a, b)| a - b).collect();
            let separated = functionals.iter().any(|f| f.apply(&diff).abs() > sep_tol);
            if !separated {
                return Err(Error::SeparationFailure { first: i, second: j });
            }
        }
    }

    // Separation on the whole hull: the functionals must be injective on the
    // direction space spanned by generator differences.
    let directions: Vec<Vec<f64>> = gens[1..]
        .iter()
        .map(|g| g.iter().zip(&gens[0]).map(|(a, b)| a - b).collect())
        .collect();
    let dir_rank = rank(&directions, 1e-12);
    if dir_rank > 0 {
        let images: Vec<Vec<f64>> = directions
            .iter()
            .map(|v| functionals.iter().map(|f| f.apply(v)).collect())
            .collect();
        let image_rank = rank(&images, 1e-12);
        if image_rank < dir_rank {
            return Err(Error::AdmissibilityFailure(format!(
                "functionals have rank {image_rank} on a hull of affine dimension {dir_rank}"
            )));
        }
    }

    let weights = functionals
        .iter()
        .enumerate()
        .map(|(n, f)| {
            let raw_max = gens.iter().map(|g| f.apply(g).abs()).fold(0.0, f64::max);
            if raw_max <= f64::MIN_POSITIVE {
                log::warn!(
                    "functional {} vanishes on every generator; using the bare cap 2^-{}",
                    f.label(),
                    n + 2
                );
                weight_cap(n)
            } else {
                weight_cap(n) / raw_max
            }
        })
        .collect();

    let mut rho = AdmissibleSeminorm {
        functionals: functionals.to_vec(),
        weights,
        body_diameter_bound: f64::INFINITY,
    };
    let mut diam: f64 = 0.0;
    for i in 0..gens.len() {
        for j in (i + 1)..gens.len() {
            diam = diam.max(rho.dist_unchecked(&gens[i], &gens[j]));
        }
    }
    rho.body_diameter_bound = diam;
    Ok(rho)
}

impl AdmissibleSeminorm {
    /// Seminorm with explicitly chosen weights, not tied to a body. The
    /// diameter bound is left at infinity.
    pub fn from_weights(functionals: Vec<LinearFunctional>, weights: Vec<f64>) -> Result<Self> {
        if functionals.is_empty() {
            return Err(Error::EmptyInput("functionals"));
        }
        if functionals.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} functionals but {} weights",
                functionals.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidArgument("weights must be positive and finite".into()));
        }
        let dim = functionals[0].dim();
        for f in &functionals {
            check_dim(dim, f.dim())?;
        }
        Ok(Self {
            functionals,
            weights,
            body_diameter_bound: f64::INFINITY,
        })
    }

    pub fn functionals(&self) -> &[LinearFunctional] {
        &self.functionals
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Upper bound of `rho` on `C - C` for the body used at construction.
    pub fn body_diameter_bound(&self) -> f64 {
        self.body_diameter_bound
    }

    pub fn dim(&self) -> usize {
        self.functionals[0].dim()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.eval_unchecked(x))
    }

    #[inline]
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.functionals
            .iter()
            .zip(&self.weights)
            .map(|(f, w)| w * f.apply(x).abs())
            .sum()
    }

    /// `rho(x - y)` without allocating.
    #[inline]
    pub fn dist_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        self.functionals
            .iter()
            .zip(&self.weights)
            .map(|(f, w)| {
                let s: f64 = f
                    .coefficients
                    .iter()
                    .zip(x.iter().zip(y))
                    .map(|(c, (a, b))| c * (a - b))
                    .sum();
                w * s.abs()
            })
            .sum()
    }

    pub fn dist(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.dim(), y.len())?;
        Ok(self.dist_unchecked(x, y))
    }

    /// Bound `rho(v) <= lipschitz_l_inf() * max_i |v_i|`.
    pub fn lipschitz_l_inf(&self) -> f64 {
        self.functionals
            .iter()
            .zip(&self.weights)
            .map(|(f, w)| w * f.coefficients.iter().map(|c| c.abs()).sum::<f64>())
            .sum()
    }

    /// Bound `rho(v) <= lipschitz_l2() * ||v||_2`.
    pub fn lipschitz_l2(&self) -> f64 {
        self.functionals
            .iter()
            .zip(&self.weights)
            .map(|(f, w)| w * dot(&f.coefficients, &f.coefficients).sqrt())
            .sum()
    }
}
