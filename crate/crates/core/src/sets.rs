//! Compact convex bodies in V-representation and rho-ball epsilon-nets.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, barycentric_fit, combine, BarycentricFit};
use crate::seminorms::AdmissibleSeminorm;

/// Residual tolerance for hull membership.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

/// Convex hull of finitely many generators in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexBody {
    generators: Vec<Vec<f64>>,
    dim: usize,
    #[serde(skip)]
    is_box: bool,
}

impl ConvexBody {
    pub fn new(generators: Vec<Vec<f64>>) -> Result<Self> {
        let first = generators.first().ok_or(Error::EmptyInput("body generators"))?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::EmptyInput("generator coordinates"));
        }
        for g in &generators {
            check_dim(dim, g.len())?;
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("non-finite generator".into()));
            }
        }
        let is_box = detect_box(&generators, dim);
        Ok(Self {
            generators,
            dim,
            is_box,
        })
    }

    /// `[-radius, radius]^dim`, corners in binary order.
    pub fn cube(dim: usize, radius: f64) -> Self {
        let generators = (0..1usize << dim)
            .map(|mask| {
                (0..dim)
                    .map(|k| if mask >> k & 1 == 1 { radius } else { -radius })
                    .collect()
            })
            .collect();
        Self::new(generators).expect("cube generators are valid")
    }

    /// Axis-aligned box `[lo_k, hi_k]`.
    pub fn axis_box(lo: &[f64], hi: &[f64]) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        let dim = lo.len();
        let generators = (0..1usize << dim)
            .map(|mask| {
                (0..dim)
                    .map(|k| if mask >> k & 1 == 1 { hi[k] } else { lo[k] })
                    .collect()
            })
            .collect();
        Self::new(generators)
    }

    pub fn segment(a: f64, b: f64) -> Self {
        Self::new(vec![vec![a], vec![b]]).expect("segment generators are valid")
    }

    pub fn point(p: Vec<f64>) -> Result<Self> {
        Self::new(vec![p])
    }

    pub fn generators(&self) -> &[Vec<f64>] {
        &self.generators
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// True when the generators are exactly the corners of an axis-aligned box.
    pub fn is_box(&self) -> bool {
        self.is_box
    }

    pub fn centroid(&self) -> Vec<f64> {
        let w = vec![1.0 / self.generators.len() as f64; self.generators.len()];
        combine(&w, &self.generators)
    }

    /// Center `c` with `2c - g` again a generator for every generator `g`,
    /// if the generator set has one.
    pub fn center_of_symmetry(&self) -> Option<Vec<f64>> {
        let (lo, hi) = self.bounding_box();
        let c: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect();
        let tol = 1e-12 * self.diameter().max(1.0);
        let symmetric = self.generators.iter().all(|g| {
            let m: Vec<f64> = g.iter().zip(&c).map(|(x, c)| 2.0 * c - x).collect();
            self.generators.iter().any(|h| linalg::dist(h, &m) <= tol)
        });
        symmetric.then_some(c)
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = self.generators[0].clone();
        let mut hi = self.generators[0].clone();
        for g in &self.generators[1..] {
            for k in 0..self.dim {
                lo[k] = lo[k].min(g[k]);
                hi[k] = hi[k].max(g[k]);
            }
        }
        (lo, hi)
    }

    /// Dimension of the affine hull.
    pub fn affine_dim(&self) -> usize {
        linalg::rank(&self.directions(), 1e-12)
    }

    fn directions(&self) -> Vec<Vec<f64>> {
        self.generators[1..]
            .iter()
            .map(|g| linalg::sub(g, &self.generators[0]))
            .collect()
    }

    /// Euclidean diameter (attained on generator pairs).
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.generators.len() {
            for j in (i + 1)..self.generators.len() {
                d = d.max(linalg::dist(&self.generators[i], &self.generators[j]));
            }
        }
        d
    }

    pub fn barycentric(&self, x: &[f64]) -> Result<BarycentricFit> {
        check_dim(self.dim, x.len())?;
        Ok(barycentric_fit(&self.generators, x))
    }

    /// Hull membership within [`MEMBERSHIP_TOL`].
    pub fn contains(&self, x: &[f64]) -> bool {
        self.contains_within(x, MEMBERSHIP_TOL)
    }

    pub fn contains_within(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim {
            return false;
        }
        let (lo, hi) = self.bounding_box();
        let in_box = x
            .iter()
            .zip(lo.iter().zip(&hi))
            .all(|(v, (l, h))| *v >= l - tol && *v <= h + tol);
        if !in_box {
            return false;
        }
        if self.is_box {
            return true;
        }
        barycentric_fit(&self.generators, x).residual <= tol
    }

    /// Random convex combinations with Dirichlet(1, ..., 1) weights.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.generators.len();
        (0..count)
            .map(|_| {
                if n == 1 {
                    return self.generators[0].clone();
                }
                let raw: Vec<f64> = (0..n).map(|_| Exp1.sample(&mut rng)).collect();
                let total: f64 = raw.iter().sum();
                let w: Vec<f64> = raw.iter().map(|r| r / total).collect();
                combine(&w, &self.generators)
            })
            .collect()
    }

    /// Regular lattice of body points with axis spacing `spacing`, plus the
    /// generators themselves. Full-dimensional bodies use the coordinate
    /// axes; flat bodies use an orthonormal basis of their affine hull.
    pub fn lattice(&self, spacing: f64, max_points: usize) -> Result<Vec<Vec<f64>>> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidArgument(format!("lattice spacing {spacing}")));
        }
        let k = self.affine_dim();
        if k == 0 {
            return Ok(vec![self.generators[0].clone()]);
        }
        let origin = self.generators[0].clone();
        let basis: Vec<Vec<f64>> = if k == self.dim {
            (0..self.dim)
                .map(|i| {
                    let mut e = vec![0.0; self.dim];
                    e[i] = 1.0;
                    e
                })
                .collect()
        } else {
            linalg::orthonormal_basis(&self.directions(), 1e-12)
        };
        let coords: Vec<Vec<f64>> = self
            .generators
            .iter()
            .map(|g| {
                let v = linalg::sub(g, &origin);
                basis.iter().map(|b| linalg::dot(b, &v)).collect()
            })
            .collect();
        let mut lo = vec![f64::INFINITY; k];
        let mut hi = vec![f64::NEG_INFINITY; k];
        for c in &coords {
            for j in 0..k {
                lo[j] = lo[j].min(c[j]);
                hi[j] = hi[j].max(c[j]);
            }
        }
        // Per-axis node counts; spacing is shrunk so both ends are nodes.
        let counts: Vec<usize> = (0..k)
            .map(|j| ((hi[j] - lo[j]) / spacing).ceil().max(0.0) as usize + 1)
            .collect();
        let total = counts
            .iter()
            .try_fold(1usize, |acc, c| acc.checked_mul(*c))
            .unwrap_or(usize::MAX);
        if total > max_points {
            return Err(Error::InvalidArgument(format!(
                "lattice would need {total} points (cap {max_points})"
            )));
        }
        let mut out = Vec::with_capacity(total + self.generators.len());
        let mut idx = vec![0usize; k];
        for _ in 0..total {
            let mut x = origin.clone();
            for j in 0..k {
                let t = if counts[j] == 1 {
                    lo[j]
                } else {
                    lo[j] + (hi[j] - lo[j]) * idx[j] as f64 / (counts[j] - 1) as f64
                };
                for (xi, bi) in x.iter_mut().zip(&basis[j]) {
                    *xi += t * bi;
                }
            }
            if self.contains(&x) {
                out.push(x);
            }
            for j in 0..k {
                idx[j] += 1;
                if idx[j] < counts[j] {
                    break;
                }
                idx[j] = 0;
            }
        }
        for g in &self.generators {
            if !out.iter().any(|p| linalg::dist(p, g) < 1e-14) {
                out.push(g.clone());
            }
        }
        Ok(out)
    }

    /// Lattice fine enough that every body point is within rho-distance
    /// `dispersion` of a node (exact for boxes, approximate near slanted faces).
    pub fn rho_lattice(
        &self,
        rho: &AdmissibleSeminorm,
        dispersion: f64,
        max_points: usize,
    ) -> Result<Vec<Vec<f64>>> {
        check_dim(self.dim, rho.dim())?;
        let k = self.affine_dim().max(1);
        let spacing = if k == self.dim {
            // nearest node within spacing/2 per axis
            2.0 * dispersion / rho.lipschitz_l_inf()
        } else {
            2.0 * dispersion / (rho.lipschitz_l2() * (k as f64).sqrt())
        };
        // Guard the strict inequality against rounding.
        self.lattice(spacing * 0.999, max_points)
    }
}

fn detect_box(generators: &[Vec<f64>], dim: usize) -> bool {
    if dim >= usize::BITS as usize || generators.len() != 1usize << dim {
        return false;
    }
    let mut lo = generators[0].clone();
    let mut hi = generators[0].clone();
    for g in generators {
        for k in 0..dim {
            lo[k] = lo[k].min(g[k]);
            hi[k] = hi[k].max(g[k]);
        }
    }
    let mut seen = vec![false; generators.len()];
    for g in generators {
        let mut mask = 0usize;
        for k in 0..dim {
            if g[k] == hi[k] && hi[k] != lo[k] {
                mask |= 1 << k;
            } else if g[k] != lo[k] {
                return false;
            }
        }
        if seen[mask] {
            return false;
        }
        seen[mask] = true;
    }
    true
}

/// Tuning for [`build_eps_net`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    /// Fraction of epsilon held back to absorb grid dispersion.
    pub margin: f64,
    pub max_points: usize,
    /// Verify every grid point lies in the body before building.
    pub check_membership: bool,
    /// For centrally symmetric bodies, start at the center and add each
    /// selected point together with its mirror image. The resulting
    /// projection commutes with the point reflection.
    pub symmetric: bool,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            margin: 0.1,
            max_points: 20_000,
            check_membership: true,
            symmetric: true,
        }
    }
}

/// Finite subset of the body whose rho-balls of radius `epsilon` cover it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsNet {
    points: Vec<Vec<f64>>,
    epsilon: f64,
    margin: f64,
    rho: AdmissibleSeminorm,
}

impl EpsNet {
    /// Wraps explicit points without coverage certification.
    pub fn from_points(points: Vec<Vec<f64>>, epsilon: f64, rho: AdmissibleSeminorm) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("net points"));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon {epsilon}")));
        }
        for p in &points {
            check_dim(rho.dim(), p.len())?;
        }
        Ok(Self {
            points,
            epsilon,
            margin: 0.0,
            rho,
        })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn rho(&self) -> &AdmissibleSeminorm {
        &self.rho
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Convex hull of the net points.
    pub fn hull(&self) -> ConvexBody {
        ConvexBody::new(self.points.clone()).expect("net points form a valid body")
    }

    /// Smallest rho-distance from `x` to a net point.
    pub fn gap(&self, x: &[f64]) -> f64 {
        self.points
            .iter()
            .map(|p| self.rho.dist_unchecked(x, p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn covers(&self, x: &[f64]) -> bool {
        self.gap(x) < self.epsilon
    }

    /// CSV export: epsilon in a leading comment, one point per row.
    pub fn to_csv(&self) -> String {
        let mut s = format!("# epsilon = {:.16e}\n", self.epsilon);
        let header: Vec<String> = (1..=self.rho.dim()).map(|k| format!("x{k}")).collect();
        s.push_str(&header.join(","));
        s.push('\n');
        for p in &self.points {
            let row: Vec<String> = p.iter().map(|v| format!("{v:.16e}")).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// Greedy farthest-point epsilon-net over `grid`.
///
/// The first point is the grid node rho-closest to the grid centroid; each
/// further point is the node farthest from the current net (lowest index on
/// ties). Selection stops once every node is within `epsilon * (1 - margin)`.
pub fn build_eps_net(
    body: &ConvexBody,
    rho: &AdmissibleSeminorm,
    epsilon: f64,
    grid: &[Vec<f64>],
    config: &NetConfig,
) -> Result<EpsNet> {
    if grid.is_empty() {
        return Err(Error::EmptyInput("grid"));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon}")));
    }
    if !(0.0..1.0).contains(&config.margin) {
        return Err(Error::InvalidArgument(format!("margin {}", config.margin)));
    }
    check_dim(body.dim(), rho.dim())?;
    for g in grid {
        check_dim(body.dim(), g.len())?;
    }
    if config.check_membership {
        if let Some(i) = grid.iter().position(|g| !body.contains(g)) {
            return Err(Error::InvalidArgument(format!("grid point {i} lies outside the body")));
        }
    }

    let threshold = epsilon * (1.0 - config.margin);
    let symmetry = if config.symmetric { body.center_of_symmetry() } else { None };
    let first = match &symmetry {
        Some(c) => c.clone(),
        None => {
            let center = combine(&vec![1.0 / grid.len() as f64; grid.len()], grid);
            grid[argmin(grid.iter().map(|g| rho.dist_unchecked(g, &center)))].clone()
        }
    };

    let mut gaps: Vec<f64> = grid.iter().map(|g| rho.dist_unchecked(g, &first)).collect();
    let mut points = vec![first];
    loop {
        let (far, far_gap) = argmax_with_value(&gaps);
        if far_gap < threshold {
            break;
        }
        let p = grid[far].clone();
        // gap(p) >= threshold puts p at least that far from the center, so
        // p and its mirror are 2 * threshold apart.
        let mut batch = vec![p];
        if let Some(c) = &symmetry {
            batch.push(batch[0].iter().zip(c).map(|(x, c)| 2.0 * c - x).collect());
        }
        for p in batch {
            if points.len() >= config.max_points {
                return Err(Error::NetOverflow {
                    cap: config.max_points,
                    epsilon,
                });
            }
            update_gaps(&mut gaps, grid, &p, rho);
            points.push(p);
        }
    }

    Ok(EpsNet {
        points,
        epsilon,
        margin: config.margin,
        rho: rho.clone(),
    })
}

#[cfg(feature = "parallel")]
fn update_gaps(gaps: &mut [f64], grid: &[Vec<f64>], p: &[f64], rho: &AdmissibleSeminorm) {
    use rayon::prelude::*;
    gaps.par_iter_mut()
        .zip(grid.par_iter())
        .for_each(|(g, x)| *g = g.min(rho.dist_unchecked(x, p)));
}

#[cfg(not(feature = "parallel"))]
fn update_gaps(gaps: &mut [f64], grid: &[Vec<f64>], p: &[f64], rho: &AdmissibleSeminorm) {
    for (g, x) in gaps.iter_mut().zip(grid) {
        *g = g.min(rho.dist_unchecked(x, p));
    }
}

fn argmin(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, v) in values.enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best.0
}

fn argmax_with_value(values: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.iter().enumerate() {
        if *v > best.1 {
            best = (i, *v);
        }
    }
    best
}
