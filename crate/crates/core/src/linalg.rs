//! Small dense helpers on `&[f64]` points plus a Lawson-Hanson NNLS used for
//! barycentric re-fits.

use nalgebra::{DMatrix, DVector};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `(1 - lambda) * a + lambda * b`
pub fn lerp(a: &[f64], b: &[f64], lambda: f64) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(x, y)| (1.0 - lambda) * x + lambda * y)
        .collect()
}

/// Convex combination `sum_i w_i p_i`.
pub fn combine(weights: &[f64], points: &[Vec<f64>]) -> Vec<f64> {
    let dim = points.first().map_or(0, Vec::len);
    let mut out = vec![0.0; dim];
    for (w, p) in weights.iter().zip(points) {
        if *w == 0.0 {
            continue;
        }
        for (o, x) in out.iter_mut().zip(p) {
            *o += w * x;
        }
    }
    out
}

/// Nonnegative least squares `min ||A x - b||, x >= 0` (Lawson-Hanson active set).
///
/// The passive-set subproblem is solved by SVD, so within the passive set the
/// minimal-norm solution is returned.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let (m, n) = a.shape();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let tol = 10.0 * f64::EPSILON * a.abs().column_sum().max() * (m.max(n) as f64);
    let max_outer = 3 * n + 10;

    for _ in 0..max_outer {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]).then(j.cmp(&i)));
        let Some(j) = candidate else { break };
        passive[j] = true;

        loop {
            let z = solve_passive(a, b, &passive);
            let infeasible: Vec<usize> = (0..n).filter(|&i| passive[i] && z[i] <= tol).collect();
            if infeasible.is_empty() {
                x = z;
                break;
            }
            let alpha = infeasible
                .iter()
                .map(|&i| x[i] / (x[i] - z[i]))
                .fold(f64::INFINITY, f64::min);
            x += alpha * (z - &x);
            for i in 0..n {
                if passive[i] && x[i] <= tol {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
            if passive.iter().all(|p| !p) {
                break;
            }
        }
    }
    x
}

fn solve_passive(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let cols: Vec<usize> = (0..passive.len()).filter(|&i| passive[i]).collect();
    let sub = a.select_columns(&cols);
    let svd = sub.svd(true, true);
    let sol = svd
        .solve(b, 1e-13 * svd.singular_values.max().max(1.0))
        .unwrap_or_else(|_| DVector::zeros(cols.len()));
    let mut z = DVector::zeros(passive.len());
    for (k, &c) in cols.iter().enumerate() {
        z[c] = sol[k];
    }
    z
}

/// Barycentric weights of `x` over `generators`: nonnegative, summing to one,
/// together with the Euclidean residual `||sum w_i g_i - x||` of the fit.
#[derive(Debug, Clone)]
pub struct BarycentricFit {
    pub weights: Vec<f64>,
    pub residual: f64,
}

pub fn barycentric_fit(generators: &[Vec<f64>], x: &[f64]) -> BarycentricFit {
    let n = generators.len();
    let d = x.len();
    if n == 1 {
        return BarycentricFit {
            weights: vec![1.0],
            residual: dist(&generators[0], x),
        };
    }
    let scale = generators
        .iter()
        .flat_map(|g| g.iter())
        .chain(x)
        .fold(1.0_f64, |m, v| m.max(v.abs()));
    // Row enforcing sum(w) = 1, scaled like the coordinates. A heavier row
    // degrades the conditioning of the passive-set solves.
    let penalty = scale;
    let a = DMatrix::from_fn(d + 1, n, |r, c| {
        if r < d {
            generators[c][r]
        } else {
            penalty
        }
    });
    let b = DVector::from_fn(d + 1, |r, _| if r < d { x[r] } else { penalty });
    let sol = nnls(&a, &b);
    let total: f64 = sol.iter().sum();
    let weights: Vec<f64> = if total > 0.0 {
        sol.iter().map(|w| w / total).collect()
    } else {
        let mut w = vec![0.0; n];
        w[0] = 1.0;
        w
    };
    let residual = dist(&combine(&weights, generators), x);
    BarycentricFit { weights, residual }
}

/// Rank of a set of row vectors, relative tolerance on singular values.
pub fn rank(rows: &[Vec<f64>], rel_tol: f64) -> usize {
    if rows.is_empty() || rows[0].is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |r, c| rows[r][c]);
    let sv = m.singular_values();
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > rel_tol * top).count()
}

/// Orthonormal basis (as rows) of the span of `rows`.
pub fn orthonormal_basis(rows: &[Vec<f64>], rel_tol: f64) -> Vec<Vec<f64>> {
    if rows.is_empty() || rows[0].is_empty() {
        return Vec::new();
    }
    let d = rows[0].len();
    let m = DMatrix::from_fn(rows.len(), d, |r, c| rows[r][c]);
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let top = svd.singular_values.max();
    let mut out = Vec::new();
    for (k, s) in svd.singular_values.iter().enumerate() {
        if top > 0.0 && *s > rel_tol * top {
            out.push(v_t.row(k).iter().copied().collect());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nnls_recovers_nonnegative_solution() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_row_slice(&[1.0, 2.0, 3.0]);
        let x = nnls(&a, &b);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn nnls_clamps_negative_component() {
        let a = DMatrix::identity(2, 2);
        let b = DVector::from_row_slice(&[-1.0, 0.5]);
        let x = nnls(&a, &b);
        assert_eq!(x[0], 0.0);
        assert!((x[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn barycentric_inside_and_outside_square() {
        let square = vec![
            vec![-1.0, -1.0],
            vec![1.0, -1.0],
            vec![1.0, 1.0],
            vec![-1.0, 1.0],
        ];
        let inside = barycentric_fit(&square, &[0.3, -0.7]);
        assert!(inside.residual < 1e-10);
        assert!(inside.weights.iter().all(|w| *w >= 0.0));
        assert!((inside.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let outside = barycentric_fit(&square, &[1.5, 0.0]);
        assert!((outside.residual - 0.5).abs() < 1e-6);
    }

    #[test]
    fn rank_of_collinear_rows() {
        let rows = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![-1.0, -2.0]];
        assert_eq!(rank(&rows, 1e-12), 1);
        assert_eq!(orthonormal_basis(&rows, 1e-12).len(), 1);
    }
}
