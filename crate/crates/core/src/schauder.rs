//! Partition functions `g_p(x) = max{eps - rho(x - p), 0}` and the Schauder
//! projection onto the convex hull of an epsilon-net.

use crate::error::{check_dim, Error, Result};
use crate::linalg::combine;
use crate::seminorms::AdmissibleSeminorm;
use crate::sets::EpsNet;

/// Weight sums below this are treated as "not covered".
pub const MIN_WEIGHT_SUM: f64 = 1e-14;

pub fn partition_value(rho: &AdmissibleSeminorm, epsilon: f64, p: &[f64], x: &[f64]) -> Result<f64> {
    check_dim(p.len(), x.len())?;
    Ok((epsilon - rho.dist(x, p)?).max(0.0))
}

/// `P(x) = sum_i g_i(x) x_i / sum_i g_i(x)` over the net points `x_i`.
#[derive(Debug, Clone)]
pub struct SchauderProjection {
    net: EpsNet,
}

impl SchauderProjection {
    pub fn new(net: EpsNet) -> Self {
        Self { net }
    }

    pub fn net(&self) -> &EpsNet {
        &self.net
    }

    pub fn epsilon(&self) -> f64 {
        self.net.epsilon()
    }

    /// Normalized partition weights over the net points.
    pub fn weights(&self, x: &[f64]) -> Result<Vec<f64>> {
        let rho = self.net.rho();
        check_dim(rho.dim(), x.len())?;
        let eps = self.net.epsilon();
        let mut w: Vec<f64> = self
            .net
            .points()
            .iter()
            .map(|p| (eps - rho.dist_unchecked(x, p)).max(0.0))
            .collect();
        let total: f64 = w.iter().sum();
        if total < MIN_WEIGHT_SUM {
            return Err(Error::UncoveredPoint { weight_sum: total });
        }
        w.iter_mut().for_each(|v| *v /= total);
        Ok(w)
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let w = self.weights(x)?;
        Ok(combine(&w, self.net.points()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seminorms::LinearFunctional;

    fn abs_rho(weight: f64) -> AdmissibleSeminorm {
        AdmissibleSeminorm::from_weights(vec![LinearFunctional::coordinate(1, 0)], vec![weight]).unwrap()
    }

    #[test]
    fn partition_value_cases() {
        let rho = abs_rho(0.5);
        assert_eq!(partition_value(&rho, 0.6, &[0.2], &[0.2]).unwrap(), 0.6);
        assert_eq!(partition_value(&rho, 0.6, &[0.0], &[2.0]).unwrap(), 0.0);
        assert!((partition_value(&rho, 0.6, &[0.0], &[0.4]).unwrap() - 0.4).abs() < 1e-15);
        assert!(partition_value(&rho, 0.6, &[0.0, 1.0], &[0.4]).is_err());
    }

    #[test]
    fn symmetric_segment_projection() {
        let net = EpsNet::from_points(vec![vec![0.0], vec![1.0]], 0.6, abs_rho(1.0)).unwrap();
        let proj = SchauderProjection::new(net);
        let w = proj.weights(&[0.5]).unwrap();
        assert!((w[0] - 0.5).abs() < 1e-15 && (w[1] - 0.5).abs() < 1e-15);
        assert!((proj.project(&[0.5]).unwrap()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn isolated_net_point_is_fixed() {
        let net = EpsNet::from_points(vec![vec![0.0], vec![1.0]], 0.3, abs_rho(1.0)).unwrap();
        let proj = SchauderProjection::new(net);
        assert_eq!(proj.project(&[1.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn uncovered_point_is_an_error() {
        let net = EpsNet::from_points(vec![vec![0.0]], 0.3, abs_rho(1.0)).unwrap();
        let proj = SchauderProjection::new(net);
        assert!(matches!(proj.project(&[0.9]), Err(Error::UncoveredPoint { .. })));
    }
}
