//! Shared checks on residual sequences.

use serde::{Deserialize, Serialize};

/// Outcome of checking that a residual series decays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub last_le_first: bool,
    /// Indices `k` with `r[k] > slack * r[k-1] + floor`.
    pub jumps: Vec<usize>,
}

impl DecayReport {
    pub fn passed(&self) -> bool {
        self.last_le_first && self.jumps.is_empty()
    }
}

/// `floor` absorbs round-off once a series has reached machine precision;
/// comparisons are otherwise exact.
pub fn decay_report(series: &[f64], slack: f64, floor: f64) -> DecayReport {
    let last_le_first = match (series.first(), series.last()) {
        (Some(first), Some(last)) => *last <= *first + floor,
        _ => true,
    };
    let jumps = series
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] > slack * w[0] + floor)
        .map(|(k, _)| k + 1)
        .collect();
    DecayReport { last_le_first, jumps }
}

/// Full-precision float formatting used by every CSV artifact (17
/// significant digits).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_detects_jumps() {
        let r = decay_report(&[1.0, 0.5, 0.9, 0.1], 1.5, 0.0);
        assert!(r.last_le_first);
        assert_eq!(r.jumps, vec![2]);
        assert!(decay_report(&[1.0, 1.4, 0.2], 1.5, 0.0).passed());
        assert!(!decay_report(&[0.0, 1e-3], 1.5, 0.0).passed());
        assert!(decay_report(&[0.0, 1e-15], 1.5, 1e-12).passed());
    }

    #[test]
    fn formatting_round_trips() {
        for v in [0.1, 1.0 / 3.0, std::f64::consts::E, -2.5e-300] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }
}
