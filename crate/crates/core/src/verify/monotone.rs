//! Monotonicity and sign checks on functional series.

use serde::{Deserialize, Serialize};

use crate::model::FunctionalSeries;

/// Expected direction of a monotone series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `v[i+1] ≤ v[i]`.
    Nonincreasing,
    /// `v[i+1] ≥ v[i]`.
    Nondecreasing,
}

/// A step that moves against the expected direction by more than the slack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Index of the later sample of the offending step.
    pub index: usize,
    /// Similarity time of that sample.
    pub s: f64,
    /// Signed excess against the expected direction.
    pub excess: f64,
    /// Local scale `max(|v[i]|, |v[i+1]|)` the slack was multiplied by.
    pub scale: f64,
}

/// Steps of `series` whose move against `direction` exceeds `slack · max(|v[i]|, |v[i+1]|)`,
/// considering only samples with `s ≥ s_from`.
pub fn monitor_monotone(series: &FunctionalSeries, direction: Direction, slack: f64, s_from: f64) -> Vec<Violation> {
    let s = series.s();
    let v = series.values();
    let sign = match direction {
        Direction::Nonincreasing => 1.0,
        Direction::Nondecreasing => -1.0,
    };
    let mut out = Vec::new();
    for i in 1..v.len() {
        if s[i - 1] < s_from {
            continue;
        }
        let excess = sign * (v[i] - v[i - 1]);
        let scale = v[i].abs().max(v[i - 1].abs());
        if excess > slack * scale {
            out.push(Violation { index: i, s: s[i], excess, scale });
        }
    }
    out
}

/// Samples with `s ≥ s_from` where the series drops below `-floor · max|v|`.
pub fn negative_samples(series: &FunctionalSeries, floor: f64, s_from: f64) -> Vec<usize> {
    let scale = series.values().iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    series
        .iter()
        .enumerate()
        .filter(|(_, (s, v))| *s >= s_from && *v < -floor * scale)
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(v: Vec<f64>) -> FunctionalSeries {
        let s = (0..v.len()).map(|i| i as f64 * 0.1).collect();
        FunctionalSeries::new("x", s, v).unwrap()
    }

    #[test]
    fn zero_series_is_monotone_and_nonnegative() {
        let z = series(vec![0.0; 10]);
        assert!(monitor_monotone(&z, Direction::Nonincreasing, 0.0, 0.0).is_empty());
        assert!(negative_samples(&z, 0.0, 0.0).is_empty());
    }

    #[test]
    fn bump_is_reported() {
        let z = series(vec![3.0, 2.0, 2.5, 1.0]);
        let v = monitor_monotone(&z, Direction::Nonincreasing, 1e-6, 0.0);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].index, 2);
        assert!(monitor_monotone(&z, Direction::Nonincreasing, 1e-6, 0.15).is_empty());
    }

    proptest! {
        #[test]
        fn sorted_descending_has_no_violations(mut v in proptest::collection::vec(-1e3f64..1e3, 3..40)) {
            v.sort_by(|a, b| b.partial_cmp(a).unwrap());
            prop_assert!(monitor_monotone(&series(v.clone()), Direction::Nonincreasing, 0.0, 0.0).is_empty());
            v.reverse();
            prop_assert!(monitor_monotone(&series(v), Direction::Nondecreasing, 0.0, 0.0).is_empty());
        }
    }
}
