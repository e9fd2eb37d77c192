//! Collaboration Score: mean task-completion rate over the task intervals.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Completed and failed order counts for one task interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalCounts {
    pub tau_int: u32,
    pub completed: u32,
    pub failed: u32,
}

impl IntervalCounts {
    pub fn new(tau_int: u32, completed: u32, failed: u32) -> Self {
        Self {
            tau_int,
            completed,
            failed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRate {
    pub tau_int: u32,
    pub completed: u32,
    pub failed: u32,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosResult {
    pub intervals: Vec<IntervalRate>,
    pub cos: f64,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no intervals given")]
    NoIntervals,
    #[error("interval {index} (tau_int={tau_int}) has no completed or failed orders")]
    EmptyInterval { index: usize, tau_int: u32 },
}

impl MetricsError {
    pub fn code(&self) -> &'static str {
        match self {
            MetricsError::NoIntervals => "no_intervals",
            MetricsError::EmptyInterval { .. } => "empty_interval",
        }
    }
}

pub fn compute_cos(intervals: &[IntervalCounts]) -> Result<CosResult, MetricsError> {
    if intervals.is_empty() {
        return Err(MetricsError::NoIntervals);
    }
    let mut rates = Vec::with_capacity(intervals.len());
    for (index, c) in intervals.iter().enumerate() {
        let total = c.completed + c.failed;
        if total == 0 {
            return Err(MetricsError::EmptyInterval {
                index,
                tau_int: c.tau_int,
            });
        }
        rates.push(IntervalRate {
            tau_int: c.tau_int,
            completed: c.completed,
            failed: c.failed,
            rate: f64::from(c.completed) / f64::from(total),
        });
    }
    let cos = rates.iter().map(|r| r.rate).sum::<f64>() / rates.len() as f64;
    Ok(CosResult {
        intervals: rates,
        cos,
        m: intervals.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counts(pairs: &[(u32, u32)]) -> Vec<IntervalCounts> {
        pairs
            .iter()
            .enumerate()
            .map(|(i, (c, f))| IntervalCounts::new(i as u32 + 1, *c, *f))
            .collect()
    }

    #[test]
    fn two_agent_level_three() {
        let r = compute_cos(&counts(&[(10, 16), (10, 7), (11, 2), (12, 0), (11, 0)])).unwrap();
        assert!((r.cos - 0.764).abs() <= 0.0015, "{}", r.cos);
        assert_eq!(r.m, 5);
    }

    #[test]
    fn two_agent_level_zero() {
        let r = compute_cos(&counts(&[(18, 36), (18, 13), (18, 7), (18, 0), (18, 0)])).unwrap();
        assert!((r.cos - 0.727).abs() <= 0.0015, "{}", r.cos);
    }

    #[test]
    fn perfect_and_empty() {
        let r = compute_cos(&counts(&[(3, 0), (1, 0)])).unwrap();
        assert_eq!(r.cos, 1.0);
        let err = compute_cos(&counts(&[(3, 0), (0, 0)])).unwrap_err();
        assert_eq!(err.code(), "empty_interval");
        assert_eq!(compute_cos(&[]).unwrap_err(), MetricsError::NoIntervals);
    }

    proptest! {
        #[test]
        fn bounded_and_monotone(
            pairs in prop::collection::vec((0u32..50, 0u32..50), 1..7),
            which in 0usize..7,
        ) {
            let pairs: Vec<(u32, u32)> = pairs.into_iter().map(|(c, f)| (c, f.max(u32::from(c == 0)))).collect();
            let r = compute_cos(&counts(&pairs)).unwrap();
            prop_assert!((0.0..=1.0).contains(&r.cos));
            // moving one failure to a completion keeps the total and never lowers CoS
            let i = which % pairs.len();
            if pairs[i].1 > 0 {
                let mut better = pairs.clone();
                better[i] = (pairs[i].0 + 1, pairs[i].1 - 1);
                let r2 = compute_cos(&counts(&better)).unwrap();
                prop_assert!(r2.cos >= r.cos);
            }
        }
    }
}
