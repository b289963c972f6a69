use serde::{Deserialize, Serialize};

use crate::{LhfiError, Result};

pub const N_METRICS: usize = 5;
pub const N_POSITIVE: usize = 2;
pub const N_NEGATIVE: usize = 3;

/// Split of the five abundance metrics into the group associated with good
/// health ("+") and the group associated with poor health ("−").
///
/// Metric indices are 1-based, matching the usual AMBI numbering. The model
/// always works in canonical order: the two positive metrics first, then the
/// three negative ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricGrouping {
    positive: [usize; N_POSITIVE],
    negative: [usize; N_NEGATIVE],
}

impl MetricGrouping {
    pub fn new(positive: &[usize], negative: &[usize]) -> Result<Self> {
        if positive.len() != N_POSITIVE || negative.len() != N_NEGATIVE {
            return Err(LhfiError::invalid(format!(
                "metric grouping needs {N_POSITIVE} positive and {N_NEGATIVE} negative metrics, got {} and {}",
                positive.len(),
                negative.len()
            )));
        }
        let mut seen = [false; N_METRICS];
        for &m in positive.iter().chain(negative) {
            if !(1..=N_METRICS).contains(&m) {
                return Err(LhfiError::invalid(format!("metric index {m} outside 1..={N_METRICS}")));
            }
            if seen[m - 1] {
                return Err(LhfiError::invalid(format!("metric {m} assigned to more than one group")));
            }
            seen[m - 1] = true;
        }
        Ok(Self {
            positive: [positive[0], positive[1]],
            negative: [negative[0], negative[1], negative[2]],
        })
    }

    /// AMBI groups 1–2 positive, 3–5 negative.
    pub fn ambi() -> Self {
        Self { positive: [1, 2], negative: [3, 4, 5] }
    }

    pub fn positive_metrics(&self) -> &[usize] {
        &self.positive
    }

    pub fn negative_metrics(&self) -> &[usize] {
        &self.negative
    }

    /// Reorders per-metric values (indexed by metric number − 1) into
    /// canonical order.
    pub fn to_canonical<T: Copy>(&self, by_metric: &[T; N_METRICS]) -> [T; N_METRICS] {
        let order = self.canonical_order();
        std::array::from_fn(|k| by_metric[order[k] - 1])
    }

    /// Metric numbers in canonical order.
    pub fn canonical_order(&self) -> [usize; N_METRICS] {
        [self.positive[0], self.positive[1], self.negative[0], self.negative[1], self.negative[2]]
    }
}

impl Default for MetricGrouping {
    fn default() -> Self {
        Self::ambi()
    }
}
