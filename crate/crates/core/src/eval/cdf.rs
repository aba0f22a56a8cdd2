use serde::{Deserialize, Serialize};

/// Right-continuous empirical CDF of one group's scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfCurve {
    pub group: String,
    /// Sorted ascending.
    pub values: Vec<f64>,
    /// `fractions[i] = (i + 1) / n`.
    pub fractions: Vec<f64>,
}

impl CdfCurve {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Fraction of values `≤ x`.
    pub fn eval(&self, x: f64) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.partition_point(|&v| v <= x) as f64 / self.values.len() as f64
    }
}

/// An empty input yields an empty curve.
pub fn empirical_cdf(group: impl Into<String>, values: &[f64]) -> CdfCurve {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    CdfCurve {
        group: group.into(),
        fractions: (1..=sorted.len()).map(|i| i as f64 / n).collect(),
        values: sorted,
    }
}
