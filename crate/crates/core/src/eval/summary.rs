use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::protocol::SnrPoint;
use crate::error::{Error, Result};

pub const UNCERTAINTY_UNIT: &str = "entropy-nats";
pub const CI_METHOD: &str = "normal approximation: mean +/- 1.96*sd/sqrt(n), pooled over samples and repeats";

/// Per-head results of every test that was run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub head: String,
    pub uar: f64,
    pub accuracy: f64,
    pub auroc_misclassification: Option<f64>,
    /// All OOD kinds pooled.
    pub auroc_ood: Option<f64>,
    #[serde(default)]
    pub auroc_ood_by_kind: BTreeMap<String, f64>,
    pub pcc_agreement: Option<f64>,
    pub mean_uncertainty_in: Option<f64>,
    pub mean_uncertainty_out: Option<f64>,
    pub uncertainty_ratio: Option<f64>,
    pub per_snr: Option<Vec<SnrPoint>>,
    pub uncertainty_unit: String,
    pub ci_method: String,
}

impl EvalSummary {
    pub fn new(head: impl Into<String>, uar: f64, accuracy: f64) -> Self {
        Self {
            head: head.into(),
            uar,
            accuracy,
            auroc_misclassification: None,
            auroc_ood: None,
            auroc_ood_by_kind: BTreeMap::new(),
            pcc_agreement: None,
            mean_uncertainty_in: None,
            mean_uncertainty_out: None,
            uncertainty_ratio: None,
            per_snr: None,
            uncertainty_unit: UNCERTAINTY_UNIT.into(),
            ci_method: CI_METHOD.into(),
        }
    }

    /// Every present metric lies in its range.
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Metric(format!("{name} = {v} outside [0, 1]")))
            }
        };
        unit("uar", self.uar)?;
        unit("accuracy", self.accuracy)?;
        if let Some(v) = self.auroc_misclassification {
            unit("auroc_misclassification", v)?;
        }
        if let Some(v) = self.auroc_ood {
            unit("auroc_ood", v)?;
        }
        for (k, &v) in &self.auroc_ood_by_kind {
            unit(&format!("auroc_ood[{k}]"), v)?;
        }
        if let Some(v) = self.pcc_agreement {
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::Metric(format!("pcc_agreement = {v} outside [-1, 1]")));
            }
        }
        for v in [self.mean_uncertainty_in, self.mean_uncertainty_out].into_iter().flatten() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Metric(format!("mean uncertainty {v} is not a finite entropy")));
            }
        }
        for p in self.per_snr.iter().flatten() {
            unit("per_snr.uar", p.uar)?;
        }
        Ok(())
    }
}
