use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::persist::fmt17;

/// Neutral, happiness, anger, sadness shares of the reference training corpus.
pub const DEFAULT_CLASS_PRIORS: [f64; 4] = [0.60, 0.26, 0.08, 0.06];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub num_classes: usize,
    pub feature_dim: usize,
    #[serde(serialize_with = "fmt17::vec")]
    pub class_priors: Vec<f64>,
    /// Distance between every pair of class means, in units of the
    /// within-class standard deviation.
    #[serde(serialize_with = "fmt17::f64")]
    pub cluster_separation: f64,
    #[serde(serialize_with = "fmt17::f64")]
    pub ambiguity_temperature: f64,
    pub raters_per_sample: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            num_classes: 4,
            feature_dim: 16,
            class_priors: DEFAULT_CLASS_PRIORS.to_vec(),
            cluster_separation: 3.0,
            ambiguity_temperature: 0.5,
            raters_per_sample: 10,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let k = self.num_classes;
        if k < 2 {
            return Err(Error::Config(format!("need at least 2 classes, got {k}")));
        }
        if self.feature_dim < k {
            return Err(Error::Config(format!(
                "feature_dim {} must be at least num_classes {k}",
                self.feature_dim
            )));
        }
        if self.class_priors.len() != k {
            return Err(Error::Config(format!(
                "{} class priors for {k} classes",
                self.class_priors.len()
            )));
        }
        if self.class_priors.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(Error::Config("class priors must be non-negative".into()));
        }
        let total: f64 = self.class_priors.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("class priors sum to {total}")));
        }
        if !(self.cluster_separation > 0.0 && self.cluster_separation.is_finite()) {
            return Err(Error::Config(format!(
                "cluster_separation must be positive, got {}",
                self.cluster_separation
            )));
        }
        if !(self.ambiguity_temperature > 0.0 && self.ambiguity_temperature.is_finite()) {
            return Err(Error::Config(format!(
                "ambiguity_temperature must be positive, got {}",
                self.ambiguity_temperature
            )));
        }
        if self.raters_per_sample < 2 {
            return Err(Error::Config("at least 2 raters per sample".into()));
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        hex::encode(digest)[..16].to_string()
    }

    /// Same geometry with `extra` additional classes appended. The original
    /// priors are scaled by `1 − extra_share` and the new classes split
    /// `extra_share` evenly.
    pub fn with_extra_classes(&self, extra: usize, extra_share: f64) -> Result<Self> {
        if extra == 0 {
            return Ok(self.clone());
        }
        if !(0.0..1.0).contains(&extra_share) || extra_share == 0.0 {
            return Err(Error::Config(format!("extra class share {extra_share} outside (0, 1)")));
        }
        let mut priors: Vec<f64> = self.class_priors.iter().map(|p| p * (1.0 - extra_share)).collect();
        priors.extend(std::iter::repeat_n(extra_share / extra as f64, extra));
        let k = self.num_classes + extra;
        Ok(Self {
            num_classes: k,
            feature_dim: self.feature_dim.max(k),
            class_priors: priors,
            ..self.clone()
        })
    }
}

/// Class means implied by a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassGeometry {
    means: Vec<Vec<f64>>,
    separation: f64,
}

impl ClassGeometry {
    pub fn from_config(config: &SyntheticConfig) -> Result<Self> {
        config.validate()?;
        let scale = config.cluster_separation / std::f64::consts::SQRT_2;
        let means = (0..config.num_classes)
            .map(|k| {
                let mut m = vec![0.0; config.feature_dim];
                m[k] = scale;
                m
            })
            .collect();
        Ok(Self {
            means,
            separation: config.cluster_separation,
        })
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn centroid(&self) -> Vec<f64> {
        let k = self.means.len() as f64;
        (0..self.dim())
            .map(|d| self.means.iter().map(|m| m[d]).sum::<f64>() / k)
            .collect()
    }

    pub fn distances(&self, x: &[f64]) -> Vec<f64> {
        self.means.iter().map(|m| euclidean(m, x)).collect()
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn means_are_equidistant() {
        let cfg = SyntheticConfig {
            cluster_separation: 2.5,
            ..SyntheticConfig::default()
        };
        let g = ClassGeometry::from_config(&cfg).unwrap();
        for i in 0..4 {
            for j in (i + 1)..4 {
                assert!((euclidean(&g.means()[i], &g.means()[j]) - 2.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn validation() {
        let ok = SyntheticConfig::default();
        assert!(ok.validate().is_ok());
        assert!(SyntheticConfig { cluster_separation: 0.0, ..ok.clone() }.validate().is_err());
        assert!(SyntheticConfig { class_priors: vec![0.5, 0.5, 0.1, 0.0], ..ok.clone() }.validate().is_err());
        assert!(SyntheticConfig { raters_per_sample: 1, ..ok.clone() }.validate().is_err());
        assert!(SyntheticConfig { feature_dim: 3, ..ok.clone() }.validate().is_err());
        assert!(SyntheticConfig { num_classes: 1, class_priors: vec![1.0], ..ok }.validate().is_err());
    }

    #[test]
    fn extra_classes_keep_priors_normalised() {
        let cfg = SyntheticConfig::default().with_extra_classes(1, 0.1).unwrap();
        assert_eq!(cfg.num_classes, 5);
        assert!(cfg.validate().is_ok());
        assert!((cfg.class_priors[0] - 0.54).abs() < 1e-12);
        assert!((cfg.class_priors[4] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn hash_depends_on_content() {
        let a = SyntheticConfig::default();
        let b = SyntheticConfig { seed: 1, ..a.clone() };
        assert_eq!(a.hash(), a.clone().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }
}
