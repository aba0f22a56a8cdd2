use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probability vector over `N` classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalDist {
    probs: Vec<f64>,
}

impl CategoricalDist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Domain("empty categorical distribution".into()));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Domain(format!("probabilities outside [0,1]: {probs:?}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("probabilities sum to {total}")));
        }
        Ok(Self { probs })
    }

    pub(crate) fn from_normalized(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn num_classes(&self) -> usize {
        self.probs.len()
    }

    pub fn argmax(&self) -> usize {
        super::argmax(&self.probs)
    }
}

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64]) -> CategoricalDist {
    CategoricalDist::from_normalized(softmax_vec(logits))
}

pub(crate) fn softmax_vec(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = out.iter().sum();
    for p in &mut out {
        *p /= total;
    }
    out
}

/// `ln softmax(z)_i` computed without forming the probabilities.
pub(crate) fn log_softmax_at(logits: &[f64], i: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse: f64 = logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    logits[i] - max - lse
}

/// Shannon entropy in nats; zero-probability terms contribute nothing.
pub fn entropy(dist: &CategoricalDist) -> f64 {
    entropy_of(dist.probs())
}

pub(crate) fn entropy_of(probs: &[f64]) -> f64 {
    let h: f64 = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum();
    h.clamp(0.0, (probs.len() as f64).ln())
}

/// Weighted cross-entropy for one sample and its gradient with respect to the
/// logits: `−w_y ln softmax(z)_y` and `w_y (softmax(z) − onehot(y))`.
pub fn weighted_ce_loss(
    logits: &[f64],
    label: usize,
    class_weights: Option<&[f64]>,
) -> Result<(f64, Vec<f64>)> {
    let k = logits.len();
    if label >= k {
        return Err(Error::Domain(format!("label {label} outside 0..{k}")));
    }
    let w = match class_weights {
        Some(ws) if ws.len() != k => {
            return Err(Error::Shape(format!("{} class weights for {k} classes", ws.len())))
        }
        Some(ws) => ws[label],
        None => 1.0,
    };
    let loss = -w * log_softmax_at(logits, label);
    let mut grad = softmax_vec(logits);
    grad[label] -= 1.0;
    for g in &mut grad {
        *g *= w;
    }
    Ok((loss, grad))
}
