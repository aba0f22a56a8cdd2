use super::categorical::{entropy_of, CategoricalDist};
use super::record::head_probabilities;
use crate::error::{Error, Result};
use crate::nn::{Dropout, MlpModel};
use crate::rng::RngStream;
use crate::tensor::Tensor2;

/// Stochastic forward passes used when none is configured.
pub const DEFAULT_MC_PASSES: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct McPrediction {
    pub mean: CategoricalDist,
    /// Population variance of each class probability across passes.
    pub per_class_variance: Vec<f64>,
    pub entropy_of_mean: f64,
}

impl McPrediction {
    /// Scalar variance score: mean of the per-class variances.
    pub fn variance_score(&self) -> f64 {
        self.per_class_variance.iter().sum::<f64>() / self.per_class_variance.len() as f64
    }
}

/// Runs `passes` dropout-active forwards over `batch` and summarises the
/// per-row predictive distributions.
pub fn mc_dropout_predict(
    model: &MlpModel,
    batch: &Tensor2,
    passes: usize,
    rng: &mut RngStream,
) -> Result<Vec<McPrediction>> {
    if passes < 2 {
        return Err(Error::Config(format!("MC dropout needs at least 2 passes, got {passes}")));
    }
    let n = batch.rows();
    let k = model.num_classes();
    // Welford accumulators; identical samples leave the variance at exactly 0.
    let mut mean = vec![0.0; n * k];
    let mut m2 = vec![0.0; n * k];
    for t in 1..=passes {
        let logits = model.forward(batch, Dropout::Stochastic(rng))?;
        for r in 0..n {
            let p = head_probabilities(model, logits.row(r));
            for (c, &pc) in p.iter().enumerate() {
                let i = r * k + c;
                let delta = pc - mean[i];
                mean[i] += delta / t as f64;
                m2[i] += delta * (pc - mean[i]);
            }
        }
    }
    Ok((0..n)
        .map(|r| {
            let mut m = mean[r * k..(r + 1) * k].to_vec();
            let total: f64 = m.iter().sum();
            for v in &mut m {
                *v /= total;
            }
            let per_class_variance = m2[r * k..(r + 1) * k]
                .iter()
                .map(|v| (v / passes as f64).max(0.0))
                .collect();
            let entropy_of_mean = entropy_of(&m);
            McPrediction {
                mean: CategoricalDist::from_normalized(m),
                per_class_variance,
                entropy_of_mean,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Architecture, HeadKind};
    use crate::uq::softmax;

    fn model(dropout: f64) -> MlpModel {
        let arch = Architecture {
            dropout_rate: dropout,
            hidden: vec![16, 16],
            ..Architecture::desk_default(3, 4, HeadKind::SoftmaxCe)
        };
        MlpModel::init(&arch, &mut RngStream::new(4)).unwrap()
    }

    fn batch() -> Tensor2 {
        Tensor2::new(5, 3, (0..15).map(|i| (i as f64 - 7.0) * 0.4).collect()).unwrap()
    }

    #[test]
    fn no_dropout_means_zero_variance() {
        let m = model(0.0);
        let x = batch();
        let preds = mc_dropout_predict(&m, &x, DEFAULT_MC_PASSES, &mut RngStream::new(1)).unwrap();
        let logits = m.forward(&x, Dropout::Off).unwrap();
        for (r, p) in preds.iter().enumerate() {
            assert!(p.per_class_variance.iter().all(|&v| v == 0.0));
            let det = softmax(logits.row(r));
            for (a, b) in p.mean.probs().iter().zip(det.probs()) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn variance_is_bernoulli_bounded() {
        let m = model(0.5);
        let preds = mc_dropout_predict(&m, &batch(), 20, &mut RngStream::new(2)).unwrap();
        for p in &preds {
            assert!(p.variance_score() <= 0.25);
            assert!(p.per_class_variance.iter().all(|&v| (0.0..=0.25).contains(&v)));
            assert!(p.entropy_of_mean <= 4f64.ln());
        }
        assert!(preds.iter().any(|p| p.variance_score() > 0.0));
    }

    #[test]
    fn requires_two_passes() {
        assert!(mc_dropout_predict(&model(0.2), &batch(), 1, &mut RngStream::new(0)).is_err());
    }

    #[test]
    fn deterministic_given_stream() {
        let m = model(0.3);
        let a = mc_dropout_predict(&m, &batch(), 10, &mut RngStream::new(5)).unwrap();
        let b = mc_dropout_predict(&m, &batch(), 10, &mut RngStream::new(5)).unwrap();
        assert_eq!(a, b);
    }
}
