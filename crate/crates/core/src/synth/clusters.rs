use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::uq::softmax_vec;

use super::config::{ClassGeometry, SyntheticConfig};
use super::dataset::{Dataset, DatasetMeta, DomainTag, Sample, Split};

/// Draws `n` labelled samples for `split`. Each split uses its own random
/// stream, so the three splits of one seed never share draws.
pub fn generate_clusters(config: &SyntheticConfig, n: usize, split: Split) -> Result<Dataset> {
    let geometry = ClassGeometry::from_config(config)?;
    if n < config.num_classes {
        return Err(Error::Config(format!(
            "n = {n} is smaller than num_classes = {}",
            config.num_classes
        )));
    }
    let mut rng = RngStream::with_stream(config.seed, split.stream_id());
    let samples = (0..n)
        .map(|i| {
            let label = rng.categorical(&config.class_priors);
            let features: Vec<f64> = geometry.means()[label]
                .iter()
                .map(|m| m + rng.standard_normal())
                .collect();
            let votes = simulate_raters(
                &features,
                &geometry,
                config.ambiguity_temperature,
                config.raters_per_sample,
                &mut rng,
            );
            Sample {
                id: format!("{split}-{i:06}"),
                features,
                label: Some(label),
                rater_votes: Some(votes),
                domain: DomainTag::InDist,
            }
        })
        .collect();
    Dataset::new(
        DatasetMeta {
            split,
            num_classes: config.num_classes,
            feature_dim: config.feature_dim,
            provenance: config.hash(),
            config: config.clone(),
            label_map: None,
        },
        samples,
    )
}

/// Each of `raters` votes independently from `softmax(−dist_k / temperature)`.
pub fn simulate_raters(
    features: &[f64],
    geometry: &ClassGeometry,
    temperature: f64,
    raters: usize,
    rng: &mut RngStream,
) -> Vec<usize> {
    let logits: Vec<f64> = geometry
        .distances(features)
        .iter()
        .map(|d| -d / temperature)
        .collect();
    let probs = softmax_vec(&logits);
    (0..raters).map(|_| rng.categorical(&probs)).collect()
}

/// Fraction of votes cast for the most popular class.
pub fn agreement(votes: &[usize], num_classes: usize) -> f64 {
    if votes.is_empty() {
        return 0.0;
    }
    let mut counts = vec![0usize; num_classes.max(votes.iter().max().map_or(0, |m| m + 1))];
    for &v in votes {
        counts[v] += 1;
    }
    *counts.iter().max().unwrap() as f64 / votes.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn agreement_examples() {
        assert_eq!(agreement(&[0, 0, 0, 0], 4), 1.0);
        assert_eq!(agreement(&[0, 1, 2, 3], 4), 0.25);
        assert_eq!(agreement(&[1, 1, 2, 3, 1], 4), 0.6);
    }

    #[test]
    fn cold_raters_vote_nearest_class() {
        let cfg = SyntheticConfig::default();
        let g = ClassGeometry::from_config(&cfg).unwrap();
        let mut rng = RngStream::new(3);
        for k in 0..4 {
            let votes = simulate_raters(&g.means()[k], &g, 1e-6, 10, &mut rng);
            assert!(votes.iter().all(|&v| v == k));
            assert_eq!(agreement(&votes, 4), 1.0);
        }
    }

    #[test]
    fn splits_do_not_share_ids_or_draws() {
        let cfg = SyntheticConfig::default();
        let a = generate_clusters(&cfg, 50, Split::Train).unwrap();
        let b = generate_clusters(&cfg, 50, Split::Test).unwrap();
        let ids: std::collections::HashSet<_> = a.ids().into_iter().collect();
        assert!(b.ids().iter().all(|id| !ids.contains(id)));
        assert_ne!(a.samples[0].features, b.samples[0].features);
    }

    #[test]
    fn degenerate_config_rejected() {
        let cfg = SyntheticConfig {
            cluster_separation: -1.0,
            ..SyntheticConfig::default()
        };
        assert!(matches!(generate_clusters(&cfg, 100, Split::Train), Err(Error::Config(_))));
        assert!(generate_clusters(&SyntheticConfig::default(), 3, Split::Train).is_err());
    }

    proptest! {
        #[test]
        fn agreement_bounds(votes in prop::collection::vec(0usize..4, 2..30)) {
            let a = agreement(&votes, 4);
            prop_assert!(a >= 1.0 / votes.len() as f64 - 1e-15);
            prop_assert!(a <= 1.0);
        }
    }
}
