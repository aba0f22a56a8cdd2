//! Seeded synthetic benchmark data.
//!
//! Class `k` is an isotropic unit-variance Gaussian around a mean placed on a
//! regular simplex: `m_k = (s/√2)·e_k`, so every pair of means is exactly the
//! configured separation `s` apart. Raters vote from a softmax over negative
//! distances to the class means, so label ambiguity grows with class overlap.

mod clusters;
mod config;
mod dataset;
mod ood;
mod snr;
mod split;
mod weights;

pub use clusters::{agreement, generate_clusters, simulate_raters};
pub use config::{ClassGeometry, SyntheticConfig, DEFAULT_CLASS_PRIORS};
pub use dataset::{Dataset, DatasetMeta, DomainTag, OodKind, Sample, Split};
pub use ood::{generate_ood_domain, OodParams, WHITE_NOISE_RAMP_DEFAULT_COUNT};
pub use snr::{achieved_snr_db, mix_at_snr, snr_gain};
pub use split::{holdout_class_split, HoldoutSplit};
pub use weights::class_weights;
