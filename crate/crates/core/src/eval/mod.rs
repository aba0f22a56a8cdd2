//! Classification metrics and the uncertainty test protocol.
//!
//! All uncertainty scores are entropies in nats; a higher score means the
//! model is less certain. Separation between two groups is summarised by the
//! AUROC of "the more uncertain group scores higher", with ties counted ½.

mod cdf;
mod export;
mod metrics;
mod protocol;
mod summary;

pub use cdf::{empirical_cdf, CdfCurve};
pub use export::{cdf_csv, records_csv, snr_csv};
pub use metrics::{accuracy, auroc, auroc_brute_force, mean_ci95, pcc, spearman, uar, MeanCi};
pub use protocol::{
    correctness_from_records, run_correctness_test, run_ood_domain_test, run_rater_test, run_snr_sweep,
    run_unknown_class_test, CorrectnessResult, OodDomainResult, OodKindResult, Scorer, SnrPoint,
    UnknownClassResult, DEFAULT_SNR_GRID,
};
pub use summary::{EvalSummary, CI_METHOD, UNCERTAINTY_UNIT};
