//! Runs the uncertainty tests for every configured head and writes results.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use uqbench_core::eval::{
    cdf_csv, records_csv, run_correctness_test, run_ood_domain_test, run_rater_test, run_snr_sweep,
    run_unknown_class_test, snr_csv, EvalSummary, Scorer,
};
use uqbench_core::{persist, Error, Result, RngStream};

use crate::config::{ExperimentConfig, HeadName, ModelName, TestName};
use crate::data::ExperimentData;
use crate::train::TrainedModel;

pub const SUMMARY_FILE: &str = "summary.json";
pub const RECORDS_FILE: &str = "records.csv";
pub const SNR_FILE: &str = "snr.csv";

pub fn cdf_file(test: TestName) -> Option<&'static str> {
    match test {
        TestName::Correctness => Some("cdf-correctness.csv"),
        TestName::UnknownClass => Some("cdf-unknown-class.csv"),
        TestName::OodDomain => Some("cdf-ood-domain.csv"),
        TestName::Rater | TestName::SnrSweep => None,
    }
}

pub fn head_dir(eval_dir: &Path, head: HeadName) -> PathBuf {
    eval_dir.join(head.slug())
}

/// Evaluates one head. Fields of tests not in `tests` are carried over from
/// `previous` when given.
pub fn evaluate_head(
    cfg: &ExperimentConfig,
    head: HeadName,
    model: &TrainedModel,
    data: &ExperimentData,
    tests: &[TestName],
    previous: Option<EvalSummary>,
    dir: &Path,
) -> Result<(EvalSummary, Vec<PathBuf>)> {
    let scorer = Scorer::new(&model.model, head.uq_head(cfg.mc_passes));
    let stream = |t: TestName| RngStream::with_stream(cfg.seed, t.stream());
    let k = data.num_classes();
    let mut written = Vec::new();
    let mut write = |name: &str, bytes: Vec<u8>| -> Result<()> {
        let path = dir.join(name);
        persist::write_atomic(&path, &bytes)?;
        written.push(path);
        Ok(())
    };

    let base = run_correctness_test(&scorer, &data.test, &mut stream(TestName::Correctness))?;
    let mut summary = match previous {
        Some(p) => EvalSummary {
            uar: base.uar,
            accuracy: base.accuracy,
            ..p
        },
        None => EvalSummary::new(head.label(), base.uar, base.accuracy),
    };

    for &test in tests {
        match test {
            TestName::Correctness => {
                summary.auroc_misclassification = base.auroc_misclassification;
                write(RECORDS_FILE, records_csv(&base.records, k)?)?;
                write(
                    cdf_file(test).unwrap(),
                    cdf_csv(&[&base.correct_cdf, &base.wrong_cdf])?,
                )?;
            }
            TestName::Rater => {
                summary.pcc_agreement = match run_rater_test(&scorer, &data.test, &mut stream(test)) {
                    Ok(v) => Some(v),
                    Err(Error::Metric(msg)) => {
                        log::warn!("{head}: rater correlation undefined: {msg}");
                        None
                    }
                    Err(e) => return Err(e),
                };
            }
            TestName::UnknownClass => {
                let r = run_unknown_class_test(&scorer, &data.test, &data.heldout_test, &mut stream(test))?;
                summary.mean_uncertainty_in = Some(r.mean_uncertainty_in);
                summary.mean_uncertainty_out = Some(r.mean_uncertainty_out);
                summary.uncertainty_ratio = r.ratio;
                write(cdf_file(test).unwrap(), cdf_csv(&[&r.in_cdf, &r.out_cdf])?)?;
            }
            TestName::OodDomain => {
                let r = run_ood_domain_test(&scorer, &data.test, &data.ood_test, &mut stream(test))?;
                summary.auroc_ood = Some(r.auroc_pooled);
                summary.auroc_ood_by_kind = r.per_kind.iter().map(|p| (p.kind.to_string(), p.auroc)).collect();
                let mut curves = vec![&r.in_cdf];
                curves.extend(r.per_kind.iter().map(|p| &p.cdf));
                write(cdf_file(test).unwrap(), cdf_csv(&curves)?)?;
            }
            TestName::SnrSweep => {
                let points = run_snr_sweep(&scorer, &data.test, &cfg.snr_grid, cfg.seed, cfg.snr_repeats)?;
                write(SNR_FILE, snr_csv(&points)?)?;
                summary.per_snr = Some(points);
            }
        }
    }
    summary.validate()?;
    let path = dir.join(SUMMARY_FILE);
    persist::write_json(&path, &summary)?;
    written.push(path);
    Ok((summary, written))
}

/// Evaluates every configured head, concurrently. Existing summaries in
/// `eval_dir` are updated in place.
pub fn evaluate_all(
    cfg: &ExperimentConfig,
    data: &ExperimentData,
    models: &BTreeMap<ModelName, TrainedModel>,
    tests: &[TestName],
    eval_dir: &Path,
) -> Result<BTreeMap<HeadName, EvalSummary>> {
    let heads = cfg.heads_sorted();
    let results: Vec<Result<EvalSummary>> = std::thread::scope(|s| {
        let handles: Vec<_> = heads
            .iter()
            .map(|&head| {
                s.spawn(move || -> Result<EvalSummary> {
                    let model = models
                        .get(&head.model())
                        .ok_or_else(|| Error::Config(format!("no trained {} model for {head}", head.model())))?;
                    let dir = head_dir(eval_dir, head);
                    let summary_path = dir.join(SUMMARY_FILE);
                    let previous = if summary_path.exists() {
                        Some(persist::read_json(&summary_path)?)
                    } else {
                        None
                    };
                    evaluate_head(cfg, head, model, data, tests, previous, &dir).map(|(s, _)| s)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("evaluation thread panicked"))
            .collect()
    });
    heads.into_iter().zip(results).map(|(h, r)| r.map(|s| (h, s))).collect()
}
