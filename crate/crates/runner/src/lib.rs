//! Experiment runner: data generation, the four training pipelines,
//! evaluation, reports, plots and the run manifest.
//!
//! Output layout under the run directory:
//!
//! ```text
//! config.json                 resolved configuration
//! manifest.json               index of everything below
//! data/<stem>.csv             datasets (+ .meta.json, .votes.csv)
//! checkpoints/<model>.json    ce, edl, pn-in, pn-out
//! eval/<head>/summary.json    per-head metrics
//! eval/<head>/*.csv           records, CDF curves, SNR table
//! plots/<head>/*.svg          plots rendered from the CSVs
//! report.md                   tables across heads
//! ```

pub mod config;
pub mod data;
pub mod evaluate;
pub mod manifest;
pub mod plot;
pub mod report;
pub mod train;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use uqbench_core::eval::EvalSummary;
use uqbench_core::{persist, Error, Result};

use config::{ExperimentConfig, HeadName, TestName};
use data::ExperimentData;
use evaluate::{cdf_file, evaluate_all, head_dir, SNR_FILE, SUMMARY_FILE};
use manifest::RunManifest;

pub const CONFIG_FILE: &str = "config.json";
pub const REPORT_FILE: &str = "report.md";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    GenData,
    Train,
    Eval,
    Sweep,
    Plot,
    All,
}

#[derive(Debug, Clone)]
pub struct RunPaths {
    pub out: PathBuf,
    pub data: PathBuf,
    pub checkpoints: PathBuf,
    pub eval: PathBuf,
    pub plots: PathBuf,
}

impl RunPaths {
    pub fn new(out: &Path) -> Self {
        Self {
            out: out.to_path_buf(),
            data: out.join("data"),
            checkpoints: out.join("checkpoints"),
            eval: out.join("eval"),
            plots: out.join("plots"),
        }
    }
}

/// Wall time per stage.
#[derive(Debug, Clone, Default)]
pub struct Timings {
    pub data: Duration,
    pub train: Duration,
    pub eval: Duration,
    pub sweep: Duration,
    pub plot: Duration,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summaries: BTreeMap<HeadName, EvalSummary>,
    pub manifest: RunManifest,
    pub timings: Timings,
}

/// Process exit code for an error: 2 config, 3 numerical, 4 I/O.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 2,
        Error::Divergence { .. } | Error::Domain(_) | Error::Metric(_) | Error::Shape(_) => 3,
        Error::Io { .. } | Error::Parse { .. } => 4,
    }
}

fn load_data(paths: &RunPaths) -> Result<ExperimentData> {
    ExperimentData::load(&paths.data)
}

fn load_or_prepare_data(cfg: &ExperimentConfig, paths: &RunPaths) -> Result<ExperimentData> {
    if paths.data.join(format!("{}.csv", data::TRAIN)).exists() {
        return load_data(paths);
    }
    let d = ExperimentData::prepare(cfg)?;
    d.save(&paths.data)?;
    Ok(d)
}

fn read_summaries(cfg: &ExperimentConfig, paths: &RunPaths) -> Result<BTreeMap<HeadName, EvalSummary>> {
    let mut out = BTreeMap::new();
    for head in cfg.heads_sorted() {
        let p = head_dir(&paths.eval, head).join(SUMMARY_FILE);
        if p.exists() {
            out.insert(head, persist::read_json(&p)?);
        }
    }
    Ok(out)
}

fn write_report(cfg: &ExperimentConfig, paths: &RunPaths, summaries: &BTreeMap<HeadName, EvalSummary>) -> Result<()> {
    if summaries.is_empty() {
        return Ok(());
    }
    let text = report::render(summaries, &cfg.hash()?, cfg.seed);
    persist::write_atomic(&paths.out.join(REPORT_FILE), text.as_bytes())
}

/// Renders every plot whose CSV exists for the configured heads.
pub fn plot_all(cfg: &ExperimentConfig, paths: &RunPaths) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for head in cfg.heads_sorted() {
        let dir = head_dir(&paths.eval, head);
        let out_dir = paths.plots.join(head.slug());
        let plots: [(Option<&str>, &str, Vec<&str>); 3] = [
            (cdf_file(TestName::Correctness), "correct vs wrong predictions", vec!["correct", "wrong"]),
            (cdf_file(TestName::UnknownClass), "known vs held-out class", vec!["in", "out"]),
            (
                cdf_file(TestName::OodDomain),
                "known-class test set vs out-of-domain sets",
                vec!["in", "uniform-box", "shifted-cluster", "white-noise-ramp"],
            ),
        ];
        for (file, what, groups) in plots {
            let file = file.expect("CDF tests have files");
            let csv_path = dir.join(file);
            if !csv_path.exists() {
                continue;
            }
            let bytes = std::fs::read(&csv_path).map_err(|e| Error::Io {
                path: csv_path.clone(),
                source: e,
            })?;
            let source = format!("eval/{}/{file}", head.slug());
            let svg = plot::render_cdf_svg(&csv_path, &source, &bytes, &format!("{}: {what}", head.label()), &groups)?;
            let svg_path = out_dir.join(file.replace(".csv", ".svg"));
            persist::write_atomic(&svg_path, svg.as_bytes())?;
            written.push(svg_path);
        }
        let snr_path = dir.join(SNR_FILE);
        if snr_path.exists() {
            let bytes = std::fs::read(&snr_path).map_err(|e| Error::Io {
                path: snr_path.clone(),
                source: e,
            })?;
            let source = format!("eval/{}/{SNR_FILE}", head.slug());
            let svg = plot::render_snr_svg(&snr_path, &source, &bytes, &format!("{}: uncertainty and UAR over SNR", head.label()))?;
            let svg_path = out_dir.join("snr.svg");
            persist::write_atomic(&svg_path, svg.as_bytes())?;
            written.push(svg_path);
        }
    }
    Ok(written)
}

/// Runs one CLI stage against `cfg.output_dir` and rewrites the manifest.
pub fn run_stage(cfg: &ExperimentConfig, stage: Stage) -> Result<RunOutcome> {
    cfg.validate()?;
    let paths = RunPaths::new(&cfg.output_dir);
    let mut timings = Timings::default();
    persist::write_atomic(&paths.out.join(CONFIG_FILE), format!("{}\n", cfg.to_json()?).as_bytes())?;
    let tests = cfg.tests_sorted();
    let non_sweep: Vec<TestName> = tests.iter().copied().filter(|&t| t != TestName::SnrSweep).collect();
    let sweep: Vec<TestName> = tests.iter().copied().filter(|&t| t == TestName::SnrSweep).collect();

    match stage {
        Stage::GenData => {
            let t = Instant::now();
            ExperimentData::prepare(cfg)?.save(&paths.data)?;
            timings.data = t.elapsed();
        }
        Stage::Train => {
            let t = Instant::now();
            let data = load_or_prepare_data(cfg, &paths)?;
            timings.data = t.elapsed();
            let t = Instant::now();
            let models = train::train_all(cfg, &data)?;
            train::save_checkpoints(&paths.checkpoints, cfg.seed, &models)?;
            timings.train = t.elapsed();
        }
        Stage::Eval | Stage::Sweep => {
            let selected = if stage == Stage::Eval { &non_sweep } else { &sweep };
            if selected.is_empty() {
                if let Ok(m) = RunManifest::load(&paths.out) {
                    m.verify(&paths.out)?;
                }
                log::info!("no tests selected; nothing to compute");
            } else {
                let data = load_data(&paths)?;
                let models = train::load_checkpoints(&paths.checkpoints, &cfg.models())?;
                let t = Instant::now();
                let summaries = evaluate_all(cfg, &data, &models, selected, &paths.eval)?;
                if stage == Stage::Eval {
                    timings.eval = t.elapsed();
                } else {
                    timings.sweep = t.elapsed();
                }
                write_report(cfg, &paths, &summaries)?;
            }
        }
        Stage::Plot => {
            let t = Instant::now();
            plot_all(cfg, &paths)?;
            timings.plot = t.elapsed();
        }
        Stage::All => {
            let t = Instant::now();
            let data = ExperimentData::prepare(cfg)?;
            data.save(&paths.data)?;
            timings.data = t.elapsed();
            let t = Instant::now();
            let models = train::train_all(cfg, &data)?;
            train::save_checkpoints(&paths.checkpoints, cfg.seed, &models)?;
            timings.train = t.elapsed();
            if !non_sweep.is_empty() {
                let t = Instant::now();
                evaluate_all(cfg, &data, &models, &non_sweep, &paths.eval)?;
                timings.eval = t.elapsed();
            }
            if !sweep.is_empty() {
                let t = Instant::now();
                evaluate_all(cfg, &data, &models, &sweep, &paths.eval)?;
                timings.sweep = t.elapsed();
            }
            let summaries = read_summaries(cfg, &paths)?;
            write_report(cfg, &paths, &summaries)?;
            let t = Instant::now();
            plot_all(cfg, &paths)?;
            timings.plot = t.elapsed();
        }
    }

    let manifest = RunManifest::scan(cfg, &paths.out)?;
    manifest.write(&paths.out)?;
    Ok(RunOutcome {
        summaries: read_summaries(cfg, &paths)?,
        manifest,
        timings,
    })
}
