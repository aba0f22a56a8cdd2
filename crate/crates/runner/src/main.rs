use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use uqbench::config::ExperimentConfig;
use uqbench::{exit_code, run_stage, Stage};

#[derive(Parser)]
#[command(version, about = "Uncertainty quantification benchmark on synthetic classification data")]
struct Cli {
    /// Experiment configuration (JSON). Defaults apply to omitted fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate and save the datasets.
    GenData,
    /// Train the models required by the configured heads.
    Train,
    /// Run every configured test except the SNR sweep.
    Eval,
    /// Run the SNR sweep.
    Sweep,
    /// Render SVG plots from the CSV results.
    Plot,
    /// Everything above in order.
    All,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(path) => match ExperimentConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(exit_code(&e) as u8);
            }
        },
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    let stage = match cli.command {
        Command::GenData => Stage::GenData,
        Command::Train => Stage::Train,
        Command::Eval => Stage::Eval,
        Command::Sweep => Stage::Sweep,
        Command::Plot => Stage::Plot,
        Command::All => Stage::All,
    };
    match run_stage(&cfg, stage) {
        Ok(outcome) => {
            let evaluated = matches!(stage, Stage::Eval | Stage::Sweep | Stage::All);
            for (head, s) in outcome.summaries.iter().filter(|_| evaluated) {
                println!(
                    "{:<8} UAR {:.4}  Acc {:.4}  AUROC(wrong) {}  AUROC(ood) {}",
                    head.label(),
                    s.uar,
                    s.accuracy,
                    s.auroc_misclassification.map_or("n/a".into(), |v| format!("{v:.4}")),
                    s.auroc_ood.map_or("n/a".into(), |v| format!("{v:.4}")),
                );
            }
            println!("manifest: {}", cfg.output_dir.join(uqbench::manifest::MANIFEST_FILE).display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
