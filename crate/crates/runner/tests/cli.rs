//! End-to-end CLI runs on a small configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use uqbench::manifest::RunManifest;

fn small_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("small.json");
    let json = format!(
        r#"{{
  "data": {{ "train_size": 600, "dev_size": 100, "test_size": 300, "ood_test_size": 100, "ramp_size": 12 }},
  "train": {{ "learning_rate": 0.003, "epochs": 2 }},
  "mc_passes": 4,
  "snr_grid": [30, 0, -10]{extra}
}}"#
    );
    fs::write(&path, json).unwrap();
    path
}

fn uqbench(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uqbench"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out.remove(Path::new("config.json"));
    out
}

#[test]
fn staged_commands_match_a_single_full_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "");
    let staged = tmp.path().join("staged");
    for stage in ["gen-data", "train", "eval", "sweep", "plot"] {
        assert_ok(&uqbench(&[stage], &cfg, &staged));
    }
    let full = tmp.path().join("full");
    let out = uqbench(&["all"], &cfg, &full);
    assert_ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    for label in ["CE", "MC", "EDL", "PN(in)", "PN(out)"] {
        assert!(stdout.contains(label), "{stdout}");
    }

    let (a, b) = (files(&staged), files(&full));
    assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
    for (path, bytes) in &a {
        assert!(bytes == &b[path], "{} differs", path.display());
    }

    for model in ["ce", "edl", "pn-in", "pn-out"] {
        assert!(full.join("checkpoints").join(format!("{model}.json")).is_file());
    }
    for head in ["ce-entropy", "mc-dropout", "edl", "pn-in", "pn-out"] {
        let eval = full.join("eval").join(head);
        for f in ["summary.json", "records.csv", "snr.csv", "cdf-correctness.csv", "cdf-ood-domain.csv"] {
            assert!(eval.join(f).is_file(), "{head}/{f}");
        }
        assert!(full.join("plots").join(head).read_dir().unwrap().count() >= 4);
    }
    let report = fs::read_to_string(full.join("report.md")).unwrap();
    assert!(report.contains("| PN(out) |"));

    let manifest = RunManifest::load(&full).unwrap();
    manifest.verify(&full).unwrap();
    assert_eq!(manifest.checkpoints.len(), 4);
    assert_eq!(manifest.summaries.len(), 5);
}

#[test]
fn baselines_train_a_single_model() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), r#", "heads": ["ce-entropy", "mc-dropout"], "tests": ["correctness"]"#);
    let out_dir = tmp.path().join("run");
    assert_ok(&uqbench(&["train"], &cfg, &out_dir));
    let names: Vec<String> = fs::read_dir(out_dir.join("checkpoints"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, vec!["ce.json".to_string()]);
}

#[test]
fn missing_checkpoint_is_an_io_error_naming_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "");
    let out_dir = tmp.path().join("run");
    assert_ok(&uqbench(&["gen-data"], &cfg, &out_dir));
    let out = uqbench(&["eval"], &cfg, &out_dir);
    assert_eq!(out.status.code(), Some(4));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("checkpoints") && stderr.contains(".json"), "{stderr}");
}

#[test]
fn empty_test_selection_computes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), r#", "tests": []"#);
    let out_dir = tmp.path().join("run");
    assert_ok(&uqbench(&["eval"], &cfg, &out_dir));
    assert!(!out_dir.join("eval").exists());
}

#[test]
fn bad_config_exits_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let unknown = small_config(tmp.path(), r#", "no_such_field": 1"#);
    assert_eq!(uqbench(&["gen-data"], &unknown, &tmp.path().join("a")).status.code(), Some(2));

    let invalid = small_config(tmp.path(), r#", "heads": ["pn-out"], "pn_ood_fraction": 0.0"#);
    assert_eq!(uqbench(&["gen-data"], &invalid, &tmp.path().join("b")).status.code(), Some(2));
}

#[test]
fn seed_flag_controls_the_data() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "");
    let run = |seed: &str, name: &str| {
        let dir = tmp.path().join(name);
        assert_ok(&uqbench(&["gen-data", "--seed", seed], &cfg, &dir));
        fs::read(dir.join("data/train.csv")).unwrap()
    };
    let (a, b, c) = (run("5", "a"), run("5", "b"), run("6", "c"));
    assert_eq!(a, b);
    assert_ne!(a, c);
}
