//! Run manifest: every artifact under the output directory, by role.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use uqbench_core::{persist, Error, Result};

use crate::config::ExperimentConfig;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub experiment: u64,
    pub data: u64,
    pub train: u64,
    pub eval_noise: u64,
}

/// Paths are relative to the output directory, with `/` separators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_hash: String,
    pub seeds: Seeds,
    pub config: Option<String>,
    pub data: Vec<String>,
    pub checkpoints: BTreeMap<String, String>,
    pub summaries: BTreeMap<String, String>,
    pub artifacts: Vec<String>,
}

fn walk(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    entries.sort_by_key(|e| e.file_name());
    for entry in entries {
        let path = entry.path();
        if path.is_dir() {
            walk(root, &path, out)?;
        } else {
            let rel = path.strip_prefix(root).expect("walked under root");
            let rel = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join("/");
            if rel != MANIFEST_FILE && !rel.ends_with(".tmp") {
                out.push(rel);
            }
        }
    }
    Ok(())
}

impl RunManifest {
    /// Indexes every file currently under `out_dir`.
    pub fn scan(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Self> {
        let mut files = Vec::new();
        if out_dir.exists() {
            walk(out_dir, out_dir, &mut files)?;
        }
        files.sort();
        let mut m = RunManifest {
            tool_version: TOOL_VERSION.to_string(),
            config_hash: cfg.hash()?,
            seeds: Seeds {
                experiment: cfg.seed,
                data: cfg.seed,
                train: cfg.seed,
                eval_noise: cfg.seed,
            },
            config: None,
            data: Vec::new(),
            checkpoints: BTreeMap::new(),
            summaries: BTreeMap::new(),
            artifacts: Vec::new(),
        };
        for f in files {
            let parts: Vec<&str> = f.split('/').collect();
            match parts.as_slice() {
                ["config.json"] => m.config = Some(f.clone()),
                ["data", ..] => m.data.push(f.clone()),
                ["checkpoints", name] => {
                    let key = name.trim_end_matches(".json").to_string();
                    m.checkpoints.insert(key, f.clone());
                }
                ["eval", head, "summary.json"] => {
                    m.summaries.insert(head.to_string(), f.clone());
                }
                _ => m.artifacts.push(f.clone()),
            }
        }
        Ok(m)
    }

    pub fn all_paths(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.config.iter().map(String::as_str).collect();
        out.extend(self.data.iter().map(String::as_str));
        out.extend(self.checkpoints.values().map(String::as_str));
        out.extend(self.summaries.values().map(String::as_str));
        out.extend(self.artifacts.iter().map(String::as_str));
        out
    }

    /// Every referenced file exists under `out_dir`.
    pub fn verify(&self, out_dir: &Path) -> Result<()> {
        for p in self.all_paths() {
            let path: PathBuf = out_dir.join(p);
            if !path.is_file() {
                return Err(Error::Io {
                    path,
                    source: std::io::Error::new(std::io::ErrorKind::NotFound, "listed in manifest but missing"),
                });
            }
        }
        Ok(())
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        self.verify(out_dir)?;
        let path = out_dir.join(MANIFEST_FILE);
        persist::write_json(&path, self)?;
        Ok(path)
    }

    pub fn load(out_dir: &Path) -> Result<Self> {
        persist::read_json(&out_dir.join(MANIFEST_FILE))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classifies_files() {
        let dir = tempfile::tempdir().unwrap();
        for f in [
            "config.json",
            "data/train.csv",
            "checkpoints/ce.json",
            "eval/edl/summary.json",
            "eval/edl/snr.csv",
            "report.md",
        ] {
            persist::write_atomic(&dir.path().join(f), b"x").unwrap();
        }
        let m = RunManifest::scan(&ExperimentConfig::default(), dir.path()).unwrap();
        assert_eq!(m.config.as_deref(), Some("config.json"));
        assert_eq!(m.data, vec!["data/train.csv"]);
        assert_eq!(m.checkpoints["ce"], "checkpoints/ce.json");
        assert_eq!(m.summaries["edl"], "eval/edl/summary.json");
        assert_eq!(m.artifacts, vec!["eval/edl/snr.csv", "report.md"]);
        m.write(dir.path()).unwrap();
        assert_eq!(RunManifest::load(dir.path()).unwrap(), m);
        std::fs::remove_file(dir.path().join("report.md")).unwrap();
        assert!(m.verify(dir.path()).is_err());
    }
}
