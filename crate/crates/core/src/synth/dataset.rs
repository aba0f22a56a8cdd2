use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::persist;
use crate::tensor::Tensor2;

use super::clusters::agreement;
use super::config::SyntheticConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }

    pub(crate) fn stream_id(self) -> u64 {
        match self {
            Split::Train => 100,
            Split::Dev => 101,
            Split::Test => 102,
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown split {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OodKind {
    UniformBox,
    ShiftedCluster,
    WhiteNoiseRamp,
}

impl OodKind {
    pub const ALL: [OodKind; 3] = [OodKind::UniformBox, OodKind::ShiftedCluster, OodKind::WhiteNoiseRamp];

    pub fn as_str(self) -> &'static str {
        match self {
            OodKind::UniformBox => "uniform-box",
            OodKind::ShiftedCluster => "shifted-cluster",
            OodKind::WhiteNoiseRamp => "white-noise-ramp",
        }
    }
}

impl fmt::Display for OodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OodKind::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown ood kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DomainTag {
    InDist,
    HeldoutClass,
    OodDomain(OodKind),
}

impl fmt::Display for DomainTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainTag::InDist => f.write_str("in-dist"),
            DomainTag::HeldoutClass => f.write_str("heldout-class"),
            DomainTag::OodDomain(kind) => write!(f, "ood-domain:{kind}"),
        }
    }
}

impl FromStr for DomainTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in-dist" => Ok(DomainTag::InDist),
            "heldout-class" => Ok(DomainTag::HeldoutClass),
            _ => match s.strip_prefix("ood-domain:") {
                Some(kind) => Ok(DomainTag::OodDomain(kind.parse()?)),
                None => Err(Error::Config(format!("unknown domain tag {s:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub features: Vec<f64>,
    /// Absent for domain-OOD samples.
    pub label: Option<usize>,
    pub rater_votes: Option<Vec<usize>>,
    pub domain: DomainTag,
}

impl Sample {
    pub fn agreement(&self, num_classes: usize) -> Option<f64> {
        self.rater_votes.as_deref().map(|v| agreement(v, num_classes))
    }
}

/// Everything in a dataset besides the samples. Written as the JSON sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub split: Split,
    pub num_classes: usize,
    pub feature_dim: usize,
    /// Hash of the generating configuration.
    pub provenance: String,
    pub config: SyntheticConfig,
    /// `label_map[new] = original` after a class holdout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_map: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn new(meta: DatasetMeta, samples: Vec<Sample>) -> Result<Self> {
        let ds = Self { meta, samples };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.samples.len());
        let k = self.meta.num_classes;
        for s in &self.samples {
            if !seen.insert(s.id.as_str()) {
                return Err(Error::Config(format!("duplicate sample id {}", s.id)));
            }
            if s.features.len() != self.meta.feature_dim {
                return Err(Error::Shape(format!(
                    "sample {} has {} features, expected {}",
                    s.id,
                    s.features.len(),
                    self.meta.feature_dim
                )));
            }
            if s.label.is_some_and(|l| l >= k) {
                return Err(Error::Config(format!("sample {} label out of range", s.id)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.meta.num_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.meta.feature_dim
    }

    pub fn features(&self) -> Tensor2 {
        let mut data = Vec::with_capacity(self.len() * self.feature_dim());
        for s in &self.samples {
            data.extend_from_slice(&s.features);
        }
        Tensor2::new(self.len(), self.feature_dim(), data).expect("validated dataset")
    }

    pub fn ids(&self) -> Vec<String> {
        self.samples.iter().map(|s| s.id.clone()).collect()
    }

    pub fn labels(&self) -> Vec<Option<usize>> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Labels of a fully labelled dataset.
    pub fn class_labels(&self) -> Result<Vec<usize>> {
        self.samples
            .iter()
            .map(|s| s.label.ok_or_else(|| Error::Config(format!("sample {} is unlabelled", s.id))))
            .collect()
    }

    pub fn agreements(&self) -> Vec<Option<f64>> {
        let k = self.num_classes();
        self.samples.iter().map(|s| s.agreement(k)).collect()
    }

    /// Writes `<stem>.csv`, `<stem>.meta.json` and, if any sample carries
    /// votes, `<stem>.votes.csv`. Returns the paths written.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        let data_path = dir.join(format!("{stem}.csv"));
        let meta_path = dir.join(format!("{stem}.meta.json"));
        let votes_path = dir.join(format!("{stem}.votes.csv"));

        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![
            "id".to_string(),
            "split".into(),
            "domain_tag".into(),
            "label".into(),
            "agreement".into(),
        ];
        header.extend((0..self.feature_dim()).map(|i| format!("f{i}")));
        w.write_record(&header).map_err(|e| Error::parse(&data_path, e))?;
        let k = self.num_classes();
        for s in &self.samples {
            let mut rec = vec![
                s.id.clone(),
                self.meta.split.to_string(),
                s.domain.to_string(),
                s.label.map(|l| l.to_string()).unwrap_or_default(),
                s.agreement(k).map(|a| a.to_string()).unwrap_or_default(),
            ];
            rec.extend(s.features.iter().map(|x| x.to_string()));
            w.write_record(&rec).map_err(|e| Error::parse(&data_path, e))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::parse(&data_path, e))?;
        persist::write_atomic(&data_path, &bytes)?;
        persist::write_json(&meta_path, &self.meta)?;
        let mut written = vec![data_path, meta_path];

        if self.samples.iter().any(|s| s.rater_votes.is_some()) {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["id", "rater", "vote"]).map_err(|e| Error::parse(&votes_path, e))?;
            for s in &self.samples {
                for (r, v) in s.rater_votes.iter().flatten().enumerate() {
                    w.write_record([s.id.as_str(), &r.to_string(), &v.to_string()])
                        .map_err(|e| Error::parse(&votes_path, e))?;
                }
            }
            let bytes = w.into_inner().map_err(|e| Error::parse(&votes_path, e))?;
            persist::write_atomic(&votes_path, &bytes)?;
            written.push(votes_path);
        }
        Ok(written)
    }

    pub fn load(dir: &Path, stem: &str) -> Result<Self> {
        let data_path = dir.join(format!("{stem}.csv"));
        let meta_path = dir.join(format!("{stem}.meta.json"));
        let votes_path = dir.join(format!("{stem}.votes.csv"));
        let meta: DatasetMeta = persist::read_json(&meta_path)?;

        let mut rdr = csv::Reader::from_path(&data_path).map_err(|e| csv_error(&data_path, e))?;
        let mut samples = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| csv_error(&data_path, e))?;
            let bad = |detail: String| Error::parse(&data_path, format!("line {}: {detail}", line_of(&rec)));
            if rec.len() != 5 + meta.feature_dim {
                return Err(bad(format!("row has {} fields", rec.len())));
            }
            let label = match &rec[3] {
                "" => None,
                l => Some(l.parse().map_err(|e| bad(format!("label {l:?}: {e}")))?),
            };
            let features = (5..rec.len())
                .map(|i| rec[i].parse::<f64>().map_err(|e| bad(format!("feature {:?}: {e}", &rec[i]))))
                .collect::<Result<Vec<_>>>()?;
            samples.push(Sample {
                id: rec[0].to_string(),
                features,
                label,
                rater_votes: None,
                domain: rec[2].parse().map_err(|e: Error| bad(e.to_string()))?,
            });
        }

        if votes_path.exists() {
            let index: std::collections::HashMap<String, usize> =
                samples.iter().enumerate().map(|(i, s)| (s.id.clone(), i)).collect();
            let mut rdr = csv::Reader::from_path(&votes_path).map_err(|e| csv_error(&votes_path, e))?;
            for rec in rdr.records() {
                let rec = rec.map_err(|e| csv_error(&votes_path, e))?;
                let bad = |detail: String| Error::parse(&votes_path, format!("line {}: {detail}", line_of(&rec)));
                if rec.len() != 3 {
                    return Err(bad(format!("row has {} fields", rec.len())));
                }
                let i = *index.get(&rec[0]).ok_or_else(|| bad(format!("unknown id {}", &rec[0])))?;
                let vote: usize = rec[2].parse().map_err(|e| bad(format!("vote {:?}: {e}", &rec[2])))?;
                samples[i].rater_votes.get_or_insert_with(Vec::new).push(vote);
            }
        }
        Dataset::new(meta, samples)
    }
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, format!("{other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_round_trip() {
        for tag in [
            DomainTag::InDist,
            DomainTag::HeldoutClass,
            DomainTag::OodDomain(OodKind::UniformBox),
            DomainTag::OodDomain(OodKind::ShiftedCluster),
            DomainTag::OodDomain(OodKind::WhiteNoiseRamp),
        ] {
            assert_eq!(tag.to_string().parse::<DomainTag>().unwrap(), tag);
        }
        assert!("ood-domain:nope".parse::<DomainTag>().is_err());
        for s in Split::ALL {
            assert_eq!(s.to_string().parse::<Split>().unwrap(), s);
        }
    }
}
