use std::collections::BTreeSet;

use crate::error::{Error, Result};

use super::dataset::{Dataset, DatasetMeta, DomainTag};

#[derive(Debug, Clone, PartialEq)]
pub struct HoldoutSplit {
    /// Remaining classes relabelled to `0..K−|heldout|`.
    pub in_dataset: Dataset,
    /// Held-out samples with their original labels, tagged `heldout-class`.
    pub heldout_dataset: Dataset,
    /// `label_map[new] = original`.
    pub label_map: Vec<usize>,
}

pub fn holdout_class_split(dataset: &Dataset, heldout: &[usize]) -> Result<HoldoutSplit> {
    let k = dataset.num_classes();
    let held: BTreeSet<usize> = heldout.iter().copied().collect();
    if held.is_empty() {
        return Err(Error::Config("held-out class set is empty".into()));
    }
    if let Some(&c) = held.iter().find(|&&c| c >= k) {
        return Err(Error::Config(format!("held-out class {c} out of range for {k} classes")));
    }
    if held.len() == k {
        return Err(Error::Config("cannot hold out every class".into()));
    }

    let label_map: Vec<usize> = (0..k).filter(|c| !held.contains(c)).collect();
    let mut inverse = vec![None; k];
    for (new, &old) in label_map.iter().enumerate() {
        inverse[old] = Some(new);
    }

    let mut kept = Vec::new();
    let mut out = Vec::new();
    for s in &dataset.samples {
        let label = s
            .label
            .ok_or_else(|| Error::Config(format!("sample {} is unlabelled", s.id)))?;
        match inverse[label] {
            Some(new) => {
                let mut s = s.clone();
                s.label = Some(new);
                // Votes for held-out classes have no counterpart after
                // relabelling, so votes keep the original class indices.
                kept.push(s);
            }
            None => {
                let mut s = s.clone();
                s.domain = DomainTag::HeldoutClass;
                out.push(s);
            }
        }
    }

    let in_meta = DatasetMeta {
        num_classes: label_map.len(),
        label_map: Some(label_map.clone()),
        ..dataset.meta.clone()
    };
    Ok(HoldoutSplit {
        in_dataset: Dataset::new(in_meta, kept)?,
        heldout_dataset: Dataset::new(dataset.meta.clone(), out)?,
        label_map,
    })
}
