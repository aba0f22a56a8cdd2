use crate::error::{Error, Result};

pub fn accuracy(predictions: &[usize], labels: &[usize]) -> Result<f64> {
    check_lengths(predictions.len(), labels.len())?;
    if labels.is_empty() {
        return Err(Error::Metric("accuracy of an empty set".into()));
    }
    let hits = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Unweighted average recall over classes `0..num_classes`.
pub fn uar(predictions: &[usize], labels: &[usize], num_classes: usize) -> Result<f64> {
    check_lengths(predictions.len(), labels.len())?;
    let mut support = vec![0usize; num_classes];
    let mut hits = vec![0usize; num_classes];
    for (&p, &l) in predictions.iter().zip(labels) {
        if l >= num_classes {
            return Err(Error::Metric(format!("label {l} out of range for {num_classes} classes")));
        }
        support[l] += 1;
        if p == l {
            hits[l] += 1;
        }
    }
    if let Some(k) = support.iter().position(|&n| n == 0) {
        return Err(Error::Metric(format!("class {k} has no samples")));
    }
    let total: f64 = hits.iter().zip(&support).map(|(&h, &n)| h as f64 / n as f64).sum();
    Ok(total / num_classes as f64)
}

/// Pearson correlation coefficient.
pub fn pcc(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x.len(), y.len())?;
    if x.len() < 2 {
        return Err(Error::Metric("correlation needs at least two points".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Metric("correlation of non-finite values".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Metric("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x.len(), y.len())?;
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::Metric("rank correlation of NaN".into()));
    }
    pcc(&average_ranks(x), &average_ranks(y))
}

/// 1-based ranks with ties sharing their mean rank.
pub(crate) fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Probability that a random positive scores above a random negative, ties
/// counted ½, from the Mann–Whitney rank sum.
pub fn auroc(positive: &[f64], negative: &[f64]) -> Result<f64> {
    check_groups(positive, negative)?;
    let mut all = Vec::with_capacity(positive.len() + negative.len());
    all.extend_from_slice(positive);
    all.extend_from_slice(negative);
    let ranks = average_ranks(&all);
    let rank_sum: f64 = ranks[..positive.len()].iter().sum();
    let n1 = positive.len() as f64;
    let u = rank_sum - n1 * (n1 + 1.0) / 2.0;
    Ok(u / (n1 * negative.len() as f64))
}

/// Pairwise-enumeration AUROC; quadratic, used as a reference.
pub fn auroc_brute_force(positive: &[f64], negative: &[f64]) -> Result<f64> {
    check_groups(positive, negative)?;
    let mut wins = 0.0;
    for p in positive {
        for n in negative {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (positive.len() as f64 * negative.len() as f64))
}

/// Mean with a normal-approximation 95% half-width `1.96·sd/√n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanCi {
    pub mean: f64,
    /// Absent for a single value.
    pub half_width: Option<f64>,
    pub n: usize,
}

/// `None` for an empty slice.
pub fn mean_ci95(values: &[f64]) -> Option<MeanCi> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let half_width = (values.len() > 1).then(|| {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        1.96 * var.sqrt() / n.sqrt()
    });
    Some(MeanCi {
        mean,
        half_width,
        n: values.len(),
    })
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("length {a} vs {b}")));
    }
    Ok(())
}

fn check_groups(positive: &[f64], negative: &[f64]) -> Result<()> {
    if positive.is_empty() || negative.is_empty() {
        return Err(Error::Metric("AUROC needs two nonempty groups".into()));
    }
    if positive.iter().chain(negative).any(|v| v.is_nan()) {
        return Err(Error::Metric("AUROC of NaN scores".into()));
    }
    Ok(())
}
