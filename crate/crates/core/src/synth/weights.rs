use crate::error::{Error, Result};

/// Inverse-frequency weights `n / (K·n_k)`; balanced data gives all ones.
pub fn class_weights(labels: &[usize], num_classes: usize) -> Result<Vec<f64>> {
    let mut counts = vec![0usize; num_classes];
    for &l in labels {
        if l >= num_classes {
            return Err(Error::Config(format!("label {l} out of range for {num_classes} classes")));
        }
        counts[l] += 1;
    }
    if let Some(k) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Config(format!("class {k} has no samples")));
    }
    let n = labels.len() as f64;
    Ok(counts
        .iter()
        .map(|&c| n / (num_classes as f64 * c as f64))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels_from_counts(counts: &[usize]) -> Vec<usize> {
        counts
            .iter()
            .enumerate()
            .flat_map(|(k, &c)| std::iter::repeat_n(k, c))
            .collect()
    }

    #[test]
    fn balanced_is_all_ones() {
        let w = class_weights(&labels_from_counts(&[25, 25, 25, 25]), 4).unwrap();
        assert_eq!(w, vec![1.0; 4]);
    }

    #[test]
    fn skewed_counts() {
        let counts = [60, 26, 8, 6];
        let w = class_weights(&labels_from_counts(&counts), 4).unwrap();
        let expected = [100.0 / 240.0, 100.0 / 104.0, 100.0 / 32.0, 100.0 / 24.0];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        let total: f64 = w.iter().zip(counts).map(|(w, c)| w * c as f64).sum();
        assert!((total - 100.0).abs() < 1e-12);
    }

    #[test]
    fn empty_class_is_an_error() {
        assert!(matches!(class_weights(&[0, 1, 1], 3), Err(Error::Config(_))));
    }
}
