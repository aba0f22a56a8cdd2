//! Markdown summary across heads.

use std::collections::BTreeMap;
use std::fmt::Write;

use uqbench_core::eval::{EvalSummary, CI_METHOD};
use uqbench_core::synth::OodKind;

use crate::config::HeadName;

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))
}

fn with_ci(mean: Option<f64>, ci: Option<f64>) -> String {
    match (mean, ci) {
        (Some(m), Some(c)) => format!("{m:.4} ± {c:.4}"),
        (Some(m), None) => format!("{m:.4}"),
        _ => "n/a".to_string(),
    }
}

pub fn render(summaries: &BTreeMap<HeadName, EvalSummary>, config_hash: &str, seed: u64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Uncertainty benchmark report\n");
    let _ = writeln!(s, "Config hash `{config_hash}`, seed {seed}. Uncertainty is predictive entropy in nats.\n");

    let _ = writeln!(s, "## Classification on the known-class test set\n");
    let _ = writeln!(s, "| Head | UAR | Acc |\n|---|---|---|");
    for (h, e) in summaries {
        let _ = writeln!(s, "| {} | {:.4} | {:.4} |", h.label(), e.uar, e.accuracy);
    }

    let _ = writeln!(s, "\n## Separation and agreement\n");
    let _ = writeln!(s, "AUROC of wrong over correct predictions; Pearson correlation of uncertainty with rater agreement.\n");
    let _ = writeln!(s, "| Head | AUROC (wrong vs correct) | PCC (agreement) |\n|---|---|---|");
    for (h, e) in summaries {
        let _ = writeln!(s, "| {} | {} | {} |", h.label(), num(e.auroc_misclassification), num(e.pcc_agreement));
    }

    let _ = writeln!(s, "\n## Mean uncertainty, known vs held-out class\n");
    let _ = writeln!(s, "| Head | in | out | out/in |\n|---|---|---|---|");
    for (h, e) in summaries {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} |",
            h.label(),
            num(e.mean_uncertainty_in),
            num(e.mean_uncertainty_out),
            num(e.uncertainty_ratio)
        );
    }

    let _ = writeln!(s, "\n## Out-of-domain AUROC over the known-class test set\n");
    let _ = write!(s, "| Head | pooled |");
    for k in OodKind::ALL {
        let _ = write!(s, " {k} |");
    }
    let _ = writeln!(s, "\n|---|---|---|---|---|");
    for (h, e) in summaries {
        let _ = write!(s, "| {} | {} |", h.label(), num(e.auroc_ood));
        for k in OodKind::ALL {
            let _ = write!(s, " {} |", num(e.auroc_ood_by_kind.get(k.as_str()).copied()));
        }
        let _ = writeln!(s);
    }

    if summaries.values().any(|e| e.per_snr.is_some()) {
        let _ = writeln!(s, "\n## SNR sweep\n");
        let _ = writeln!(s, "Confidence intervals: {CI_METHOD}.\n");
        let _ = writeln!(s, "| Head | SNR (dB) | UAR | uncertainty (correct) | uncertainty (wrong) |\n|---|---|---|---|---|");
        for (h, e) in summaries {
            for p in e.per_snr.iter().flatten() {
                let _ = writeln!(
                    s,
                    "| {} | {} | {:.4} | {} | {} |",
                    h.label(),
                    p.snr_db,
                    p.uar,
                    with_ci(p.mean_unc_correct, p.ci95_correct),
                    with_ci(p.mean_unc_wrong, p.ci95_wrong)
                );
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_list_every_head() {
        let mut m = BTreeMap::new();
        m.insert(HeadName::CeEntropy, EvalSummary::new("CE", 0.8, 0.85));
        m.insert(HeadName::PnOut, EvalSummary::new("PN(out)", 0.75, 0.8));
        let text = render(&m, "abc", 0);
        assert!(text.contains("| CE | 0.8000 | 0.8500 |"));
        assert!(text.contains("| PN(out) | n/a | n/a | n/a |"));
        assert!(!text.contains("SNR sweep"));
    }
}
