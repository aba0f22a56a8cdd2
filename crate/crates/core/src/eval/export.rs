use super::cdf::CdfCurve;
use super::protocol::SnrPoint;
use crate::error::{Error, Result};
use crate::uq::UncertaintyRecord;

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| Error::Metric(format!("csv buffer: {e}")))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Metric(format!("csv encoding: {e}"))
}

/// Per-sample scores; `entropy_normalized` divides by `ln K`.
pub fn records_csv(records: &[UncertaintyRecord], num_classes: usize) -> Result<Vec<u8>> {
    let ln_k = (num_classes as f64).ln();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "sample_id",
        "predicted_class",
        "label",
        "correct",
        "entropy_nats",
        "entropy_normalized",
        "mc_variance",
        "precision",
        "u_mass",
    ])
    .map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.sample_id.clone(),
            r.predicted_class.to_string(),
            opt(r.label),
            opt(r.correct),
            r.entropy_nats.to_string(),
            (r.entropy_nats / ln_k).to_string(),
            opt(r.mc_variance),
            opt(r.precision),
            opt(r.u_mass),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

/// `group,value,cum_frac` rows for every curve in order.
pub fn cdf_csv(curves: &[&CdfCurve]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["group", "value", "cum_frac"]).map_err(csv_err)?;
    for c in curves {
        for (v, f) in c.values.iter().zip(&c.fractions) {
            w.write_record([c.group.as_str(), &v.to_string(), &f.to_string()])
                .map_err(csv_err)?;
        }
    }
    finish(w)
}

/// Absent group statistics are written as empty fields.
pub fn snr_csv(points: &[SnrPoint]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "snr_db",
        "uar",
        "mean_unc_correct",
        "ci95_correct",
        "mean_unc_wrong",
        "ci95_wrong",
    ])
    .map_err(csv_err)?;
    for p in points {
        w.write_record([
            p.snr_db.to_string(),
            p.uar.to_string(),
            opt(p.mean_unc_correct),
            opt(p.ci95_correct),
            opt(p.mean_unc_wrong),
            opt(p.ci95_wrong),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::empirical_cdf;

    #[test]
    fn cdf_rows() {
        let a = empirical_cdf("correct", &[0.2, 0.1]);
        let b = empirical_cdf("wrong", &[0.5]);
        let text = String::from_utf8(cdf_csv(&[&a, &b]).unwrap()).unwrap();
        assert_eq!(text, "group,value,cum_frac\ncorrect,0.1,0.5\ncorrect,0.2,1\nwrong,0.5,1\n");
    }

    #[test]
    fn absent_means_are_blank() {
        let p = SnrPoint {
            snr_db: 30.0,
            uar: 1.0,
            accuracy: 1.0,
            mean_unc_correct: Some(0.25),
            ci95_correct: Some(0.01),
            n_correct: 10,
            mean_unc_wrong: None,
            ci95_wrong: None,
            n_wrong: 0,
        };
        let text = String::from_utf8(snr_csv(&[p]).unwrap()).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "30,1,0.25,0.01,,");
    }
}
