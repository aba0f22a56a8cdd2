use crate::error::{Error, Result};
use crate::rng::RngStream;

fn power(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// Gain `g` such that `signal + g·noise` has the requested SNR.
pub fn snr_gain(signal_power: f64, noise_power: f64, snr_db: f64) -> Result<f64> {
    if !(signal_power > 0.0 && signal_power.is_finite()) {
        return Err(Error::Domain(format!("signal power {signal_power} must be positive")));
    }
    if !(noise_power > 0.0 && noise_power.is_finite()) {
        return Err(Error::Domain(format!("noise power {noise_power} must be positive")));
    }
    if snr_db.is_nan() {
        return Err(Error::Domain("snr is NaN".into()));
    }
    Ok((signal_power / (noise_power * 10f64.powf(snr_db / 10.0))).sqrt())
}

/// Adds noise scaled to `snr_db` relative to the signal power. White
/// Gaussian noise is drawn from `rng` when `noise` is `None`. An SNR of
/// `+∞` returns the signal unchanged.
pub fn mix_at_snr(signal: &[f64], noise: Option<&[f64]>, snr_db: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
    if signal.is_empty() {
        return Err(Error::Domain("empty signal".into()));
    }
    let ps = power(signal);
    if !(ps > 0.0) {
        return Err(Error::Domain("signal has zero power".into()));
    }
    if snr_db == f64::INFINITY {
        return Ok(signal.to_vec());
    }
    let drawn;
    let noise = match noise {
        Some(n) => {
            if n.len() != signal.len() {
                return Err(Error::Shape(format!(
                    "noise length {} vs signal length {}",
                    n.len(),
                    signal.len()
                )));
            }
            n
        }
        None => {
            drawn = (0..signal.len()).map(|_| rng.standard_normal()).collect::<Vec<_>>();
            &drawn
        }
    };
    let g = snr_gain(ps, power(noise), snr_db)?;
    Ok(signal.iter().zip(noise).map(|(s, n)| s + g * n).collect())
}

/// `10·log10(P_signal / P_noise)` for an explicit noise component.
pub fn achieved_snr_db(signal: &[f64], noise_component: &[f64]) -> f64 {
    10.0 * (power(signal) / power(noise_component)).log10()
}
