use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::persist::fmt17;
use crate::rng::RngStream;

use super::config::{euclidean, ClassGeometry};
use super::dataset::{DomainTag, OodKind, Sample};

pub const WHITE_NOISE_RAMP_DEFAULT_COUNT: usize = 45;

/// Shape parameters of the OOD generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OodParams {
    /// In-distribution support per axis: class means ± this many std devs.
    #[serde(serialize_with = "fmt17::f64")]
    pub support_sigmas: f64,
    /// Uniform box half-widths relative to the support half-widths (> 1).
    #[serde(serialize_with = "fmt17::f64")]
    pub box_expansion: f64,
    /// Shifted-cluster offset from the class centroid, in separations.
    #[serde(serialize_with = "fmt17::f64")]
    pub shift_factor: f64,
    #[serde(serialize_with = "fmt17::f64")]
    pub ramp_min_std: f64,
    #[serde(serialize_with = "fmt17::f64")]
    pub ramp_max_std: f64,
}

impl Default for OodParams {
    fn default() -> Self {
        Self {
            support_sigmas: 4.0,
            box_expansion: 1.5,
            shift_factor: 6.0,
            ramp_min_std: 1e-3,
            ramp_max_std: 1e1,
        }
    }
}

impl OodParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.support_sigmas > 0.0) || !(self.box_expansion > 1.0) {
            return Err(Error::Config("uniform box must exceed a positive support".into()));
        }
        if !(self.shift_factor >= 5.0) {
            return Err(Error::Config(format!(
                "shift_factor {} must be at least 5",
                self.shift_factor
            )));
        }
        if !(self.ramp_min_std > 0.0 && self.ramp_max_std >= self.ramp_min_std && self.ramp_max_std.is_finite()) {
            return Err(Error::Config("ramp std range must be positive and ordered".into()));
        }
        Ok(())
    }

    /// Per-axis `(lo, hi)` of the uniform box.
    pub fn uniform_box(&self, geometry: &ClassGeometry) -> Vec<(f64, f64)> {
        (0..geometry.dim())
            .map(|d| {
                let lo = geometry.means().iter().map(|m| m[d]).fold(f64::INFINITY, f64::min) - self.support_sigmas;
                let hi = geometry.means().iter().map(|m| m[d]).fold(f64::NEG_INFINITY, f64::max) + self.support_sigmas;
                let mid = 0.5 * (lo + hi);
                let half = 0.5 * (hi - lo) * self.box_expansion;
                (mid - half, mid + half)
            })
            .collect()
    }

    /// Centre of the shifted cluster: the class centroid moved along a random
    /// unit direction far enough that every class mean is at least
    /// `shift_factor` separations away.
    pub fn shifted_centre(&self, geometry: &ClassGeometry, rng: &mut RngStream) -> Vec<f64> {
        let centroid = geometry.centroid();
        let radius = geometry.means().iter().map(|m| euclidean(m, &centroid)).fold(0.0, f64::max);
        let step = self.shift_factor * geometry.separation() + radius;
        let dir: Vec<f64> = loop {
            let v: Vec<f64> = (0..geometry.dim()).map(|_| rng.standard_normal()).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break v.into_iter().map(|x| x / norm).collect();
            }
        };
        centroid.iter().zip(&dir).map(|(c, u)| c + step * u).collect()
    }
}

/// Samples of one OOD kind, ids `"{id_prefix}-{i:05}"`, without labels or votes.
pub fn generate_ood_domain(
    kind: OodKind,
    n: usize,
    geometry: &ClassGeometry,
    params: &OodParams,
    id_prefix: &str,
    rng: &mut RngStream,
) -> Result<Vec<Sample>> {
    params.validate()?;
    if n == 0 {
        return Err(Error::Config("OOD sample count must be at least 1".into()));
    }
    let d = geometry.dim();
    let features: Vec<Vec<f64>> = match kind {
        OodKind::UniformBox => {
            let bounds = params.uniform_box(geometry);
            (0..n)
                .map(|_| bounds.iter().map(|&(lo, hi)| rng.uniform_range(lo, hi)).collect())
                .collect()
        }
        OodKind::ShiftedCluster => {
            let centre = params.shifted_centre(geometry, rng);
            (0..n)
                .map(|_| centre.iter().map(|c| c + rng.standard_normal()).collect())
                .collect()
        }
        OodKind::WhiteNoiseRamp => {
            let ratio = params.ramp_max_std / params.ramp_min_std;
            (0..n)
                .map(|i| {
                    let t = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                    let std = params.ramp_min_std * ratio.powf(t);
                    (0..d).map(|_| std * rng.standard_normal()).collect()
                })
                .collect()
        }
    };
    Ok(features
        .into_iter()
        .enumerate()
        .map(|(i, features)| Sample {
            id: format!("{id_prefix}-{i:05}"),
            features,
            label: None,
            rater_votes: None,
            domain: DomainTag::OodDomain(kind),
        })
        .collect())
}
