use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Additive PMU error. Magnitude parameters are percent of reading, angle
/// parameters degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum NoiseModel {
    Gaussian { std_mag: f64, std_ang: f64 },
    Gmm2 { means_mag: [f64; 2], means_ang: [f64; 2], stds_mag: [f64; 2], stds_ang: [f64; 2], weights: [f64; 2] },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    Magnitude,
    Angle,
}

impl NoiseModel {
    pub fn none() -> Self {
        NoiseModel::Gaussian { std_mag: 0.0, std_ang: 0.0 }
    }

    /// Zero-mean baseline: 0.2 % magnitude, 0.1° angle.
    pub fn default_gaussian() -> Self {
        NoiseModel::Gaussian { std_mag: 0.2, std_ang: 0.1 }
    }

    /// Two-component mixture fitted to field PMU errors.
    pub fn default_gmm() -> Self {
        NoiseModel::Gmm2 {
            means_mag: [-0.4, 0.6],
            means_ang: [-0.2, 0.3],
            stds_mag: [0.25, 0.25],
            stds_ang: [0.12, 0.12],
            weights: [0.4, 0.6],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        match self {
            NoiseModel::Gaussian { std_mag, std_ang } => {
                if !ok(*std_mag) || !ok(*std_ang) {
                    return Err(Error::Config("noise standard deviations must be finite and non-negative".into()));
                }
            }
            NoiseModel::Gmm2 { means_mag, means_ang, stds_mag, stds_ang, weights } => {
                if !stds_mag.iter().chain(stds_ang).all(|&s| ok(s)) {
                    return Err(Error::Config("noise standard deviations must be finite and non-negative".into()));
                }
                if !means_mag.iter().chain(means_ang).all(|m| m.is_finite()) {
                    return Err(Error::Config("noise means must be finite".into()));
                }
                if !weights.iter().all(|&w| ok(w)) || (weights[0] + weights[1] - 1.0).abs() > 1e-9 {
                    return Err(Error::Config(format!("mixture weights must be non-negative and sum to 1, got {weights:?}")));
                }
            }
        }
        Ok(())
    }

    /// Analytic mean and variance of the error for `kind`.
    pub fn moments(&self, kind: NoiseKind) -> (f64, f64) {
        match self {
            NoiseModel::Gaussian { std_mag, std_ang } => {
                let s = if kind == NoiseKind::Magnitude { *std_mag } else { *std_ang };
                (0.0, s * s)
            }
            NoiseModel::Gmm2 { .. } => {
                let (means, stds, w) = self.mixture(kind);
                let mean = w[0] * means[0] + w[1] * means[1];
                let second: f64 = (0..2).map(|k| w[k] * (stds[k] * stds[k] + means[k] * means[k])).sum();
                (mean, second - mean * mean)
            }
        }
    }

    fn mixture(&self, kind: NoiseKind) -> ([f64; 2], [f64; 2], [f64; 2]) {
        match self {
            NoiseModel::Gaussian { std_mag, std_ang } => {
                let s = if kind == NoiseKind::Magnitude { *std_mag } else { *std_ang };
                ([0.0, 0.0], [s, s], [1.0, 0.0])
            }
            NoiseModel::Gmm2 { means_mag, means_ang, stds_mag, stds_ang, weights } => match kind {
                NoiseKind::Magnitude => (*means_mag, *stds_mag, *weights),
                NoiseKind::Angle => (*means_ang, *stds_ang, *weights),
            },
        }
    }
}

/// Draw one error: percent for magnitudes, degrees for angles.
pub fn sample_noise<R: Rng + ?Sized>(model: &NoiseModel, rng: &mut R, kind: NoiseKind) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    match model {
        NoiseModel::Gaussian { .. } => {
            let (_, stds, _) = model.mixture(kind);
            stds[0] * z
        }
        NoiseModel::Gmm2 { .. } => {
            let (means, stds, w) = model.mixture(kind);
            let u: f64 = rng.gen();
            let k = usize::from(u >= w[0]);
            means[k] + stds[k] * z
        }
    }
}

/// Noise applied to voltage and current channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmuNoise {
    pub voltage: NoiseModel,
    pub current: NoiseModel,
}

impl From<NoiseModel> for PmuNoise {
    fn from(m: NoiseModel) -> Self {
        PmuNoise { voltage: m.clone(), current: m }
    }
}

impl PmuNoise {
    pub fn validate(&self) -> Result<()> {
        self.voltage.validate()?;
        self.current.validate()
    }

    /// Parse either a single noise model (used for both channel kinds) or an
    /// object with `voltage` and `current` models.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let noise = if value.get("type").is_some() {
            PmuNoise::from(serde_json::from_value::<NoiseModel>(value)?)
        } else {
            serde_json::from_value(value)?
        };
        noise.validate()?;
        Ok(noise)
    }

    pub fn label(&self) -> String {
        let name = |m: &NoiseModel| match m {
            NoiseModel::Gaussian { std_mag, std_ang } if *std_mag == 0.0 && *std_ang == 0.0 => "none",
            NoiseModel::Gaussian { .. } => "gaussian",
            NoiseModel::Gmm2 { .. } => "gmm",
        };
        if self.voltage == self.current {
            name(&self.voltage).to_string()
        } else {
            format!("{}+{}", name(&self.voltage), name(&self.current))
        }
    }
}
