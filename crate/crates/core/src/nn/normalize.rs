use serde::{Deserialize, Serialize};

use crate::powerflow::Dataset;
use crate::{Error, Result};

/// Z-score statistics per input and per output position of a flattened
/// sample (`node-major, feature-major`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub in_mean: Vec<f64>,
    pub in_std: Vec<f64>,
    pub out_mean: Vec<f64>,
    pub out_std: Vec<f64>,
    /// Outputs constant over the training set (e.g. generator voltage
    /// setpoints, the slack angle); predicted as their mean.
    #[serde(default)]
    pub out_fixed: Vec<bool>,
}

/// Positions whose spread falls below this keep unit scale.
const MIN_STD: f64 = 1e-9;

fn column_stats(values: &[f64], width: usize) -> (Vec<f64>, Vec<f64>, Vec<bool>) {
    let n = values.len() / width;
    let mut mean = vec![0.0; width];
    for row in values.chunks_exact(width) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; width];
    for row in values.chunks_exact(width) {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let sd: Vec<f64> = var.into_iter().map(|s| (s / n as f64).sqrt()).collect();
    let fixed = sd.iter().map(|&s| s < MIN_STD).collect();
    let std = sd.into_iter().map(|s| if s < MIN_STD { 1.0 } else { s }).collect();
    (mean, std, fixed)
}

impl Normalizer {
    pub fn fit(dataset: &Dataset) -> Result<Self> {
        Self::from_samples(&dataset.features, &dataset.labels, dataset.sample_len())
    }

    /// Statistics of flattened `width`-long samples.
    pub fn from_samples(features: &[f64], labels: &[f64], width: usize) -> Result<Self> {
        if width == 0 || features.is_empty() || features.len() % width != 0 || labels.len() != features.len() {
            return Err(Error::Shape(format!(
                "{} features and {} labels do not form whole {width}-wide samples",
                features.len(),
                labels.len()
            )));
        }
        let (in_mean, in_std, _) = column_stats(features, width);
        let (out_mean, out_std, out_fixed) = column_stats(labels, width);
        Ok(Normalizer { in_mean, in_std, out_mean, out_std, out_fixed })
    }

    pub fn width(&self) -> usize {
        self.in_mean.len()
    }

    fn check(&self, values: &[f64]) -> Result<()> {
        if values.len() % self.width() != 0 {
            return Err(Error::Shape(format!("{} values is not a whole number of {}-wide samples", values.len(), self.width())));
        }
        Ok(())
    }

    pub fn inputs(&self, values: &[f64]) -> Result<Vec<f64>> {
        self.check(values)?;
        Ok(scale(values, &self.in_mean, &self.in_std))
    }

    pub fn outputs(&self, values: &[f64]) -> Result<Vec<f64>> {
        self.check(values)?;
        Ok(scale(values, &self.out_mean, &self.out_std))
    }

    pub fn denormalize_outputs(&self, values: &[f64]) -> Result<Vec<f64>> {
        self.check(values)?;
        let w = self.width();
        Ok(values
            .iter()
            .enumerate()
            .map(|(i, v)| if self.is_fixed(i % w) { self.out_mean[i % w] } else { v * self.out_std[i % w] + self.out_mean[i % w] })
            .collect())
    }

    pub fn is_fixed(&self, col: usize) -> bool {
        self.out_fixed.get(col).copied().unwrap_or(false)
    }

    /// Loss weight per output position: zero for fixed outputs.
    pub fn output_weights(&self) -> Vec<f64> {
        (0..self.width()).map(|c| if self.is_fixed(c) { 0.0 } else { 1.0 }).collect()
    }
}

fn scale(values: &[f64], mean: &[f64], std: &[f64]) -> Vec<f64> {
    let w = mean.len();
    values.iter().enumerate().map(|(i, v)| (v - mean[i % w]) / std[i % w]).collect()
}
