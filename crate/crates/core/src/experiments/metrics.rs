use serde::{Deserialize, Serialize};

use crate::nn::Normalizer;
use crate::{Error, Result};

/// Accuracy of one estimator on one test set. Inputs are flattened samples
/// of `(vm pu, va degrees)` per bus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// degrees
    pub mae_angle: f64,
    /// percent
    pub mape_magnitude: f64,
    pub r2_angle: f64,
    pub r2_magnitude: f64,
    pub total_mae: f64,
    pub samples: usize,
    /// magnitude labels equal to zero, left out of the MAPE
    pub mape_excluded: usize,
}

/// Coefficient of determination per output column, averaged over columns
/// whose labels vary.
fn r2_block(preds: &[f64], labels: &[f64], width: usize, offset: usize) -> f64 {
    let n = labels.len() / width;
    let mut total = 0.0;
    let mut used = 0usize;
    for col in (offset..width).step_by(2) {
        let mean = (0..n).map(|s| labels[s * width + col]).sum::<f64>() / n as f64;
        let (mut ss_res, mut ss_tot) = (0.0, 0.0);
        for s in 0..n {
            let y = labels[s * width + col];
            let p = preds[s * width + col];
            ss_res += (y - p) * (y - p);
            ss_tot += (y - mean) * (y - mean);
        }
        if ss_tot > n as f64 * (1e-12 * mean.abs().max(1.0)).powi(2) {
            total += 1.0 - ss_res / ss_tot;
            used += 1;
        }
    }
    if used == 0 {
        1.0
    } else {
        total / used as f64
    }
}

/// Errors over every bus of every sample. `stats` supplies the output
/// z-scoring used by the total MAE (training-set label statistics).
pub fn compute_metrics(preds: &[f64], labels: &[f64], stats: &Normalizer) -> Result<MetricsReport> {
    let width = stats.width();
    if preds.len() != labels.len() || labels.is_empty() || labels.len() % width != 0 {
        return Err(Error::Shape(format!(
            "{} predictions and {} labels for {width}-wide samples",
            preds.len(),
            labels.len()
        )));
    }
    let samples = labels.len() / width;
    let per_block = (samples * width / 2) as f64;
    let (mut ang, mut mag, mut total) = (0.0, 0.0, 0.0);
    let mut excluded = 0;
    for (i, (p, y)) in preds.iter().zip(labels).enumerate() {
        let col = i % width;
        total += (p - y).abs() / stats.out_std[col];
        if col % 2 == 1 {
            ang += (p - y).abs();
        } else if *y == 0.0 {
            excluded += 1;
        } else {
            mag += ((p - y) / y).abs();
        }
    }
    let mape_count = per_block - excluded as f64;
    let report = MetricsReport {
        mae_angle: ang / per_block,
        mape_magnitude: if mape_count > 0.0 { 100.0 * mag / mape_count } else { 0.0 },
        r2_angle: r2_block(preds, labels, width, 1),
        r2_magnitude: r2_block(preds, labels, width, 0),
        total_mae: total / labels.len() as f64,
        samples,
        mape_excluded: excluded,
    };
    if ![report.mae_angle, report.mape_magnitude, report.r2_angle, report.r2_magnitude, report.total_mae]
        .iter()
        .all(|v| v.is_finite())
    {
        return Err(Error::Shape("metrics are not finite; predictions contain NaN or infinity".into()));
    }
    Ok(report)
}
