use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinConfig {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

/// Fixed-width histogram; values outside `[lo, hi)` land in the edge bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDensity {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl ErrorDensity {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_left,bin_right,count\n");
        for (k, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", self.edges[k], self.edges[k + 1], c));
        }
        out
    }
}

pub fn error_density(errors: &[f64], cfg: &BinConfig) -> Result<ErrorDensity> {
    if errors.is_empty() {
        return Err(Error::Config("no errors to bin".into()));
    }
    if cfg.bins == 0 || !(cfg.hi > cfg.lo) {
        return Err(Error::Config(format!("invalid histogram range [{}, {}) with {} bins", cfg.lo, cfg.hi, cfg.bins)));
    }
    let width = (cfg.hi - cfg.lo) / cfg.bins as f64;
    let edges = (0..=cfg.bins).map(|k| cfg.lo + k as f64 * width).collect();
    let mut counts = vec![0u64; cfg.bins];
    for &e in errors {
        let k = ((e - cfg.lo) / width).floor();
        let k = if k.is_nan() || k < 0.0 { 0 } else { (k as usize).min(cfg.bins - 1) };
        counts[k] += 1;
    }
    Ok(ErrorDensity { edges, counts })
}
