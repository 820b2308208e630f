use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::grid::NetworkCase;
use crate::{rng, Error, Result};

const SCENARIO_TAG: u64 = 0x5343_454e;

/// Bounds of the uniform load multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub global: (f64, f64),
    pub per_bus: (f64, f64),
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig { global: (0.8, 1.2), per_bus: (0.95, 1.05) }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("global", self.global), ("per_bus", self.per_bus)] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::Config(format!("{name} multiplier bounds must satisfy 0 < lo <= hi, got ({lo}, {hi})")));
            }
        }
        Ok(())
    }
}

/// One operating condition: loads scale by `global · p_mult[i]` (reactive
/// load by the same factor, so power factors hold) and non-slack generation
/// by `global`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadScenario {
    pub global: f64,
    pub p_mult: Vec<f64>,
    pub q_mult: Vec<f64>,
    pub seed: u64,
    pub stream: u64,
}

impl LoadScenario {
    /// All multipliers one.
    pub fn nominal(n: usize) -> Self {
        LoadScenario { global: 1.0, p_mult: vec![1.0; n], q_mult: vec![1.0; n], seed: 0, stream: 0 }
    }

    pub(crate) fn load_factor(&self, bus: usize) -> (f64, f64) {
        (self.global * self.p_mult[bus], self.global * self.q_mult[bus])
    }
}

fn uniform(rng: &mut rng::Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

/// Draw the scenario for random stream `stream` of `seed`.
pub fn sample_load_scenario(case: &NetworkCase, cfg: &ScenarioConfig, seed: u64, stream: u64) -> Result<LoadScenario> {
    cfg.validate()?;
    let mut rng = rng::purpose(seed, SCENARIO_TAG, stream);
    let global = uniform(&mut rng, cfg.global);
    let p_mult: Vec<f64> = (0..case.n_buses()).map(|_| uniform(&mut rng, cfg.per_bus)).collect();
    Ok(LoadScenario { global, q_mult: p_mult.clone(), p_mult, seed, stream })
}
