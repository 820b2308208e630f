use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::newton::{solve_power_flow_with, PowerFlowOptions, PowerFlowSolution, Start};
use super::scenario::{sample_load_scenario, LoadScenario, ScenarioConfig};
use crate::grid::NetworkCase;
use crate::io::{config_hash, read_f64_file, sha256_hex, write_f64_file, write_json};
use crate::measurement::{build_feature_matrix, synthesize_measurements, MeasurementLayout, PmuNoise, PmuPlacement};
use crate::{rng, Error, Result};

/// Largest fraction of requested samples that may fail to converge before
/// generation gives up.
pub const REDRAW_FRACTION: f64 = 0.01;

const NOISE_TAG: u64 = 0x4e4f_4953;
const REDRAW_SHIFT: u32 = 40;

/// Base topology or a single-branch outage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub id: String,
    pub outage: Option<usize>,
}

impl Topology {
    pub fn base() -> Self {
        Topology { id: "base".into(), outage: None }
    }

    /// Outage of branch `k`, named by its from-to bus ids.
    pub fn outage(case: &NetworkCase, k: usize) -> Self {
        let br = &case.branches()[k];
        Topology { id: format!("{}-{}", br.from_bus, br.to_bus), outage: Some(k) }
    }

    /// Parse `base`, a branch index `#12`, or a from-to pair `8-5`.
    pub fn parse(case: &NetworkCase, text: &str) -> Result<Self> {
        if text == "base" {
            return Ok(Topology::base());
        }
        if let Some(idx) = text.strip_prefix('#') {
            let k: usize = idx.parse().map_err(|_| Error::Config(format!("bad branch index {text:?}")))?;
            if k >= case.n_branches() {
                return Err(Error::BranchIndex { index: k, count: case.n_branches() });
            }
            return Ok(Topology::outage(case, k));
        }
        let (a, b) = text
            .split_once('-')
            .ok_or_else(|| Error::Config(format!("outage must look like FROM-TO, got {text:?}")))?;
        let parse = |s: &str| s.trim().parse::<usize>().map_err(|_| Error::Config(format!("bad bus id in {text:?}")));
        let (a, b) = (parse(a)?, parse(b)?);
        let k = case.find_branch(a, b).ok_or_else(|| Error::Config(format!("no branch joins buses {a} and {b}")))?;
        Ok(Topology::outage(case, k))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub n_samples: usize,
    pub scenario: ScenarioConfig,
    pub noise: PmuNoise,
    pub seed: u64,
}

/// Noisy node features with noise-free labels for one topology.
///
/// Arrays are sample-major, then node-major, then feature-major; features and
/// labels hold `(vm pu, va degrees)`, measurements hold `(re, im)` pu per
/// channel in measurement-layout order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub features: Vec<f64>,
    pub labels: Vec<f64>,
    pub measurements: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dims {
    pub samples: usize,
    pub nodes: usize,
    pub features: usize,
    pub channels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub case: String,
    pub case_hash: String,
    pub topology: Topology,
    pub n: usize,
    pub noise: PmuNoise,
    pub seed: u64,
    pub dims: Dims,
    pub scenario: ScenarioConfig,
    pub placement: Vec<usize>,
    pub redraws: usize,
    pub config_hash: String,
}

impl Dataset {
    pub fn n_samples(&self) -> usize {
        self.manifest.dims.samples
    }

    pub fn n_nodes(&self) -> usize {
        self.manifest.dims.nodes
    }

    pub fn sample_len(&self) -> usize {
        2 * self.n_nodes()
    }

    pub fn features_of(&self, s: usize) -> &[f64] {
        let w = self.sample_len();
        &self.features[s * w..(s + 1) * w]
    }

    pub fn labels_of(&self, s: usize) -> &[f64] {
        let w = self.sample_len();
        &self.labels[s * w..(s + 1) * w]
    }

    pub fn measurements_of(&self, s: usize) -> &[f64] {
        let w = 2 * self.manifest.dims.channels;
        &self.measurements[s * w..(s + 1) * w]
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_json(&dir.join("manifest.json"), &self.manifest)?;
        write_f64_file(&dir.join("features.bin"), &self.features)?;
        write_f64_file(&dir.join("labels.bin"), &self.labels)?;
        write_f64_file(&dir.join("measurements.bin"), &self.measurements)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let manifest: DatasetManifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        let d = &manifest.dims;
        if d.features != 2 {
            return Err(Error::Format(format!("expected 2 features per node, manifest says {}", d.features)));
        }
        let w = d.samples * d.nodes * 2;
        let features = read_f64_file(&dir.join("features.bin"), w)?;
        let labels = read_f64_file(&dir.join("labels.bin"), w)?;
        let measurements = read_f64_file(&dir.join("measurements.bin"), d.samples * d.channels * 2)?;
        if manifest.expected_hash() != manifest.config_hash {
            return Err(Error::Mismatch(format!("{}: manifest fields do not match its config hash", dir.display())));
        }
        Ok(Dataset { manifest, features, labels, measurements })
    }

    /// Fails unless the dataset was generated from `case`.
    pub fn check_case(&self, case: &NetworkCase) -> Result<()> {
        if self.manifest.case_hash != case_hash(case) {
            return Err(Error::Mismatch("dataset was generated from a different case".into()));
        }
        Ok(())
    }
}

fn dataset_hash(case_hash: &str, topology: &Topology, cfg: &DatasetConfig, placement: &[usize]) -> String {
    config_hash(&(case_hash, topology, cfg, placement))
}

impl DatasetManifest {
    fn expected_hash(&self) -> String {
        let cfg = DatasetConfig { n_samples: self.n, scenario: self.scenario, noise: self.noise.clone(), seed: self.seed };
        dataset_hash(&self.case_hash, &self.topology, &cfg, &self.placement)
    }
}

/// Fingerprint of a case's electrical data.
pub fn case_hash(case: &NetworkCase) -> String {
    sha256_hex(case.to_json().expect("case serializes").as_bytes())
}

/// Solve `n_samples` random operating points. Each sample uses its own random
/// stream; a scenario that fails to converge is redrawn on a fresh stream.
pub fn generate_solutions(
    case: &NetworkCase,
    n_samples: usize,
    scenario: &ScenarioConfig,
    seed: u64,
    outage: Option<usize>,
) -> Result<(Vec<PowerFlowSolution>, usize)> {
    scenario.validate()?;
    let nominal = solve_power_flow_with(case, &LoadScenario::nominal(case.n_buses()), outage, &PowerFlowOptions::default())?;
    let opts = PowerFlowOptions { start: Start::Warm { vm: nominal.vm.clone(), va: nominal.va.clone() }, ..Default::default() };
    let cap = (REDRAW_FRACTION * n_samples as f64).floor() as usize;
    let mut redraws = 0;
    let mut out = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let mut attempt = 0u64;
        loop {
            let sc = sample_load_scenario(case, scenario, seed, i as u64 | (attempt << REDRAW_SHIFT))?;
            match solve_power_flow_with(case, &sc, outage, &opts) {
                Ok(sol) => {
                    out.push(sol);
                    break;
                }
                Err(Error::NotConverged { .. } | Error::Singular(_)) => {
                    redraws += 1;
                    if redraws > cap {
                        return Err(Error::RedrawCapExceeded { failed: redraws, cap });
                    }
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok((out, redraws))
}

impl Dataset {
    /// Attach measurements, features and labels to solved operating points.
    #[allow(clippy::too_many_arguments)]
    pub fn from_solutions(
        case: &NetworkCase,
        solutions: &[PowerFlowSolution],
        placement: &PmuPlacement,
        topology: &Topology,
        cfg: &DatasetConfig,
        redraws: usize,
    ) -> Result<Self> {
        cfg.noise.validate()?;
        let layout = MeasurementLayout::new(case, placement, topology.outage)?;
        let n = case.n_buses();
        let mut features = Vec::with_capacity(solutions.len() * 2 * n);
        let mut labels = Vec::with_capacity(solutions.len() * 2 * n);
        let mut measurements = Vec::with_capacity(solutions.len() * 2 * layout.n_channels());
        for (i, sol) in solutions.iter().enumerate() {
            if sol.outage != topology.outage {
                return Err(Error::Mismatch(format!("solution {i} was solved for a different topology")));
            }
            let mut r = rng::purpose(cfg.seed, NOISE_TAG, i as u64);
            let ms = synthesize_measurements(sol, &layout, &cfg.noise, &mut r);
            let x = build_feature_matrix(&layout, &ms)?;
            for b in 0..n {
                features.push(x.vm(b));
                features.push(x.va(b).to_degrees());
                labels.push(sol.vm[b]);
                labels.push(sol.va[b].to_degrees());
            }
            measurements.extend(ms.phasors().flat_map(|p| [p.re, p.im]));
        }
        let placement_ids = placement.to_ids(case);
        let case_hash = case_hash(case);
        let config_hash = dataset_hash(&case_hash, topology, cfg, &placement_ids);
        let manifest = DatasetManifest {
            case: case.name.clone(),
            case_hash,
            topology: topology.clone(),
            n: solutions.len(),
            noise: cfg.noise.clone(),
            seed: cfg.seed,
            dims: Dims { samples: solutions.len(), nodes: n, features: 2, channels: layout.n_channels() },
            scenario: cfg.scenario,
            placement: placement_ids,
            redraws,
            config_hash,
        };
        Ok(Dataset { manifest, features, labels, measurements })
    }
}

/// Draw scenarios, solve them, and synthesize noisy PMU features.
pub fn generate_dataset(case: &NetworkCase, cfg: &DatasetConfig, placement: &PmuPlacement, topology: &Topology) -> Result<Dataset> {
    let (solutions, redraws) = generate_solutions(case, cfg.n_samples, &cfg.scenario, cfg.seed, topology.outage)?;
    Dataset::from_solutions(case, &solutions, placement, topology, cfg, redraws)
}
