use serde::{Deserialize, Serialize};

use super::density::{error_density, BinConfig, ErrorDensity};
use super::metrics::{compute_metrics, MetricsReport};
use super::outages::{OutageImpact, OutageStatus};
use crate::grid::{build_adjacency, NetworkCase};
use crate::measurement::{build_h, dominates, extend_placement, NoiseModel, PmuNoise, PmuPlacement};
use crate::nn::{train_with, Estimator, GnnConfig, GnnModel, MlpConfig, MlpModel, TrainConfig, TrainReport};
use crate::powerflow::{generate_solutions, Dataset, DatasetConfig, PowerFlowSolution, ScenarioConfig, Topology};
use crate::{rng, Error, Result};

const TRAIN_TAG: u64 = 1;
const TEST_TAG: u64 = 2;
const GNN_INIT_TAG: u64 = 3;
const MLP_INIT_TAG: u64 = 4;
const TOPOLOGY_TAG: u64 = 5;

/// Most-impactful single-line outages reported for the 118-bus system.
pub const PAPER_MIT: [(usize, usize); 5] = [(8, 5), (30, 17), (26, 30), (38, 37), (64, 65)];
/// Least-impactful single-line outages reported for the 118-bus system.
pub const PAPER_LIT: [(usize, usize); 5] = [(24, 70), (56, 58), (100, 101), (14, 15), (32, 113)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    pub scenario: ScenarioConfig,
    pub gnn: GnnConfig,
    pub mlp: MlpConfig,
    pub train: TrainConfig,
    pub magnitude_bins: BinConfig,
    pub angle_bins: BinConfig,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            n_train: 2000,
            n_test: 500,
            seed: 0,
            scenario: ScenarioConfig::default(),
            gnn: GnnConfig::default(),
            mlp: MlpConfig::default(),
            train: TrainConfig::default(),
            magnitude_bins: BinConfig { lo: -0.01, hi: 0.01, bins: 80 },
            angle_bins: BinConfig { lo: -1.0, hi: 1.0, bins: 80 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Lse,
    Gnn,
    Mlp,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Lse => "lse",
            EstimatorKind::Gnn => "gnn",
            EstimatorKind::Mlp => "dnn",
        }
    }
}

/// Operating points shared by all noise settings, so estimators are compared
/// on identical states.
pub struct BaseSolutions {
    pub train: Vec<PowerFlowSolution>,
    pub test: Vec<PowerFlowSolution>,
    pub redraws: (usize, usize),
}

pub fn base_solutions(case: &NetworkCase, cfg: &StudyConfig) -> Result<BaseSolutions> {
    let (train, r1) = generate_solutions(case, cfg.n_train, &cfg.scenario, rng::derive_seed(cfg.seed, TRAIN_TAG), None)?;
    let (test, r2) = generate_solutions(case, cfg.n_test, &cfg.scenario, rng::derive_seed(cfg.seed, TEST_TAG), None)?;
    Ok(BaseSolutions { train, test, redraws: (r1, r2) })
}

fn noise_tag(noise: &NoiseModel) -> u64 {
    match noise {
        NoiseModel::Gaussian { .. } => 10,
        NoiseModel::Gmm2 { .. } => 20,
    }
}

/// Noisy dataset over solved operating points.
pub fn noisy_dataset(
    case: &NetworkCase,
    solutions: &[PowerFlowSolution],
    placement: &PmuPlacement,
    topology: &Topology,
    noise: &NoiseModel,
    seed: u64,
    scenario: &ScenarioConfig,
    redraws: usize,
) -> Result<Dataset> {
    let cfg = DatasetConfig { n_samples: solutions.len(), scenario: *scenario, noise: PmuNoise::from(noise.clone()), seed };
    Dataset::from_solutions(case, solutions, placement, topology, &cfg, redraws)
}

pub fn train_gnn(case: &NetworkCase, train: &Dataset, cfg: &StudyConfig, progress: impl FnMut(usize, f64)) -> Result<(GnnModel, TrainReport)> {
    let adj = build_adjacency(case, train.manifest.topology.outage)?;
    let mut model = GnnModel::new(cfg.gnn.clone(), &mut rng::stream(rng::derive_seed(cfg.seed, GNN_INIT_TAG), 0))?;
    let op = model.operator(&adj);
    let report = train_with(&mut model, &op, train, None, &cfg.train, progress)?;
    Ok((model, report))
}

pub fn train_mlp(train: &Dataset, cfg: &StudyConfig, progress: impl FnMut(usize, f64)) -> Result<(MlpModel, TrainReport)> {
    let mut model = MlpModel::new(cfg.mlp.clone(), train.sample_len(), &mut rng::stream(rng::derive_seed(cfg.seed, MLP_INIT_TAG), 0))?;
    let report = train_with(&mut model, &(), train, None, &cfg.train, progress)?;
    Ok((model, report))
}

/// GNN estimates on a dataset, using the dataset's own topology.
pub fn gnn_predictions(case: &NetworkCase, model: &GnnModel, data: &Dataset) -> Result<Vec<f64>> {
    let adj = build_adjacency(case, data.manifest.topology.outage)?;
    model.predict(&model.operator(&adj), &data.features)
}

/// Linear estimates from the raw phasors stored in a dataset, flattened like
/// the labels.
pub fn lse_predictions(case: &NetworkCase, data: &Dataset) -> Result<Vec<f64>> {
    let placement = PmuPlacement::from_ids(case, &data.manifest.placement)?;
    let problem = build_h(case, &placement, data.manifest.topology.outage)?;
    let mut out = Vec::with_capacity(data.labels.len());
    for s in 0..data.n_samples() {
        let est = crate::measurement::solve_lse(&problem, data.measurements_of(s))?;
        for (vm, va) in est.vm.iter().zip(&est.va) {
            out.push(*vm);
            out.push(va.to_degrees());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseStudyRow {
    pub estimator: EstimatorKind,
    pub noise: String,
    pub metrics: MetricsReport,
}

pub struct NoiseStudy {
    pub rows: Vec<NoiseStudyRow>,
    /// Models trained under mixture noise, reused by the topology study.
    pub gnn: GnnModel,
    pub mlp: MlpModel,
    pub gnn_gaussian: GnnModel,
    pub reports: Vec<(String, TrainReport)>,
}

impl NoiseStudy {
    pub fn get(&self, estimator: EstimatorKind, noise: &str) -> Option<&MetricsReport> {
        self.rows.iter().find(|r| r.estimator == estimator && r.noise == noise).map(|r| &r.metrics)
    }
}

/// LSE and GNN under Gaussian and mixture noise, plus the feed-forward
/// baseline under mixture noise. `progress` receives a label, epoch and loss.
pub fn run_noise_study(
    case: &NetworkCase,
    placement: &PmuPlacement,
    cfg: &StudyConfig,
    mut progress: impl FnMut(&str, usize, f64),
) -> Result<NoiseStudy> {
    let sols = base_solutions(case, cfg)?;
    let topo = Topology::base();
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut trained = Vec::new();
    for (label, noise) in [("gaussian", NoiseModel::default_gaussian()), ("gmm", NoiseModel::default_gmm())] {
        let tag = noise_tag(&noise);
        let train = noisy_dataset(case, &sols.train, placement, &topo, &noise, rng::derive_seed(cfg.seed, TRAIN_TAG + tag), &cfg.scenario, sols.redraws.0)?;
        let test = noisy_dataset(case, &sols.test, placement, &topo, &noise, rng::derive_seed(cfg.seed, TEST_TAG + tag), &cfg.scenario, sols.redraws.1)?;

        let (gnn, rep) = train_gnn(case, &train, cfg, |e, l| progress(&format!("gnn/{label}"), e, l))?;
        reports.push((format!("gnn/{label}"), rep));
        let stats = gnn.normalizer.clone().expect("trained model has statistics");
        let lse = lse_predictions(case, &test)?;
        rows.push(NoiseStudyRow { estimator: EstimatorKind::Lse, noise: label.into(), metrics: compute_metrics(&lse, &test.labels, &stats)? });
        let pred = gnn_predictions(case, &gnn, &test)?;
        rows.push(NoiseStudyRow { estimator: EstimatorKind::Gnn, noise: label.into(), metrics: compute_metrics(&pred, &test.labels, &stats)? });
        let mlp = if label == "gmm" {
            let (mlp, rep) = train_mlp(&train, cfg, |e, l| progress(&format!("dnn/{label}"), e, l))?;
            reports.push((format!("dnn/{label}"), rep));
            let pred = mlp.predict(&(), &test.features)?;
            rows.push(NoiseStudyRow { estimator: EstimatorKind::Mlp, noise: label.into(), metrics: compute_metrics(&pred, &test.labels, &stats)? });
            Some(mlp)
        } else {
            None
        };
        trained.push((gnn, mlp));
    }
    let (gnn, mlp) = trained.pop().expect("two noise settings");
    let (gnn_gaussian, _) = trained.pop().expect("two noise settings");
    Ok(NoiseStudy { rows, gnn, mlp: mlp.expect("trained under mixture noise"), gnn_gaussian, reports })
}

pub fn noise_study_csv(rows: &[NoiseStudyRow]) -> String {
    let mut out = String::from("estimator,noise,mae_angle_deg,mape_magnitude_pct,r2_angle,r2_magnitude,total_mae,samples\n");
    for r in rows {
        let m = &r.metrics;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.estimator.name(),
            r.noise,
            m.mae_angle,
            m.mape_magnitude,
            m.r2_angle,
            m.r2_magnitude,
            m.total_mae,
            m.samples
        ));
    }
    out
}

/// One studied outage with its display label (`MIT_1`, `LIT_3`, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedOutage {
    pub label: String,
    pub branch: usize,
    pub from_bus: usize,
    pub to_bus: usize,
}

/// Top-k and bottom-k ranked outages, or the published lists when pinned.
pub fn select_outages(case: &NetworkCase, ranking: &[OutageImpact], top_k: usize, pin_paper: bool) -> Result<Vec<SelectedOutage>> {
    let pick = |label: &str, k: usize, branch: usize| {
        let br = &case.branches()[branch];
        SelectedOutage { label: format!("{label}_{}", k + 1), branch, from_bus: br.from_bus, to_bus: br.to_bus }
    };
    let mut out = Vec::new();
    if pin_paper {
        for (prefix, list) in [("MIT", &PAPER_MIT), ("LIT", &PAPER_LIT)] {
            for (k, &(a, b)) in list.iter().enumerate() {
                let branch = case
                    .find_branch(a, b)
                    .ok_or_else(|| Error::Config(format!("case has no branch {a}-{b} for the pinned outage list")))?;
                out.push(pick(prefix, k, branch));
            }
        }
        return Ok(out);
    }
    let ranked: Vec<&OutageImpact> = ranking.iter().filter(|o| o.status == OutageStatus::Ranked).collect();
    for (k, o) in ranked.iter().take(top_k).enumerate() {
        out.push(pick("MIT", k, o.branch));
    }
    for (k, o) in ranked.iter().rev().take(top_k).enumerate() {
        out.push(pick("LIT", k, o.branch));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyRow {
    pub outage: SelectedOutage,
    pub gnn: MetricsReport,
    pub mlp: MetricsReport,
    /// None when the outage leaves the linear estimator unobservable.
    pub lse: Option<MetricsReport>,
    /// PMU buses added so the placement still covers every bus.
    pub added_pmus: Vec<usize>,
}

pub struct TopologyStudy {
    pub rows: Vec<TopologyRow>,
    /// `(name, density)` with names like `gnn_MIT_1_magnitude`.
    pub densities: Vec<(String, ErrorDensity)>,
}

/// Evaluate base-topology models on test sets drawn on each outaged topology,
/// feeding the graph network the post-outage adjacency. No retraining.
pub fn run_topology_study(
    case: &NetworkCase,
    placement: &PmuPlacement,
    gnn: &GnnModel,
    mlp: &MlpModel,
    outages: &[SelectedOutage],
    cfg: &StudyConfig,
) -> Result<TopologyStudy> {
    let stats = gnn.normalizer.clone().ok_or_else(|| Error::Config("graph network is untrained".into()))?;
    let noise = NoiseModel::default_gmm();
    let mut rows = Vec::new();
    let mut densities = Vec::new();
    for (i, sel) in outages.iter().enumerate() {
        let adj = build_adjacency(case, Some(sel.branch))?;
        let local = if dominates(placement, &adj) { placement.clone() } else { extend_placement(placement, &adj) };
        let added: Vec<usize> =
            local.indices().iter().filter(|&&b| !placement.contains(b)).map(|&b| case.buses()[b].id).collect();
        let topo = Topology::outage(case, sel.branch);
        let seed = rng::derive_seed(cfg.seed, TOPOLOGY_TAG + 100 * i as u64);
        let (sols, redraws) = generate_solutions(case, cfg.n_test, &cfg.scenario, seed, Some(sel.branch))?;
        let test = noisy_dataset(case, &sols, &local, &topo, &noise, rng::derive_seed(seed, TEST_TAG), &cfg.scenario, redraws)?;

        let g = gnn_predictions(case, gnn, &test)?;
        let m = mlp.predict(&(), &test.features)?;
        let lse = match lse_predictions(case, &test) {
            Ok(p) => Some(compute_metrics(&p, &test.labels, &stats)?),
            Err(Error::RankDeficient { .. }) => None,
            Err(e) => return Err(e),
        };
        for (name, pred) in [("gnn", &g), ("dnn", &m)] {
            let (mag, ang): (Vec<f64>, Vec<f64>) =
                pred.chunks_exact(2).zip(test.labels.chunks_exact(2)).map(|(p, y)| (p[0] - y[0], p[1] - y[1])).unzip();
            densities.push((format!("{name}_{}_magnitude", sel.label), error_density(&mag, &cfg.magnitude_bins)?));
            densities.push((format!("{name}_{}_angle", sel.label), error_density(&ang, &cfg.angle_bins)?));
        }
        rows.push(TopologyRow {
            outage: sel.clone(),
            gnn: compute_metrics(&g, &test.labels, &stats)?,
            mlp: compute_metrics(&m, &test.labels, &stats)?,
            lse,
            added_pmus: added,
        });
    }
    Ok(TopologyStudy { rows, densities })
}

pub fn topology_study_csv(rows: &[TopologyRow]) -> String {
    let mut out = String::from("topology,line,branch,dnn_total_mae,gnn_total_mae,lse_total_mae,added_pmus\n");
    for r in rows {
        let lse = r.lse.as_ref().map(|m| m.total_mae.to_string()).unwrap_or_default();
        let added: Vec<String> = r.added_pmus.iter().map(|b| b.to_string()).collect();
        out.push_str(&format!(
            "{},{}-{},{},{},{},{},{}\n",
            r.outage.label,
            r.outage.from_bus,
            r.outage.to_bus,
            r.outage.branch,
            r.mlp.total_mae,
            r.gnn.total_mae,
            lse,
            added.join(" ")
        ));
    }
    out
}
