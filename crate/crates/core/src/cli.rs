//! Command-line pipelines. Every command writes fixed file names under
//! `--out`, each with a `.meta.json` sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::experiments::{
    compute_metrics, error_density, gnn_predictions, lse_predictions, noise_study_csv, outages_to_csv, rank_outages,
    run_noise_study, run_topology_study, select_outages, topology_study_csv, train_gnn, train_mlp, BinConfig,
    EstimatorKind, NoiseStudyRow, StudyConfig,
};
use crate::grid::{build_adjacency, parse_case, NetworkCase};
use crate::io::{commit_id, config_hash, sha256_hex, write_json};
use crate::measurement::{place_pmus, NoiseModel, PmuNoise, PmuPlacement};
use crate::nn::{read_model, write_model, Estimator, GnnConfig, MlpConfig, Model, Normalizer, TrainReport};
use crate::powerflow::{case_hash, generate_dataset, Dataset, DatasetConfig, ScenarioConfig, Topology};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "gnnse", version, about = "PMU data synthesis and time-synchronized state estimation")]
pub struct Cli {
    /// JSON file with default settings; explicit flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve random operating points and write a noisy PMU dataset
    GenData(GenData),
    /// Greedy PMU placement covering every bus
    PlacePmus(PlacePmus),
    /// Train a graph network or the feed-forward baseline
    Train(Train),
    /// Evaluate a trained model on a dataset
    Eval(Eval),
    /// Evaluate the linear estimator on a dataset
    Lse(Lse),
    /// Rank single-line outages and optionally evaluate models on them
    TopoScan(TopoScan),
    /// Run the full noise and topology studies
    Study(Study),
    /// Merge metric tables into the summary layouts
    Report(Report),
}

#[derive(Debug, Args)]
pub struct GenData {
    #[arg(long)]
    pub case: PathBuf,
    #[arg(long)]
    pub samples: Option<usize>,
    /// gaussian, gmm, none, or a JSON noise file
    #[arg(long)]
    pub noise: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `base`, `FROM-TO` or `#INDEX`
    #[arg(long)]
    pub outage: Option<String>,
    /// `auto` or a JSON list of bus ids
    #[arg(long)]
    pub placement: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlacePmus {
    #[arg(long)]
    pub case: PathBuf,
    #[arg(long)]
    pub outage: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gnn,
    Dnn,
}

#[derive(Debug, Args)]
pub struct Train {
    #[arg(long)]
    pub case: PathBuf,
    /// dataset directory (or a `gen-data` output directory)
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub model: ModelKind,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Eval {
    #[arg(long)]
    pub case: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Lse {
    #[arg(long)]
    pub case: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// take the total-MAE scaling from this model's training statistics
    #[arg(long)]
    pub stats_from: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TopoScan {
    #[arg(long)]
    pub case: PathBuf,
    #[arg(long)]
    pub top_k: Option<usize>,
    /// study the published most/least impactful lines instead of our ranking
    #[arg(long)]
    pub pin_paper_lines: bool,
    /// trained graph network; with --dnn runs the topology study
    #[arg(long, requires = "dnn")]
    pub gnn: Option<PathBuf>,
    #[arg(long, requires = "gnn")]
    pub dnn: Option<PathBuf>,
    #[arg(long)]
    pub placement: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Study {
    #[arg(long)]
    pub case: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub placement: Option<String>,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub pin_paper_lines: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Report {
    /// metric CSVs written by `eval`, `lse` or `study`
    #[arg(long, num_args = 1.., required = true)]
    pub metrics: Vec<PathBuf>,
    /// topology table written by `topo-scan` or `study`
    #[arg(long)]
    pub topology: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Settings file accepted by `--config`. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub noise: Option<serde_json::Value>,
    pub outage: Option<String>,
    pub placement: Option<String>,
    pub scenario: Option<ScenarioConfig>,
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub hidden: Option<usize>,
    pub batch_size: Option<usize>,
    pub gnn: Option<GnnConfig>,
    pub mlp: Option<MlpConfig>,
    pub n_train: Option<usize>,
    pub n_test: Option<usize>,
    pub top_k: Option<usize>,
    pub pin_paper_lines: Option<bool>,
    pub magnitude_bins: Option<BinConfig>,
    pub angle_bins: Option<BinConfig>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(FileConfig::default()),
            Some(p) => serde_json::from_str(&fs::read_to_string(p)?)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display()))),
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::GenData(a) => gen_data(a, &file),
        Command::PlacePmus(a) => place(a),
        Command::Train(a) => train(a, &file),
        Command::Eval(a) => eval(a, &file),
        Command::Lse(a) => lse(a),
        Command::TopoScan(a) => topo_scan(a, &file),
        Command::Study(a) => study(a, &file),
        Command::Report(a) => report(a),
    }
}

fn required<T>(flag: Option<T>, file: Option<T>, name: &str) -> Result<T> {
    flag.or(file).ok_or_else(|| Error::Config(format!("--{name} is required (flag or config file)")))
}

pub fn load_case(path: &Path) -> Result<NetworkCase> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read case {}: {e}", path.display())))?;
    let mut case = parse_case(&text)?;
    if case.name.is_empty() {
        case.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    }
    Ok(case)
}

fn parse_noise(text: &str) -> Result<PmuNoise> {
    match text {
        "gaussian" => Ok(NoiseModel::default_gaussian().into()),
        "gmm" => Ok(NoiseModel::default_gmm().into()),
        "none" => Ok(NoiseModel::none().into()),
        path => PmuNoise::from_json(&fs::read_to_string(path).map_err(|e| Error::Config(format!("noise {path:?}: {e}")))?),
    }
}

fn resolve_placement(case: &NetworkCase, spec: Option<&str>) -> Result<PmuPlacement> {
    match spec {
        None | Some("auto") => Ok(place_pmus(&build_adjacency(case, None)?)),
        Some(path) => PmuPlacement::from_json(case, &fs::read_to_string(path)?),
    }
}

/// Accepts either a dataset directory or a directory holding `dataset/`.
fn read_dataset(path: &Path) -> Result<Dataset> {
    let nested = path.join("dataset");
    Dataset::read(if nested.join("manifest.json").exists() { &nested } else { path })
}

/// Write `path` and its provenance sidecar `path.meta.json`.
fn write_artifact(path: &Path, contents: &[u8], meta: serde_json::Value) -> Result<()> {
    fs::write(path, contents)?;
    let sidecar = json!({
        "file": path.file_name().map(|s| s.to_string_lossy().into_owned()),
        "sha256": sha256_hex(contents),
        "config_hash": config_hash(&meta),
        "commit": commit_id(),
        "settings": meta,
    });
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.json");
    write_json(Path::new(&name), &sidecar)
}

fn gen_data(a: GenData, file: &FileConfig) -> Result<()> {
    let case = load_case(&a.case)?;
    let samples = required(a.samples, file.samples, "samples")?;
    let seed = required(a.seed, file.seed, "seed")?;
    let noise = match (&a.noise, &file.noise) {
        (Some(t), _) => parse_noise(t)?,
        (None, Some(v)) => PmuNoise::from_json(&v.to_string())?,
        (None, None) => NoiseModel::default_gmm().into(),
    };
    let topology = match a.outage.as_deref().or(file.outage.as_deref()) {
        Some(t) => Topology::parse(&case, t)?,
        None => Topology::base(),
    };
    let placement = resolve_placement(&case, a.placement.as_deref().or(file.placement.as_deref()))?;
    let cfg = DatasetConfig { n_samples: samples, scenario: file.scenario.unwrap_or_default(), noise, seed };
    let ds = generate_dataset(&case, &cfg, &placement, &topology)?;
    fs::create_dir_all(&a.out)?;
    ds.write(&a.out.join("dataset"))?;
    eprintln!("wrote {} samples ({} redraws) for topology {}", ds.n_samples(), ds.manifest.redraws, topology.id);
    Ok(())
}

fn place(a: PlacePmus) -> Result<()> {
    let case = load_case(&a.case)?;
    let topology = match &a.outage {
        Some(t) => Topology::parse(&case, t)?,
        None => Topology::base(),
    };
    let placement = place_pmus(&build_adjacency(&case, topology.outage)?);
    fs::create_dir_all(&a.out)?;
    let mut text = placement.to_json(&case);
    text.push('\n');
    write_artifact(&a.out.join("placement.json"), text.as_bytes(), json!({ "case_hash": case_hash(&case), "topology": topology.id }))?;
    eprintln!("{} PMUs", placement.len());
    Ok(())
}

fn loss_csv(report: &TrainReport) -> String {
    let mut out = String::from("epoch,train_loss\n");
    for (e, l) in report.train_loss.iter().enumerate() {
        out.push_str(&format!("{e},{l}\n"));
    }
    out
}

fn train(a: Train, file: &FileConfig) -> Result<()> {
    let case = load_case(&a.case)?;
    let data = read_dataset(&a.data)?;
    data.check_case(&case)?;
    let mut cfg = StudyConfig::default();
    cfg.seed = required(a.seed, file.seed, "seed")?;
    if let Some(g) = &file.gnn {
        cfg.gnn = g.clone();
    }
    if let Some(m) = &file.mlp {
        cfg.mlp = m.clone();
    }
    if let Some(e) = a.epochs.or(file.epochs) {
        cfg.train.epochs = e;
    }
    if let Some(lr) = a.lr.or(file.lr) {
        cfg.train.adam.lr = lr;
    }
    if let Some(b) = a.batch_size.or(file.batch_size) {
        cfg.train.batch_size = b;
    }
    cfg.train.seed = cfg.seed;
    let hidden = a.hidden.or(file.hidden);
    let progress = |e: usize, l: f64| {
        if e % 10 == 0 {
            eprintln!("epoch {e}: loss {l:.6}");
        }
    };
    let (model, report, arch) = match a.model {
        ModelKind::Gnn => {
            if let Some(h) = hidden {
                cfg.gnn.hidden = h;
            }
            let (m, r) = train_gnn(&case, &data, &cfg, progress)?;
            (Model::Gnn(m), r, json!(cfg.gnn))
        }
        ModelKind::Dnn => {
            if let Some(h) = hidden {
                cfg.mlp.hidden.iter_mut().for_each(|w| *w = h);
            }
            let (m, r) = train_mlp(&data, &cfg, progress)?;
            (Model::Mlp(m), r, json!(cfg.mlp))
        }
    };
    let meta = json!({
        "model": a.model,
        "architecture": arch,
        "seed": cfg.seed,
        "train": cfg.train,
        "case_hash": data.manifest.case_hash,
        "dataset_config_hash": data.manifest.config_hash,
        "topology": data.manifest.topology.id,
        "final_loss": report.final_loss(),
    });
    fs::create_dir_all(&a.out)?;
    let path = a.out.join("model.bin");
    write_model(&path, &model, meta.clone())?;
    let bytes = fs::read(&path)?;
    let mut side = path.as_os_str().to_owned();
    side.push(".meta.json");
    write_json(
        Path::new(&side),
        &json!({ "file": "model.bin", "sha256": sha256_hex(&bytes), "config_hash": config_hash(&meta), "commit": commit_id(), "settings": meta }),
    )?;
    write_artifact(&a.out.join("train_loss.csv"), loss_csv(&report).as_bytes(), meta)?;
    Ok(())
}

fn metrics_row_csv(rows: &[NoiseStudyRow]) -> String {
    noise_study_csv(rows)
}

fn densities(
    out: &Path,
    name: &str,
    topology: &str,
    preds: &[f64],
    labels: &[f64],
    cfg: &StudyConfig,
    meta: &serde_json::Value,
) -> Result<()> {
    let (mag, ang): (Vec<f64>, Vec<f64>) =
        preds.chunks_exact(2).zip(labels.chunks_exact(2)).map(|(p, y)| (p[0] - y[0], p[1] - y[1])).unzip();
    for (q, errs, bins) in [("magnitude", &mag, &cfg.magnitude_bins), ("angle", &ang, &cfg.angle_bins)] {
        let d = error_density(errs, bins)?;
        write_artifact(&out.join(format!("density_{name}_{topology}_{q}.csv")), d.to_csv().as_bytes(), meta.clone())?;
    }
    Ok(())
}

fn study_bins(file: &FileConfig) -> StudyConfig {
    let mut cfg = StudyConfig::default();
    if let Some(b) = file.magnitude_bins {
        cfg.magnitude_bins = b;
    }
    if let Some(b) = file.angle_bins {
        cfg.angle_bins = b;
    }
    cfg
}

fn eval(a: Eval, file: &FileConfig) -> Result<()> {
    let case = load_case(&a.case)?;
    let data = read_dataset(&a.data)?;
    data.check_case(&case)?;
    let (model, header) = read_model(&a.model)?;
    if header.training.get("case_hash").and_then(|v| v.as_str()) != Some(data.manifest.case_hash.as_str()) {
        return Err(Error::Mismatch("model was trained on a different case than the dataset".into()));
    }
    if header.nodes != data.n_nodes() {
        return Err(Error::Mismatch(format!("model expects {} buses, dataset has {}", header.nodes, data.n_nodes())));
    }
    let (kind, preds, stats) = match &model {
        Model::Gnn(m) => (EstimatorKind::Gnn, gnn_predictions(&case, m, &data)?, m.normalizer.clone()),
        Model::Mlp(m) => (EstimatorKind::Mlp, m.predict(&(), &data.features)?, m.normalizer.clone()),
    };
    let stats = stats.expect("saved models carry statistics");
    let metrics = compute_metrics(&preds, &data.labels, &stats)?;
    let rows = [NoiseStudyRow { estimator: kind, noise: data.manifest.noise.label(), metrics }];
    let meta = json!({
        "estimator": kind,
        "model_sha256": sha256_hex(&fs::read(&a.model)?),
        "dataset_config_hash": data.manifest.config_hash,
        "dataset_seed": data.manifest.seed,
        "topology": data.manifest.topology.id,
    });
    fs::create_dir_all(&a.out)?;
    write_artifact(&a.out.join("metrics.csv"), metrics_row_csv(&rows).as_bytes(), meta.clone())?;
    densities(&a.out, kind.name(), &data.manifest.topology.id, &preds, &data.labels, &study_bins(file), &meta)
}

fn lse(a: Lse) -> Result<()> {
    let case = load_case(&a.case)?;
    let data = read_dataset(&a.data)?;
    data.check_case(&case)?;
    let stats = match &a.stats_from {
        Some(p) => read_model(p)?.1.normalization,
        None => Normalizer::from_samples(&data.labels, &data.labels, data.sample_len())?,
    };
    let preds = lse_predictions(&case, &data)?;
    let metrics = compute_metrics(&preds, &data.labels, &stats)?;
    let rows = [NoiseStudyRow { estimator: EstimatorKind::Lse, noise: data.manifest.noise.label(), metrics }];
    let meta = json!({
        "estimator": "lse",
        "dataset_config_hash": data.manifest.config_hash,
        "dataset_seed": data.manifest.seed,
        "stats": if a.stats_from.is_some() { "model" } else { "dataset" },
    });
    fs::create_dir_all(&a.out)?;
    write_artifact(&a.out.join("metrics.csv"), metrics_row_csv(&rows).as_bytes(), meta)
}

fn topo_scan(a: TopoScan, file: &FileConfig) -> Result<()> {
    let case = load_case(&a.case)?;
    let ranking = rank_outages(&case)?;
    let top_k = a.top_k.or(file.top_k).unwrap_or(5);
    let pin = a.pin_paper_lines || file.pin_paper_lines.unwrap_or(false);
    let selected = select_outages(&case, &ranking, top_k, pin)?;
    let meta = json!({ "case_hash": case_hash(&case), "top_k": top_k, "pin_paper_lines": pin });
    fs::create_dir_all(&a.out)?;
    write_artifact(&a.out.join("topo_rank.csv"), outages_to_csv(&ranking).as_bytes(), meta.clone())?;
    let mut sel = serde_json::to_string_pretty(&selected)?;
    sel.push('\n');
    write_artifact(&a.out.join("selected_outages.json"), sel.as_bytes(), meta)?;
    let (Some(gnn_path), Some(dnn_path)) = (&a.gnn, &a.dnn) else {
        return Ok(());
    };
    let (Model::Gnn(gnn), gh) = read_model(gnn_path)? else {
        return Err(Error::Config(format!("{} is not a graph network", gnn_path.display())));
    };
    let (Model::Mlp(mlp), dh) = read_model(dnn_path)? else {
        return Err(Error::Config(format!("{} is not a feed-forward model", dnn_path.display())));
    };
    let ch = case_hash(&case);
    for h in [&gh, &dh] {
        if h.training.get("case_hash").and_then(|v| v.as_str()) != Some(ch.as_str()) {
            return Err(Error::Mismatch("model was trained on a different case".into()));
        }
    }
    let mut cfg = study_bins(file);
    cfg.seed = required(a.seed, file.seed, "seed")?;
    cfg.n_test = a.samples.or(file.samples).or(file.n_test).unwrap_or(cfg.n_test);
    if let Some(s) = file.scenario {
        cfg.scenario = s;
    }
    let placement = resolve_placement(&case, a.placement.as_deref().or(file.placement.as_deref()))?;
    let result = run_topology_study(&case, &placement, &gnn, &mlp, &selected, &cfg)?;
    let meta = json!({
        "seed": cfg.seed,
        "samples": cfg.n_test,
        "gnn_sha256": sha256_hex(&fs::read(gnn_path)?),
        "dnn_sha256": sha256_hex(&fs::read(dnn_path)?),
        "pin_paper_lines": pin,
    });
    write_artifact(&a.out.join("topology.csv"), topology_study_csv(&result.rows).as_bytes(), meta.clone())?;
    for (name, d) in &result.densities {
        write_artifact(&a.out.join(format!("density_{name}.csv")), d.to_csv().as_bytes(), meta.clone())?;
    }
    Ok(())
}

fn study(a: Study, file: &FileConfig) -> Result<()> {
    let case = load_case(&a.case)?;
    let mut cfg = study_bins(file);
    cfg.seed = required(a.seed, file.seed, "seed")?;
    cfg.train.seed = cfg.seed;
    if let Some(v) = a.n_train.or(file.n_train) {
        cfg.n_train = v;
    }
    if let Some(v) = a.n_test.or(file.n_test) {
        cfg.n_test = v;
    }
    if let Some(v) = a.epochs.or(file.epochs) {
        cfg.train.epochs = v;
    }
    if let Some(v) = file.lr {
        cfg.train.adam.lr = v;
    }
    if let Some(v) = file.batch_size {
        cfg.train.batch_size = v;
    }
    if let Some(g) = &file.gnn {
        cfg.gnn = g.clone();
    }
    if let Some(m) = &file.mlp {
        cfg.mlp = m.clone();
    }
    if let Some(h) = a.hidden.or(file.hidden) {
        cfg.gnn.hidden = h;
    }
    if let Some(s) = file.scenario {
        cfg.scenario = s;
    }
    let placement = resolve_placement(&case, a.placement.as_deref().or(file.placement.as_deref()))?;
    let top_k = a.top_k.or(file.top_k).unwrap_or(5);
    let pin = a.pin_paper_lines || file.pin_paper_lines.unwrap_or(false);
    let meta = json!({ "case_hash": case_hash(&case), "study": cfg, "placement": placement.to_ids(&case), "top_k": top_k, "pin_paper_lines": pin });
    fs::create_dir_all(&a.out)?;

    let noise = run_noise_study(&case, &placement, &cfg, |label, e, l| {
        if e % 10 == 0 {
            eprintln!("{label} epoch {e}: loss {l:.6}");
        }
    })?;
    write_artifact(&a.out.join("metrics.csv"), noise_study_csv(&noise.rows).as_bytes(), meta.clone())?;
    let training = |kind: &str| json!({ "model": kind, "seed": cfg.seed, "train": cfg.train, "case_hash": case_hash(&case), "noise": "gmm" });
    write_model(&a.out.join("gnn.bin"), &Model::Gnn(noise.gnn.clone()), training("gnn"))?;
    write_model(&a.out.join("dnn.bin"), &Model::Mlp(noise.mlp.clone()), training("dnn"))?;
    for (label, rep) in &noise.reports {
        write_artifact(&a.out.join(format!("train_loss_{}.csv", label.replace('/', "_"))), loss_csv(rep).as_bytes(), meta.clone())?;
    }

    let ranking = rank_outages(&case)?;
    write_artifact(&a.out.join("topo_rank.csv"), outages_to_csv(&ranking).as_bytes(), meta.clone())?;
    let selected = select_outages(&case, &ranking, top_k, pin)?;
    let topo = run_topology_study(&case, &placement, &noise.gnn, &noise.mlp, &selected, &cfg)?;
    write_artifact(&a.out.join("topology.csv"), topology_study_csv(&topo.rows).as_bytes(), meta.clone())?;
    for (name, d) in &topo.densities {
        write_artifact(&a.out.join(format!("density_{name}.csv")), d.to_csv().as_bytes(), meta.clone())?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
struct MetricLine {
    estimator: String,
    noise: String,
    fields: Vec<String>,
}

fn read_metric_lines(path: &Path) -> Result<Vec<MetricLine>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if !header.starts_with("estimator,noise,mae_angle_deg") {
        return Err(Error::Format(format!("{} is not a metrics table", path.display())));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let cols: Vec<String> = l.split(',').map(str::to_string).collect();
            if cols.len() != 8 {
                return Err(Error::Format(format!("{}: malformed row {l:?}", path.display())));
            }
            Ok(MetricLine { estimator: cols[0].clone(), noise: cols[1].clone(), fields: cols[2..].to_vec() })
        })
        .collect()
}

fn report(a: Report) -> Result<()> {
    let mut rows = Vec::new();
    for p in &a.metrics {
        rows.extend(read_metric_lines(p)?);
    }
    let find = |est: &str, noise: &str| rows.iter().find(|r| r.estimator == est && r.noise == noise);
    let mut t1 = String::from("noise,lse_mae_angle_deg,lse_mape_magnitude_pct,gnn_mae_angle_deg,gnn_mape_magnitude_pct\n");
    for noise in ["gaussian", "gmm"] {
        if let (Some(l), Some(g)) = (find("lse", noise), find("gnn", noise)) {
            t1.push_str(&format!("{noise},{},{},{},{}\n", l.fields[0], l.fields[1], g.fields[0], g.fields[1]));
        }
    }
    let mut t2 = String::from("estimator,mae_angle_deg,mape_magnitude_pct,r2_angle,r2_magnitude\n");
    for est in ["dnn", "gnn"] {
        if let Some(r) = find(est, "gmm") {
            t2.push_str(&format!("{est},{},{},{},{}\n", r.fields[0], r.fields[1], r.fields[2], r.fields[3]));
        }
    }
    let inputs: Vec<String> = a.metrics.iter().map(|p| sha256_hex(&fs::read(p).unwrap_or_default())).collect();
    let meta = json!({ "inputs": inputs });
    fs::create_dir_all(&a.out)?;
    write_artifact(&a.out.join("table1.csv"), t1.as_bytes(), meta.clone())?;
    write_artifact(&a.out.join("table2.csv"), t2.as_bytes(), meta.clone())?;
    if let Some(t) = &a.topology {
        let text = fs::read_to_string(t)?;
        let mut lines = text.lines();
        if !lines.next().unwrap_or_default().starts_with("topology,line,branch,dnn_total_mae,gnn_total_mae") {
            return Err(Error::Format(format!("{} is not a topology table", t.display())));
        }
        let mut t3 = String::from("topology,line,dnn_total_mae,gnn_total_mae\n");
        for l in lines.filter(|l| !l.is_empty()) {
            let c: Vec<&str> = l.split(',').collect();
            if c.len() < 5 {
                return Err(Error::Format(format!("{}: malformed row {l:?}", t.display())));
            }
            t3.push_str(&format!("{},{},{},{}\n", c[0], c[1], c[3], c[4]));
        }
        write_artifact(&a.out.join("table3.csv"), t3.as_bytes(), meta)?;
    }
    Ok(())
}
