//! Metrics, outage ranking and the noise and topology studies.

mod density;
mod metrics;
mod outages;
mod studies;

pub use density::{error_density, BinConfig, ErrorDensity};
pub use metrics::{compute_metrics, MetricsReport};
pub use outages::{outages_to_csv, rank_outages, OutageImpact, OutageStatus};
pub use studies::{
    base_solutions, gnn_predictions, lse_predictions, noise_study_csv, noisy_dataset, run_noise_study, run_topology_study,
    select_outages, topology_study_csv, train_gnn, train_mlp, BaseSolutions, EstimatorKind, NoiseStudy, NoiseStudyRow,
    SelectedOutage, StudyConfig, TopologyRow, TopologyStudy, PAPER_LIT, PAPER_MIT,
};
