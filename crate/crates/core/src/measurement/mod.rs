//! PMU placement, noisy phasor synthesis, node features and the linear
//! state estimator.

mod features;
mod lse;
mod noise;
mod placement;
mod synth;

pub use features::{build_feature_matrix, NodeFeatureMatrix};
pub use lse::{build_h, solve_lse, LseProblem, LseSolver, StateEstimate};
pub use noise::{sample_noise, NoiseKind, NoiseModel, PmuNoise};
pub use placement::{dominates, extend_placement, place_pmus, PmuPlacement};
pub use synth::{synthesize_measurements, CurrentChannel, MeasurementLayout, MeasurementSet};
