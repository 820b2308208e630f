//! Load scenarios, Newton–Raphson AC power flow and branch flows.

mod dataset;
mod flows;
mod newton;
mod scenario;

pub use dataset::{
    case_hash, generate_dataset, generate_solutions, Dataset, DatasetConfig, DatasetManifest, Dims, Topology,
    REDRAW_FRACTION,
};
pub use flows::{branch_flows, bus_injections, BranchFlow};
pub use newton::{solve_power_flow, solve_power_flow_with, PowerFlowOptions, PowerFlowSolution, Start};
pub use scenario::{sample_load_scenario, LoadScenario, ScenarioConfig};

