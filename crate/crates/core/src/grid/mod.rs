//! Network description: buses, branches, adjacency and admittance.

pub(crate) mod case;
mod matpower;
mod topology;
mod ybus;

pub use case::{parse_case, Branch, Bus, BusKind, NetworkCase};
pub use matpower::parse_matpower;
pub use topology::{build_adjacency, is_connected, remove_branch, AdjacencyMatrix};
pub use ybus::{branch_admittance, build_ybus, BranchAdmittance, YBus};
