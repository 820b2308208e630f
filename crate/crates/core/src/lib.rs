//! Time-synchronized state estimation workbench.
//!
//! The crate synthesizes PMU data from AC power-flow solutions, estimates bus
//! voltages with a linear least-squares estimator, a feed-forward network and a
//! GCN + GAT graph network, and compares the three under different noise
//! models and single-line outages.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod io;
pub mod measurement;
pub mod nn;
pub mod powerflow;
pub mod rng;

pub use error::{Error, Result};
pub use grid::{AdjacencyMatrix, Branch, Bus, BusKind, NetworkCase, YBus};
