use serde::{Deserialize, Serialize};

use crate::grid::{build_adjacency, is_connected, NetworkCase};
use crate::powerflow::{branch_flows, solve_power_flow_with, LoadScenario, PowerFlowOptions, Start};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutageStatus {
    Ranked,
    Disconnected,
    NotConverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageImpact {
    pub branch: usize,
    pub from_bus: usize,
    pub to_bus: usize,
    /// Σ |ΔP_from| over surviving branches, MW
    pub impact_mw: f64,
    pub status: OutageStatus,
}

impl OutageImpact {
    pub fn id(&self) -> String {
        format!("{}-{}", self.from_bus, self.to_bus)
    }

    pub fn connected(&self) -> bool {
        self.status != OutageStatus::Disconnected
    }
}

/// Single-line outages of every in-service branch, ranked outages first by
/// descending impact (ties by branch index), then flagged ones by index.
pub fn rank_outages(case: &NetworkCase) -> Result<Vec<OutageImpact>> {
    let nominal = LoadScenario::nominal(case.n_buses());
    let base = solve_power_flow_with(case, &nominal, None, &PowerFlowOptions::default())?;
    let base_flows = branch_flows(case, &base);
    let warm = PowerFlowOptions { start: Start::Warm { vm: base.vm.clone(), va: base.va.clone() }, ..Default::default() };
    let mut ranked = Vec::new();
    let mut flagged = Vec::new();
    for (k, br) in case.branches().iter().enumerate() {
        if !br.in_service {
            continue;
        }
        let mut item = OutageImpact { branch: k, from_bus: br.from_bus, to_bus: br.to_bus, impact_mw: 0.0, status: OutageStatus::Ranked };
        if !is_connected(&build_adjacency(case, Some(k))?) {
            item.status = OutageStatus::Disconnected;
            flagged.push(item);
            continue;
        }
        match solve_power_flow_with(case, &nominal, Some(k), &warm) {
            Ok(sol) => {
                let flows = branch_flows(case, &sol);
                item.impact_mw = flows
                    .iter()
                    .zip(&base_flows)
                    .enumerate()
                    .filter(|(j, _)| *j != k && case.branches()[*j].in_service)
                    .map(|(_, (a, b))| (a.p_from - b.p_from).abs())
                    .sum::<f64>();
                ranked.push(item);
            }
            Err(Error::NotConverged { .. } | Error::Singular(_)) => {
                item.status = OutageStatus::NotConverged;
                flagged.push(item);
            }
            Err(e) => return Err(e),
        }
    }
    ranked.sort_by(|a, b| b.impact_mw.total_cmp(&a.impact_mw).then(a.branch.cmp(&b.branch)));
    ranked.extend(flagged);
    Ok(ranked)
}

pub fn outages_to_csv(items: &[OutageImpact]) -> String {
    let mut out = String::from("rank,branch,from_bus,to_bus,impact_mw,status\n");
    let mut rank = 0;
    for it in items {
        let r = if it.status == OutageStatus::Ranked {
            rank += 1;
            rank.to_string()
        } else {
            String::new()
        };
        let status = match it.status {
            OutageStatus::Ranked => "ranked",
            OutageStatus::Disconnected => "disconnected",
            OutageStatus::NotConverged => "not_converged",
        };
        out.push_str(&format!("{r},{},{},{},{},{status}\n", it.branch, it.from_bus, it.to_bus, it.impact_mw));
    }
    out
}
