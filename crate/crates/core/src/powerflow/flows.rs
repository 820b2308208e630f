use num_complex::Complex64;

use super::newton::PowerFlowSolution;
use crate::grid::{branch_admittance, build_ybus, NetworkCase};
use crate::Result;

/// Complex power entering the branch at each end, MW / MVAr.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchFlow {
    pub branch: usize,
    pub p_from: f64,
    pub q_from: f64,
    pub p_to: f64,
    pub q_to: f64,
}

impl BranchFlow {
    /// Active power lost in the branch.
    pub fn loss(&self) -> f64 {
        self.p_from + self.p_to
    }
}

/// π-model flows for every branch. Out-of-service branches (including the
/// solution's outage) report zero.
pub fn branch_flows(case: &NetworkCase, sol: &PowerFlowSolution) -> Vec<BranchFlow> {
    let v = sol.voltages();
    case.branches()
        .iter()
        .enumerate()
        .map(|(k, br)| {
            if !br.in_service || sol.outage == Some(k) {
                return BranchFlow { branch: k, p_from: 0.0, q_from: 0.0, p_to: 0.0, q_to: 0.0 };
            }
            let (f, t) = case.branch_ends(k);
            let y = branch_admittance(br);
            let i_f = y.yff * v[f] + y.yft * v[t];
            let i_t = y.ytf * v[f] + y.ytt * v[t];
            let s_f = v[f] * i_f.conj() * case.base_mva;
            let s_t = v[t] * i_t.conj() * case.base_mva;
            BranchFlow { branch: k, p_from: s_f.re, q_from: s_f.im, p_to: s_t.re, q_to: s_t.im }
        })
        .collect()
}

/// Net complex power injected into the network at each bus, MW / MVAr.
pub fn bus_injections(case: &NetworkCase, sol: &PowerFlowSolution) -> Result<Vec<Complex64>> {
    let ybus = build_ybus(case, sol.outage)?;
    let v = sol.voltages();
    let i = ybus.mul_vec(&v);
    Ok(v.iter().zip(&i).map(|(v, i)| v * i.conj() * case.base_mva).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::case::tests::{bus, line};
    use crate::grid::BusKind;
    use crate::powerflow::{solve_power_flow, LoadScenario};

    #[test]
    fn lossless_line_is_antisymmetric() {
        let mut load = bus(2, BusKind::Pq);
        load.p_load = 30.0;
        load.q_load = 10.0;
        let case = NetworkCase::new("two", 100.0, vec![bus(1, BusKind::Slack), load], vec![line(1, 2, 0.0, 0.1)]).unwrap();
        let sol = solve_power_flow(&case, &LoadScenario::nominal(2), None).unwrap();
        let flows = branch_flows(&case, &sol);
        assert!((flows[0].p_from + flows[0].p_to).abs() < 1e-9);
        assert!((flows[0].p_to + 30.0).abs() < 1e-6);
    }

    #[test]
    fn zero_load_two_bus_has_no_flow() {
        let case = NetworkCase::new("two", 100.0, vec![bus(1, BusKind::Slack), bus(2, BusKind::Pq)], vec![line(1, 2, 0.01, 0.1)]).unwrap();
        let sol = solve_power_flow(&case, &LoadScenario::nominal(2), None).unwrap();
        let f = branch_flows(&case, &sol)[0];
        for x in [f.p_from, f.q_from, f.p_to, f.q_to] {
            assert!(x.abs() < 1e-12);
        }
    }

    #[test]
    fn resistive_line_has_positive_loss() {
        let mut load = bus(2, BusKind::Pq);
        load.p_load = 40.0;
        let case = NetworkCase::new("two", 100.0, vec![bus(1, BusKind::Slack), load], vec![line(1, 2, 0.02, 0.1)]).unwrap();
        let sol = solve_power_flow(&case, &LoadScenario::nominal(2), None).unwrap();
        assert!(branch_flows(&case, &sol)[0].loss() > 0.0);
    }
}
