mod common;

use std::time::Instant;

use gnnse::powerflow::{branch_flows, bus_injections, sample_load_scenario, solve_power_flow, LoadScenario, ScenarioConfig};
use gnnse::BusKind;

fn assert_matches_reference(vm: &[f64], va: &[f64], reference: &serde_json::Value) {
    let ref_vm = common::floats(&reference["vm"]);
    let ref_va = common::floats(&reference["va_deg"]);
    for i in 0..vm.len() {
        assert!((vm[i] - ref_vm[i]).abs() < 1e-6, "vm[{i}] {} vs {}", vm[i], ref_vm[i]);
        assert!((va[i].to_degrees() - ref_va[i]).abs() < 1e-6, "va[{i}] {} vs {}", va[i].to_degrees(), ref_va[i]);
    }
}

#[test]
fn base_case_matches_reference_solver() {
    let case = common::case118();
    let t = Instant::now();
    let sol = solve_power_flow(&case, &LoadScenario::nominal(118), None).unwrap();
    assert!(t.elapsed().as_secs_f64() < 1.0);
    assert!(sol.converged);
    assert!(sol.iterations <= 10, "{} iterations", sol.iterations);
    assert!(sol.max_mismatch < 1e-8);
    let reference = common::fixture("reference_118.json");
    assert_matches_reference(&sol.vm, &sol.va, &reference["base"]);

    let ref_p = common::floats(&reference["base"]["p_from_mw"]);
    for f in branch_flows(&case, &sol) {
        assert!((f.p_from - ref_p[f.branch]).abs() < 1e-4, "branch {}", f.branch);
    }
}

#[test]
fn outage_case_matches_reference_solver() {
    let case = common::case118();
    let reference = common::fixture("reference_118.json");
    let k = case.find_branch(8, 5).unwrap();
    assert_eq!(reference["outage_8_5"]["removed_branch_index"].as_u64().unwrap() as usize, k);
    let sol = solve_power_flow(&case, &LoadScenario::nominal(118), Some(k)).unwrap();
    assert!(sol.iterations <= 10);
    assert_matches_reference(&sol.vm, &sol.va, &reference["outage_8_5"]);
}

#[test]
fn energy_balance() {
    let case = common::case118();
    let sol = solve_power_flow(&case, &LoadScenario::nominal(118), None).unwrap();
    let s = bus_injections(&case, &sol).unwrap();
    let injected: f64 = s.iter().map(|x| x.re).sum();
    let losses: f64 = branch_flows(&case, &sol).iter().map(|f| f.loss()).sum();
    let shunt: f64 = case.buses().iter().zip(&sol.vm).map(|(b, vm)| b.gs * vm * vm).sum();
    assert!((injected - losses - shunt).abs() < 1e-6, "{injected} vs {}", losses + shunt);
    for (i, b) in case.buses().iter().enumerate() {
        if b.kind == BusKind::Pq {
            assert!((s[i].re + b.p_load).abs() < 1e-6);
            assert!((s[i].im + b.q_load).abs() < 1e-6);
        }
    }
}

#[test]
fn random_scenarios_converge() {
    let case = common::case118();
    let cfg = ScenarioConfig::default();
    for stream in 0..20 {
        let scenario = sample_load_scenario(&case, &cfg, 42, stream).unwrap();
        let sol = solve_power_flow(&case, &scenario, None).unwrap();
        assert!(sol.max_mismatch < 1e-8);
        let s = case.slack_index();
        assert_eq!(sol.va[s], case.buses()[s].va_init);
    }
}
