mod common;

use gnnse::grid::build_adjacency;
use gnnse::measurement::{
    build_feature_matrix, build_h, dominates, place_pmus, sample_noise, synthesize_measurements, MeasurementLayout,
    NoiseKind, NoiseModel, PmuPlacement,
};
use gnnse::powerflow::{sample_load_scenario, solve_power_flow, LoadScenario, ScenarioConfig};
use gnnse::rng;
use nalgebra::DMatrix;

fn placement(case: &gnnse::NetworkCase) -> PmuPlacement {
    place_pmus(&build_adjacency(case, None).unwrap())
}

#[test]
fn greedy_placement_dominates() {
    let case = common::case118();
    let adj = build_adjacency(&case, None).unwrap();
    let p = place_pmus(&adj);
    assert!(p.len() <= 36, "{} PMUs", p.len());
    assert!(dominates(&p, &adj));
    for i in 0..118 {
        assert!(p.contains(i) || adj.neighbors(i).any(|j| p.contains(j)), "bus {i} uncovered");
    }
}

#[test]
fn measurement_matrix_has_full_column_rank() {
    let case = common::case118();
    let problem = build_h(&case, &placement(&case), None).unwrap();
    assert_eq!(problem.n_states(), 236);
    let h: DMatrix<f64> = problem.h.clone();
    let sv = h.singular_values();
    let tol = sv.max() * 1e-10;
    assert_eq!(sv.iter().filter(|&&s| s > tol).count(), 236);
}

#[test]
fn noise_free_estimate_is_exact() {
    let case = common::case118();
    let problem = build_h(&case, &placement(&case), None).unwrap();
    for stream in 0..10 {
        let scenario = sample_load_scenario(&case, &ScenarioConfig::default(), 5, stream).unwrap();
        let sol = solve_power_flow(&case, &scenario, None).unwrap();
        let ms = synthesize_measurements(&sol, &problem.layout, &NoiseModel::none().into(), &mut rng::stream(0, stream));
        let est = problem.estimate(&ms).unwrap();
        let truth = sol.voltages();
        for (i, t) in truth.iter().enumerate() {
            let e = num_complex::Complex64::from_polar(est.vm[i], est.va[i]);
            assert!((e - t).norm() < 1e-10, "bus {i}");
        }
    }
}

#[test]
fn gmm_moments_match_mixture() {
    let model = NoiseModel::default_gmm();
    let mut r = rng::stream(99, 0);
    for kind in [NoiseKind::Magnitude, NoiseKind::Angle] {
        let n = 1_000_000;
        let draws: Vec<f64> = (0..n).map(|_| sample_noise(&model, &mut r, kind)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let (m, v) = model.moments(kind);
        assert!(((mean - m) / m).abs() < 0.01, "{kind:?} mean {mean} vs {m}");
        assert!(((var - v) / v).abs() < 0.01, "{kind:?} var {var} vs {v}");
    }
}

#[test]
fn pmu_bus_features_carry_the_noise_spread() {
    let case = common::case118();
    let sol = solve_power_flow(&case, &LoadScenario::nominal(118), None).unwrap();
    let p = placement(&case);
    let layout = MeasurementLayout::new(&case, &p, None).unwrap();
    let bus = p.indices()[0];
    let noise = NoiseModel::default_gaussian().into();
    let mut r = rng::stream(3, 0);
    let n = 20_000;
    let (mut s1, mut s2, mut a1) = (0.0, 0.0, 0.0);
    for _ in 0..n {
        let ms = synthesize_measurements(&sol, &layout, &noise, &mut r);
        let x = build_feature_matrix(&layout, &ms).unwrap();
        let rel = 100.0 * (x.vm(bus) / sol.vm[bus] - 1.0);
        s1 += rel;
        s2 += rel * rel;
        a1 += (x.va(bus) - sol.va[bus]).to_degrees();
    }
    let mean = s1 / n as f64;
    let std = (s2 / n as f64 - mean * mean).sqrt();
    assert!(mean.abs() < 0.01);
    assert!((std - 0.2).abs() < 0.01, "std {std}");
    assert!((a1 / n as f64).abs() < 0.005);
}
