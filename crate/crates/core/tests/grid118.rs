mod common;

use gnnse::grid::{build_adjacency, build_ybus, is_connected, remove_branch};
use gnnse::{BusKind, Error};
use num_complex::Complex64;

#[test]
fn dimensions_and_slack() {
    let case = common::case118();
    assert_eq!(case.n_buses(), 118);
    assert_eq!(case.n_branches(), 186);
    let slack = case.slack_index();
    assert_eq!(case.buses()[slack].id, 69);
    assert_eq!(case.buses().iter().filter(|b| b.kind == BusKind::Slack).count(), 1);
}

#[test]
fn adjacency_is_symmetric_and_connected() {
    let case = common::case118();
    let adj = build_adjacency(&case, None).unwrap();
    for i in 0..118 {
        assert!(!adj.get(i, i));
        for j in 0..118 {
            assert_eq!(adj.get(i, j), adj.get(j, i));
        }
    }
    assert!(is_connected(&adj));
    let edges: usize = (0..118).map(|i| adj.degree(i)).sum::<usize>() / 2;
    // parallel circuits collapse to one edge
    assert_eq!(edges, 179);
}

#[test]
fn outage_8_5_removes_one_edge() {
    let case = common::case118();
    let k = case.find_branch(8, 5).unwrap();
    let base = build_adjacency(&case, None).unwrap();
    let post = build_adjacency(&case, Some(k)).unwrap();
    let (f, t) = case.branch_ends(k);
    assert!(base.get(f, t));
    assert!(!post.get(f, t));
    assert_eq!(post.degree(f), base.degree(f) - 1);
    assert!(is_connected(&post));
}

#[test]
fn radial_line_outage_disconnects() {
    let case = common::case118();
    let b117 = case.bus_index(117).unwrap();
    let base = build_adjacency(&case, None).unwrap();
    assert_eq!(base.degree(b117), 1);
    let k = (0..case.n_branches())
        .find(|&k| {
            let (f, t) = case.branch_ends(k);
            f == b117 || t == b117
        })
        .unwrap();
    let post = build_adjacency(&case, Some(k)).unwrap();
    assert!(!is_connected(&post));
    let reduced = remove_branch(&case, k).unwrap();
    assert!(!reduced.branches()[k].in_service);
    assert!(!is_connected(&build_adjacency(&reduced, None).unwrap()));
}

#[test]
fn outage_index_out_of_range() {
    let case = common::case118();
    assert!(matches!(build_adjacency(&case, Some(500)), Err(Error::BranchIndex { .. })));
}

#[test]
fn ybus_row_sums_tally_shunts() {
    let case = common::case118();
    let y = build_ybus(&case, None).unwrap();
    let mut expected = vec![Complex64::new(0.0, 0.0); 118];
    for (i, b) in case.buses().iter().enumerate() {
        expected[i] += Complex64::new(b.gs, b.bs) / case.base_mva;
    }
    for k in 0..case.n_branches() {
        let br = &case.branches()[k];
        let (f, t) = case.branch_ends(k);
        let ys = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
        let charge = Complex64::new(0.0, br.b_charging / 2.0);
        let tau = br.tap;
        expected[f] += ys * (1.0 - tau) / (tau * tau) + charge / (tau * tau);
        expected[t] += ys * (tau - 1.0) / tau + charge;
    }
    for i in 0..118 {
        let sum: Complex64 = y.row(i).iter().sum();
        assert!((sum - expected[i]).norm() < 1e-9, "bus {i}: {sum} vs {}", expected[i]);
    }
}

#[test]
fn ybus_is_symmetric_without_phase_shifters() {
    let case = common::case118();
    assert!(case.branches().iter().all(|b| b.shift == 0.0));
    let y = build_ybus(&case, None).unwrap();
    for i in 0..118 {
        for j in 0..118 {
            assert!((y.get(i, j) - y.get(j, i)).norm() < 1e-12);
        }
    }
}
