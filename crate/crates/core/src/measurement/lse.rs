use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::placement::PmuPlacement;
use super::synth::{MeasurementLayout, MeasurementSet};
use crate::grid::NetworkCase;
use crate::{Error, Result};

const RANK_TOL: f64 = 1e-10;

/// Bus voltage estimate: magnitudes in pu, angles in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct StateEstimate {
    pub vm: Vec<f64>,
    pub va: Vec<f64>,
}

impl StateEstimate {
    pub fn from_rectangular(x: &[f64]) -> Self {
        let (vm, va) = x.chunks_exact(2).map(|c| {
            let v = Complex64::new(c[0], c[1]);
            (v.norm(), v.arg())
        }).unzip();
        StateEstimate { vm, va }
    }
}

/// Linear measurement model `z = H x` over rectangular bus voltages
/// `x = [Re V_0, Im V_0, Re V_1, ...]`, factored once per topology.
#[derive(Debug, Clone)]
pub struct LseProblem {
    pub h: DMatrix<f64>,
    pub layout: MeasurementLayout,
    qt: DMatrix<f64>,
    r: DMatrix<f64>,
}

/// Rows `2k, 2k+1` hold the real and imaginary parts of channel `k`.
fn complex_block(h: &mut DMatrix<f64>, row: usize, col: usize, y: Complex64) {
    h[(row, 2 * col)] += y.re;
    h[(row, 2 * col + 1)] -= y.im;
    h[(row + 1, 2 * col)] += y.im;
    h[(row + 1, 2 * col + 1)] += y.re;
}

/// Build and factor H for a placement and topology. Fails when the
/// measurements do not determine every state.
pub fn build_h(case: &NetworkCase, placement: &PmuPlacement, outage: Option<usize>) -> Result<LseProblem> {
    let layout = MeasurementLayout::new(case, placement, outage)?;
    LseProblem::from_layout(layout)
}

impl LseProblem {
    pub fn from_layout(layout: MeasurementLayout) -> Result<Self> {
        let states = 2 * layout.n_buses;
        let rows = 2 * layout.n_channels();
        let mut h = DMatrix::<f64>::zeros(rows, states);
        for (k, &bus) in layout.voltages.iter().enumerate() {
            complex_block(&mut h, 2 * k, bus, Complex64::new(1.0, 0.0));
        }
        let offset = 2 * layout.voltages.len();
        for (k, ch) in layout.currents.iter().enumerate() {
            complex_block(&mut h, offset + 2 * k, ch.at, ch.self_y);
            complex_block(&mut h, offset + 2 * k, ch.far, ch.mutual_y);
        }
        if rows < states {
            return Err(Error::RankDeficient { rank: rows, states });
        }
        let qr = h.clone().qr();
        let r = qr.r();
        let qt = qr.q().transpose();
        let diag_max = (0..states).map(|k| r[(k, k)].abs()).fold(0.0_f64, f64::max);
        let rank = (0..states).filter(|&k| r[(k, k)].abs() > RANK_TOL * diag_max).count();
        if rank < states {
            return Err(Error::RankDeficient { rank, states });
        }
        Ok(LseProblem { h, layout, qt, r })
    }

    pub fn n_states(&self) -> usize {
        self.h.ncols()
    }

    pub fn n_measurements(&self) -> usize {
        self.h.nrows()
    }

    /// Measurement vector in row order of H.
    pub fn z(&self, ms: &MeasurementSet) -> Vec<f64> {
        ms.phasors().flat_map(|p| [p.re, p.im]).collect()
    }

    /// Least-squares solution in rectangular coordinates, via `R x = Qᵀ z`.
    pub fn solve_rectangular(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.n_measurements() {
            return Err(Error::Shape(format!("z has {} entries, H has {} rows", z.len(), self.n_measurements())));
        }
        let qtz = &self.qt * DVector::from_column_slice(z);
        let x = self
            .r
            .solve_upper_triangular(&qtz)
            .ok_or_else(|| Error::Singular("normal equations".into()))?;
        Ok(x.iter().copied().collect())
    }

    pub fn estimate(&self, ms: &MeasurementSet) -> Result<StateEstimate> {
        solve_lse(self, &self.z(ms))
    }
}

/// Least-squares state estimate converted to polar form.
pub fn solve_lse(problem: &LseProblem, z: &[f64]) -> Result<StateEstimate> {
    Ok(StateEstimate::from_rectangular(&problem.solve_rectangular(z)?))
}

/// Reusable estimator alias for callers that think of the factored problem
/// as a solver.
pub type LseSolver = LseProblem;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::case::tests::{bus, line};
    use crate::grid::BusKind;

    fn two_bus() -> NetworkCase {
        NetworkCase::new("two", 100.0, vec![bus(1, BusKind::Slack), bus(2, BusKind::Pq)], vec![line(1, 2, 0.0, 0.1)]).unwrap()
    }

    #[test]
    fn current_rows_hand_expansion() {
        let p = build_h(&two_bus(), &PmuPlacement::new([0]), None).unwrap();
        assert_eq!(p.h.shape(), (4, 4));
        // voltage rows
        assert_eq!(p.h.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(p.h.row(1).iter().copied().collect::<Vec<_>>(), vec![0.0, 1.0, 0.0, 0.0]);
        // I = (V1 - V2) y with y = -10j
        let expect = [[0.0, 10.0, 0.0, -10.0], [-10.0, 0.0, 10.0, 0.0]];
        for (r, row) in expect.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                assert!((p.h[(2 + r, c)] - v).abs() < 1e-12, "H[{},{c}]", 2 + r);
            }
        }
    }

    #[test]
    fn voltage_only_rows_form_identity() {
        let mut layout = MeasurementLayout::new(&two_bus(), &PmuPlacement::everywhere(2), None).unwrap();
        layout.currents.clear();
        let p = LseProblem::from_layout(layout).unwrap();
        assert_eq!(p.h, DMatrix::identity(4, 4));
        let x = p.solve_rectangular(&[1.0, 0.1, 0.9, -0.2]).unwrap();
        assert_eq!(x, vec![1.0, 0.1, 0.9, -0.2]);
    }

    #[test]
    fn unobservable_layout_is_rank_deficient() {
        let case = NetworkCase::new(
            "path",
            100.0,
            vec![bus(1, BusKind::Slack), bus(2, BusKind::Pq), bus(3, BusKind::Pq), bus(4, BusKind::Pq)],
            vec![line(1, 2, 0.0, 0.1), line(2, 3, 0.0, 0.1), line(3, 4, 0.0, 0.1)],
        )
        .unwrap();
        assert!(matches!(build_h(&case, &PmuPlacement::new([0]), None), Err(Error::RankDeficient { .. })));
        assert!(build_h(&case, &PmuPlacement::new([1, 2]), None).is_ok());
    }

    #[test]
    fn overdetermined_toy_matches_normal_equations() {
        // 3x2 system solved through the same QR path
        let layout = MeasurementLayout { n_buses: 1, outage: None, voltages: vec![0], currents: vec![] };
        let mut p = LseProblem::from_layout(layout).unwrap();
        let h = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 7.0]);
        let qr = h.clone().qr();
        p.qt = qr.q().transpose();
        p.r = qr.r();
        p.h = h.clone();
        let z = [1.0, -1.0, 2.5];
        let x = p.solve_rectangular(&z).unwrap();
        // brute-force normal equations: (HᵀH) x = Hᵀ z, 2x2 Cramer
        let mut hth = [[0.0; 2]; 2];
        let mut htz = [0.0; 2];
        for r in 0..3 {
            for a in 0..2 {
                htz[a] += h[(r, a)] * z[r];
                for b in 0..2 {
                    hth[a][b] += h[(r, a)] * h[(r, b)];
                }
            }
        }
        let det = hth[0][0] * hth[1][1] - hth[0][1] * hth[1][0];
        let x0 = (htz[0] * hth[1][1] - hth[0][1] * htz[1]) / det;
        let x1 = (hth[0][0] * htz[1] - hth[1][0] * htz[0]) / det;
        assert!((x[0] - x0).abs() < 1e-12 && (x[1] - x1).abs() < 1e-12, "{x:?} vs {x0} {x1}");
        // the residual is non-zero, so this really is a least-squares fit
        let res: f64 = (0..3).map(|r| (h[(r, 0)] * x0 + h[(r, 1)] * x1 - z[r]).powi(2)).sum();
        assert!(res > 1e-3);
    }
}
