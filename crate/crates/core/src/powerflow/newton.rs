use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::scenario::LoadScenario;
use crate::grid::{build_adjacency, build_ybus, is_connected, BusKind, NetworkCase, YBus};
use crate::{Error, Result};

/// Initial voltage guess.
#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    /// 1 pu at PQ buses, setpoints elsewhere, every angle at the slack reference.
    Flat,
    /// Voltages stored in the case.
    Case,
    /// A previous solution (magnitudes in pu, angles in radians).
    Warm { vm: Vec<f64>, va: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub start: Start,
}

impl Default for PowerFlowOptions {
    fn default() -> Self {
        PowerFlowOptions { tolerance: 1e-8, max_iterations: 30, start: Start::Flat }
    }
}

/// Bus voltages of a solved operating point. Angles in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowSolution {
    pub vm: Vec<f64>,
    pub va: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub max_mismatch: f64,
    /// Branch switched out for this solve, if any.
    pub outage: Option<usize>,
}

impl PowerFlowSolution {
    pub fn voltages(&self) -> Vec<Complex64> {
        self.vm.iter().zip(&self.va).map(|(&m, &a)| Complex64::from_polar(m, a)).collect()
    }
}

/// Mismatch equations in polar form. Unknowns are the angles of every
/// non-slack bus followed by the magnitudes of PQ buses.
pub(crate) struct PfProblem {
    pub ybus: YBus,
    pub s_spec: Vec<Complex64>,
    pub pvpq: Vec<usize>,
    pub pq: Vec<usize>,
}

impl PfProblem {
    pub fn new(case: &NetworkCase, scenario: &LoadScenario, outage: Option<usize>) -> Result<Self> {
        if scenario.p_mult.len() != case.n_buses() || scenario.q_mult.len() != case.n_buses() {
            return Err(Error::Shape(format!(
                "scenario has {} multipliers for {} buses",
                scenario.p_mult.len(),
                case.n_buses()
            )));
        }
        let ybus = build_ybus(case, outage)?;
        let mut pvpq = Vec::new();
        let mut pq = Vec::new();
        let s_spec = case
            .buses()
            .iter()
            .enumerate()
            .map(|(i, bus)| {
                match bus.kind {
                    BusKind::Pq => {
                        pvpq.push(i);
                        pq.push(i);
                    }
                    BusKind::Pv => pvpq.push(i),
                    BusKind::Slack => {}
                }
                let (fp, fq) = scenario.load_factor(i);
                let p = bus.p_gen * scenario.global - bus.p_load * fp;
                let q = -bus.q_load * fq;
                Complex64::new(p, q) / case.base_mva
            })
            .collect();
        Ok(PfProblem { ybus, s_spec, pvpq, pq })
    }

    pub fn n_unknowns(&self) -> usize {
        self.pvpq.len() + self.pq.len()
    }

    fn voltages(vm: &[f64], va: &[f64]) -> Vec<Complex64> {
        vm.iter().zip(va).map(|(&m, &a)| Complex64::from_polar(m, a)).collect()
    }

    pub fn mismatch(&self, vm: &[f64], va: &[f64]) -> Vec<f64> {
        let v = Self::voltages(vm, va);
        let i = self.ybus.mul_vec(&v);
        let mis: Vec<Complex64> = (0..v.len()).map(|k| v[k] * i[k].conj() - self.s_spec[k]).collect();
        self.pvpq.iter().map(|&k| mis[k].re).chain(self.pq.iter().map(|&k| mis[k].im)).collect()
    }

    pub fn jacobian(&self, vm: &[f64], va: &[f64]) -> DMatrix<f64> {
        let n = vm.len();
        let v = Self::voltages(vm, va);
        let ibus = self.ybus.mul_vec(&v);
        let vnorm: Vec<Complex64> = v.iter().map(|x| x / x.norm()).collect();
        let j = Complex64::new(0.0, 1.0);
        // dS/dVa and dS/dVm restricted to the unknown columns
        let mut col_of_va = vec![usize::MAX; n];
        for (c, &k) in self.pvpq.iter().enumerate() {
            col_of_va[k] = c;
        }
        let mut col_of_vm = vec![usize::MAX; n];
        for (c, &k) in self.pq.iter().enumerate() {
            col_of_vm[k] = self.pvpq.len() + c;
        }
        let mut row_p = vec![usize::MAX; n];
        for (r, &k) in self.pvpq.iter().enumerate() {
            row_p[k] = r;
        }
        let mut row_q = vec![usize::MAX; n];
        for (r, &k) in self.pq.iter().enumerate() {
            row_q[k] = self.pvpq.len() + r;
        }
        let dim = self.n_unknowns();
        let mut jac = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..n {
            if row_p[i] == usize::MAX {
                continue;
            }
            let yrow = self.ybus.row(i);
            for k in 0..n {
                let y = yrow[k];
                let diag = i == k;
                if y == Complex64::new(0.0, 0.0) && !diag {
                    continue;
                }
                let mut ds_dva = j * v[i] * (-(y * v[k])).conj();
                let mut ds_dvm = v[i] * (y * vnorm[k]).conj();
                if diag {
                    ds_dva += j * v[i] * ibus[i].conj();
                    ds_dvm += ibus[i].conj() * vnorm[i];
                }
                if col_of_va[k] != usize::MAX {
                    jac[(row_p[i], col_of_va[k])] = ds_dva.re;
                    if row_q[i] != usize::MAX {
                        jac[(row_q[i], col_of_va[k])] = ds_dva.im;
                    }
                }
                if col_of_vm[k] != usize::MAX {
                    jac[(row_p[i], col_of_vm[k])] = ds_dvm.re;
                    if row_q[i] != usize::MAX {
                        jac[(row_q[i], col_of_vm[k])] = ds_dvm.im;
                    }
                }
            }
        }
        jac
    }
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) })
}

/// Newton–Raphson power flow from a flat start with default tolerances.
pub fn solve_power_flow(case: &NetworkCase, scenario: &LoadScenario, outage: Option<usize>) -> Result<PowerFlowSolution> {
    solve_power_flow_with(case, scenario, outage, &PowerFlowOptions::default())
}

/// Newton–Raphson power flow in polar coordinates. PV magnitudes are held at
/// their setpoints; reactive limits are not enforced.
pub fn solve_power_flow_with(
    case: &NetworkCase,
    scenario: &LoadScenario,
    outage: Option<usize>,
    opts: &PowerFlowOptions,
) -> Result<PowerFlowSolution> {
    if !is_connected(&build_adjacency(case, outage)?) {
        return Err(Error::Disconnected);
    }
    let problem = PfProblem::new(case, scenario, outage)?;
    let slack = case.slack_index();
    let ref_angle = case.buses()[slack].va_init;
    let (mut vm, mut va): (Vec<f64>, Vec<f64>) = match &opts.start {
        Start::Flat => case
            .buses()
            .iter()
            .map(|b| (if b.kind == BusKind::Pq { 1.0 } else { b.v_setpoint }, ref_angle))
            .unzip(),
        Start::Case => case.buses().iter().map(|b| (b.vm_init, b.va_init)).unzip(),
        Start::Warm { vm, va } => {
            if vm.len() != case.n_buses() || va.len() != case.n_buses() {
                return Err(Error::Shape("warm start length differs from bus count".into()));
            }
            (vm.clone(), va.clone())
        }
    };
    for (i, bus) in case.buses().iter().enumerate() {
        if bus.kind != BusKind::Pq {
            vm[i] = bus.v_setpoint;
        }
    }
    va[slack] = ref_angle;

    let npvpq = problem.pvpq.len();
    let mut f = problem.mismatch(&vm, &va);
    let mut norm = max_abs(&f);
    let mut iterations = 0;
    while !(norm < opts.tolerance) && iterations < opts.max_iterations {
        if !norm.is_finite() {
            break;
        }
        iterations += 1;
        let jac = problem.jacobian(&vm, &va);
        let rhs = DVector::from_iterator(f.len(), f.iter().map(|x| -x));
        let dx = jac.lu().solve(&rhs).ok_or_else(|| Error::Singular("power-flow Jacobian".into()))?;
        for (c, &k) in problem.pvpq.iter().enumerate() {
            va[k] += dx[c];
        }
        for (c, &k) in problem.pq.iter().enumerate() {
            vm[k] += dx[npvpq + c];
        }
        f = problem.mismatch(&vm, &va);
        norm = max_abs(&f);
    }
    if !(norm < opts.tolerance) {
        return Err(Error::NotConverged { iterations, max_mismatch: norm });
    }
    Ok(PowerFlowSolution { vm, va, converged: true, iterations, max_mismatch: norm, outage })
}
