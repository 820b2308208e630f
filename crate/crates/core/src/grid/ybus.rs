use num_complex::Complex64;

use super::case::{Branch, NetworkCase};
use crate::Result;

/// Two-port admittances of a π-model branch with an off-nominal tap at the
/// from end: `I_f = yff·V_f + yft·V_t`, `I_t = ytf·V_f + ytt·V_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchAdmittance {
    pub yff: Complex64,
    pub yft: Complex64,
    pub ytf: Complex64,
    pub ytt: Complex64,
}

pub fn branch_admittance(br: &Branch) -> BranchAdmittance {
    let ys = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
    let half_charging = Complex64::new(0.0, br.b_charging / 2.0);
    let tap = Complex64::from_polar(br.tap, br.shift);
    let ytt = ys + half_charging;
    BranchAdmittance {
        yff: ytt / (br.tap * br.tap),
        yft: -ys / tap.conj(),
        ytf: -ys / tap,
        ytt,
    }
}

/// Dense complex bus admittance matrix in pu.
#[derive(Debug, Clone, PartialEq)]
pub struct YBus {
    n: usize,
    values: Vec<Complex64>,
}

impl YBus {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    fn add(&mut self, i: usize, j: usize, y: Complex64) {
        self.values[i * self.n + j] += y;
    }

    /// `Y · v`
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.n).map(|i| self.row(i).iter().zip(v).map(|(y, x)| y * x).sum()).collect()
    }
}

/// Assemble YBus over in-service branches, excluding `outage`. Parallel
/// branches add.
pub fn build_ybus(case: &NetworkCase, outage: Option<usize>) -> Result<YBus> {
    case.check_outage(outage)?;
    let n = case.n_buses();
    let mut y = YBus { n, values: vec![Complex64::new(0.0, 0.0); n * n] };
    for (k, br) in case.branches().iter().enumerate() {
        if !br.in_service || Some(k) == outage {
            continue;
        }
        let (f, t) = case.branch_ends(k);
        let a = branch_admittance(br);
        y.add(f, f, a.yff);
        y.add(f, t, a.yft);
        y.add(t, f, a.ytf);
        y.add(t, t, a.ytt);
    }
    for (i, bus) in case.buses().iter().enumerate() {
        y.add(i, i, Complex64::new(bus.gs, bus.bs) / case.base_mva);
    }
    Ok(y)
}
