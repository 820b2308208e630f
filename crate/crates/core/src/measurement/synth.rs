use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use super::noise::{sample_noise, NoiseKind, NoiseModel, PmuNoise};
use super::placement::PmuPlacement;
use crate::grid::{branch_admittance, BranchAdmittance, NetworkCase};
use crate::powerflow::PowerFlowSolution;
use crate::Result;

/// Current phasor measured at the `at` end of `branch`, flowing into the branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentChannel {
    pub branch: usize,
    pub at: usize,
    pub far: usize,
    /// `I = self_y · V_at + mutual_y · V_far`
    pub self_y: Complex64,
    pub mutual_y: Complex64,
}

/// Which phasors a placement reports for one topology: the voltage at every
/// PMU bus and the current on every in-service branch end at a PMU bus.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementLayout {
    pub n_buses: usize,
    pub outage: Option<usize>,
    pub voltages: Vec<usize>,
    pub currents: Vec<CurrentChannel>,
}

impl MeasurementLayout {
    pub fn new(case: &NetworkCase, placement: &PmuPlacement, outage: Option<usize>) -> Result<Self> {
        case.check_outage(outage)?;
        let mut currents = Vec::new();
        for &bus in placement.indices() {
            for (k, br) in case.branches().iter().enumerate() {
                if !br.in_service || Some(k) == outage {
                    continue;
                }
                let (f, t) = case.branch_ends(k);
                let BranchAdmittance { yff, yft, ytf, ytt } = branch_admittance(br);
                if f == bus {
                    currents.push(CurrentChannel { branch: k, at: f, far: t, self_y: yff, mutual_y: yft });
                } else if t == bus {
                    currents.push(CurrentChannel { branch: k, at: t, far: f, self_y: ytt, mutual_y: ytf });
                }
            }
        }
        Ok(MeasurementLayout { n_buses: case.n_buses(), outage, voltages: placement.indices().to_vec(), currents })
    }

    pub fn n_channels(&self) -> usize {
        self.voltages.len() + self.currents.len()
    }
}

/// Measured and true phasors in layout order (pu, radians).
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub voltages: Vec<Complex64>,
    pub currents: Vec<Complex64>,
    pub voltage_truth: Vec<Complex64>,
    pub current_truth: Vec<Complex64>,
}

impl MeasurementSet {
    /// All channels, voltages first.
    pub fn phasors(&self) -> impl Iterator<Item = &Complex64> {
        self.voltages.iter().chain(&self.currents)
    }

    pub fn from_phasors(layout: &MeasurementLayout, phasors: &[Complex64]) -> Self {
        let nv = layout.voltages.len();
        MeasurementSet {
            voltages: phasors[..nv].to_vec(),
            currents: phasors[nv..].to_vec(),
            voltage_truth: Vec::new(),
            current_truth: Vec::new(),
        }
    }
}

fn corrupt<R: Rng + ?Sized>(truth: Complex64, model: &NoiseModel, rng: &mut R) -> Complex64 {
    let em = sample_noise(model, rng, NoiseKind::Magnitude);
    let ea = sample_noise(model, rng, NoiseKind::Angle);
    Complex64::from_polar(truth.norm() * (1.0 + em / 100.0), truth.arg() + ea * PI / 180.0)
}

/// True phasors from a solved operating point, each magnitude and angle
/// independently corrupted.
pub fn synthesize_measurements<R: Rng + ?Sized>(
    sol: &PowerFlowSolution,
    layout: &MeasurementLayout,
    noise: &PmuNoise,
    rng: &mut R,
) -> MeasurementSet {
    let v = sol.voltages();
    let voltage_truth: Vec<Complex64> = layout.voltages.iter().map(|&i| v[i]).collect();
    let current_truth: Vec<Complex64> = layout.currents.iter().map(|c| c.self_y * v[c.at] + c.mutual_y * v[c.far]).collect();
    let voltages = voltage_truth.iter().map(|&t| corrupt(t, &noise.voltage, rng)).collect();
    let currents = current_truth.iter().map(|&t| corrupt(t, &noise.current, rng)).collect();
    MeasurementSet { voltages, currents, voltage_truth, current_truth }
}
