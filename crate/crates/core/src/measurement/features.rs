use num_complex::Complex64;

use super::synth::{MeasurementLayout, MeasurementSet};
use crate::{Error, Result};

/// Per-bus features: column 0 voltage magnitude (pu), column 1 angle (radians).
#[derive(Debug, Clone, PartialEq)]
pub struct NodeFeatureMatrix {
    pub n: usize,
    pub values: Vec<f64>,
}

impl NodeFeatureMatrix {
    pub fn vm(&self, bus: usize) -> f64 {
        self.values[2 * bus]
    }

    pub fn va(&self, bus: usize) -> f64 {
        self.values[2 * bus + 1]
    }
}

/// PMU buses take their measured voltage. Any other bus takes the average,
/// in rectangular form, of the voltages implied by each current measured
/// toward it: `V_far = (I - y_self·V_at) / y_mutual`.
pub fn build_feature_matrix(layout: &MeasurementLayout, ms: &MeasurementSet) -> Result<NodeFeatureMatrix> {
    let n = layout.n_buses;
    let mut direct: Vec<Option<Complex64>> = vec![None; n];
    for (&bus, &v) in layout.voltages.iter().zip(&ms.voltages) {
        direct[bus] = Some(v);
    }
    let mut sums = vec![Complex64::new(0.0, 0.0); n];
    let mut counts = vec![0usize; n];
    for (ch, &i) in layout.currents.iter().zip(&ms.currents) {
        if direct[ch.far].is_some() {
            continue;
        }
        let v_at = direct[ch.at].expect("current channels sit at PMU buses");
        sums[ch.far] += (i - ch.self_y * v_at) / ch.mutual_y;
        counts[ch.far] += 1;
    }
    let mut values = Vec::with_capacity(2 * n);
    for bus in 0..n {
        let v = match direct[bus] {
            Some(v) => v,
            None if counts[bus] > 0 => sums[bus] / counts[bus] as f64,
            None => return Err(Error::UncoveredBus(bus)),
        };
        values.push(v.norm());
        values.push(v.arg());
    }
    Ok(NodeFeatureMatrix { n, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_adjacency, parse_case};
    use crate::measurement::{place_pmus, synthesize_measurements, NoiseModel, PmuPlacement};
    use crate::powerflow::{solve_power_flow, LoadScenario};
    use crate::rng;

    #[test]
    fn exact_under_zero_noise_on_118_bus() {
        let case = parse_case(include_str!("../../data/case118.m")).unwrap();
        let sol = solve_power_flow(&case, &LoadScenario::nominal(case.n_buses()), None).unwrap();
        let placement = place_pmus(&build_adjacency(&case, None).unwrap());
        let layout = MeasurementLayout::new(&case, &placement, None).unwrap();
        let ms = synthesize_measurements(&sol, &layout, &NoiseModel::none().into(), &mut rng::stream(0, 0));
        let x = build_feature_matrix(&layout, &ms).unwrap();
        for i in 0..case.n_buses() {
            assert!((x.vm(i) - sol.vm[i]).abs() < 1e-12, "bus {i}");
            assert!((x.va(i) - sol.va[i]).abs() < 1e-12, "bus {i}");
        }
    }

    #[test]
    fn pmu_everywhere_uses_measured_voltages() {
        let case = parse_case(include_str!("../../data/case118.m")).unwrap();
        let sol = solve_power_flow(&case, &LoadScenario::nominal(case.n_buses()), None).unwrap();
        let layout = MeasurementLayout::new(&case, &PmuPlacement::everywhere(case.n_buses()), None).unwrap();
        let ms = synthesize_measurements(&sol, &layout, &NoiseModel::default_gmm().into(), &mut rng::stream(1, 0));
        let x = build_feature_matrix(&layout, &ms).unwrap();
        for (i, v) in ms.voltages.iter().enumerate() {
            assert_eq!(x.vm(i), v.norm());
            assert_eq!(x.va(i), v.arg());
        }
    }

    #[test]
    fn uncovered_bus_is_an_error() {
        let case = parse_case(include_str!("../../data/case118.m")).unwrap();
        let sol = solve_power_flow(&case, &LoadScenario::nominal(case.n_buses()), None).unwrap();
        let layout = MeasurementLayout::new(&case, &PmuPlacement::new([0]), None).unwrap();
        let ms = synthesize_measurements(&sol, &layout, &NoiseModel::none().into(), &mut rng::stream(0, 0));
        assert!(matches!(build_feature_matrix(&layout, &ms), Err(Error::UncoveredBus(_))));
    }
}
