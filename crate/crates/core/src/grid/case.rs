use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::topology::{build_adjacency, is_connected};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

impl fmt::Display for BusKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BusKind::Slack => "slack",
            BusKind::Pv => "pv",
            BusKind::Pq => "pq",
        };
        f.write_str(s)
    }
}

/// A network bus. Powers are in MW / MVAr, the initial angle in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: usize,
    pub kind: BusKind,
    pub p_load: f64,
    pub q_load: f64,
    /// Shunt conductance, MW consumed at 1 pu.
    pub gs: f64,
    /// Shunt susceptance, MVAr injected at 1 pu.
    pub bs: f64,
    pub base_kv: f64,
    pub vm_init: f64,
    pub va_init: f64,
    /// Voltage setpoint for PV and slack buses.
    pub v_setpoint: f64,
    /// Scheduled active generation, MW.
    pub p_gen: f64,
}

/// A π-model branch. Impedances in pu on the system base, `shift` in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from_bus: usize,
    pub to_bus: usize,
    pub r: f64,
    pub x: f64,
    pub b_charging: f64,
    pub tap: f64,
    pub shift: f64,
    pub in_service: bool,
}

/// A validated network case.
///
/// Buses keep the order of the source document; matrix row `i` always
/// corresponds to `buses[i]`.
#[derive(Debug, Clone)]
pub struct NetworkCase {
    pub name: String,
    pub base_mva: f64,
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    index: HashMap<usize, usize>,
    ends: Vec<(usize, usize)>,
    slack: usize,
}

impl NetworkCase {
    /// Validate and index a case. Fails on duplicate ids, slack count other
    /// than one, dangling branch endpoints, degenerate branches, or a base
    /// topology that is not connected.
    pub fn new(name: impl Into<String>, base_mva: f64, buses: Vec<Bus>, branches: Vec<Branch>) -> Result<Self> {
        if !(base_mva > 0.0) {
            return Err(Error::Config(format!("base MVA must be positive, got {base_mva}")));
        }
        let mut index = HashMap::with_capacity(buses.len());
        for (i, bus) in buses.iter().enumerate() {
            if index.insert(bus.id, i).is_some() {
                return Err(Error::DuplicateBus(bus.id));
            }
            if !(bus.base_kv > 0.0) {
                return Err(Error::InvalidBus { bus: bus.id, reason: format!("base_kv must be positive, got {}", bus.base_kv) });
            }
            if matches!(bus.kind, BusKind::Slack | BusKind::Pv) && !(bus.v_setpoint > 0.0) {
                return Err(Error::InvalidBus { bus: bus.id, reason: "voltage setpoint must be positive".into() });
            }
        }
        let slacks: Vec<usize> = buses
            .iter()
            .enumerate()
            .filter(|(_, b)| b.kind == BusKind::Slack)
            .map(|(i, _)| i)
            .collect();
        let slack = match slacks.len() {
            0 => return Err(Error::MissingSlack),
            1 => slacks[0],
            k => return Err(Error::MultipleSlack(k)),
        };
        let mut ends = Vec::with_capacity(branches.len());
        for (k, br) in branches.iter().enumerate() {
            let f = *index.get(&br.from_bus).ok_or(Error::DanglingEndpoint { branch: k, bus: br.from_bus })?;
            let t = *index.get(&br.to_bus).ok_or(Error::DanglingEndpoint { branch: k, bus: br.to_bus })?;
            if f == t {
                return Err(Error::InvalidBranch { branch: k, reason: "from and to bus coincide".into() });
            }
            if br.r == 0.0 && br.x == 0.0 {
                return Err(Error::ZeroImpedance(k));
            }
            if !(br.tap > 0.0) {
                return Err(Error::InvalidBranch { branch: k, reason: format!("tap ratio must be positive, got {}", br.tap) });
            }
            ends.push((f, t));
        }
        let case = NetworkCase { name: name.into(), base_mva, buses, branches, index, ends, slack };
        if !is_connected(&build_adjacency(&case, None)?) {
            return Err(Error::Disconnected);
        }
        Ok(case)
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn n_branches(&self) -> usize {
        self.branches.len()
    }

    /// Row index of the bus with the given id.
    pub fn bus_index(&self, id: usize) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn slack_index(&self) -> usize {
        self.slack
    }

    /// Row indices of the from and to bus of branch `k`.
    pub fn branch_ends(&self, k: usize) -> (usize, usize) {
        self.ends[k]
    }

    /// Index of the first branch joining buses `a` and `b` (by id, either direction).
    pub fn find_branch(&self, a: usize, b: usize) -> Option<usize> {
        self.branches
            .iter()
            .position(|br| (br.from_bus == a && br.to_bus == b) || (br.from_bus == b && br.to_bus == a))
    }

    pub(crate) fn check_outage(&self, outage: Option<usize>) -> Result<()> {
        if let Some(k) = outage {
            let br = self.branches.get(k).ok_or(Error::BranchIndex { index: k, count: self.branches.len() })?;
            if !br.in_service {
                return Err(Error::BranchOutOfService(k));
            }
        }
        Ok(())
    }

    /// Copy with branch `k` switched out of service. The copy is not required
    /// to stay connected.
    pub(crate) fn with_branch_status(&self, k: usize, in_service: bool) -> NetworkCase {
        let mut out = self.clone();
        out.branches[k].in_service = in_service;
        out
    }

    /// Serialize to the native JSON schema.
    pub fn to_json(&self) -> Result<String> {
        let doc = CaseDoc {
            name: Some(self.name.clone()),
            base_mva: self.base_mva,
            buses: self.buses.iter().map(BusDoc::from).collect(),
            branches: self.branches.iter().map(BranchDoc::from).collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Parse the native JSON schema.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CaseDoc = serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })?;
        let buses = doc.buses.into_iter().map(Bus::from).collect();
        let branches = doc.branches.into_iter().map(Branch::from).collect();
        NetworkCase::new(doc.name.unwrap_or_else(|| "case".into()), doc.base_mva, buses, branches)
    }
}

/// Parse a case document, either native JSON or MATPOWER-style text.
pub fn parse_case(text: &str) -> Result<NetworkCase> {
    if text.trim_start().starts_with('{') {
        NetworkCase::from_json(text)
    } else {
        super::matpower::parse_matpower(text)
    }
}

#[derive(Serialize, Deserialize)]
struct CaseDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    base_mva: f64,
    buses: Vec<BusDoc>,
    branches: Vec<BranchDoc>,
}

#[derive(Serialize, Deserialize)]
struct BusDoc {
    id: usize,
    kind: BusKind,
    p_load: f64,
    q_load: f64,
    #[serde(default)]
    gs: f64,
    #[serde(default)]
    bs: f64,
    base_kv: f64,
    vm: f64,
    /// degrees
    va: f64,
    #[serde(default)]
    v_set: f64,
    #[serde(default)]
    p_gen: f64,
}

#[derive(Serialize, Deserialize)]
struct BranchDoc {
    from: usize,
    to: usize,
    r: f64,
    x: f64,
    #[serde(default)]
    b: f64,
    #[serde(default = "one")]
    tap: f64,
    /// degrees
    #[serde(default)]
    shift: f64,
    #[serde(default = "in_service")]
    status: u8,
}

fn one() -> f64 {
    1.0
}

fn in_service() -> u8 {
    1
}

impl From<&Bus> for BusDoc {
    fn from(b: &Bus) -> Self {
        BusDoc {
            id: b.id,
            kind: b.kind,
            p_load: b.p_load,
            q_load: b.q_load,
            gs: b.gs,
            bs: b.bs,
            base_kv: b.base_kv,
            vm: b.vm_init,
            va: b.va_init * 180.0 / PI,
            v_set: b.v_setpoint,
            p_gen: b.p_gen,
        }
    }
}

impl From<BusDoc> for Bus {
    fn from(b: BusDoc) -> Self {
        Bus {
            id: b.id,
            kind: b.kind,
            p_load: b.p_load,
            q_load: b.q_load,
            gs: b.gs,
            bs: b.bs,
            base_kv: b.base_kv,
            vm_init: b.vm,
            va_init: b.va * PI / 180.0,
            v_setpoint: b.v_set,
            p_gen: b.p_gen,
        }
    }
}

impl From<&Branch> for BranchDoc {
    fn from(b: &Branch) -> Self {
        BranchDoc {
            from: b.from_bus,
            to: b.to_bus,
            r: b.r,
            x: b.x,
            b: b.b_charging,
            tap: b.tap,
            shift: b.shift * 180.0 / PI,
            status: u8::from(b.in_service),
        }
    }
}

impl From<BranchDoc> for Branch {
    fn from(b: BranchDoc) -> Self {
        Branch {
            from_bus: b.from,
            to_bus: b.to,
            r: b.r,
            x: b.x,
            b_charging: b.b,
            tap: if b.tap == 0.0 { 1.0 } else { b.tap },
            shift: b.shift * PI / 180.0,
            in_service: b.status != 0,
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn bus(id: usize, kind: BusKind) -> Bus {
        Bus {
            id,
            kind,
            p_load: 0.0,
            q_load: 0.0,
            gs: 0.0,
            bs: 0.0,
            base_kv: 138.0,
            vm_init: 1.0,
            va_init: 0.0,
            v_setpoint: 1.0,
            p_gen: 0.0,
        }
    }

    pub(crate) fn line(from: usize, to: usize, r: f64, x: f64) -> Branch {
        Branch { from_bus: from, to_bus: to, r, x, b_charging: 0.0, tap: 1.0, shift: 0.0, in_service: true }
    }

    const TOY: &str = r#"{
        "base_mva": 100,
        "buses": [
            {"id": 1, "kind": "slack", "p_load": 0, "q_load": 0, "base_kv": 138, "vm": 1.0, "va": 0, "v_set": 1.0},
            {"id": 2, "kind": "pq", "p_load": 10, "q_load": 5, "base_kv": 138, "vm": 1.0, "va": 0}
        ],
        "branches": [ {"from": 1, "to": 2, "r": 0.01, "x": 0.1, "b": 0.02} ]
    }"#;

    #[test]
    fn parses_two_bus_json() {
        let case = parse_case(TOY).unwrap();
        assert_eq!(case.n_buses(), 2);
        assert_eq!(case.n_branches(), 1);
        assert_eq!(case.slack_index(), 0);
        assert_eq!(case.branches()[0].tap, 1.0);
        assert!(case.branches()[0].in_service);
    }

    #[test]
    fn json_round_trip_preserves_case() {
        let case = parse_case(TOY).unwrap();
        let again = parse_case(&case.to_json().unwrap()).unwrap();
        assert_eq!(case.buses(), again.buses());
        assert_eq!(case.branches(), again.branches());
    }

    #[test]
    fn dangling_endpoint_is_rejected() {
        let text = TOY.replace(r#""to": 2"#, r#""to": 999"#);
        assert!(matches!(parse_case(&text), Err(Error::DanglingEndpoint { branch: 0, bus: 999 })));
    }

    #[test]
    fn duplicate_and_missing_slack_are_rejected() {
        let dup = NetworkCase::new("d", 100.0, vec![bus(1, BusKind::Slack), bus(1, BusKind::Pq)], vec![]);
        assert!(matches!(dup, Err(Error::DuplicateBus(1))));
        let none = NetworkCase::new("n", 100.0, vec![bus(1, BusKind::Pq), bus(2, BusKind::Pq)], vec![line(1, 2, 0.0, 0.1)]);
        assert!(matches!(none, Err(Error::MissingSlack)));
    }

    #[test]
    fn zero_impedance_and_self_loop_are_rejected() {
        let zero = NetworkCase::new("z", 100.0, vec![bus(1, BusKind::Slack), bus(2, BusKind::Pq)], vec![line(1, 2, 0.0, 0.0)]);
        assert!(matches!(zero, Err(Error::ZeroImpedance(0))));
        let selfloop = NetworkCase::new("s", 100.0, vec![bus(1, BusKind::Slack)], vec![line(1, 1, 0.0, 0.1)]);
        assert!(matches!(selfloop, Err(Error::InvalidBranch { .. })));
    }

    #[test]
    fn disconnected_base_case_is_rejected() {
        let res = NetworkCase::new(
            "x",
            100.0,
            vec![bus(1, BusKind::Slack), bus(2, BusKind::Pq), bus(3, BusKind::Pq)],
            vec![line(1, 2, 0.0, 0.1)],
        );
        assert!(matches!(res, Err(Error::Disconnected)));
    }

    #[test]
    fn malformed_json_reports_line() {
        let err = parse_case("{\n \"base_mva\": 100,\n \"buses\": [ oops ]\n}").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
    }
}
