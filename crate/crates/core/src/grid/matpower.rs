//! Importer for MATPOWER-style case text (`mpc.bus = [ ... ];` tables).

use std::collections::HashMap;
use std::f64::consts::PI;

use super::case::{Branch, Bus, BusKind, NetworkCase};
use crate::{Error, Result};

const BUS_COLS: usize = 13;
const GEN_COLS: usize = 8;
const BRANCH_COLS: usize = 11;

struct Row {
    line: usize,
    values: Vec<f64>,
}

/// Parse a MATPOWER version-2 case. Only the `baseMVA`, `bus`, `gen` and
/// `branch` fields are read; any other field is skipped.
///
/// Generators are folded into their bus: online units set the voltage
/// setpoint and add to `p_gen`. A type-2 bus with no online unit becomes PQ.
pub fn parse_matpower(text: &str) -> Result<NetworkCase> {
    let mut name = String::from("case");
    let mut base_mva = None;
    let mut tables: HashMap<String, Vec<Row>> = HashMap::new();
    let mut open: Option<(String, Vec<Row>)> = None;

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('%').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some((table, rows)) = open.as_mut() {
            let (body, closes) = match line.find(']') {
                Some(pos) => (&line[..pos], true),
                None => (line, false),
            };
            for chunk in body.split(';') {
                let chunk = chunk.trim();
                if chunk.is_empty() {
                    continue;
                }
                let values = chunk
                    .split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<f64>().map_err(|_| Error::Parse {
                            line: lineno,
                            message: format!("bad number {s:?} in mpc.{table}"),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                rows.push(Row { line: lineno, values });
            }
            if closes {
                let (table, rows) = open.take().expect("table open");
                tables.insert(table, rows);
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix("function") {
            if let Some(eq) = rest.find('=') {
                name = rest[eq + 1..].trim().trim_end_matches(';').to_string();
            }
            continue;
        }
        let Some(rest) = line.strip_prefix("mpc.") else {
            continue;
        };
        let Some(eq) = rest.find('=') else {
            return Err(Error::Parse { line: lineno, message: "expected assignment".into() });
        };
        let field = rest[..eq].trim().to_string();
        let value = rest[eq + 1..].trim();
        if field == "baseMVA" {
            let v = value.trim_end_matches(';').trim();
            base_mva = Some(v.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("bad baseMVA {v:?}"),
            })?);
        } else if let Some(after) = value.strip_prefix('[') {
            // Tables we do not read (gencost, ...) are still consumed so their
            // rows are not mistaken for anything else.
            let mut rows = Vec::new();
            let closes = after.contains(']');
            let body = after.split(']').next().unwrap_or("");
            for chunk in body.split(';').map(str::trim).filter(|c| !c.is_empty()) {
                let values = chunk
                    .split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<f64>().map_err(|_| Error::Parse { line: lineno, message: format!("bad number {s:?}") }))
                    .collect::<Result<Vec<_>>>()?;
                rows.push(Row { line: lineno, values });
            }
            if closes {
                tables.insert(field, rows);
            } else {
                open = Some((field, rows));
            }
        }
    }
    if let Some((table, _)) = open {
        return Err(Error::Parse { line: text.lines().count(), message: format!("unterminated table mpc.{table}") });
    }

    let base_mva = base_mva.ok_or(Error::Parse { line: 0, message: "missing mpc.baseMVA".into() })?;
    let bus_rows = tables.remove("bus").ok_or(Error::Parse { line: 0, message: "missing mpc.bus".into() })?;
    let gen_rows = tables.remove("gen").unwrap_or_default();
    let branch_rows = tables.remove("branch").ok_or(Error::Parse { line: 0, message: "missing mpc.branch".into() })?;

    let mut gens: HashMap<usize, (f64, f64)> = HashMap::new();
    for row in &gen_rows {
        check_width(row, GEN_COLS, "gen")?;
        let v = &row.values;
        if v[7] <= 0.0 {
            continue;
        }
        let bus = as_id(row, v[0])?;
        let entry = gens.entry(bus).or_insert((0.0, v[5]));
        entry.0 += v[1];
    }

    let mut buses = Vec::with_capacity(bus_rows.len());
    for row in &bus_rows {
        check_width(row, BUS_COLS, "bus")?;
        let v = &row.values;
        let id = as_id(row, v[0])?;
        let gen = gens.get(&id).copied();
        let kind = match v[1] as i64 {
            1 => BusKind::Pq,
            2 if gen.is_some() => BusKind::Pv,
            2 => BusKind::Pq,
            3 => BusKind::Slack,
            t => {
                return Err(Error::Parse { line: row.line, message: format!("unsupported bus type {t} for bus {id}") });
            }
        };
        buses.push(Bus {
            id,
            kind,
            p_load: v[2],
            q_load: v[3],
            gs: v[4],
            bs: v[5],
            base_kv: v[9],
            vm_init: v[7],
            va_init: v[8] * PI / 180.0,
            v_setpoint: gen.map_or(v[7], |g| g.1),
            p_gen: gen.map_or(0.0, |g| g.0),
        });
    }

    let mut branches = Vec::with_capacity(branch_rows.len());
    for row in &branch_rows {
        check_width(row, BRANCH_COLS, "branch")?;
        let v = &row.values;
        branches.push(Branch {
            from_bus: as_id(row, v[0])?,
            to_bus: as_id(row, v[1])?,
            r: v[2],
            x: v[3],
            b_charging: v[4],
            tap: if v[8] == 0.0 { 1.0 } else { v[8] },
            shift: v[9] * PI / 180.0,
            in_service: v[10] != 0.0,
        });
    }

    NetworkCase::new(name, base_mva, buses, branches)
}

fn check_width(row: &Row, need: usize, table: &str) -> Result<()> {
    if row.values.len() < need {
        return Err(Error::Parse {
            line: row.line,
            message: format!("mpc.{table} row has {} columns, expected at least {need}", row.values.len()),
        });
    }
    Ok(())
}

fn as_id(row: &Row, v: f64) -> Result<usize> {
    if v < 1.0 || v.fract() != 0.0 {
        return Err(Error::Parse { line: row.line, message: format!("bad bus number {v}") });
    }
    Ok(v as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "function mpc = toy
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
\t1\t3\t0\t0\t0\t0\t1\t1.02\t0\t138\t1\t1.1\t0.9;
\t2\t1\t50\t10\t0\t0\t1\t1\t0\t138\t1\t1.1\t0.9;
];
mpc.gen = [
\t1\t0\t0\t100\t-100\t1.02\t100\t1\t200\t0;
];
mpc.branch = [
\t1\t2\t0.01\t0.1\t0.02\t0\t0\t0\t0\t0\t1\t-360\t360;
];
mpc.gencost = [
\t2\t0\t0\t3\t0.01\t40\t0;
];
";

    #[test]
    fn parses_toy_case() {
        let case = parse_matpower(TOY).unwrap();
        assert_eq!(case.name, "toy");
        assert_eq!(case.n_buses(), 2);
        assert_eq!(case.n_branches(), 1);
        assert_eq!(case.buses()[0].v_setpoint, 1.02);
        assert_eq!(case.buses()[1].kind, BusKind::Pq);
        assert_eq!(case.branches()[0].tap, 1.0);
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let bad = TOY.replace("\t2\t1\t50\t10", "\t2\t1\tfifty\t10");
        match parse_matpower(&bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("unexpected {other:?}"),
        }
        let short = TOY.replace("\t1\t2\t0.01\t0.1\t0.02\t0\t0\t0\t0\t0\t1\t-360\t360;", "\t1\t2\t0.01;");
        match parse_matpower(&short) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pv_bus_without_generator_becomes_pq() {
        let text = TOY.replace("\t2\t1\t50", "\t2\t2\t50");
        let case = parse_matpower(&text).unwrap();
        assert_eq!(case.buses()[1].kind, BusKind::Pq);
    }
}
