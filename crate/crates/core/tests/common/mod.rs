#![allow(dead_code)]

use std::path::PathBuf;

use gnnse::grid::parse_case;
use gnnse::NetworkCase;

pub fn case_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/case118.m")
}

pub fn case118() -> NetworkCase {
    parse_case(&std::fs::read_to_string(case_path()).unwrap()).unwrap()
}

pub fn fixture(name: &str) -> serde_json::Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn floats(v: &serde_json::Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}
