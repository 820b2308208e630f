//! Raw binary blocks, config hashes and provenance sidecars.

use std::fs;
use std::path::Path;
use std::process::Command;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub fn f64_to_le_bytes(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn f64_from_le_bytes(bytes: &[u8]) -> Result<Vec<f64>> {
    if bytes.len() % 8 != 0 {
        return Err(Error::Format(format!("binary block of {} bytes is not a whole number of f64", bytes.len())));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
}

pub fn write_f64_file(path: &Path, values: &[f64]) -> Result<()> {
    fs::write(path, f64_to_le_bytes(values))?;
    Ok(())
}

pub fn read_f64_file(path: &Path, expected: usize) -> Result<Vec<f64>> {
    let values = f64_from_le_bytes(&fs::read(path)?)?;
    if values.len() != expected {
        return Err(Error::Format(format!("{} holds {} values, expected {expected}", path.display(), values.len())));
    }
    Ok(values)
}

/// Hex SHA-256 of the compact JSON form of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let text = serde_json::to_string(value).expect("config serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Current git commit of the working directory, or "unknown".
pub fn commit_id() -> String {
    if let Ok(id) = std::env::var("GNNSE_COMMIT") {
        return id;
    }
    Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
