//! File ingestion and result serialization. All angles are degrees at this
//! boundary; JSON floats round-trip exactly.

use anyhow::{Context, Result};
use serde::Serialize;
use std::path::Path;

use ozf_core::multiplier::MultiplierSpec;
use ozf_core::xferfn::{PlantRecord, ShiftedPlant};

/// Load a plant record, optionally overriding the affine shift with
/// `1/k + sign·G` from the command line.
pub fn load_plant(path: &Path, k: Option<f64>, sign: Option<i8>) -> Result<ShiftedPlant> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading plant file {}", path.display()))?;
    let mut record: PlantRecord = serde_json::from_str(&text)
        .with_context(|| format!("parsing plant file {}", path.display()))?;
    if let Some(k) = k {
        anyhow::ensure!(k > 0.0, "--k must be positive, got {k}");
        record.offset = 1.0 / k;
        record.sign = sign.unwrap_or(1);
    } else if let Some(s) = sign {
        record.sign = s;
    }
    record.to_plant().context("invalid plant")
}

pub fn load_multiplier(path: &Path) -> Result<MultiplierSpec> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading multiplier file {}", path.display()))?;
    let spec: MultiplierSpec = serde_json::from_str(&text)
        .with_context(|| format!("parsing multiplier file {}", path.display()))?;
    spec.validate().context("invalid multiplier")?;
    Ok(spec)
}

/// Print a result as a single deterministic JSON line.
pub fn emit<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

/// Parse `+`/`-`/`1`/`-1` into the feedback sign.
pub fn parse_sign(s: &str) -> Result<i8> {
    match s {
        "+" | "+1" | "1" => Ok(1),
        "-" | "-1" => Ok(-1),
        other => anyhow::bail!("sign must be + or -, got {other}"),
    }
}
