use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use minkowski_core::integrator::ProfileRow;
use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;

/// The JSON document every subcommand prints.
#[derive(Serialize)]
pub struct Summary<'a> {
    pub version: &'static str,
    pub command: &'static str,
    pub config: &'a RunConfig,
    pub thresholds: Value,
    pub assumption_report: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solution: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<Value>,
    pub timings: BTreeMap<&'static str, Value>,
    pub exit_code: u8,
}

impl<'a> Summary<'a> {
    pub fn new(command: &'static str, config: &'a RunConfig) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            thresholds: Value::Null,
            assumption_report: Value::Null,
            outcome: None,
            solution: None,
            scan: None,
            verification: None,
            failure: None,
            timings: BTreeMap::new(),
            exit_code: 0,
        }
    }

    /// Prints to stdout and, if configured, writes the same bytes to a file.
    pub fn emit(&self) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::io::stdout().write_all(text.as_bytes())?;
        if let Some(path) = &self.config.output.summary {
            fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

pub fn json<T: Serialize>(value: &T) -> Result<Value> {
    Ok(serde_json::to_value(value)?)
}

#[derive(Serialize)]
struct CsvRow {
    r: f64,
    u: f64,
    uprime: f64,
    q: f64,
    #[serde(rename = "D")]
    dissipation: f64,
    energy_residual: f64,
}

pub fn write_profile(path: &Path, rows: &[ProfileRow<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for r in rows {
        w.serialize(CsvRow { r: r.r, u: r.u, uprime: r.uprime, q: r.q, dissipation: r.dissipation, energy_residual: r.energy_residual })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
pub struct ScanRow {
    pub xi: f64,
    pub class: &'static str,
    pub event_r: Option<f64>,
    pub max_residual: Option<f64>,
}

pub fn write_scan(path: &Path, rows: &[ScanRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
