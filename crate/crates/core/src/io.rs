//! Configuration loading and result export.
//!
//! A configuration file is TOML. It either spells out a full
//! [`ScenarioConfig`] or names a base with `preset = "<name>"` and overrides
//! any subset of its fields. Command-line overrides are `key=value` pairs
//! using dotted paths (`geometry.uav_height_m=50`) with TOML literal values.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::presets;
use crate::simulation::{ScenarioConfig, SweepResult};
use crate::{Error, Result};

/// Version of the CSV/JSON-lines export layout.
pub const EXPORT_SCHEMA_VERSION: u32 = 1;

pub const CSV_HEADER: &str =
    "theta_deg,sectors,mean_sum_rate_bps,mean_avg_rate_bps,mean_jain,infeasible_fraction";

const TRIALS_CSV_HEADER: &str =
    "theta_deg,trial_index,user_count,sum_rate_cell_bps,avg_rate_user_bps,jain_index,infeasible_sectors,occupied_sectors";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExportFormat {
    #[default]
    Csv,
    JsonLines,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::Csv => "csv",
            ExportFormat::JsonLines => "jsonl",
        }
    }
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json-lines" | "jsonl" => Ok(ExportFormat::JsonLines),
            other => Err(Error::invalid(
                "format",
                format!("`{other}` is not one of csv, json-lines"),
            )),
        }
    }
}

fn parse_error(what: impl Into<String>, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        what: what.into(),
        message: e.to_string(),
    }
}

fn config_to_table(config: &ScenarioConfig) -> Result<toml::Table> {
    toml::Table::try_from(config).map_err(|e| parse_error("configuration", e))
}

fn table_to_config(table: toml::Table) -> Result<ScenarioConfig> {
    let config: ScenarioConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e| parse_error("configuration", e))?;
    config.validate()?;
    Ok(config)
}

fn merge(base: &mut toml::Table, patch: toml::Table, prefix: &str) -> Result<()> {
    for (key, value) in patch {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(inner)), toml::Value::Table(patch)) => {
                merge(inner, patch, &path)?
            }
            (Some(slot), value) => *slot = value,
            (None, _) => return Err(Error::UnknownKey(path)),
        }
    }
    Ok(())
}

/// Parses the value side of an override as a TOML literal, falling back to a bare string.
fn parse_override_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::MalformedOverride(assignment.to_string()))?;
    let key = key.trim();
    let mut value = parse_override_value(raw.trim());
    let mut parts = key.split('.').peekable();
    let mut node = table;
    while let Some(part) = parts.next() {
        let slot = node
            .get_mut(part)
            .ok_or_else(|| Error::UnknownKey(key.to_string()))?;
        if parts.peek().is_none() {
            // Integers are accepted where floats are expected.
            if let (toml::Value::Float(_), toml::Value::Integer(i)) = (&*slot, &value) {
                value = toml::Value::Float(*i as f64);
            }
            *slot = value;
            return Ok(());
        }
        node = match slot {
            toml::Value::Table(t) => t,
            _ => return Err(Error::UnknownKey(key.to_string())),
        };
    }
    Err(Error::UnknownKey(key.to_string()))
}

/// Applies `key=value` overrides to `base` and validates the result.
pub fn resolve_config(base: &ScenarioConfig, overrides: &[String]) -> Result<ScenarioConfig> {
    let mut table = config_to_table(base)?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    table_to_config(table)
}

/// Parses TOML text, resolving an optional `preset` base, then applies overrides.
pub fn parse_config_str(text: &str, overrides: &[String]) -> Result<ScenarioConfig> {
    let mut file: toml::Table = toml::from_str(text).map_err(|e| parse_error("configuration", e))?;
    let mut table = match file.remove("preset") {
        Some(toml::Value::String(name)) => {
            let mut base = config_to_table(&presets::preset(&name)?)?;
            merge(&mut base, file, "")?;
            base
        }
        Some(other) => {
            return Err(Error::invalid(
                "preset",
                format!("expected a preset name, got {other}"),
            ))
        }
        None => file,
    };
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    table_to_config(table)
}

pub fn parse_config(path: &Path, overrides: &[String]) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text, overrides)
}

/// Full TOML rendering of a resolved configuration.
pub fn config_to_toml(config: &ScenarioConfig) -> Result<String> {
    toml::to_string(config).map_err(|e| parse_error("configuration", e))
}

/// SHA-256 of the canonical JSON form of `config`, lowercase hex.
pub fn config_hash(config: &ScenarioConfig) -> String {
    let canonical = serde_json::to_vec(config).expect("configuration serializes");
    Sha256::digest(&canonical)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub config_hash: String,
    pub master_seed: u64,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(config: &ScenarioConfig, outputs: Vec<PathBuf>) -> Self {
        RunManifest {
            schema_version: EXPORT_SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config_hash(config),
            master_seed: config.master_seed,
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            outputs,
        }
    }
}

/// Full-precision scientific notation.
fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Serialize)]
struct ThetaRow {
    theta_deg: u32,
    sectors: usize,
    mean_sum_rate_bps: f64,
    mean_avg_rate_bps: f64,
    mean_jain: f64,
    infeasible_fraction: f64,
}

/// Renders the per-θ table, one row per beamwidth in ascending order.
pub fn render_sweep(result: &SweepResult, format: ExportFormat) -> String {
    let mut rows: Vec<ThetaRow> = result
        .per_theta
        .iter()
        .map(|s| ThetaRow {
            theta_deg: s.theta.degrees(),
            sectors: s.sectors,
            mean_sum_rate_bps: s.mean_sum_rate,
            mean_avg_rate_bps: s.mean_avg_rate,
            mean_jain: s.mean_jain,
            infeasible_fraction: s.infeasible_fraction,
        })
        .collect();
    rows.sort_by_key(|r| r.theta_deg);
    let mut out = String::new();
    match format {
        ExportFormat::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            for r in rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    r.theta_deg,
                    r.sectors,
                    sci(r.mean_sum_rate_bps),
                    sci(r.mean_avg_rate_bps),
                    sci(r.mean_jain),
                    sci(r.infeasible_fraction)
                );
            }
        }
        ExportFormat::JsonLines => {
            for r in rows {
                out.push_str(&serde_json::to_string(&r).expect("row serializes"));
                out.push('\n');
            }
        }
    }
    out
}

/// Per-trial log as CSV, trials in (θ, trial index) order.
pub fn render_trials(result: &SweepResult) -> String {
    let mut out = String::from(TRIALS_CSV_HEADER);
    out.push('\n');
    for s in &result.per_theta {
        for t in &s.trials {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                t.theta.degrees(),
                t.trial_index,
                t.user_count,
                sci(t.sum_rate_cell),
                sci(t.avg_rate_user),
                sci(t.jain_index),
                t.infeasible_sectors,
                t.occupied_sectors
            );
        }
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sweep".into());
    path.with_file_name(format!("{stem}.{suffix}"))
}

/// Writes the sweep table to `path` plus two sidecars next to it:
/// `<stem>.config.toml` (the resolved configuration) and
/// `<stem>.manifest.json`. Returns every path written.
pub fn export_sweep(
    result: &SweepResult,
    config: &ScenarioConfig,
    format: ExportFormat,
    path: &Path,
) -> Result<Vec<PathBuf>> {
    write_file(path, &render_sweep(result, format))?;
    let config_path = sidecar(path, "config.toml");
    write_file(&config_path, &config_to_toml(config)?)?;
    let manifest_path = sidecar(path, "manifest.json");
    let outputs = vec![path.to_path_buf(), config_path, manifest_path.clone()];
    let manifest = RunManifest::new(config, outputs.clone());
    write_file(
        &manifest_path,
        &serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    Ok(outputs)
}

pub fn export_trials(result: &SweepResult, path: &Path) -> Result<()> {
    write_file(path, &render_trials(result))
}
