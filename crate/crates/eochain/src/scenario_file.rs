//! TOML scenario documents.
//!
//! A scenario file is the [`Scenario`] structure serialized as TOML with one
//! extra top-level key, `schema_version`.

use std::fs;
use std::path::Path;

use eochain_core::Scenario;
use serde::Deserialize;

use crate::error::CliError;

pub const SCHEMA_VERSION: i64 = 1;

pub fn parse_scenario(text: &str) -> Result<Scenario, String> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| e.to_string())?;
    match table.remove("schema_version") {
        Some(toml::Value::Integer(SCHEMA_VERSION)) => {}
        Some(v) => return Err(format!("unsupported schema_version {v}, expected {SCHEMA_VERSION}")),
        None => return Err("missing schema_version".into()),
    }
    Scenario::deserialize(table).map_err(|e| e.to_string())
}

pub fn to_toml(scenario: &Scenario) -> String {
    let body = toml::to_string(scenario).expect("scenario serializes to TOML");
    format!("schema_version = {SCHEMA_VERSION}\n{body}")
}

pub fn load(path: &Path) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_scenario(&text).map_err(|message| CliError::Format { path: path.to_path_buf(), message })
}
