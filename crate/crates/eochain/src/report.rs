//! Report emission in JSON and CSV.
//!
//! Floating-point values are rounded to six significant digits before
//! serialization so that reports are stable across platforms and
//! byte-identical for identical inputs. Integers (bit counts, ids) are exact.

use std::fs;
use std::path::Path;

use eochain_core::metrics::{ComparisonReport, ServiceReport};
use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

/// Marker for a quantity that never occurred, used in CSV cells.
pub const NEVER: &str = "never";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64 number"));
            *v = serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

pub fn to_rounded_value<T: Serialize>(value: &T) -> Value {
    let mut v = serde_json::to_value(value).expect("report serializes to JSON");
    round_value(&mut v);
    v
}

/// Pretty JSON with a trailing newline.
pub fn json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(&to_rounded_value(value)).expect("value serializes");
    s.push('\n');
    s
}

/// One compact JSON document per line.
pub fn jsonl_string<T: Serialize>(items: &[T]) -> String {
    let mut s = String::new();
    for item in items {
        s.push_str(&serde_json::to_string(&to_rounded_value(item)).expect("value serializes"));
        s.push('\n');
    }
    s
}

fn num(x: f64) -> String {
    round_sig(x).to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

fn or_never(x: Option<f64>) -> String {
    x.map_or_else(|| NEVER.to_string(), num)
}

pub const SERVICE_CSV_HEADER: [&str; 30] = [
    "record",
    "id",
    "kind",
    "satellite_id",
    "scene_id",
    "start_s",
    "area_ha",
    "detectable",
    "time_to_first_info_s",
    "first_info_raw_scene_s",
    "first_info_thematic_mask_s",
    "first_info_roi_chip_s",
    "event_count",
    "volume_bits",
    "transferred_bits",
    "acquired_s",
    "created_s",
    "downlinked_s",
    "delivered_s",
    "end_to_end_latency_s",
    "ttfi_p50_s",
    "ttfi_p90_s",
    "ttfi_never",
    "e2e_p50_s",
    "e2e_p90_s",
    "completeness",
    "downlinked_raw_scene_bits",
    "downlinked_thematic_mask_bits",
    "downlinked_roi_chip_bits",
    "generated_bits",
];

/// One row per event, one per product, then one summary row.
pub fn service_csv(report: &ServiceReport) -> String {
    let width = SERVICE_CSV_HEADER.len();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SERVICE_CSV_HEADER).expect("in-memory write");
    let blank = || vec![String::new(); width];
    for e in &report.events {
        let mut r = blank();
        r[0] = "event".into();
        r[1] = e.event_id.0.to_string();
        r[5] = num(e.start_s);
        r[6] = num(e.area_ha);
        r[7] = e.detectable.to_string();
        r[8] = or_never(e.time_to_first_info);
        r[9] = or_never(e.first_info_by_kind.raw_scene);
        r[10] = or_never(e.first_info_by_kind.thematic_mask);
        r[11] = or_never(e.first_info_by_kind.roi_chip);
        w.write_record(&r).expect("in-memory write");
    }
    for p in &report.products {
        let mut r = blank();
        r[0] = "product".into();
        r[1] = p.product_id.0.to_string();
        r[2] = p.kind.as_str().into();
        r[3] = p.satellite_id.as_str().into();
        r[4] = p.scene_id.0.to_string();
        r[12] = p.event_count.to_string();
        r[13] = p.volume_bits.to_string();
        r[14] = p.transferred_bits.to_string();
        r[15] = num(p.acquired);
        r[16] = num(p.created);
        r[17] = or_never(p.downlinked);
        r[18] = or_never(p.delivered);
        r[19] = or_never(p.end_to_end_latency);
        w.write_record(&r).expect("in-memory write");
    }
    let mut r = blank();
    r[0] = "summary".into();
    r[1] = report.seed.to_string();
    r[2] = report.mode.as_str().into();
    r[12] = report.events.len().to_string();
    r[13] = report.volume.delivered.to_string();
    r[14] = report.volume.partial.to_string();
    r[20] = opt(report.time_to_first_info.p50);
    r[21] = opt(report.time_to_first_info.p90);
    r[22] = report.time_to_first_info.never.to_string();
    r[23] = opt(report.end_to_end_latency.p50);
    r[24] = opt(report.end_to_end_latency.p90);
    r[25] = num(report.completeness.ratio);
    r[26] = report.downlinked_bits.raw_scene.to_string();
    r[27] = report.downlinked_bits.thematic_mask.to_string();
    r[28] = report.downlinked_bits.roi_chip.to_string();
    r[29] = report.volume.generated.to_string();
    w.write_record(&r).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

pub const COMPARISON_CSV_HEADER: [&str; 13] = [
    "record",
    "event_id",
    "hybrid_ttfi_s",
    "raw_only_ttfi_s",
    "delta_s",
    "hybrid_faster",
    "hybrid_ttfi_p50_s",
    "raw_only_ttfi_p50_s",
    "baseline_ttfi_p50_s",
    "hybrid_faster_fraction",
    "hybrid_downlinked_bits",
    "raw_only_downlinked_bits",
    "downlink_ratio",
];

/// One row per paired event, then one summary row.
pub fn comparison_csv(report: &ComparisonReport) -> String {
    let width = COMPARISON_CSV_HEADER.len();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COMPARISON_CSV_HEADER).expect("in-memory write");
    for d in &report.deltas {
        let mut r = vec![String::new(); width];
        r[0] = "event".into();
        r[1] = d.event_id.0.to_string();
        r[2] = or_never(d.hybrid);
        r[3] = or_never(d.raw_only);
        r[4] = opt(d.delta);
        r[5] = d.hybrid_faster.to_string();
        w.write_record(&r).expect("in-memory write");
    }
    let mut r = vec![String::new(); width];
    r[0] = "summary".into();
    r[6] = opt(report.hybrid.time_to_first_info.p50);
    r[7] = opt(report.raw_only.time_to_first_info.p50);
    r[8] = opt(report.baseline.as_ref().and_then(|b| b.time_to_first_info.p50));
    r[9] = num(report.hybrid_faster_fraction);
    r[10] = report.hybrid.downlinked_bits.total().to_string();
    r[11] = report.raw_only.downlinked_bits.total().to_string();
    r[12] = opt(report.downlink_ratio);
    w.write_record(&r).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}
