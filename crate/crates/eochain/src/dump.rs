//! Trace artifacts written next to each report.

use std::path::Path;

use eochain_core::engine::SimulationTrace;
use serde::Serialize;

use crate::error::CliError;
use crate::event_trace::write_events;
use crate::report::{json_string, jsonl_string, round_sig, write_file};

#[derive(Serialize)]
struct PlanDump<'a> {
    requests: &'a [eochain_core::ObservationRequest],
    plan: &'a eochain_core::TaskingPlan,
    dropped_events: &'a [eochain_core::EventId],
}

pub fn transfers_csv(trace: &SimulationTrace) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["product_id", "satellite_id", "station_id", "start_s", "end_s", "bits"]).expect("in-memory write");
    for t in &trace.transfers {
        w.write_record([
            t.product_id.0.to_string(),
            t.satellite_id.as_str().to_string(),
            t.station_id.as_str().to_string(),
            round_sig(t.start).to_string(),
            round_sig(t.end).to_string(),
            t.bits.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

/// Writes `events.csv`, `plan.json`, `transfers.csv` and `marketplace.jsonl`.
pub fn write_trace(dir: &Path, trace: &SimulationTrace) -> Result<(), CliError> {
    let mut events = Vec::new();
    write_events(&mut events, &trace.events).expect("in-memory write");
    write_file(&dir.join("events.csv"), &String::from_utf8(events).expect("utf-8 csv"))?;
    let plan = PlanDump { requests: &trace.requests, plan: &trace.plan, dropped_events: &trace.dropped_events };
    write_file(&dir.join("plan.json"), &json_string(&plan))?;
    write_file(&dir.join("transfers.csv"), &transfers_csv(trace))?;
    write_file(&dir.join("marketplace.jsonl"), &jsonl_string(&trace.marketplace))
}
