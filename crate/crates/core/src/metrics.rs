//! Figures of merit over simulation traces and A/B architecture comparison.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::downlink::VolumeLedger;
use crate::engine::{run_with, EngineError, RunOptions, SimulationTrace};
use crate::events::{is_detectable, FireEvent};
use crate::math;
use crate::model::{EventId, ProductId, ProductKind, SatelliteId, Scenario, SceneId, SimTime};
use crate::onboard::ArchitectureMode;
use crate::orbit::Geometry;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("unknown event {0}")]
    UnknownEvent(EventId),
    #[error("unknown product {0}")]
    UnknownProduct(ProductId),
    #[error("product {0} was not delivered")]
    Undelivered(ProductId),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("architecture runs diverged: {0}")]
    StreamIsolation(&'static str),
}

/// Earliest delivery of any product covering the event, relative to the event
/// start. `None` means never.
pub fn time_to_first_info(trace: &SimulationTrace, event_id: EventId) -> Result<Option<f64>, MetricsError> {
    first_info_where(trace, event_id, |_| true)
}

fn first_info_where(
    trace: &SimulationTrace,
    event_id: EventId,
    keep: impl Fn(ProductKind) -> bool,
) -> Result<Option<f64>, MetricsError> {
    let event = trace.event(event_id).ok_or(MetricsError::UnknownEvent(event_id))?;
    Ok(trace
        .marketplace
        .iter()
        .filter(|r| keep(r.kind) && r.event_ids.contains(&event_id))
        .map(|r| r.delivered - event.start_s)
        .min_by(f64::total_cmp))
}

/// Delivery time minus acquisition time of the source scene.
pub fn end_to_end_latency(trace: &SimulationTrace, product_id: ProductId) -> Result<f64, MetricsError> {
    let p = trace.product(product_id).ok_or(MetricsError::UnknownProduct(product_id))?;
    let delivered = p.delivered.ok_or(MetricsError::Undelivered(product_id))?;
    Ok(delivered - p.acquired)
}

/// Linear interpolation between closest ranks; `values` must be sorted.
pub fn percentile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let rank = (p / 100.0).clamp(0.0, 1.0) * (values.len() - 1) as f64;
    let lo = math::floor(rank) as usize;
    let hi = (lo + 1).min(values.len() - 1);
    let frac = rank - lo as f64;
    Some(values[lo] + (values[hi] - values[lo]) * frac)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LatencySummary {
    /// Finite samples.
    pub count: usize,
    /// Samples that never completed, excluded from the percentiles.
    pub never: usize,
    pub p50: Option<f64>,
    pub p90: Option<f64>,
}

impl LatencySummary {
    pub fn from_samples(samples: impl IntoIterator<Item = Option<f64>>) -> Self {
        let mut values = Vec::new();
        let mut never = 0;
        for s in samples {
            match s {
                Some(v) => values.push(v),
                None => never += 1,
            }
        }
        values.sort_by(f64::total_cmp);
        LatencySummary { count: values.len(), never, p50: percentile(&values, 50.0), p90: percentile(&values, 90.0) }
    }

    pub fn median(&self) -> Option<f64> {
        self.p50
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KindBits {
    pub raw_scene: u64,
    pub thematic_mask: u64,
    pub roi_chip: u64,
}

impl KindBits {
    pub fn total(&self) -> u64 {
        self.raw_scene + self.thematic_mask + self.roi_chip
    }

    fn add(&mut self, kind: ProductKind, bits: u64) {
        match kind {
            ProductKind::RawScene => self.raw_scene += bits,
            ProductKind::ThematicMask => self.thematic_mask += bits,
            ProductKind::RoiChip => self.roi_chip += bits,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FirstInfoByKind {
    pub raw_scene: Option<f64>,
    pub thematic_mask: Option<f64>,
    pub roi_chip: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventReport {
    pub event_id: EventId,
    pub start_s: SimTime,
    pub area_ha: f64,
    pub detectable: bool,
    pub time_to_first_info: Option<f64>,
    pub first_info_by_kind: FirstInfoByKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductReport {
    pub product_id: ProductId,
    pub kind: ProductKind,
    pub scene_id: SceneId,
    pub satellite_id: SatelliteId,
    pub event_count: usize,
    pub volume_bits: u64,
    pub transferred_bits: u64,
    pub acquired: SimTime,
    pub created: SimTime,
    pub downlinked: Option<SimTime>,
    pub delivered: Option<SimTime>,
    pub end_to_end_latency: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Completeness {
    pub detectable: usize,
    /// Detectable events covered by at least one delivered product.
    pub detected: usize,
    /// `detected / detectable`, 1 when nothing is detectable.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceReport {
    pub scenario: String,
    pub seed: u64,
    pub mode: ArchitectureMode,
    pub horizon_s: f64,
    pub mmu_ha: f64,
    pub events: Vec<EventReport>,
    pub products: Vec<ProductReport>,
    /// Bits of fully downlinked products, by kind.
    pub downlinked_bits: KindBits,
    pub volume: VolumeLedger,
    pub completeness: Completeness,
    pub time_to_first_info: LatencySummary,
    pub end_to_end_latency: LatencySummary,
    pub acquisitions: usize,
    pub undelivered_products: usize,
}

pub fn service_report(trace: &SimulationTrace) -> ServiceReport {
    let by_event = first_info_table(trace);
    let events: Vec<EventReport> = trace
        .events
        .iter()
        .map(|e| {
            let by_kind = by_event.get(&e.id).copied().unwrap_or_default();
            let first = [by_kind.raw_scene, by_kind.thematic_mask, by_kind.roi_chip]
                .into_iter()
                .flatten()
                .min_by(f64::total_cmp);
            EventReport {
                event_id: e.id,
                start_s: e.start_s,
                area_ha: e.area_ha,
                detectable: is_detectable(e.area_ha, trace.mmu_ha),
                time_to_first_info: first,
                first_info_by_kind: by_kind,
            }
        })
        .collect();

    let mut downlinked_bits = KindBits::default();
    let products: Vec<ProductReport> = trace
        .products
        .iter()
        .map(|p| {
            if p.product.is_complete() {
                downlinked_bits.add(p.product.kind, p.product.volume_bits);
            }
            ProductReport {
                product_id: p.product.id,
                kind: p.product.kind,
                scene_id: p.product.scene_id,
                satellite_id: p.satellite_id.clone(),
                event_count: p.product.event_ids.len(),
                volume_bits: p.product.volume_bits,
                transferred_bits: p.product.transferred_bits,
                acquired: p.acquired,
                created: p.product.created,
                downlinked: p.downlinked,
                delivered: p.delivered,
                end_to_end_latency: p.delivered.map(|d| d - p.acquired),
            }
        })
        .collect();

    let detectable = events.iter().filter(|e| e.detectable).count();
    let detected = events.iter().filter(|e| e.detectable && e.time_to_first_info.is_some()).count();
    let ratio = if detectable == 0 { 1.0 } else { detected as f64 / detectable as f64 };

    ServiceReport {
        scenario: trace.scenario.clone(),
        seed: trace.seed,
        mode: trace.mode,
        horizon_s: trace.horizon_s,
        mmu_ha: trace.mmu_ha,
        time_to_first_info: LatencySummary::from_samples(events.iter().map(|e| e.time_to_first_info)),
        end_to_end_latency: LatencySummary::from_samples(products.iter().filter_map(|p| p.delivered.map(|_| p.end_to_end_latency))),
        undelivered_products: products.iter().filter(|p| p.delivered.is_none()).count(),
        acquisitions: trace.acquisitions.len(),
        completeness: Completeness { detectable, detected, ratio },
        volume: trace.volume,
        downlinked_bits,
        events,
        products,
    }
}

fn first_info_table(trace: &SimulationTrace) -> BTreeMap<EventId, FirstInfoByKind> {
    let starts: BTreeMap<EventId, f64> = trace.events.iter().map(|e| (e.id, e.start_s)).collect();
    let mut table: BTreeMap<EventId, FirstInfoByKind> = BTreeMap::new();
    for r in &trace.marketplace {
        for id in &r.event_ids {
            let Some(start) = starts.get(id) else { continue };
            let dt = r.delivered - start;
            let entry = table.entry(*id).or_default();
            let slot = match r.kind {
                ProductKind::RawScene => &mut entry.raw_scene,
                ProductKind::ThematicMask => &mut entry.thematic_mask,
                ProductKind::RoiChip => &mut entry.roi_chip,
            };
            if slot.is_none_or(|v| dt < v) {
                *slot = Some(dt);
            }
        }
    }
    table
}

/// Paired time-to-first-info for one event under both architectures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventDelta {
    pub event_id: EventId,
    pub hybrid: Option<f64>,
    pub raw_only: Option<f64>,
    /// `hybrid - raw_only` when both delivered.
    pub delta: Option<f64>,
    /// Hybrid delivered strictly earlier (or raw-only never delivered).
    pub hybrid_faster: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub scenario: String,
    pub seed: u64,
    pub hybrid: ServiceReport,
    pub raw_only: ServiceReport,
    pub baseline: Option<ServiceReport>,
    pub deltas: Vec<EventDelta>,
    /// Share of events for which hybrid was strictly faster.
    pub hybrid_faster_fraction: f64,
    /// Hybrid over raw-only downlinked bits; `None` when raw-only moved nothing.
    pub downlink_ratio: Option<f64>,
    pub acquisitions_identical: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CompareOptions<'a> {
    /// Fixed event trace for all runs.
    pub events: Option<&'a [FireEvent]>,
    /// Additional reference service run on the same events.
    pub baseline: Option<&'a Scenario>,
}

/// Runs `scenario` under both architectures with identical random streams and
/// pairs their figures of merit.
pub fn compare_architectures(
    scenario: &Scenario,
    seed: u64,
    options: CompareOptions<'_>,
) -> Result<ComparisonReport, MetricsError> {
    let mut s = scenario.clone();
    s.seed = seed;
    let violations = crate::model::validate_scenario(&s);
    if !violations.is_empty() {
        return Err(EngineError::InvalidScenario(violations).into());
    }
    let geometry = Geometry::compute(&s);
    let opts = |mode| RunOptions { mode: Some(mode), events: options.events, geometry: Some(&geometry) };
    let hybrid = run_with(&s, opts(ArchitectureMode::Hybrid))?;
    let raw = run_with(&s, opts(ArchitectureMode::RawOnly))?;
    if hybrid.events != raw.events {
        return Err(MetricsError::StreamIsolation("fire events differ"));
    }
    if hybrid.acquisitions != raw.acquisitions || hybrid.scenes != raw.scenes {
        return Err(MetricsError::StreamIsolation("acquisitions differ"));
    }

    let baseline = match options.baseline {
        Some(b) => {
            let mut b = b.clone();
            b.seed = seed;
            let t = run_with(&b, RunOptions { events: Some(&hybrid.events), ..Default::default() })?;
            Some(service_report(&t))
        }
        None => None,
    };

    let h = service_report(&hybrid);
    let r = service_report(&raw);
    let deltas: Vec<EventDelta> = h
        .events
        .iter()
        .zip(&r.events)
        .map(|(a, b)| {
            let delta = match (a.time_to_first_info, b.time_to_first_info) {
                (Some(x), Some(y)) => Some(x - y),
                _ => None,
            };
            let hybrid_faster = match (a.time_to_first_info, b.time_to_first_info) {
                (Some(x), Some(y)) => x < y,
                (Some(_), None) => true,
                _ => false,
            };
            EventDelta { event_id: a.event_id, hybrid: a.time_to_first_info, raw_only: b.time_to_first_info, delta, hybrid_faster }
        })
        .collect();
    let hybrid_faster_fraction = if deltas.is_empty() {
        0.0
    } else {
        deltas.iter().filter(|d| d.hybrid_faster).count() as f64 / deltas.len() as f64
    };
    let raw_bits = r.downlinked_bits.total();
    let downlink_ratio = (raw_bits > 0).then(|| h.downlinked_bits.total() as f64 / raw_bits as f64);

    Ok(ComparisonReport {
        scenario: s.name.clone(),
        seed,
        hybrid: h,
        raw_only: r,
        baseline,
        deltas,
        hybrid_faster_fraction,
        downlink_ratio,
        acquisitions_identical: true,
    })
}
