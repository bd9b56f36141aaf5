//! Acquisition, the onboard processing budget, statistical classification and
//! product generation.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Beta, Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{is_detectable, FireEvent};
use crate::model::{
    mask_volume, pixel_count, scene_volume, AoiId, AreaOfInterest, CloudModel, DataProduct, EventId, ModelError,
    OnboardPolicy, OnboardProcessorSpec, ProductId, ProductKind, SatelliteId, SatelliteSpec, SceneId, SimTime,
};
use crate::tasking::Opportunity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ArchitectureMode {
    /// Everything is downlinked at full radiometry and processed on ground.
    RawOnly,
    /// Onboard inference; masks and chips are downlinked first.
    Hybrid,
}

impl ArchitectureMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ArchitectureMode::RawOnly => "RawOnly",
            ArchitectureMode::Hybrid => "Hybrid",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OnboardError {
    #[error("onboard processor of satellite {0} is disabled")]
    ProcessorDisabled(SatelliteId),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub id: SceneId,
    pub satellite_id: SatelliteId,
    pub aoi_id: AoiId,
    pub acquired: SimTime,
    pub area_km2: f64,
    pub cloud_fraction: f64,
    /// Ground truth: events inside the AOI that started by `acquired`.
    pub event_ids_present: BTreeSet<EventId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionOutcome {
    pub scene_id: SceneId,
    pub detected_event_ids: BTreeSet<EventId>,
    pub false_positive_count: u32,
    /// Per true detection: whether it is a correct burnt-area classification.
    /// Detections of real events are correct; false positives are counted
    /// separately and are never correct.
    pub correct_classification: BTreeMap<EventId, bool>,
}

impl DetectionOutcome {
    /// Share of correct detections among all detections, `None` when nothing
    /// was detected.
    pub fn precision(&self) -> Option<f64> {
        let correct = self.correct_classification.values().filter(|c| **c).count() as f64;
        let total = self.detected_event_ids.len() as f64 + self.false_positive_count as f64;
        (total > 0.0).then(|| correct / total)
    }
}

/// Cloud fraction ~ Beta(2, 2(1 − m)/m), mean m; degenerate at m = 0 and m = 1.
pub fn draw_cloud_fraction(cloud: &CloudModel, rng: &mut impl Rng) -> f64 {
    let m = cloud.mean_fraction;
    if m <= 0.0 {
        return 0.0;
    }
    if m >= 1.0 {
        return 1.0;
    }
    let beta = Beta::new(2.0, 2.0 * (1.0 - m) / m).expect("valid beta parameters");
    beta.sample(rng).clamp(0.0, 1.0)
}

/// Images the whole AOI at the start of the opportunity window.
pub fn acquire_scene(
    id: SceneId,
    opportunity: &Opportunity,
    aoi: &AreaOfInterest,
    events: &[FireEvent],
    cloud: &CloudModel,
    rng: &mut impl Rng,
) -> Scene {
    let acquired = opportunity.window.start;
    let event_ids_present = events
        .iter()
        .filter(|e| e.start_s <= acquired && aoi.contains(&e.location))
        .map(|e| e.id)
        .collect();
    Scene {
        id,
        satellite_id: opportunity.satellite_id.clone(),
        aoi_id: opportunity.aoi_id.clone(),
        acquired,
        area_km2: aoi.area_km2(),
        cloud_fraction: draw_cloud_fraction(cloud, rng),
        event_ids_present,
    }
}

/// Preprocessing plus inference time for `pixels` on `processor`, seconds.
pub fn pipeline_latency_for_pixels(pixels: f64, processor: &OnboardProcessorSpec) -> f64 {
    let pre = processor.preprocess_rate_mpx * 1e6;
    let inf = processor.effective_inference_rate() * 1e6;
    pixels / pre + pixels / inf
}

pub fn pipeline_latency(scene: &Scene, sat: &SatelliteSpec) -> Result<f64, OnboardError> {
    if !sat.processor.enabled {
        return Err(OnboardError::ProcessorDisabled(sat.id.clone()));
    }
    Ok(pipeline_latency_for_pixels(pixel_count(scene.area_km2, sat.gsd_m), &sat.processor))
}

/// Statistical classifier. One uniform is drawn per present event in id order
/// whether or not it is detectable, so the detected set shrinks monotonically
/// as the MMU grows under a fixed stream.
pub fn classify_scene(
    scene: &Scene,
    events: &[FireEvent],
    mmu_ha: f64,
    accuracy: f64,
    fp_rate_per_scene: f64,
    detection_rng: &mut impl Rng,
    fp_rng: &mut impl Rng,
) -> DetectionOutcome {
    let mut detected = BTreeSet::new();
    let mut correct = BTreeMap::new();
    for id in &scene.event_ids_present {
        let u: f64 = detection_rng.random();
        let Some(e) = events.iter().find(|e| e.id == *id) else { continue };
        if is_detectable(e.area_ha, mmu_ha) && u < accuracy {
            detected.insert(*id);
            correct.insert(*id, true);
        }
    }
    let false_positive_count = if fp_rate_per_scene > 0.0 {
        let p = Poisson::new(fp_rate_per_scene).expect("positive rate");
        let k: f64 = p.sample(fp_rng);
        k as u32
    } else {
        0
    };
    DetectionOutcome {
        scene_id: scene.id,
        detected_event_ids: detected,
        false_positive_count,
        correct_classification: correct,
    }
}

/// Turns a classified scene into data products with their onboard completion
/// times in `created`.
///
/// `next_id` is advanced for every product issued.
#[allow(clippy::too_many_arguments)]
pub fn build_products(
    scene: &Scene,
    outcome: &DetectionOutcome,
    sat: &SatelliteSpec,
    events: &[FireEvent],
    mode: ArchitectureMode,
    cloud: &CloudModel,
    policy: &OnboardPolicy,
    mmu_ha: f64,
    next_id: &mut u64,
) -> Result<Vec<DataProduct>, OnboardError> {
    let mut issue = |kind: ProductKind, event_ids: BTreeSet<EventId>, volume_bits: u64, created: f64| {
        let p = DataProduct {
            id: ProductId(*next_id),
            kind,
            scene_id: scene.id,
            event_ids,
            volume_bits,
            created,
            priority: kind.priority(),
            transferred_bits: 0,
        };
        *next_id += 1;
        p
    };

    let onboard = mode == ArchitectureMode::Hybrid
        && sat.processor.enabled
        && scene.cloud_fraction <= cloud.onboard_threshold;

    if !onboard {
        let volume = scene_volume(scene.area_km2, sat.gsd_m, sat.bands, sat.bit_depth)?;
        return Ok(alloc::vec![issue(
            ProductKind::RawScene,
            outcome.detected_event_ids.clone(),
            volume,
            scene.acquired
        )]);
    }

    let done = scene.acquired + pipeline_latency(scene, sat)?;
    let mut out = Vec::with_capacity(1 + outcome.detected_event_ids.len());
    let mask = mask_volume(scene.area_km2, sat.gsd_m, policy.mask_compression)?;
    out.push(issue(ProductKind::ThematicMask, outcome.detected_event_ids.clone(), mask, done));

    let margin2 = policy.chip_margin * policy.chip_margin;
    let chip = |area_ha: f64| {
        let km2 = (area_ha * 0.01 * margin2).min(scene.area_km2);
        scene_volume(km2, sat.gsd_m, sat.bands, sat.bit_depth)
    };
    for id in &outcome.detected_event_ids {
        let area = events.iter().find(|e| e.id == *id).map_or(mmu_ha, |e| e.area_ha);
        let volume = chip(area)?;
        out.push(issue(ProductKind::RoiChip, BTreeSet::from([*id]), volume, done));
    }
    // false alarms still cost downlink: one MMU-sized chip each
    for _ in 0..outcome.false_positive_count {
        let volume = chip(mmu_ha)?;
        out.push(issue(ProductKind::RoiChip, BTreeSet::new(), volume, done));
    }
    Ok(out)
}
