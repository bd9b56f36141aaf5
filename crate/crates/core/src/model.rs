//! Domain types, physical constants, the data-volume model and scenario
//! validation.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::EventModel;
use crate::math;

/// Mean spherical Earth radius, km.
pub const EARTH_RADIUS_KM: f64 = 6371.0;
/// Earth gravitational parameter, m³/s².
pub const EARTH_MU: f64 = 3.986004418e14;
/// Sidereal Earth rotation rate, rad/s.
pub const EARTH_ROTATION_RATE: f64 = 7.2921159e-5;

/// Valid altitude range for circular orbits, km.
pub const ALTITUDE_RANGE_KM: (f64, f64) = (300.0, 2000.0);

/// Seconds since scenario epoch.
pub type SimTime = f64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("compression ratio must be at least 1, got {0}")]
    Compression(f64),
    #[error("altitude {0} km outside [300, 2000] km")]
    Altitude(f64),
}

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(String::from(s))
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
    };
}

macro_rules! numeric_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u64);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                fmt::Display::fmt(&self.0, f)
            }
        }
    };
}

string_id!(SatelliteId);
string_id!(StationId);
string_id!(AoiId);
numeric_id!(EventId);
numeric_id!(ProductId);
numeric_id!(SceneId);
numeric_id!(RequestId);

/// Point on the spherical Earth, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawGeoPoint")]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

#[derive(Deserialize)]
struct RawGeoPoint {
    lat: f64,
    lon: f64,
}

impl From<RawGeoPoint> for GeoPoint {
    fn from(raw: RawGeoPoint) -> Self {
        GeoPoint::new(raw.lat, raw.lon)
    }
}

impl GeoPoint {
    /// Longitude is wrapped into [-180, 180); latitude is stored as given and
    /// checked by [`validate_scenario`].
    pub fn new(lat: f64, lon: f64) -> Self {
        GeoPoint { lat, lon: normalize_lon(lon) }
    }

    /// Great-circle central angle to `other`, radians.
    pub fn central_angle(&self, other: &GeoPoint) -> f64 {
        math::central_angle(self.lat, self.lon, other.lat, other.lon)
    }

    /// Great-circle surface distance to `other`, km.
    pub fn distance_km(&self, other: &GeoPoint) -> f64 {
        self.central_angle(other) * EARTH_RADIUS_KM
    }
}

pub fn normalize_lon(lon: f64) -> f64 {
    if (-180.0..180.0).contains(&lon) {
        return lon;
    }
    let wrapped = libm::fmod(lon + 180.0, 360.0);
    let wrapped = if wrapped < 0.0 { wrapped + 360.0 } else { wrapped };
    let out = wrapped - 180.0;
    // fmod can land exactly on +180 after the shift for tiny negatives
    if out >= 180.0 { out - 360.0 } else { out }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaOfInterest {
    pub id: AoiId,
    pub center: GeoPoint,
    pub radius_km: f64,
}

impl AreaOfInterest {
    pub fn area_km2(&self) -> f64 {
        math::PI * self.radius_km * self.radius_km
    }

    pub fn contains(&self, p: &GeoPoint) -> bool {
        self.center.distance_km(p) <= self.radius_km
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Precision {
    Int8,
    Fp16,
}

fn default_int8_speedup() -> f64 {
    2.0
}

/// Parametric stand-in for the onboard accelerator: throughput only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnboardProcessorSpec {
    /// Radiometric preprocessing throughput, Mpixel/s.
    pub preprocess_rate_mpx: f64,
    /// Inference throughput at FP16, Mpixel/s.
    pub inference_rate_mpx: f64,
    pub precision: Precision,
    /// Multiplier applied to `inference_rate_mpx` when running INT8.
    #[serde(default = "default_int8_speedup")]
    pub int8_speedup: f64,
    /// `false` models a raw-only platform.
    pub enabled: bool,
}

impl OnboardProcessorSpec {
    pub fn disabled() -> Self {
        OnboardProcessorSpec {
            preprocess_rate_mpx: 1.0,
            inference_rate_mpx: 1.0,
            precision: Precision::Fp16,
            int8_speedup: default_int8_speedup(),
            enabled: false,
        }
    }

    /// Effective inference throughput, Mpixel/s.
    pub fn effective_inference_rate(&self) -> f64 {
        match self.precision {
            Precision::Fp16 => self.inference_rate_mpx,
            Precision::Int8 => self.inference_rate_mpx * self.int8_speedup,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatelliteSpec {
    pub id: SatelliteId,
    pub altitude_km: f64,
    pub inclination_deg: f64,
    pub raan_deg: f64,
    pub initial_arg_lat_deg: f64,
    pub swath_km: f64,
    pub gsd_m: f64,
    pub bands: u32,
    pub bit_depth: u32,
    pub processor: OnboardProcessorSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStationSpec {
    pub id: StationId,
    pub location: GeoPoint,
    pub min_elevation_deg: f64,
    pub xband_rate_mbps: f64,
    pub sband_available: bool,
}

impl GroundStationSpec {
    pub fn xband_rate_bps(&self) -> f64 {
        self.xband_rate_mbps * 1e6
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProductKind {
    RawScene,
    ThematicMask,
    RoiChip,
}

impl ProductKind {
    pub const ALL: [ProductKind; 3] = [ProductKind::RawScene, ProductKind::ThematicMask, ProductKind::RoiChip];

    /// Downlink priority; lower is more urgent.
    pub fn priority(self) -> i32 {
        match self {
            ProductKind::ThematicMask => 0,
            ProductKind::RoiChip => 1,
            ProductKind::RawScene => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProductKind::RawScene => "RawScene",
            ProductKind::ThematicMask => "ThematicMask",
            ProductKind::RoiChip => "RoiChip",
        }
    }
}

impl fmt::Display for ProductKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Unit of data flowing from the satellite to the marketplace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataProduct {
    pub id: ProductId,
    pub kind: ProductKind,
    pub scene_id: SceneId,
    pub event_ids: BTreeSet<EventId>,
    pub volume_bits: u64,
    /// Instant the product is complete onboard and may be queued.
    pub created: SimTime,
    pub priority: i32,
    pub transferred_bits: u64,
}

impl DataProduct {
    pub fn remaining_bits(&self) -> u64 {
        self.volume_bits - self.transferred_bits
    }

    pub fn is_complete(&self) -> bool {
        self.transferred_bits == self.volume_bits
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProcessingLocation {
    Ground,
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AcquisitionMode {
    Systematic,
    OnDemand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Triggering {
    Periodic,
    EventDriven,
    Crisis,
}

impl Triggering {
    /// Whether monitoring detections turn into observation requests.
    pub fn is_event_based(self) -> bool {
        matches!(self, Triggering::EventDriven | Triggering::Crisis)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceArchetype {
    pub name: String,
    pub processing_location: ProcessingLocation,
    pub gsd_m: f64,
    pub mmu_ha: f64,
    pub acquisition_mode: AcquisitionMode,
    pub triggering: Triggering,
    /// Batch production cycle; present iff `triggering` is periodic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periodic_cycle_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundLatencySpec {
    /// Full ground processing of a raw scene.
    pub pdgs_raw_s: f64,
    /// Validation of an onboard mask or chip.
    pub pdgs_mask_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudModel {
    pub mean_fraction: f64,
    /// Scenes cloudier than this are deferred to ground processing.
    pub onboard_threshold: f64,
}

/// Knobs of the onboard classification and product model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnboardPolicy {
    /// Per-event detection probability for detectable events.
    pub accuracy: f64,
    pub fp_rate_per_scene: f64,
    pub mask_compression: f64,
    /// Linear margin of ROI chips around the event footprint.
    pub chip_margin: f64,
}

impl Default for OnboardPolicy {
    fn default() -> Self {
        OnboardPolicy { accuracy: 0.95, fp_rate_per_scene: 0.05, mask_compression: 10.0, chip_margin: 2.0 }
    }
}

fn default_coarse_step() -> f64 {
    crate::orbit::DEFAULT_COARSE_STEP_S
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub horizon_s: f64,
    pub satellites: Vec<SatelliteSpec>,
    pub stations: Vec<GroundStationSpec>,
    pub aois: Vec<AreaOfInterest>,
    pub archetype: ServiceArchetype,
    pub event_model: EventModel,
    pub latencies: GroundLatencySpec,
    pub monitoring_delay_s: f64,
    pub cloud_model: CloudModel,
    #[serde(default)]
    pub onboard: OnboardPolicy,
    /// Coarse sampling step of window searches.
    #[serde(default = "default_coarse_step")]
    pub coarse_step_s: f64,
}

impl Scenario {
    pub fn satellite(&self, id: &SatelliteId) -> Option<&SatelliteSpec> {
        self.satellites.iter().find(|s| &s.id == id)
    }

    pub fn aoi(&self, id: &AoiId) -> Option<&AreaOfInterest> {
        self.aois.iter().find(|a| &a.id == id)
    }
}

/// Pixels covering `area_km2` at `gsd_m`, as a real number.
pub fn pixel_count(area_km2: f64, gsd_m: f64) -> f64 {
    area_km2 * 1e6 / (gsd_m * gsd_m)
}

fn check_positive(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonPositive { name, value })
    }
}

/// Volume of a full-radiometry scene in bits: ceil(pixels) · bands · bit depth.
pub fn scene_volume(area_km2: f64, gsd_m: f64, bands: u32, bit_depth: u32) -> Result<u64, ModelError> {
    check_positive("area_km2", area_km2)?;
    check_positive("gsd_m", gsd_m)?;
    check_positive("bands", bands as f64)?;
    check_positive("bit_depth", bit_depth as f64)?;
    let pixels = ceil_pixels(pixel_count(area_km2, gsd_m));
    Ok(pixels.saturating_mul(bands as u64 * bit_depth as u64))
}

/// Volume of a 1 bit/pixel thematic mask after `compression`, at least 1 bit.
pub fn mask_volume(area_km2: f64, gsd_m: f64, compression: f64) -> Result<u64, ModelError> {
    check_positive("area_km2", area_km2)?;
    check_positive("gsd_m", gsd_m)?;
    if !(compression >= 1.0) || !compression.is_finite() {
        return Err(ModelError::Compression(compression));
    }
    let bits = ceil_pixels(pixel_count(area_km2, gsd_m) / compression);
    Ok(bits.max(1))
}

/// Ceiling that forgives floating-point noise just above an integer, so a
/// single pixel area maps to exactly one pixel.
fn ceil_pixels(x: f64) -> u64 {
    let r = libm::round(x);
    let v = if (x - r).abs() <= 1e-9 * r.max(1.0) { r } else { math::ceil(x) };
    (v as u64).max(1)
}

/// One broken invariant, addressed by field path.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

struct Checker {
    out: Vec<Violation>,
}

impl Checker {
    fn push(&mut self, path: String, message: String) {
        self.out.push(Violation { path, message });
    }

    fn positive(&mut self, path: String, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.push(path, format!("must be positive, got {v}"));
        }
    }

    fn non_negative(&mut self, path: String, v: f64) {
        if !(v >= 0.0 && v.is_finite()) {
            self.push(path, format!("must be non-negative, got {v}"));
        }
    }

    fn within(&mut self, path: String, v: f64, lo: f64, hi: f64) {
        if !(v >= lo && v <= hi) {
            self.push(path, format!("must lie in [{lo}, {hi}], got {v}"));
        }
    }

    fn point(&mut self, path: &str, p: &GeoPoint) {
        self.within(format!("{path}.lat"), p.lat, -90.0, 90.0);
        if !(p.lon >= -180.0 && p.lon < 180.0) {
            self.push(format!("{path}.lon"), format!("must lie in [-180, 180), got {}", p.lon));
        }
    }

    fn id(&mut self, path: String, id: &str, seen: &mut BTreeSet<String>) {
        if id.is_empty() {
            self.push(path, String::from("must not be empty"));
        } else if !seen.insert(String::from(id)) {
            self.push(path, format!("duplicate id {id:?}"));
        }
    }
}

/// Checks every scenario invariant. An empty list means the scenario is valid;
/// violations are sorted by field path.
pub fn validate_scenario(s: &Scenario) -> Vec<Violation> {
    let mut c = Checker { out: Vec::new() };

    c.positive(String::from("horizon_s"), s.horizon_s);
    c.positive(String::from("coarse_step_s"), s.coarse_step_s);
    c.non_negative(String::from("monitoring_delay_s"), s.monitoring_delay_s);

    if s.satellites.is_empty() {
        c.push(String::from("satellites"), String::from("at least one satellite required"));
    }
    if s.stations.is_empty() {
        c.push(String::from("stations"), String::from("at least one station required"));
    }
    if s.aois.is_empty() {
        c.push(String::from("aois"), String::from("at least one area of interest required"));
    }

    let mut seen = BTreeSet::new();
    for (i, sat) in s.satellites.iter().enumerate() {
        let p = format!("satellites[{i}]");
        c.id(format!("{p}.id"), sat.id.as_str(), &mut seen);
        c.within(format!("{p}.altitude_km"), sat.altitude_km, ALTITUDE_RANGE_KM.0, ALTITUDE_RANGE_KM.1);
        c.within(format!("{p}.inclination_deg"), sat.inclination_deg, 0.0, 180.0);
        if !sat.raan_deg.is_finite() {
            c.push(format!("{p}.raan_deg"), String::from("must be finite"));
        }
        if !sat.initial_arg_lat_deg.is_finite() {
            c.push(format!("{p}.initial_arg_lat_deg"), String::from("must be finite"));
        }
        c.positive(format!("{p}.swath_km"), sat.swath_km);
        c.positive(format!("{p}.gsd_m"), sat.gsd_m);
        if sat.bands < 1 {
            c.push(format!("{p}.bands"), String::from("must be at least 1"));
        }
        if sat.bit_depth < 1 {
            c.push(format!("{p}.bit_depth"), String::from("must be at least 1"));
        }
        let proc = &sat.processor;
        if proc.enabled {
            c.positive(format!("{p}.processor.preprocess_rate_mpx"), proc.preprocess_rate_mpx);
            c.positive(format!("{p}.processor.inference_rate_mpx"), proc.inference_rate_mpx);
            c.positive(format!("{p}.processor.int8_speedup"), proc.int8_speedup);
        } else if s.archetype.processing_location == ProcessingLocation::Hybrid {
            c.push(format!("{p}.processor.enabled"), String::from("hybrid processing requires an enabled processor"));
        }
    }

    let mut seen = BTreeSet::new();
    for (i, st) in s.stations.iter().enumerate() {
        let p = format!("stations[{i}]");
        c.id(format!("{p}.id"), st.id.as_str(), &mut seen);
        c.point(&format!("{p}.location"), &st.location);
        if !(st.min_elevation_deg >= 0.0 && st.min_elevation_deg < 90.0) {
            c.push(format!("{p}.min_elevation_deg"), format!("must lie in [0, 90), got {}", st.min_elevation_deg));
        }
        c.positive(format!("{p}.xband_rate_mbps"), st.xband_rate_mbps);
    }

    let mut seen = BTreeSet::new();
    for (i, aoi) in s.aois.iter().enumerate() {
        let p = format!("aois[{i}]");
        c.id(format!("{p}.id"), aoi.id.as_str(), &mut seen);
        c.point(&format!("{p}.center"), &aoi.center);
        c.positive(format!("{p}.radius_km"), aoi.radius_km);
    }

    let a = &s.archetype;
    c.positive(String::from("archetype.gsd_m"), a.gsd_m);
    c.positive(String::from("archetype.mmu_ha"), a.mmu_ha);
    match (a.triggering, a.periodic_cycle_s) {
        (Triggering::Periodic, None) => {
            c.push(String::from("archetype.periodic_cycle_s"), String::from("required for periodic triggering"))
        }
        (Triggering::Periodic, Some(cycle)) => c.positive(String::from("archetype.periodic_cycle_s"), cycle),
        (_, Some(_)) => {
            c.push(String::from("archetype.periodic_cycle_s"), String::from("only allowed for periodic triggering"))
        }
        (_, None) => {}
    }

    let m = &s.event_model;
    c.non_negative(String::from("event_model.rate_per_aoi_per_day"), m.rate_per_aoi_per_day);
    if !m.area_log_mean.is_finite() {
        c.push(String::from("event_model.area_log_mean"), String::from("must be finite"));
    }
    c.positive(String::from("event_model.area_log_sd"), m.area_log_sd);

    let l = &s.latencies;
    c.non_negative(String::from("latencies.pdgs_raw_s"), l.pdgs_raw_s);
    c.non_negative(String::from("latencies.pdgs_mask_s"), l.pdgs_mask_s);
    if l.pdgs_mask_s > l.pdgs_raw_s {
        c.push(
            String::from("latencies.pdgs_mask_s"),
            format!("mask validation ({}) must not exceed raw processing ({})", l.pdgs_mask_s, l.pdgs_raw_s),
        );
    }

    c.within(String::from("cloud_model.mean_fraction"), s.cloud_model.mean_fraction, 0.0, 1.0);
    c.within(String::from("cloud_model.onboard_threshold"), s.cloud_model.onboard_threshold, 0.0, 1.0);

    let o = &s.onboard;
    if !(o.accuracy > 0.0 && o.accuracy <= 1.0) {
        c.push(String::from("onboard.accuracy"), format!("must lie in (0, 1], got {}", o.accuracy));
    }
    c.non_negative(String::from("onboard.fp_rate_per_scene"), o.fp_rate_per_scene);
    if !(o.mask_compression >= 1.0 && o.mask_compression.is_finite()) {
        c.push(String::from("onboard.mask_compression"), format!("must be at least 1, got {}", o.mask_compression));
    }
    c.positive(String::from("onboard.chip_margin"), o.chip_margin);

    c.out.sort();
    c.out
}
