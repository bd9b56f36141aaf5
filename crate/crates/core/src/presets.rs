//! Built-in scenarios for the two reference services.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::events::EventModel;
use crate::model::{
    AcquisitionMode, AoiId, AreaOfInterest, CloudModel, GeoPoint, GroundLatencySpec, GroundStationSpec, OnboardPolicy,
    OnboardProcessorSpec, Precision, ProcessingLocation, SatelliteId, SatelliteSpec, Scenario, ServiceArchetype,
    StationId, Triggering,
};
use crate::orbit::DEFAULT_COARSE_STEP_S;

pub const IRIDE_HEO: &str = "iride-heo";
pub const EFFIS_LIKE: &str = "effis-like";

const WEEK_S: f64 = 7.0 * 86_400.0;

/// Fire-prone Italian regions monitored by both presets.
pub fn italian_aois() -> Vec<AreaOfInterest> {
    [
        ("sardinia", 40.10, 9.00, 50.0),
        ("sicily", 37.60, 14.20, 50.0),
        ("calabria", 39.00, 16.40, 40.0),
        ("lazio", 41.90, 12.80, 40.0),
    ]
    .into_iter()
    .map(|(id, lat, lon, r)| AreaOfInterest { id: AoiId::from(id), center: GeoPoint::new(lat, lon), radius_km: r })
    .collect()
}

pub fn italian_stations() -> Vec<GroundStationSpec> {
    [("matera", 40.65, 16.70), ("fucino", 41.98, 13.60)]
        .into_iter()
        .map(|(id, lat, lon)| GroundStationSpec {
            id: StationId::from(id),
            location: GeoPoint::new(lat, lon),
            min_elevation_deg: 5.0,
            xband_rate_mbps: 400.0,
            sband_available: true,
        })
        .collect()
}

/// Walker-style layout: `planes` planes spread over 180 degrees of RAAN,
/// satellites evenly phased within each plane.
fn walker(
    prefix: &str,
    planes: usize,
    per_plane: usize,
    template: &SatelliteSpec,
) -> Vec<SatelliteSpec> {
    let mut out = Vec::with_capacity(planes * per_plane);
    for p in 0..planes {
        for k in 0..per_plane {
            let n = p * per_plane + k + 1;
            let mut s = template.clone();
            s.id = SatelliteId(format!("{prefix}-{n:02}"));
            s.raan_deg = 180.0 * p as f64 / planes as f64;
            s.initial_arg_lat_deg = 360.0 * k as f64 / per_plane as f64 + 360.0 * p as f64 / (planes * per_plane) as f64;
            out.push(s);
        }
    }
    out
}

/// Hybrid onboard-processing constellation at 3 m GSD and 3 ha MMU.
pub fn iride_heo() -> Scenario {
    let template = SatelliteSpec {
        id: SatelliteId(String::new()),
        altitude_km: 550.0,
        inclination_deg: 97.6,
        raan_deg: 0.0,
        initial_arg_lat_deg: 0.0,
        swath_km: 40.0,
        gsd_m: 3.0,
        bands: 4,
        bit_depth: 12,
        processor: OnboardProcessorSpec {
            preprocess_rate_mpx: 200.0,
            inference_rate_mpx: 50.0,
            precision: Precision::Int8,
            int8_speedup: 2.0,
            enabled: true,
        },
    };
    Scenario {
        name: IRIDE_HEO.into(),
        seed: 0,
        horizon_s: WEEK_S,
        satellites: walker("heo", 4, 6, &template),
        stations: italian_stations(),
        aois: italian_aois(),
        archetype: ServiceArchetype {
            name: IRIDE_HEO.into(),
            processing_location: ProcessingLocation::Hybrid,
            gsd_m: 3.0,
            mmu_ha: 3.0,
            acquisition_mode: AcquisitionMode::Systematic,
            triggering: Triggering::EventDriven,
            periodic_cycle_s: None,
        },
        event_model: EventModel::default(),
        latencies: GroundLatencySpec { pdgs_raw_s: 7_200.0, pdgs_mask_s: 600.0 },
        monitoring_delay_s: 1_800.0,
        cloud_model: CloudModel { mean_fraction: 0.2, onboard_threshold: 0.5 },
        onboard: OnboardPolicy::default(),
        coarse_step_s: DEFAULT_COARSE_STEP_S,
    }
}

/// Ground-only medium-resolution service with daily production cycles.
pub fn effis_like() -> Scenario {
    let template = SatelliteSpec {
        id: SatelliteId(String::new()),
        altitude_km: 786.0,
        inclination_deg: 98.6,
        raan_deg: 0.0,
        initial_arg_lat_deg: 0.0,
        swath_km: 290.0,
        gsd_m: 20.0,
        bands: 10,
        bit_depth: 12,
        processor: OnboardProcessorSpec::disabled(),
    };
    let mut satellites = walker("mr", 1, 2, &template);
    // two satellites sharing one plane, half an orbit apart
    satellites[1].initial_arg_lat_deg = 180.0;
    Scenario {
        name: EFFIS_LIKE.into(),
        seed: 0,
        horizon_s: WEEK_S,
        satellites,
        stations: italian_stations(),
        aois: italian_aois(),
        archetype: ServiceArchetype {
            name: EFFIS_LIKE.into(),
            processing_location: ProcessingLocation::Ground,
            gsd_m: 20.0,
            mmu_ha: 10.0,
            acquisition_mode: AcquisitionMode::Systematic,
            triggering: Triggering::Periodic,
            periodic_cycle_s: Some(86_400.0),
        },
        event_model: EventModel::default(),
        latencies: GroundLatencySpec { pdgs_raw_s: 7_200.0, pdgs_mask_s: 600.0 },
        monitoring_delay_s: 1_800.0,
        cloud_model: CloudModel { mean_fraction: 0.2, onboard_threshold: 0.5 },
        onboard: OnboardPolicy::default(),
        coarse_step_s: DEFAULT_COARSE_STEP_S,
    }
}

pub fn builtin_presets() -> Vec<Scenario> {
    alloc::vec![iride_heo(), effis_like()]
}

pub fn preset(name: &str) -> Option<Scenario> {
    builtin_presets().into_iter().find(|s| s.name == name)
}

pub fn preset_names() -> [&'static str; 2] {
    [IRIDE_HEO, EFFIS_LIKE]
}
