//! Central planning: monitoring detections become observation requests, which
//! are uplinked over S-band and assigned to nominal access windows.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::events::{monitoring_detection_time, FireEvent};
use crate::model::{
    AcquisitionMode, AoiId, AreaOfInterest, EventId, GroundStationSpec, RequestId, SatelliteId, SatelliteSpec,
    ServiceArchetype, SimTime,
};
use crate::orbit::{self, Geometry, Window};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRequest {
    pub id: RequestId,
    pub aoi_id: AoiId,
    pub event_ids: BTreeSet<EventId>,
    pub issued: SimTime,
    pub priority: i32,
    pub earliest: SimTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub request_id: RequestId,
    pub satellite_id: SatelliteId,
    pub aoi_id: AoiId,
    pub window: Window,
    pub uplink_time: SimTime,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskingPlan {
    pub assignments: Vec<Assignment>,
    pub unmet: Vec<RequestId>,
}

/// An imaging opportunity: one satellite over one AOI during one access window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Opportunity {
    pub satellite_id: SatelliteId,
    pub aoi_id: AoiId,
    pub window: Window,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RequestBatch {
    pub requests: Vec<ObservationRequest>,
    /// Events lying outside every AOI.
    pub dropped: Vec<EventId>,
}

/// First AOI (in scenario order) whose disc contains the event.
pub fn containing_aoi<'a>(event: &FireEvent, aois: &'a [AreaOfInterest]) -> Option<&'a AreaOfInterest> {
    aois.iter().find(|a| a.contains(&event.location))
}

/// Request issued for one event at its monitoring detection time.
pub fn request_for_event(
    id: RequestId,
    event: &FireEvent,
    aois: &[AreaOfInterest],
    monitoring_delay_s: f64,
) -> Option<ObservationRequest> {
    let aoi = containing_aoi(event, aois)?;
    let issued = monitoring_detection_time(event, monitoring_delay_s);
    Some(ObservationRequest {
        id,
        aoi_id: aoi.id.clone(),
        event_ids: BTreeSet::from([event.id]),
        issued,
        priority: 0,
        earliest: issued,
    })
}

/// One request per event for event-based triggering, none for periodic
/// production. Requests are not deduplicated.
pub fn build_requests(
    events: &[FireEvent],
    aois: &[AreaOfInterest],
    monitoring_delay_s: f64,
    archetype: &ServiceArchetype,
) -> RequestBatch {
    let mut batch = RequestBatch::default();
    if !archetype.triggering.is_event_based() {
        return batch;
    }
    for (i, e) in events.iter().enumerate() {
        match request_for_event(RequestId(i as u64), e, aois, monitoring_delay_s) {
            Some(r) => batch.requests.push(r),
            None => batch.dropped.push(e.id),
        }
    }
    batch.requests.sort_by(|a, b| a.issued.total_cmp(&b.issued).then(a.id.cmp(&b.id)));
    batch
}

/// Incremental greedy planner over precomputed geometry.
///
/// Each request goes to the earliest access window, across all satellites,
/// that starts after the end of that satellite's first S-band contact
/// following the request. Ties go to the lowest satellite id. A satellite
/// never receives two overlapping windows.
pub struct Planner<'a> {
    satellites: &'a [SatelliteSpec],
    aois: &'a [AreaOfInterest],
    geometry: &'a Geometry,
    /// Per satellite: S-band capable contacts sorted by start.
    sband: Vec<Vec<Window>>,
    /// Satellite indices sorted by id.
    by_id: Vec<usize>,
    taken: Vec<Vec<Window>>,
}

impl<'a> Planner<'a> {
    pub fn new(
        satellites: &'a [SatelliteSpec],
        stations: &[GroundStationSpec],
        aois: &'a [AreaOfInterest],
        geometry: &'a Geometry,
    ) -> Self {
        let sband = (0..satellites.len())
            .map(|s| {
                let mut w: Vec<Window> = stations
                    .iter()
                    .enumerate()
                    .filter(|(_, st)| st.sband_available)
                    .flat_map(|(g, _)| geometry.contacts[s][g].iter().copied())
                    .collect();
                w.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.end.total_cmp(&b.end)));
                w
            })
            .collect();
        let mut by_id: Vec<usize> = (0..satellites.len()).collect();
        by_id.sort_by(|&a, &b| satellites[a].id.cmp(&satellites[b].id));
        Planner { satellites, aois, geometry, sband, by_id, taken: alloc::vec![Vec::new(); satellites.len()] }
    }

    /// End of the first S-band contact starting at or after `t`.
    pub fn uplink_time(&self, sat: usize, t: SimTime) -> Option<SimTime> {
        self.sband[sat].iter().find(|w| w.start >= t).map(|w| w.end)
    }

    pub fn assign(&mut self, request: &ObservationRequest) -> Option<Assignment> {
        let aoi = self.aois.iter().position(|a| a.id == request.aoi_id)?;
        let mut best: Option<(usize, Window, SimTime)> = None;
        for &s in &self.by_id {
            let Some(uplink) = self.uplink_time(s, request.issued) else { continue };
            let candidate = self.geometry.access[s][aoi].iter().find(|w| {
                w.start > uplink && w.start >= request.earliest && !self.taken[s].iter().any(|t| t.overlaps(w))
            });
            if let Some(w) = candidate {
                // strict comparison keeps the lower id on ties
                if best.as_ref().is_none_or(|(_, bw, _)| w.start < bw.start) {
                    best = Some((s, *w, uplink));
                }
            }
        }
        let (s, window, uplink_time) = best?;
        self.taken[s].push(window);
        Some(Assignment {
            request_id: request.id,
            satellite_id: self.satellites[s].id.clone(),
            aoi_id: request.aoi_id.clone(),
            window,
            uplink_time,
        })
    }
}

/// Greedy plan over requests taken in `(priority, issued, id)` order.
pub fn plan_with(requests: &[ObservationRequest], planner: &mut Planner<'_>) -> TaskingPlan {
    let mut order: Vec<&ObservationRequest> = requests.iter().collect();
    order.sort_by(|a, b| a.priority.cmp(&b.priority).then(a.issued.total_cmp(&b.issued)).then(a.id.cmp(&b.id)));
    let mut plan = TaskingPlan::default();
    for r in order {
        match planner.assign(r) {
            Some(a) => plan.assignments.push(a),
            None => plan.unmet.push(r.id),
        }
    }
    plan
}

/// Computes visibility over `[0, horizon_s]` and plans `requests`.
pub fn plan(
    requests: &[ObservationRequest],
    satellites: &[SatelliteSpec],
    stations: &[GroundStationSpec],
    aois: &[AreaOfInterest],
    horizon_s: f64,
    coarse_step: f64,
) -> TaskingPlan {
    let geometry = geometry_for(satellites, stations, aois, horizon_s, coarse_step);
    let mut planner = Planner::new(satellites, stations, aois, &geometry);
    plan_with(requests, &mut planner)
}

fn geometry_for(
    satellites: &[SatelliteSpec],
    stations: &[GroundStationSpec],
    aois: &[AreaOfInterest],
    horizon_s: f64,
    step: f64,
) -> Geometry {
    Geometry {
        contacts: satellites
            .iter()
            .map(|s| stations.iter().map(|g| orbit::contact_windows(s, g, 0.0, horizon_s, step)).collect())
            .collect(),
        access: satellites
            .iter()
            .map(|s| aois.iter().map(|a| orbit::access_windows(s, a, 0.0, horizon_s, step)).collect())
            .collect(),
    }
}

/// Every access window of every satellite over every AOI, ordered by
/// `(start, satellite_id, aoi_id)`. Empty unless acquisition is systematic.
pub fn periodic_acquisitions_from(
    archetype: &ServiceArchetype,
    satellites: &[SatelliteSpec],
    aois: &[AreaOfInterest],
    geometry: &Geometry,
) -> Vec<Opportunity> {
    if archetype.acquisition_mode != AcquisitionMode::Systematic {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (s, sat) in satellites.iter().enumerate() {
        for (a, aoi) in aois.iter().enumerate() {
            for w in &geometry.access[s][a] {
                out.push(Opportunity { satellite_id: sat.id.clone(), aoi_id: aoi.id.clone(), window: *w });
            }
        }
    }
    out.sort_by(|x, y| {
        x.window
            .start
            .total_cmp(&y.window.start)
            .then_with(|| x.satellite_id.cmp(&y.satellite_id))
            .then_with(|| x.aoi_id.cmp(&y.aoi_id))
    });
    out
}

pub fn periodic_acquisitions(
    archetype: &ServiceArchetype,
    satellites: &[SatelliteSpec],
    aois: &[AreaOfInterest],
    horizon_s: f64,
    coarse_step: f64,
) -> Vec<Opportunity> {
    let geometry = geometry_for(satellites, &[], aois, horizon_s, coarse_step);
    periodic_acquisitions_from(archetype, satellites, aois, &geometry)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GeoPoint, OnboardProcessorSpec, StationId};
    use crate::presets;

    fn sat(id: &str, raan: f64, u0: f64) -> SatelliteSpec {
        SatelliteSpec {
            id: SatelliteId::from(id),
            altitude_km: 550.0,
            inclination_deg: 97.5,
            raan_deg: raan,
            initial_arg_lat_deg: u0,
            swath_km: 40.0,
            gsd_m: 3.0,
            bands: 4,
            bit_depth: 12,
            processor: OnboardProcessorSpec::disabled(),
        }
    }

    fn station(sband: bool) -> GroundStationSpec {
        GroundStationSpec {
            id: StationId::from("matera"),
            location: GeoPoint::new(40.65, 16.70),
            min_elevation_deg: 5.0,
            xband_rate_mbps: 400.0,
            sband_available: sband,
        }
    }

    fn aoi_under(s: &SatelliteSpec, t: f64) -> AreaOfInterest {
        AreaOfInterest { id: AoiId::from("aoi"), center: crate::orbit::subsatellite_point(s, t), radius_km: 20.0 }
    }

    fn event(id: u64, p: GeoPoint, start: f64) -> FireEvent {
        FireEvent { id: EventId(id), location: p, start_s: start, area_ha: 5.0 }
    }

    #[test]
    fn event_driven_requests() {
        let arch = presets::iride_heo().archetype;
        let aoi = AreaOfInterest { id: AoiId::from("a"), center: GeoPoint::new(41.0, 14.0), radius_km: 30.0 };
        let e = event(0, GeoPoint::new(41.0, 14.0), 100.0);
        let b = build_requests(&[e.clone()], &[aoi.clone()], 1800.0, &arch);
        assert_eq!(b.requests.len(), 1);
        assert_eq!(b.requests[0].issued, 1900.0);
        assert_eq!(b.requests[0].earliest, 1900.0);

        let e2 = event(1, GeoPoint::new(41.05, 14.0), 200.0);
        let b = build_requests(&[e.clone(), e2], &[aoi.clone()], 1800.0, &arch);
        assert_eq!(b.requests.len(), 2);

        let outside = event(2, GeoPoint::new(0.0, 0.0), 10.0);
        let b = build_requests(&[outside], &[aoi.clone()], 1800.0, &arch);
        assert!(b.requests.is_empty());
        assert_eq!(b.dropped, [EventId(2)]);

        let periodic = presets::effis_like().archetype;
        assert!(build_requests(&[e], &[aoi], 1800.0, &periodic).requests.is_empty());
    }

    fn one_sat_setup() -> (SatelliteSpec, GroundStationSpec, AreaOfInterest, Geometry, f64) {
        let s = sat("a", 20.0, 0.0);
        let g = station(true);
        let horizon = 3.0 * 86_400.0;
        let contacts = orbit::contact_windows(&s, &g, 0.0, horizon, 10.0);
        // AOI under the track some time after the second contact
        let t = contacts[1].end + 3000.0;
        let aoi = aoi_under(&s, t);
        let geometry = geometry_for(&[s.clone()], &[g.clone()], &[aoi.clone()], horizon, 10.0);
        (s, g, aoi, geometry, t)
    }

    #[test]
    fn assigns_pass_after_uplink() {
        let (s, g, aoi, geometry, t) = one_sat_setup();
        let contacts = &geometry.contacts[0][0];
        let req = ObservationRequest {
            id: RequestId(0),
            aoi_id: aoi.id.clone(),
            event_ids: BTreeSet::new(),
            issued: contacts[1].start - 1.0,
            priority: 0,
            earliest: contacts[1].start - 1.0,
        };
        let sats = [s];
        let stations = [g];
        let aois = [aoi];
        let mut planner = Planner::new(&sats, &stations, &aois, &geometry);
        let p = plan_with(&[req], &mut planner);
        assert!(p.unmet.is_empty());
        let a = &p.assignments[0];
        assert_eq!(a.uplink_time, contacts[1].end);
        assert!(a.window.start > a.uplink_time);
        assert!(a.window.contains(t), "{a:?} vs {t}");
    }

    #[test]
    fn no_sband_means_unmet() {
        let (s, _, aoi, _, _) = one_sat_setup();
        let p = plan(
            &[ObservationRequest {
                id: RequestId(3),
                aoi_id: aoi.id.clone(),
                event_ids: BTreeSet::new(),
                issued: 0.0,
                priority: 0,
                earliest: 0.0,
            }],
            &[s],
            &[station(false)],
            &[aoi],
            3.0 * 86_400.0,
            10.0,
        );
        assert!(p.assignments.is_empty());
        assert_eq!(p.unmet, [RequestId(3)]);
    }

    #[test]
    fn identical_access_ties_go_to_lower_id() {
        let (s, g, aoi, _, _) = one_sat_setup();
        let mut twin = s.clone();
        twin.id = SatelliteId::from("b");
        let mut first = s;
        first.id = SatelliteId::from("a");
        // list "b" first so the tie is decided by id, not position
        let sats = [twin, first];
        let stations = [g];
        let aois = [aoi.clone()];
        let geometry = geometry_for(&sats, &stations, &aois, 3.0 * 86_400.0, 10.0);
        let mut planner = Planner::new(&sats, &stations, &aois, &geometry);
        let req = ObservationRequest {
            id: RequestId(0),
            aoi_id: aoi.id,
            event_ids: BTreeSet::new(),
            issued: 0.0,
            priority: 0,
            earliest: 0.0,
        };
        let a = planner.assign(&req).unwrap();
        assert_eq!(a.satellite_id, SatelliteId::from("a"));
        // the same window is taken on "a" now; the twin offers it next
        let b = planner.assign(&ObservationRequest { id: RequestId(1), ..req }).unwrap();
        assert_eq!(b.satellite_id, SatelliteId::from("b"));
        assert_eq!(a.window, b.window);
    }

    #[test]
    fn plan_invariants_on_preset() {
        let mut s = presets::iride_heo();
        s.horizon_s = 2.0 * 86_400.0;
        let geometry = Geometry::compute(&s);
        let requests: Vec<ObservationRequest> = (0..40)
            .map(|i| ObservationRequest {
                id: RequestId(i),
                aoi_id: s.aois[(i as usize) % s.aois.len()].id.clone(),
                event_ids: BTreeSet::new(),
                issued: 1000.0 * i as f64,
                priority: (i % 3) as i32,
                earliest: 1000.0 * i as f64,
            })
            .collect();
        let mut planner = Planner::new(&s.satellites, &s.stations, &s.aois, &geometry);
        let p = plan_with(&requests, &mut planner);
        assert_eq!(p.assignments.len() + p.unmet.len(), requests.len());
        for a in &p.assignments {
            let r = requests.iter().find(|r| r.id == a.request_id).unwrap();
            assert!(a.uplink_time < a.window.start);
            assert!(a.uplink_time >= r.issued);
        }
        for (i, a) in p.assignments.iter().enumerate() {
            for b in &p.assignments[i + 1..] {
                if a.satellite_id == b.satellite_id {
                    assert!(!a.window.overlaps(&b.window), "{a:?} {b:?}");
                }
            }
        }
        let mut planner = Planner::new(&s.satellites, &s.stations, &s.aois, &geometry);
        assert_eq!(plan_with(&requests, &mut planner), p);
    }

    #[test]
    fn periodic_is_union_of_access_windows() {
        let s = presets::iride_heo();
        let horizon = 86_400.0;
        let opp = periodic_acquisitions(&s.archetype, &s.satellites, &s.aois, horizon, 10.0);
        let mut expected = 0;
        for sat in &s.satellites {
            for aoi in &s.aois {
                let w = orbit::access_windows(sat, aoi, 0.0, horizon, 10.0);
                expected += w.len();
                for win in w {
                    assert!(opp.iter().any(|o| o.satellite_id == sat.id && o.aoi_id == aoi.id && o.window == win));
                }
            }
        }
        assert_eq!(opp.len(), expected);
        assert!(opp.windows(2).all(|p| p[0].window.start <= p[1].window.start));
        assert!(periodic_acquisitions(&s.archetype, &s.satellites, &[], horizon, 10.0).is_empty());

        let longer = periodic_acquisitions(&s.archetype, &s.satellites, &s.aois, 2.0 * horizon, 10.0);
        for o in opp.iter().filter(|o| o.window.end < horizon) {
            assert!(longer.contains(o));
        }
    }
}
