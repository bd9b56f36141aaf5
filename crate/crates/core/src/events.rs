//! Ground-truth fire events and the external monitoring chain.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal};
use serde::{Deserialize, Serialize};

use crate::engine::{RngStreams, StreamDomain};
use crate::math::{self, cos};
use crate::model::{AreaOfInterest, EventId, GeoPoint, SimTime, EARTH_RADIUS_KM};

/// Per-AOI Poisson occurrence with log-normal burnt area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventModel {
    pub rate_per_aoi_per_day: f64,
    /// Mean of ln(area / ha).
    pub area_log_mean: f64,
    /// Standard deviation of ln(area / ha).
    pub area_log_sd: f64,
}

impl Default for EventModel {
    fn default() -> Self {
        // median 5 ha
        EventModel { rate_per_aoi_per_day: 0.5, area_log_mean: libm::log(5.0), area_log_sd: 1.0 }
    }
}

/// A burn scar appearing at `start_s`, static afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FireEvent {
    pub id: EventId,
    pub location: GeoPoint,
    pub start_s: SimTime,
    pub area_ha: f64,
}

/// Draws events for every AOI over `[0, horizon_s)`. Each AOI uses its own
/// stream so adding or removing an AOI leaves the others untouched. The
/// result is sorted by start time and ids are assigned in that order.
pub fn generate_fire_events(
    model: &EventModel,
    aois: &[AreaOfInterest],
    horizon_s: f64,
    streams: &RngStreams,
) -> Vec<FireEvent> {
    let mut drawn: Vec<(f64, usize, usize, GeoPoint, f64)> = Vec::new();
    let rate_per_s = model.rate_per_aoi_per_day / 86_400.0;
    if !(rate_per_s > 0.0) || !(horizon_s > 0.0) {
        return Vec::new();
    }
    let inter_arrival = Exp::new(rate_per_s).expect("positive rate");
    let area = LogNormal::new(model.area_log_mean, model.area_log_sd).expect("validated log-normal");

    for (aoi_index, aoi) in aois.iter().enumerate() {
        let mut rng = streams.stream(StreamDomain::Events, crate::engine::entity_key(aoi.id.as_str()));
        let mut t = 0.0;
        let mut n = 0;
        loop {
            t += inter_arrival.sample(&mut rng);
            if t >= horizon_s {
                break;
            }
            let location = uniform_in_disc(aoi, rng.random::<f64>(), rng.random::<f64>());
            let a = area.sample(&mut rng);
            drawn.push((t, aoi_index, n, location, a));
            n += 1;
        }
    }

    drawn.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    drawn
        .into_iter()
        .enumerate()
        .map(|(i, (start_s, _, _, location, area_ha))| FireEvent {
            id: EventId(i as u64),
            location,
            start_s,
            area_ha,
        })
        .collect()
}

/// Area-uniform point on the spherical cap covered by the AOI.
fn uniform_in_disc(aoi: &AreaOfInterest, u: f64, v: f64) -> GeoPoint {
    let alpha = aoi.radius_km / EARTH_RADIUS_KM;
    let cos_c = 1.0 - u * (1.0 - cos(alpha));
    let c = libm::acos(math::clamp_unit(cos_c));
    let (lat, lon) = math::destination(aoi.center.lat, aoi.center.lon, math::TAU * v, c);
    GeoPoint::new(lat, lon)
}

/// Instant at which external monitoring reports the event.
pub fn monitoring_detection_time(event: &FireEvent, monitoring_delay_s: f64) -> SimTime {
    event.start_s + monitoring_delay_s
}

/// Whether a scar of `area_ha` reaches the minimum mapping unit (inclusive).
pub fn is_detectable(area_ha: f64, mmu_ha: f64) -> bool {
    area_ha >= mmu_ha
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AoiId;

    fn aois(n: usize) -> Vec<AreaOfInterest> {
        (0..n)
            .map(|i| AreaOfInterest {
                id: AoiId(alloc::format!("aoi-{i}")),
                center: GeoPoint::new(38.0 + i as f64, 9.0 + 2.0 * i as f64),
                radius_km: 30.0,
            })
            .collect()
    }

    #[test]
    fn zero_rate_is_empty() {
        let m = EventModel { rate_per_aoi_per_day: 0.0, ..EventModel::default() };
        assert!(generate_fire_events(&m, &aois(3), 86_400.0 * 7.0, &RngStreams::new(1)).is_empty());
    }

    #[test]
    fn deterministic_and_sorted() {
        let m = EventModel { rate_per_aoi_per_day: 3.0, ..EventModel::default() };
        let a = generate_fire_events(&m, &aois(4), 86_400.0 * 7.0, &RngStreams::new(42));
        let b = generate_fire_events(&m, &aois(4), 86_400.0 * 7.0, &RngStreams::new(42));
        assert_eq!(a, b);
        assert!(!a.is_empty());
        assert!(a.windows(2).all(|w| w[0].start_s <= w[1].start_s));
        for (i, e) in a.iter().enumerate() {
            assert_eq!(e.id, EventId(i as u64));
            assert!(e.area_ha > 0.0);
            assert!(aois(4).iter().any(|a| a.contains(&e.location)));
        }
        let c = generate_fire_events(&m, &aois(4), 86_400.0 * 7.0, &RngStreams::new(43));
        assert_ne!(a, c);
    }

    #[test]
    fn shorter_horizon_is_a_prefix() {
        let m = EventModel { rate_per_aoi_per_day: 2.0, ..EventModel::default() };
        let full = generate_fire_events(&m, &aois(3), 86_400.0 * 10.0, &RngStreams::new(5));
        let part = generate_fire_events(&m, &aois(3), 86_400.0 * 4.0, &RngStreams::new(5));
        let filtered: Vec<FireEvent> = full.into_iter().filter(|e| e.start_s < 86_400.0 * 4.0).collect();
        assert_eq!(part, filtered);
    }

    #[test]
    fn monitoring_delay() {
        let e = FireEvent { id: EventId(0), location: GeoPoint::new(0.0, 0.0), start_s: 100.0, area_ha: 4.0 };
        assert_eq!(monitoring_detection_time(&e, 0.0), 100.0);
        assert_eq!(monitoring_detection_time(&e, 900.0), 1000.0);
    }

    #[test]
    fn detectability() {
        assert!(is_detectable(3.0, 3.0));
        assert!(!is_detectable(2.9, 3.0));
        assert!(!is_detectable(5.0, 10.0));
        assert!(is_detectable(5.0, 3.0));
    }

    proptest::proptest! {
        #[test]
        fn detectable_set_is_antitone(area in 0.01f64..100.0, m1 in 0.1f64..50.0, m2 in 0.1f64..50.0) {
            let (lo, hi) = if m1 <= m2 { (m1, m2) } else { (m2, m1) };
            if is_detectable(area, hi) {
                proptest::prop_assert!(is_detectable(area, lo));
            }
        }

        #[test]
        fn disc_samples_stay_inside(u in 0.0f64..1.0, v in 0.0f64..1.0, lat in -70.0f64..70.0, lon in -180.0f64..180.0) {
            let aoi = AreaOfInterest { id: AoiId::from("x"), center: GeoPoint::new(lat, lon), radius_km: 50.0 };
            let p = uniform_in_disc(&aoi, u, v);
            proptest::prop_assert!(aoi.center.distance_km(&p) <= 50.0 + 1e-6);
        }
    }
}
