//! Circular two-body orbits over a rotating spherical Earth, plus contact and
//! access window search.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::{self, asin, atan2, cos, sin, sqrt, to_deg, to_rad};
use crate::model::{
    AreaOfInterest, GeoPoint, GroundStationSpec, ModelError, SatelliteSpec, Scenario, SimTime, ALTITUDE_RANGE_KM,
    EARTH_MU, EARTH_RADIUS_KM, EARTH_ROTATION_RATE,
};

pub const DEFAULT_COARSE_STEP_S: f64 = 10.0;
/// Bracket width at which boundary bisection stops.
pub const REFINE_TOLERANCE_S: f64 = 0.1;

/// Closed visibility interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: SimTime,
    pub end: SimTime,
    /// Highest elevation reached, degrees. Contact windows only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_elevation_deg: Option<f64>,
}

impl Window {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains(&self, t: SimTime) -> bool {
        self.start <= t && t <= self.end
    }

    pub fn overlaps(&self, other: &Window) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// Keplerian period of a circular orbit at `altitude_km`, seconds.
pub fn orbital_period(altitude_km: f64) -> Result<f64, ModelError> {
    if !(altitude_km >= ALTITUDE_RANGE_KM.0 && altitude_km <= ALTITUDE_RANGE_KM.1) {
        return Err(ModelError::Altitude(altitude_km));
    }
    Ok(period_unchecked(altitude_km))
}

fn period_unchecked(altitude_km: f64) -> f64 {
    let a = (EARTH_RADIUS_KM + altitude_km) * 1e3;
    math::TAU * sqrt(a * a * a / EARTH_MU)
}

/// Mean motion, rad/s.
pub fn mean_motion(sat: &SatelliteSpec) -> f64 {
    math::TAU / period_unchecked(sat.altitude_km)
}

/// Earth-fixed position, km. Greenwich is aligned with the inertial x axis at t = 0.
pub fn position_ecef(sat: &SatelliteSpec, t: SimTime) -> [f64; 3] {
    let u = to_rad(sat.initial_arg_lat_deg) + mean_motion(sat) * t;
    let (i, raan) = (to_rad(sat.inclination_deg), to_rad(sat.raan_deg));
    let r = EARTH_RADIUS_KM + sat.altitude_km;
    let x = cos(raan) * cos(u) - sin(raan) * sin(u) * cos(i);
    let y = sin(raan) * cos(u) + cos(raan) * sin(u) * cos(i);
    let z = sin(u) * sin(i);
    let theta = EARTH_ROTATION_RATE * t;
    let (c, s) = (cos(theta), sin(theta));
    [r * (c * x + s * y), r * (-s * x + c * y), r * z]
}

pub fn subsatellite_point(sat: &SatelliteSpec, t: SimTime) -> GeoPoint {
    let [x, y, z] = position_ecef(sat, t);
    let r = sqrt(x * x + y * y + z * z);
    let lat = to_deg(asin(math::clamp_unit(z / r)));
    let lon = to_deg(atan2(y, x));
    GeoPoint::new(lat, lon)
}

/// Elevation above the local horizon of a satellite at `altitude_km` whose
/// subsatellite point lies `psi` radians of arc away, degrees.
pub fn elevation_from_central_angle(psi: f64, altitude_km: f64) -> f64 {
    let k = EARTH_RADIUS_KM / (EARTH_RADIUS_KM + altitude_km);
    to_deg(atan2(cos(psi) - k, sin(psi)))
}

/// Central angle at which the satellite sits exactly at `elevation_deg`.
pub fn central_angle_at_elevation(elevation_deg: f64, altitude_km: f64) -> f64 {
    let k = EARTH_RADIUS_KM / (EARTH_RADIUS_KM + altitude_km);
    let e = to_rad(elevation_deg);
    libm::acos(math::clamp_unit(k * cos(e))) - e
}

pub fn elevation_angle(sat: &SatelliteSpec, station: &GroundStationSpec, t: SimTime) -> f64 {
    let psi = subsatellite_point(sat, t).central_angle(&station.location);
    elevation_from_central_angle(psi, sat.altitude_km)
}

/// Maximal intervals of `[t0, t1]` where the station sees the satellite at or
/// above its elevation mask, sorted and disjoint.
pub fn contact_windows(
    sat: &SatelliteSpec,
    station: &GroundStationSpec,
    t0: SimTime,
    t1: SimTime,
    coarse_step: f64,
) -> Vec<Window> {
    let psi_lim = central_angle_at_elevation(station.min_elevation_deg, sat.altitude_km);
    let rate = mean_motion(sat) + EARTH_ROTATION_RATE;
    let spans = find_windows(
        t0,
        t1,
        coarse_step,
        |t| elevation_angle(sat, station, t) >= station.min_elevation_deg,
        |t| {
            let psi = subsatellite_point(sat, t).central_angle(&station.location);
            (psi - psi_lim) / rate
        },
    );
    spans
        .into_iter()
        .map(|(start, end)| Window {
            start,
            end,
            peak_elevation_deg: Some(peak_elevation(sat, station, start, end)),
        })
        .collect()
}

/// Maximal intervals of `[t0, t1]` where the subsatellite point is within
/// half a swath plus the AOI radius of the AOI centre.
pub fn access_windows(
    sat: &SatelliteSpec,
    aoi: &AreaOfInterest,
    t0: SimTime,
    t1: SimTime,
    coarse_step: f64,
) -> Vec<Window> {
    let reach_km = sat.swath_km / 2.0 + aoi.radius_km;
    let psi_lim = reach_km / EARTH_RADIUS_KM;
    let rate = mean_motion(sat) + EARTH_ROTATION_RATE;
    let spans = find_windows(
        t0,
        t1,
        coarse_step,
        |t| subsatellite_point(sat, t).distance_km(&aoi.center) <= reach_km,
        |t| (subsatellite_point(sat, t).central_angle(&aoi.center) - psi_lim) / rate,
    );
    spans
        .into_iter()
        .map(|(start, end)| Window { start, end, peak_elevation_deg: None })
        .collect()
}

fn peak_elevation(sat: &SatelliteSpec, station: &GroundStationSpec, start: f64, end: f64) -> f64 {
    // elevation is unimodal over a single pass
    let inv_phi = (sqrt(5.0) - 1.0) / 2.0;
    let (mut a, mut b) = (start, end);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (elevation_angle(sat, station, c), elevation_angle(sat, station, d));
    while b - a > 0.05 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = elevation_angle(sat, station, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = elevation_angle(sat, station, d);
        }
    }
    let ends = elevation_angle(sat, station, start).max(elevation_angle(sat, station, end));
    fc.max(fd).max(ends)
}

/// Scans a grid anchored at absolute multiples of `step` (plus both horizon
/// ends) and refines every transition by bisection. `time_to_entry` returns a
/// lower bound on the time before the predicate can become true; grid points
/// inside that bound are skipped without being evaluated.
///
/// Brackets are always consecutive grid points, so results do not depend on
/// where the horizon starts as long as the window lies strictly inside it.
fn find_windows(
    t0: f64,
    t1: f64,
    step: f64,
    inside: impl Fn(f64) -> bool,
    time_to_entry: impl Fn(f64) -> f64,
) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    if !(t0 < t1) || !(step > 0.0) {
        return out;
    }

    let mut prev_t = t0;
    let mut prev_in = inside(t0);
    let mut open = if prev_in { Some(t0) } else { None };
    let mut k = math::floor(t0 / step) + 1.0;

    loop {
        if !prev_in {
            let safe = 0.9 * time_to_entry(prev_t);
            let jump = math::floor((prev_t + safe) / step);
            if jump >= k {
                // every grid point up to `jump` is provably outside
                if jump * step >= t1 {
                    break;
                }
                prev_t = jump * step;
                k = jump + 1.0;
            }
        }
        let t = (k * step).min(t1);
        if t <= prev_t {
            k += 1.0;
            continue;
        }
        let now_in = inside(t);
        match (prev_in, now_in) {
            (false, true) => open = Some(bisect(prev_t, t, &inside, true)),
            (true, false) => {
                let end = bisect(prev_t, t, &inside, false);
                if let Some(start) = open.take() {
                    if end > start {
                        out.push((start, end));
                    }
                }
            }
            _ => {}
        }
        prev_t = t;
        prev_in = now_in;
        if t >= t1 {
            break;
        }
        k += 1.0;
    }

    if let Some(start) = open {
        if t1 > start {
            out.push((start, t1));
        }
    }
    out
}

/// Returns the endpoint of the final bracket on the inside of the boundary.
fn bisect(mut a: f64, mut b: f64, inside: &impl Fn(f64) -> bool, entering: bool) -> f64 {
    // entering: a is outside, b inside; leaving: a inside, b outside
    while b - a > REFINE_TOLERANCE_S {
        let mid = 0.5 * (a + b);
        if inside(mid) == entering {
            b = mid;
        } else {
            a = mid;
        }
    }
    if entering { b } else { a }
}

/// Precomputed windows for one scenario, indexed by position in the
/// scenario's satellite, station and AOI lists.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Geometry {
    /// `contacts[sat][station]`
    pub contacts: Vec<Vec<Vec<Window>>>,
    /// `access[sat][aoi]`
    pub access: Vec<Vec<Vec<Window>>>,
}

impl Geometry {
    pub fn compute(scenario: &Scenario) -> Self {
        let (t0, t1, step) = (0.0, scenario.horizon_s, scenario.coarse_step_s);
        let contacts = scenario
            .satellites
            .iter()
            .map(|sat| scenario.stations.iter().map(|st| contact_windows(sat, st, t0, t1, step)).collect())
            .collect();
        let access = scenario
            .satellites
            .iter()
            .map(|sat| scenario.aois.iter().map(|aoi| access_windows(sat, aoi, t0, t1, step)).collect())
            .collect();
        Geometry { contacts, access }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{OnboardProcessorSpec, SatelliteId, StationId};

    pub(crate) fn sat(inclination: f64, raan: f64, u0: f64) -> SatelliteSpec {
        SatelliteSpec {
            id: SatelliteId::from("s"),
            altitude_km: 550.0,
            inclination_deg: inclination,
            raan_deg: raan,
            initial_arg_lat_deg: u0,
            swath_km: 40.0,
            gsd_m: 3.0,
            bands: 4,
            bit_depth: 12,
            processor: OnboardProcessorSpec::disabled(),
        }
    }

    fn station(lat: f64, lon: f64, mask: f64) -> GroundStationSpec {
        GroundStationSpec {
            id: StationId::from("g"),
            location: GeoPoint::new(lat, lon),
            min_elevation_deg: mask,
            xband_rate_mbps: 400.0,
            sband_available: true,
        }
    }

    #[test]
    fn period_at_550_km() {
        // a = 6921 km; 2π·sqrt(a³/μ) evaluated by hand = 5730.3 s
        let t = orbital_period(550.0).unwrap();
        assert!((t - 5730.3).abs() < 1.0, "{t}");
        assert!(orbital_period(500.0).unwrap() < orbital_period(600.0).unwrap());
        assert!(orbital_period(250.0).is_err());
        assert!(orbital_period(2500.0).is_err());
    }

    #[test]
    fn epoch_and_equatorial_cases() {
        let s = sat(0.0, 0.0, 0.0);
        let p = subsatellite_point(&s, 0.0);
        assert!(p.lat.abs() < 1e-12 && p.lon.abs() < 1e-12);
        for t in [0.0, 100.0, 1234.5, 86_400.0] {
            assert!(subsatellite_point(&s, t).lat.abs() < 1e-9);
        }
    }

    #[test]
    fn polar_orbit_after_one_period() {
        let s = sat(90.0, 0.0, 30.0);
        let period = orbital_period(550.0).unwrap();
        let a = subsatellite_point(&s, 0.0);
        let b = subsatellite_point(&s, period);
        assert!((a.lat - b.lat).abs() < 1e-6);
        let shift = to_deg(EARTH_ROTATION_RATE * period);
        let dlon = crate::model::normalize_lon(a.lon - b.lon);
        assert!((dlon - shift).abs() < 1e-6, "{dlon} vs {shift}");
    }

    #[test]
    fn elevation_closed_form() {
        assert!((elevation_from_central_angle(0.0, 550.0) - 90.0).abs() < 1e-12);
        // quarter of the globe away: atan2(-R/r, 1)
        assert!((elevation_from_central_angle(math::PI / 2.0, 550.0) + 42.630_551_29).abs() < 1e-6);
        let k = EARTH_RADIUS_KM / (EARTH_RADIUS_KM + 550.0);
        let psi = libm::acos(k);
        assert!(elevation_from_central_angle(psi, 550.0).abs() < 1e-9);
        for e in [0.0, 5.0, 30.0, 80.0] {
            let psi = central_angle_at_elevation(e, 550.0);
            assert!((elevation_from_central_angle(psi, 550.0) - e).abs() < 1e-9);
        }
    }

    #[test]
    fn overhead_station_sees_ninety_degrees() {
        let s = sat(97.5, 40.0, 10.0);
        let p = subsatellite_point(&s, 321.0);
        let g = station(p.lat, p.lon, 5.0);
        assert!((elevation_angle(&s, &g, 321.0) - 90.0).abs() < 1e-6);
    }

    #[test]
    fn radius_is_constant() {
        let s = sat(53.0, 12.0, 77.0);
        for i in 0..1000 {
            let [x, y, z] = position_ecef(&s, i as f64 * 37.3);
            let r = sqrt(x * x + y * y + z * z);
            assert!(((r - 6921.0) / 6921.0).abs() < 1e-6);
        }
    }

    #[test]
    fn equatorial_orbit_never_sees_pole() {
        let s = sat(0.0, 0.0, 0.0);
        let g = station(90.0, 0.0, 5.0);
        assert!(contact_windows(&s, &g, 0.0, 86_400.0, 10.0).is_empty());
    }

    #[test]
    fn polar_orbit_sees_pole_every_revolution() {
        let s = sat(90.0, 0.0, 0.0);
        let g = station(90.0, 0.0, 5.0);
        let period = orbital_period(550.0).unwrap();
        let w = contact_windows(&s, &g, 0.0, 10.0 * period, 10.0);
        assert!(w.len() >= 10, "{}", w.len());
        for win in &w {
            assert!(win.peak_elevation_deg.unwrap() > 80.0);
        }
    }

    #[test]
    fn boundaries_sit_on_the_mask() {
        let s = sat(97.5, 20.0, 0.0);
        let g = station(41.0, 14.0, 5.0);
        let w = contact_windows(&s, &g, 0.0, 86_400.0, 10.0);
        assert!(!w.is_empty());
        for win in &w {
            for t in [win.start, win.end] {
                if t > 0.0 && t < 86_400.0 {
                    assert!((elevation_angle(&s, &g, t) - 5.0).abs() < 0.05);
                }
            }
        }
    }

    #[test]
    fn access_contains_overhead_instant() {
        let s = sat(97.5, 20.0, 0.0);
        let t = 4321.0;
        let p = subsatellite_point(&s, t);
        let aoi = AreaOfInterest { id: "a".into(), center: p, radius_km: 5.0 };
        let w = access_windows(&s, &aoi, 0.0, 86_400.0, 10.0);
        assert!(w.iter().any(|w| w.contains(t)), "{w:?}");
    }

    #[test]
    fn vanishing_footprint_has_no_access() {
        let mut s = sat(97.5, 20.0, 0.0);
        s.swath_km = 1e-9;
        let aoi = AreaOfInterest { id: "a".into(), center: GeoPoint::new(41.3, 13.7), radius_km: 1e-9 };
        assert!(access_windows(&s, &aoi, 0.0, 7.0 * 86_400.0, 10.0).is_empty());
    }

    #[test]
    fn skip_ahead_matches_full_scan() {
        let s = sat(97.5, 20.0, 0.0);
        let g = station(41.0, 14.0, 5.0);
        let skipped = contact_windows(&s, &g, 0.0, 86_400.0, 10.0);
        let full = find_windows(0.0, 86_400.0, 10.0, |t| elevation_angle(&s, &g, t) >= 5.0, |_| 0.0);
        let skipped: Vec<(f64, f64)> = skipped.iter().map(|w| (w.start, w.end)).collect();
        assert_eq!(skipped, full);
    }

    #[test]
    fn degenerate_horizon() {
        let s = sat(97.5, 20.0, 0.0);
        let g = station(41.0, 14.0, 5.0);
        assert!(contact_windows(&s, &g, 100.0, 100.0, 10.0).is_empty());
        assert!(contact_windows(&s, &g, 100.0, 50.0, 10.0).is_empty());
    }
}
