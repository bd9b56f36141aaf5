//! Float helpers for `no_std` builds.

pub(crate) use libm::{asin, atan2, ceil, cos, floor, sin, sqrt};

pub(crate) const PI: f64 = core::f64::consts::PI;
pub(crate) const TAU: f64 = core::f64::consts::TAU;

#[inline]
pub(crate) fn to_rad(deg: f64) -> f64 {
    deg * (PI / 180.0)
}

#[inline]
pub(crate) fn to_deg(rad: f64) -> f64 {
    rad * (180.0 / PI)
}

#[inline]
pub(crate) fn clamp_unit(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

/// Central angle in radians between two points given in degrees (haversine).
pub(crate) fn central_angle(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (to_rad(lat1), to_rad(lat2));
    let dp = p2 - p1;
    let dl = to_rad(lon2 - lon1);
    let a = sin(dp / 2.0) * sin(dp / 2.0) + cos(p1) * cos(p2) * sin(dl / 2.0) * sin(dl / 2.0);
    2.0 * asin(sqrt(clamp_unit(a)))
}

/// Point reached from (lat, lon) after travelling `angle` radians of arc on
/// initial `bearing` radians. Returns degrees.
pub(crate) fn destination(lat: f64, lon: f64, bearing: f64, angle: f64) -> (f64, f64) {
    let p1 = to_rad(lat);
    let l1 = to_rad(lon);
    let p2 = asin(clamp_unit(sin(p1) * cos(angle) + cos(p1) * sin(angle) * cos(bearing)));
    let l2 = l1 + atan2(sin(bearing) * sin(angle) * cos(p1), cos(angle) - sin(p1) * sin(p2));
    (to_deg(p2), to_deg(l2))
}
