//! Spherical distance and local planar geometry.
//!
//! Distances use the haversine formula on a sphere of mean Earth radius.
//! Segment geometry (interpolation, projection onto polylines) is done in a
//! local azimuthal equirectangular plane centered on a reference location,
//! which is accurate far below GPS noise for the few-kilometre segments found
//! in mobility traces.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::GeoError;

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Distance beyond which the local plane is no longer considered accurate.
pub const PLANE_ACCURACY_RADIUS_M: f64 = 100_000.0;

/// A WGS84 position in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    lat: f64,
    lon: f64,
}

impl Location {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::LatitudeOutOfRange(lat));
        }
        if !lon.is_finite() || !(-180.0..=180.0).contains(&lon) {
            return Err(GeoError::LongitudeOutOfRange(lon));
        }
        Ok(Self { lat, lon })
    }

    /// Builds a location from values that may have drifted slightly out of
    /// range through arithmetic: latitude is clamped, longitude wrapped.
    pub fn normalized(lat: f64, lon: f64) -> Self {
        let lat = lat.clamp(-90.0, 90.0);
        let lon = if (-180.0..=180.0).contains(&lon) {
            lon
        } else {
            (lon + 180.0).rem_euclid(360.0) - 180.0
        };
        Self { lat, lon }
    }

    #[inline]
    pub fn lat(&self) -> f64 {
        self.lat
    }

    #[inline]
    pub fn lon(&self) -> f64 {
        self.lon
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.7}, {:.7})", self.lat, self.lon)
    }
}

/// Meters east (`x`) and north (`y`) of a projection origin.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub const ORIGIN: PlanarPoint = PlanarPoint { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn distance(&self, other: &PlanarPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Great-circle distance in meters (haversine, R = 6,371,000 m).
pub fn distance(a: &Location, b: &Location) -> f64 {
    let lat1 = a.lat.to_radians();
    let lat2 = b.lat.to_radians();
    let dlat = lat2 - lat1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Longitude difference wrapped into [-180, 180).
#[inline]
fn wrapped_dlon(from: f64, to: f64) -> f64 {
    let d = to - from;
    if (-180.0..180.0).contains(&d) {
        d
    } else {
        (d + 180.0).rem_euclid(360.0) - 180.0
    }
}

/// Equirectangular plane tangent at an origin location.
///
/// Caches `cos(lat_origin)` so that projecting many points around the same
/// origin costs no trigonometry.
#[derive(Debug, Clone, Copy)]
pub struct LocalPlane {
    origin: Location,
    cos_lat: f64,
}

impl LocalPlane {
    pub fn new(origin: Location) -> Self {
        Self {
            origin,
            cos_lat: origin.lat.to_radians().cos(),
        }
    }

    pub fn origin(&self) -> Location {
        self.origin
    }

    #[inline]
    pub fn project(&self, p: &Location) -> PlanarPoint {
        let dlon = wrapped_dlon(self.origin.lon, p.lon).to_radians();
        let dlat = (p.lat - self.origin.lat).to_radians();
        PlanarPoint {
            x: EARTH_RADIUS_M * self.cos_lat * dlon,
            y: EARTH_RADIUS_M * dlat,
        }
    }

    #[inline]
    pub fn unproject(&self, q: &PlanarPoint) -> Location {
        let lat = self.origin.lat + (q.y / EARTH_RADIUS_M).to_degrees();
        // At the poles every longitude is the same point.
        let lon = if self.cos_lat.abs() < 1e-12 {
            self.origin.lon
        } else {
            self.origin.lon + (q.x / (EARTH_RADIUS_M * self.cos_lat)).to_degrees()
        };
        Location::normalized(lat, lon)
    }
}

/// Projects `p` into the plane tangent at `origin`.
pub fn project(origin: &Location, p: &Location) -> PlanarPoint {
    LocalPlane::new(*origin).project(p)
}

/// Inverse of [`project`].
pub fn unproject(origin: &Location, q: &PlanarPoint) -> Location {
    LocalPlane::new(*origin).unproject(q)
}

/// Point at distance `eps` from `prev` on the straight segment towards `curr`.
///
/// Fails when `eps` is not positive or exceeds the segment length.
pub fn interpolate(prev: &Location, curr: &Location, eps: f64) -> Result<Location, GeoError> {
    let length = distance(prev, curr);
    if eps.is_nan() || eps <= 0.0 || eps > length * (1.0 + 1e-9) + 1e-9 {
        return Err(GeoError::StepExceedsSegment { step: eps, length });
    }
    Ok(step_towards(prev, curr, eps))
}

/// Unchecked variant of [`interpolate`] for callers that have already
/// compared `eps` against the segment length.
pub(crate) fn step_towards(prev: &Location, curr: &Location, eps: f64) -> Location {
    let plane = LocalPlane::new(*prev);
    let target = plane.project(curr);
    if target.norm() == 0.0 {
        return *prev;
    }
    at_distance(&plane, &target, eps)
}

/// Point on the ray from the plane's origin through `dir` whose great-circle
/// distance to the origin is `eps`. Corrects the small mismatch between
/// planar and haversine lengths.
pub(crate) fn at_distance(plane: &LocalPlane, dir: &PlanarPoint, eps: f64) -> Location {
    let unit = PlanarPoint::new(dir.x / dir.norm(), dir.y / dir.norm());
    let mut r = eps;
    let mut loc = plane.unproject(&PlanarPoint::new(unit.x * r, unit.y * r));
    for _ in 0..3 {
        let d = distance(&plane.origin(), &loc);
        if d == 0.0 || (d - eps).abs() < 1e-9 {
            break;
        }
        r *= eps / d;
        loc = plane.unproject(&PlanarPoint::new(unit.x * r, unit.y * r));
    }
    loc
}

/// Closest point of `polyline` to `point`, and its distance in meters.
///
/// The search runs in the plane tangent at `point`. Zero-length segments
/// degenerate to their vertex.
pub fn project_onto_polyline(
    point: &Location,
    polyline: &[Location],
) -> Result<(Location, f64), GeoError> {
    let plane = LocalPlane::new(*point);
    let (foot, _) = closest_on_polyline(&plane, polyline.iter().copied())?;
    Ok((foot, distance(point, &foot)))
}

/// Shared search used by [`project_onto_polyline`] and the spatial-error
/// metric, which iterates over trace records instead of a slice.
pub(crate) fn closest_on_polyline<I>(
    plane: &LocalPlane,
    vertices: I,
) -> Result<(Location, f64), GeoError>
where
    I: IntoIterator<Item = Location>,
{
    let mut iter = vertices.into_iter();
    let first = iter.next().ok_or(GeoError::EmptyPolyline)?;
    let mut prev_loc = first;
    let mut prev = plane.project(&first);
    let mut best_loc = first;
    let mut best = prev.norm();

    for loc in iter {
        let next = plane.project(&loc);
        let dx = next.x - prev.x;
        let dy = next.y - prev.y;
        let len2 = dx * dx + dy * dy;
        let t = if len2 > 0.0 {
            (-(prev.x * dx + prev.y * dy) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let foot = PlanarPoint::new(prev.x + t * dx, prev.y + t * dy);
        let d = foot.norm();
        if d < best {
            best = d;
            best_loc = if t == 0.0 {
                prev_loc
            } else if t == 1.0 {
                loc
            } else {
                plane.unproject(&foot)
            };
        }
        prev = next;
        prev_loc = loc;
    }
    Ok((best_loc, best))
}
