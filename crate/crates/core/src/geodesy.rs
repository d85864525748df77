//! Spherical-Earth geodesy.
//!
//! All external values are in degrees and kilometres; internally every
//! computation goes through unit vectors on the sphere, which keeps distances,
//! bearings and interpolation well conditioned everywhere except where they are
//! genuinely undefined (coincident or antipodal points).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Half the circumference of the sphere, the largest possible geodesic distance.
pub const HALF_CIRCUMFERENCE_KM: f64 = std::f64::consts::PI * EARTH_RADIUS_KM;

/// Points closer than this to being antipodal (in radians) have no defined bearing.
pub const ANTIPODAL_TOLERANCE_RAD: f64 = 1e-9;

/// Cross-track tolerance (sine of the angular offset) below which a point is
/// considered to lie on a great circle.
const ON_CIRCLE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeodesyError {
    #[error("latitude {0} is outside [-90, 90]")]
    InvalidLatitude(f64),
    #[error("coordinate is not finite: ({0}, {1})")]
    NonFinite(f64, f64),
    #[error("distance {0} km is negative, not finite or longer than half the circumference")]
    InvalidDistance(f64),
    #[error("bearing is undefined between identical or antipodal points")]
    UndefinedBearing,
    #[error("points are antipodal; the geodesic between them is not unique")]
    Antipodal,
    #[error("baseline is degenerate (identical or antipodal endpoints)")]
    DegenerateBaseline,
    #[error("interpolation parameter {0} is outside [0, 1]")]
    InvalidFraction(f64),
}

/// A latitude/longitude position in degrees.
///
/// Longitude is normalised into (-180, 180] on construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCoord", into = "RawCoord")]
pub struct GeoCoord {
    lat: f64,
    lon: f64,
}

#[derive(Serialize, Deserialize)]
struct RawCoord {
    lat: f64,
    lon: f64,
}

impl TryFrom<RawCoord> for GeoCoord {
    type Error = GeodesyError;
    fn try_from(raw: RawCoord) -> Result<Self, Self::Error> {
        GeoCoord::new(raw.lat, raw.lon)
    }
}

impl From<GeoCoord> for RawCoord {
    fn from(c: GeoCoord) -> Self {
        RawCoord {
            lat: c.lat,
            lon: c.lon,
        }
    }
}

impl GeoCoord {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeodesyError> {
        if !lat.is_finite() || !lon.is_finite() {
            return Err(GeodesyError::NonFinite(lat, lon));
        }
        if !(-90.0..=90.0).contains(&lat) {
            return Err(GeodesyError::InvalidLatitude(lat));
        }
        Ok(Self {
            lat,
            lon: normalize_lon(lon),
        })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    pub(crate) fn to_vec(self) -> Vec3 {
        let (sin_lat, cos_lat) = self.lat.to_radians().sin_cos();
        let (sin_lon, cos_lon) = self.lon.to_radians().sin_cos();
        Vec3::new(cos_lat * cos_lon, cos_lat * sin_lon, sin_lat)
    }

    pub(crate) fn from_vec(v: Vec3) -> Self {
        let lat = v.z.atan2(v.x.hypot(v.y)).to_degrees();
        let lon = if v.x == 0.0 && v.y == 0.0 {
            0.0
        } else {
            v.y.atan2(v.x).to_degrees()
        };
        Self {
            lat: lat.clamp(-90.0, 90.0),
            lon: normalize_lon(lon),
        }
    }
}

impl fmt::Display for GeoCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}, {:.6})", self.lat, self.lon)
    }
}

/// Wraps a longitude into (-180, 180].
pub fn normalize_lon(lon: f64) -> f64 {
    let mut l = lon % 360.0;
    if l > 180.0 {
        l -= 360.0;
    } else if l <= -180.0 {
        l += 360.0;
    }
    l
}

/// A non-negative geodesic length in kilometres, at most half the circumference.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Kilometers(f64);

impl Kilometers {
    pub fn new(km: f64) -> Result<Self, GeodesyError> {
        // Rounding in the distance formula can overshoot πR by an ulp or two.
        if !km.is_finite() || !(0.0..=HALF_CIRCUMFERENCE_KM * (1.0 + 1e-12)).contains(&km) {
            return Err(GeodesyError::InvalidDistance(km));
        }
        Ok(Self(km.min(HALF_CIRCUMFERENCE_KM)))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    fn radians(self) -> f64 {
        self.0 / EARTH_RADIUS_KM
    }
}

/// Degrees clockwise from true north, normalised into [0, 360).
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Azimuth(f64);

impl Azimuth {
    pub fn new(degrees: f64) -> Self {
        let mut d = degrees.rem_euclid(360.0);
        if d >= 360.0 {
            d = 0.0;
        }
        Self(d)
    }

    pub fn degrees(self) -> f64 {
        self.0
    }

    pub fn radians(self) -> f64 {
        self.0.to_radians()
    }
}

/// Minimal 3-vector used for unit-sphere math.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(self, k: f64) -> Self {
        Self::new(self.x * k, self.y * k, self.z * k)
    }

    pub fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }

    pub fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    pub fn normalized(self) -> Self {
        self.scale(1.0 / self.norm())
    }
}

/// Central angle between two unit vectors, accurate for all separations.
pub(crate) fn central_angle(a: Vec3, b: Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Local (north, east) unit tangent vectors at `p`. Undefined at the poles,
/// where the east vector is chosen along +y.
pub(crate) fn local_frame(p: GeoCoord) -> (Vec3, Vec3) {
    let (sin_lat, cos_lat) = p.lat.to_radians().sin_cos();
    let (sin_lon, cos_lon) = p.lon.to_radians().sin_cos();
    let north = Vec3::new(-sin_lat * cos_lon, -sin_lat * sin_lon, cos_lat);
    let east = Vec3::new(-sin_lon, cos_lon, 0.0);
    (north, east)
}

pub fn great_circle_distance(a: GeoCoord, b: GeoCoord) -> Kilometers {
    let angle = central_angle(a.to_vec(), b.to_vec());
    Kilometers((angle * EARTH_RADIUS_KM).min(HALF_CIRCUMFERENCE_KM))
}

fn is_degenerate_pair(a: Vec3, b: Vec3) -> bool {
    let angle = central_angle(a, b);
    !(ANTIPODAL_TOLERANCE_RAD..=std::f64::consts::PI - ANTIPODAL_TOLERANCE_RAD).contains(&angle)
}

/// Azimuth of the geodesic from `a` toward `b`, measured at `a`.
pub fn initial_bearing(a: GeoCoord, b: GeoCoord) -> Result<Azimuth, GeodesyError> {
    let (va, vb) = (a.to_vec(), b.to_vec());
    if is_degenerate_pair(va, vb) {
        return Err(GeodesyError::UndefinedBearing);
    }
    let (north, east) = local_frame(a);
    let angle = vb.dot(east).atan2(vb.dot(north));
    Ok(Azimuth::new(angle.to_degrees()))
}

/// Point reached by travelling `distance` along the geodesic leaving `origin`
/// with the given initial bearing.
pub fn destination_point(origin: GeoCoord, bearing: Azimuth, distance: Kilometers) -> GeoCoord {
    let delta = distance.radians();
    let (north, east) = local_frame(origin);
    let (sin_b, cos_b) = bearing.radians().sin_cos();
    let tangent = north.scale(cos_b).add(east.scale(sin_b));
    let (sin_d, cos_d) = delta.sin_cos();
    GeoCoord::from_vec(origin.to_vec().scale(cos_d).add(tangent.scale(sin_d)))
}

/// Spherical linear interpolation along the geodesic from `a` (t = 0) to `b` (t = 1).
pub fn geodesic_interpolate(a: GeoCoord, b: GeoCoord, t: f64) -> Result<GeoCoord, GeodesyError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(GeodesyError::InvalidFraction(t));
    }
    if t == 0.0 {
        return Ok(a);
    }
    if t == 1.0 {
        return Ok(b);
    }
    let (va, vb) = (a.to_vec(), b.to_vec());
    let angle = central_angle(va, vb);
    if angle > std::f64::consts::PI - ANTIPODAL_TOLERANCE_RAD {
        return Err(GeodesyError::Antipodal);
    }
    if angle < 1e-15 {
        return Ok(a);
    }
    // Rotate `a` toward `b` within their common plane; avoids the 1/sin(angle)
    // weights of textbook slerp.
    let normal = va.cross(vb).normalized();
    let toward_b = normal.cross(va);
    let (sin_t, cos_t) = (t * angle).sin_cos();
    Ok(GeoCoord::from_vec(va.scale(cos_t).add(toward_b.scale(sin_t))))
}

/// Geodesic midpoint of `a` and `b`.
pub fn midpoint(a: GeoCoord, b: GeoCoord) -> Result<GeoCoord, GeodesyError> {
    geodesic_interpolate(a, b, 0.5)
}

/// Which side of the directed geodesic `a → b` the point `p` lies on:
/// +1 left, -1 right, 0 on the great circle.
pub fn cross_track_side(a: GeoCoord, b: GeoCoord, p: GeoCoord) -> Result<i8, GeodesyError> {
    let (va, vb) = (a.to_vec(), b.to_vec());
    if is_degenerate_pair(va, vb) {
        return Err(GeodesyError::DegenerateBaseline);
    }
    let normal = va.cross(vb).normalized();
    let s = normal.dot(p.to_vec());
    Ok(if s > ON_CIRCLE_TOLERANCE {
        1
    } else if s < -ON_CIRCLE_TOLERANCE {
        -1
    } else {
        0
    })
}

pub fn antipode(p: GeoCoord) -> GeoCoord {
    GeoCoord {
        lat: -p.lat,
        lon: normalize_lon(p.lon + 180.0),
    }
}
