//! Forward and inverse map projections: WebMercator and the two-point
//! equidistant projection (with azimuthal equidistant as its coincident-node
//! special case).
//!
//! A two-point spec is built in a local frame where node A sits at (-D/2, 0)
//! and node B at (+D/2, 0), D being the geodesic baseline. The local frame is
//! then rotated (north up at a reference point) and translated by `offset`,
//! which lets animated node morphs keep one node's image pinned in the plane.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodesy::{
    self, central_angle, local_frame, Azimuth, GeoCoord, GeodesyError, Kilometers, Vec3,
    EARTH_RADIUS_KM, HALF_CIRCUMFERENCE_KM,
};

/// WebMercator latitude clamp in degrees.
pub const MERCATOR_MAX_LAT: f64 = 85.05113;

/// Below this baseline (km) a two-point spec uses the azimuthal formula.
pub const AZIMUTHAL_BASELINE_KM: f64 = 0.001;

/// Step (radians of latitude) for the finite-difference north direction.
pub const NORTH_STEP_RAD: f64 = 1e-4;

/// Fraction of the way to the antipode beyond which map shapes become hard to recognise.
pub const DISTORTION_LIMIT_FRACTION: f64 = 0.75;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProjectionError {
    #[error(transparent)]
    Geodesy(#[from] GeodesyError),
    #[error("latitude {0} is outside the WebMercator range")]
    LatitudeOutOfRange(f64),
    #[error("plane point ({0}, {1}) is outside the projected domain")]
    OutOfDomain(f64, f64),
    #[error("distance circles do not intersect (excess {0:e} km²)")]
    NumericInfeasible(f64),
    #[error("projection nodes are antipodal")]
    AntipodalNodes,
    #[error("node path crosses the antipode of the anchored node")]
    AntipodalCrossing,
    #[error("north is undefined at the poles")]
    Pole,
    #[error("operation requires a two-point equidistant spec")]
    NotTwoPoint,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

#[allow(clippy::should_implement_trait)]
impl PlanePoint {
    pub const ORIGIN: PlanePoint = PlanePoint { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }

    pub fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }

    pub fn scale(self, k: f64) -> Self {
        Self::new(self.x * k, self.y * k)
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Self) -> f64 {
        self.sub(o).norm()
    }

    /// Counter-clockwise rotation about the origin.
    pub fn rotate(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Where the north-up rotation of a two-point spec is pinned.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationReference {
    /// North is up at the geodesic midpoint of the two nodes.
    #[default]
    Midpoint,
    /// North is up at node A.
    Start,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPointSpec {
    pub node_a: GeoCoord,
    pub node_b: GeoCoord,
    /// Counter-clockwise rotation (radians) applied to the local frame.
    pub rotation: f64,
    /// Translation applied after the rotation.
    pub offset: PlanePoint,
    pub baseline: Kilometers,
    pub reference: RotationReference,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProjectionSpec {
    /// WebMercator normalised to the unit square, y growing southward.
    Mercator,
    /// Two-point equidistant; azimuthal equidistant when both nodes coincide.
    Tpeqd(TwoPointSpec),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub within_limit: bool,
    pub fraction_to_antipode: f64,
}

pub fn project_mercator(p: GeoCoord) -> Result<PlanePoint, ProjectionError> {
    if p.lat().abs() > MERCATOR_MAX_LAT {
        return Err(ProjectionError::LatitudeOutOfRange(p.lat()));
    }
    let x = (p.lon() + 180.0) / 360.0;
    let y = 0.5 - p.lat().to_radians().sin().atanh() / (2.0 * PI);
    Ok(PlanePoint::new(x, y))
}

fn mercator_y_limit() -> f64 {
    0.5 - MERCATOR_MAX_LAT.to_radians().sin().atanh() / (2.0 * PI)
}

pub fn unproject_mercator(q: PlanePoint) -> Result<GeoCoord, ProjectionError> {
    let y_min = mercator_y_limit();
    let eps = 1e-12;
    if !q.is_finite()
        || q.x < -eps
        || q.x > 1.0 + eps
        || q.y < y_min - eps
        || q.y > 1.0 - y_min + eps
    {
        return Err(ProjectionError::OutOfDomain(q.x, q.y));
    }
    let lat = (PI * (1.0 - 2.0 * q.y)).sinh().atan().to_degrees();
    let lon = q.x * 360.0 - 180.0;
    Ok(GeoCoord::new(lat, lon)?)
}

/// Two-point equidistant spec with north up at the geodesic midpoint.
pub fn make_tpeqd(node_a: GeoCoord, node_b: GeoCoord) -> Result<ProjectionSpec, ProjectionError> {
    make_tpeqd_with(node_a, node_b, RotationReference::Midpoint)
}

/// Azimuthal equidistant spec centred on `center`, north up.
pub fn make_azeqd(center: GeoCoord) -> ProjectionSpec {
    make_tpeqd(center, center).expect("coincident nodes are never antipodal")
}

pub fn make_tpeqd_with(
    node_a: GeoCoord,
    node_b: GeoCoord,
    reference: RotationReference,
) -> Result<ProjectionSpec, ProjectionError> {
    let angle = central_angle(node_a.to_vec(), node_b.to_vec());
    if angle > PI - geodesy::ANTIPODAL_TOLERANCE_RAD {
        return Err(ProjectionError::AntipodalNodes);
    }
    let mut spec = TwoPointSpec {
        node_a,
        node_b,
        rotation: 0.0,
        offset: PlanePoint::ORIGIN,
        baseline: Kilometers::new(angle * EARTH_RADIUS_KM)?,
        reference,
    };
    let anchor = match reference {
        RotationReference::Midpoint => geodesy::midpoint(node_a, node_b)?,
        RotationReference::Start => node_a,
    };
    if spec.is_azimuthal() {
        // Bearings are measured from north, so +y already points north.
        return Ok(ProjectionSpec::Tpeqd(spec));
    }
    spec.rotation = match north_direction_local(&spec, anchor, NORTH_STEP_RAD) {
        Ok(north) => wrap_angle(FRAC_PI_2 - north.y.atan2(north.x)),
        // No north at a pole; keep the baseline horizontal.
        Err(ProjectionError::Pole) => 0.0,
        Err(e) => return Err(e),
    };
    Ok(ProjectionSpec::Tpeqd(spec))
}

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

impl TwoPointSpec {
    pub fn is_azimuthal(&self) -> bool {
        self.baseline.value() < AZIMUTHAL_BASELINE_KM
    }

    /// Projection into the unrotated local frame (node A at (-D/2, 0)).
    pub fn project_local(&self, p: GeoCoord) -> Result<PlanePoint, ProjectionError> {
        let va = self.node_a.to_vec();
        let vp = p.to_vec();
        let da = central_angle(va, vp) * EARTH_RADIUS_KM;
        if self.is_azimuthal() {
            if da == 0.0 {
                return Ok(PlanePoint::ORIGIN);
            }
            let (north, east) = local_frame(self.node_a);
            let bearing = vp.dot(east).atan2(vp.dot(north));
            return Ok(PlanePoint::new(da * bearing.sin(), da * bearing.cos()));
        }
        let vb = self.node_b.to_vec();
        let db = central_angle(vb, vp) * EARTH_RADIUS_KM;
        let d = self.baseline.value();
        let x = (da - db) * (da + db) / (2.0 * d);
        let height = baseline_height(va, vb, vp, da, db, d)?;
        let side = va.cross(vb).dot(vp);
        // On the baseline great circle the sign is taken as positive.
        let y = if side < 0.0 { -height } else { height };
        Ok(PlanePoint::new(x, y))
    }

    /// Inverse of [`TwoPointSpec::project_local`].
    pub fn unproject_local(&self, q: PlanePoint) -> Result<GeoCoord, ProjectionError> {
        if !q.is_finite() {
            return Err(ProjectionError::OutOfDomain(q.x, q.y));
        }
        let limit = HALF_CIRCUMFERENCE_KM * (1.0 + 1e-9);
        if self.is_azimuthal() {
            let r = q.norm();
            if r > limit {
                return Err(ProjectionError::OutOfDomain(q.x, q.y));
            }
            if r == 0.0 {
                return Ok(self.node_a);
            }
            let bearing = Azimuth::new(q.x.atan2(q.y).to_degrees());
            let dist = Kilometers::new(r.min(HALF_CIRCUMFERENCE_KM))?;
            return Ok(geodesy::destination_point(self.node_a, bearing, dist));
        }
        let d = self.baseline.value();
        let ra = (q.x + d / 2.0).hypot(q.y);
        let rb = (q.x - d / 2.0).hypot(q.y);
        if ra > limit || rb > limit {
            return Err(ProjectionError::OutOfDomain(q.x, q.y));
        }
        // Intersect the two small circles: P = αA + βB + γ(A×B).
        let va = self.node_a.to_vec();
        let vb = self.node_b.to_vec();
        let normal = va.cross(vb);
        let n2 = normal.dot(normal);
        let c = va.dot(vb);
        let cos_a = (ra / EARTH_RADIUS_KM).cos();
        let cos_b = (rb / EARTH_RADIUS_KM).cos();
        let alpha = (cos_a - c * cos_b) / n2;
        let beta = (cos_b - c * cos_a) / n2;
        let g2 = 1.0 - (alpha * alpha + beta * beta + 2.0 * alpha * beta * c);
        if g2 < -1e-9 {
            return Err(ProjectionError::OutOfDomain(q.x, q.y));
        }
        let gamma = (g2.max(0.0) / n2).sqrt().copysign(if q.y < 0.0 { -1.0 } else { 1.0 });
        let p = va.scale(alpha).add(vb.scale(beta)).add(normal.scale(gamma));
        Ok(GeoCoord::from_vec(p.normalized()))
    }

    fn to_plane(&self, local: PlanePoint) -> PlanePoint {
        local.rotate(self.rotation).add(self.offset)
    }

    fn to_local(&self, q: PlanePoint) -> PlanePoint {
        q.sub(self.offset).rotate(-self.rotation)
    }

    /// The same map with the node roles exchanged.
    pub fn swapped(&self) -> TwoPointSpec {
        TwoPointSpec {
            node_a: self.node_b,
            node_b: self.node_a,
            // Swapping negates the local frame; half a turn restores it.
            rotation: if self.is_azimuthal() {
                self.rotation
            } else {
                wrap_angle(self.rotation + PI)
            },
            offset: self.offset,
            baseline: self.baseline,
            reference: self.reference,
        }
    }
}

/// Height above the baseline of the planar triangle with sides `da`, `db`, `d`.
///
/// Heron's formula with each of the three small factors (da + db − d etc.)
/// recomputed from the spherical half-angle identity when it is small, so that
/// points on or next to the baseline keep full relative precision instead of
/// inheriting √(rounding) noise from the distances.
fn baseline_height(a: Vec3, b: Vec3, p: Vec3, da: f64, db: f64, d: f64) -> Result<f64, ProjectionError> {
    let r = EARTH_RADIUS_KM;
    let triple = a.dot(b.cross(p)).abs();
    let half_perimeter = (da + db + d) / (2.0 * r);
    let robust = half_perimeter > 0.0 && half_perimeter < PI - 0.05;
    let sin_s = half_perimeter.sin();
    let (sin_a, sin_b, sin_c) = ((da / r).sin(), (db / r).sin(), (d / r).sin());

    // sin((x + y − z) / 2R) = sin²(φ/2)·sin x·sin y / sin s, where φ is the
    // supplement of the triangle angle opposite z.
    let excess = |naive: f64, supplement: f64, s1: f64, s2: f64| -> f64 {
        if robust && supplement < 0.25 {
            let h = (supplement / 2.0).sin();
            2.0 * r * (h * h * s1 * s2 / sin_s).clamp(-1.0, 1.0).asin()
        } else {
            naive
        }
    };
    let phi_p = triple.atan2(-p.cross(a).dot(p.cross(b)));
    let phi_a = triple.atan2(-a.cross(b).dot(a.cross(p)));
    let phi_b = triple.atan2(-b.cross(a).dot(b.cross(p)));
    let e_p = excess(da + db - d, phi_p, sin_a, sin_b);
    let e_a = excess(d + da - db, phi_a, sin_c, sin_a);
    let e_b = excess(d + db - da, phi_b, sin_b, sin_c);

    let y2 = (da + db + d) * e_p * e_a * e_b / (4.0 * d * d);
    if y2 >= 0.0 {
        return Ok(y2.sqrt());
    }
    let scale = da.max(db).max(d);
    if -y2 < 1e-6 * scale * scale {
        Ok(0.0)
    } else {
        Err(ProjectionError::NumericInfeasible(y2))
    }
}

impl ProjectionSpec {
    pub fn as_two_point(&self) -> Option<&TwoPointSpec> {
        match self {
            ProjectionSpec::Tpeqd(s) => Some(s),
            ProjectionSpec::Mercator => None,
        }
    }

    /// Whether +y points north-ish (true for two-point specs, false for
    /// WebMercator whose y grows southward).
    pub fn y_axis_up(&self) -> bool {
        matches!(self, ProjectionSpec::Tpeqd(_))
    }

    /// The same map with node roles exchanged (identity for Mercator).
    pub fn swapped(&self) -> ProjectionSpec {
        match self {
            ProjectionSpec::Tpeqd(s) => ProjectionSpec::Tpeqd(s.swapped()),
            ProjectionSpec::Mercator => ProjectionSpec::Mercator,
        }
    }
}

pub fn project(spec: &ProjectionSpec, p: GeoCoord) -> Result<PlanePoint, ProjectionError> {
    match spec {
        ProjectionSpec::Mercator => project_mercator(p),
        ProjectionSpec::Tpeqd(s) => Ok(s.to_plane(s.project_local(p)?)),
    }
}

pub fn unproject(spec: &ProjectionSpec, q: PlanePoint) -> Result<GeoCoord, ProjectionError> {
    match spec {
        ProjectionSpec::Mercator => unproject_mercator(q),
        ProjectionSpec::Tpeqd(s) => s.unproject_local(s.to_local(q)),
    }
}

/// Unit plane vector along the image of a due-north step at `p`.
pub fn north_direction(spec: &ProjectionSpec, p: GeoCoord) -> Result<PlanePoint, ProjectionError> {
    north_direction_with_step(spec, p, NORTH_STEP_RAD)
}

pub fn north_direction_with_step(
    spec: &ProjectionSpec,
    p: GeoCoord,
    step: f64,
) -> Result<PlanePoint, ProjectionError> {
    north_by_difference(|g| project(spec, g), p, step)
}

fn north_direction_local(spec: &TwoPointSpec, p: GeoCoord, step: f64) -> Result<PlanePoint, ProjectionError> {
    north_by_difference(|g| spec.project_local(g), p, step)
}

fn north_by_difference(
    proj: impl Fn(GeoCoord) -> Result<PlanePoint, ProjectionError>,
    p: GeoCoord,
    step: f64,
) -> Result<PlanePoint, ProjectionError> {
    let lat = p.lat().to_radians();
    if FRAC_PI_2 - lat.abs() < 1e-12 {
        return Err(ProjectionError::Pole);
    }
    // Central difference; one-sided near a pole.
    let h = step / 2.0;
    let at = |l: f64| GeoCoord::new(l.to_degrees(), p.lon());
    let (from, to) = if lat + h > FRAC_PI_2 {
        (at(lat - step)?, p)
    } else if lat - h < -FRAC_PI_2 {
        (p, at(lat + step)?)
    } else {
        (at(lat - h)?, at(lat + h)?)
    };
    let v = proj(to)?.sub(proj(from)?);
    let n = v.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(ProjectionError::Pole);
    }
    Ok(v.scale(1.0 / n))
}

pub fn distortion_report(spec: &ProjectionSpec, p: GeoCoord) -> DistortionReport {
    let fraction = match spec {
        ProjectionSpec::Mercator => 0.0,
        ProjectionSpec::Tpeqd(s) => {
            let da = geodesy::great_circle_distance(s.node_a, p).value();
            let db = geodesy::great_circle_distance(s.node_b, p).value();
            (da.min(db) / HALF_CIRCUMFERENCE_KM).clamp(0.0, 1.0)
        }
    };
    DistortionReport {
        within_limit: fraction <= DISTORTION_LIMIT_FRACTION,
        fraction_to_antipode: fraction,
    }
}

/// Moves node B of `from` a fraction `t` of the way toward `target_b` while the
/// image of node A stays fixed; the map turns about that image so that north
/// stays up at the current rotation reference.
pub fn morph_spec(
    from: &ProjectionSpec,
    target_b: GeoCoord,
    t: f64,
) -> Result<ProjectionSpec, ProjectionError> {
    let ProjectionSpec::Tpeqd(from) = from else {
        return Err(ProjectionError::NotTwoPoint);
    };
    let node_b = geodesy::geodesic_interpolate(from.node_b, target_b, t).map_err(|e| match e {
        GeodesyError::Antipodal => ProjectionError::AntipodalCrossing,
        other => other.into(),
    })?;
    let ProjectionSpec::Tpeqd(mut next) = make_tpeqd_with(from.node_a, node_b, from.reference)
        .map_err(|e| match e {
            ProjectionError::AntipodalNodes => ProjectionError::AntipodalCrossing,
            other => other,
        })?
    else {
        unreachable!("make_tpeqd_with returns a two-point spec");
    };
    let anchor_before = from.to_plane(from.project_local(from.node_a)?);
    let anchor_local = next.project_local(next.node_a)?;
    next.offset = anchor_before.sub(anchor_local.rotate(next.rotation));
    Ok(ProjectionSpec::Tpeqd(next))
}
