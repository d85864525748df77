//! Zoom-and-pan planning (van Wijk & Nuij's smooth optimal path) and the
//! three-phase transition between two vertices.
//!
//! Widths along the path are content extents: the camera frames `w` with a
//! constant factor (see [`TransitionConfig::viewport_scale`]) so that at the
//! widest point of a hop both endpoints fit inside the proxy inset.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::GeoGraph;
use crate::geodesy::{self, GeoCoord, GeodesyError, EARTH_RADIUS_KM};
use crate::projection::{
    self, make_azeqd, morph_spec, PlanePoint, ProjectionError, ProjectionSpec, RotationReference,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransitionError {
    #[error("viewport width must be positive and finite, got {0}")]
    NonPositiveWidth(f64),
    #[error("viewport aspect must be positive and finite, got {0}")]
    InvalidAspect(f64),
    #[error("viewports have different aspect ratios ({0} vs {1})")]
    MismatchedAspect(f64, f64),
    #[error("rho must be positive, got {0}")]
    InvalidRho(f64),
    #[error("path parameter {s} outside [0, {length}]")]
    OutOfRange { s: f64, length: f64 },
    #[error("unknown vertex '{0}'")]
    UnknownVertex(String),
    #[error("vertices are antipodal")]
    Antipodal,
    #[error("invalid transition config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
}

impl From<GeodesyError> for TransitionError {
    fn from(e: GeodesyError) -> Self {
        TransitionError::Projection(e.into())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Viewport {
    pub center: PlanePoint,
    pub width: f64,
    /// height / width
    pub aspect: f64,
}

impl Viewport {
    pub fn new(center: PlanePoint, width: f64, aspect: f64) -> Result<Self, TransitionError> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(TransitionError::NonPositiveWidth(width));
        }
        if !(aspect > 0.0 && aspect.is_finite()) {
            return Err(TransitionError::InvalidAspect(aspect));
        }
        Ok(Self { center, width, aspect })
    }

    pub fn height(&self) -> f64 {
        self.width * self.aspect
    }

    /// Closed rectangle test against the full viewport.
    pub fn contains(&self, p: PlanePoint) -> bool {
        (p.x - self.center.x).abs() <= self.width / 2.0
            && (p.y - self.center.y).abs() <= self.height() / 2.0
    }

    /// (min_x, min_y, max_x, max_y)
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        let (hx, hy) = (self.width / 2.0, self.height() / 2.0);
        (
            self.center.x - hx,
            self.center.y - hy,
            self.center.x + hx,
            self.center.y + hy,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoomPanPath {
    pub origin: PlanePoint,
    pub direction: PlanePoint,
    pub u0: f64,
    pub u1: f64,
    pub w0: f64,
    pub w1: f64,
    pub rho: f64,
    pub r0: f64,
    pub r1: f64,
    /// Total path length S.
    pub length: f64,
    pub aspect: f64,
    pure_zoom: bool,
}

pub fn plan_zoom_pan(start: Viewport, end: Viewport, rho: f64) -> Result<ZoomPanPath, TransitionError> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(TransitionError::InvalidRho(rho));
    }
    for v in [&start, &end] {
        Viewport::new(v.center, v.width, v.aspect)?;
    }
    if (start.aspect - end.aspect).abs() > 1e-12 * start.aspect.max(end.aspect) {
        return Err(TransitionError::MismatchedAspect(start.aspect, end.aspect));
    }
    let (w0, w1) = (start.width, end.width);
    let delta = end.center.sub(start.center);
    let du = delta.norm();
    let pure_zoom = du <= 1e-12 * w0.max(w1);
    let direction = if pure_zoom {
        PlanePoint::new(1.0, 0.0)
    } else {
        delta.scale(1.0 / du)
    };
    let (r0, r1, length) = if pure_zoom {
        (0.0, 0.0, (w1 / w0).ln().abs() / rho)
    } else {
        let rho2 = rho * rho;
        let b = |w: f64, sign: f64| (w1 * w1 - w0 * w0 + sign * rho2 * rho2 * du * du) / (2.0 * w * rho2 * du);
        // r = ln(-b + sqrt(b² + 1)) = -asinh(b), without the cancellation.
        let r0 = -b(w0, 1.0).asinh();
        let r1 = -b(w1, -1.0).asinh();
        (r0, r1, (r1 - r0) / rho)
    };
    Ok(ZoomPanPath {
        origin: start.center,
        direction,
        u0: 0.0,
        u1: if pure_zoom { 0.0 } else { du },
        w0,
        w1,
        rho,
        r0,
        r1,
        length,
        aspect: start.aspect,
        pure_zoom,
    })
}

impl ZoomPanPath {
    pub fn is_pure_zoom(&self) -> bool {
        self.pure_zoom
    }

    /// (u(s), w(s)) without range checks.
    pub fn evaluate(&self, s: f64) -> (f64, f64) {
        let rho = self.rho;
        if self.pure_zoom {
            let sign = if self.w1 >= self.w0 { 1.0 } else { -1.0 };
            return (self.u0, self.w0 * (sign * rho * s).exp());
        }
        let x = rho * s + self.r0;
        let w = self.w0 * self.r0.cosh() / x.cosh();
        // cosh r0·tanh x − sinh r0 = sinh(ρs)/cosh x
        let u = self.u0 + self.w0 / (rho * rho) * (rho * s).sinh() / x.cosh();
        (u, w)
    }

    /// Path parameter of maximal width, if it lies inside the path.
    pub fn apex(&self) -> Option<f64> {
        if self.pure_zoom {
            return None;
        }
        let s = -self.r0 / self.rho;
        (s >= 0.0 && s <= self.length).then_some(s)
    }

    pub fn point_at(&self, u: f64) -> PlanePoint {
        self.origin.add(self.direction.scale(u))
    }
}

pub fn sample_zoom_pan(path: &ZoomPanPath, s: f64) -> Result<Viewport, TransitionError> {
    let slack = 1e-12 * path.length.max(1.0);
    if !(s >= -slack && s <= path.length + slack) {
        return Err(TransitionError::OutOfRange { s, length: path.length });
    }
    let s = s.clamp(0.0, path.length);
    let (u, w) = path.evaluate(s);
    Viewport::new(path.point_at(u), w, path.aspect)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionMode {
    Mercator,
    Tpeqd,
    /// Single projection node at the start vertex for the whole hop.
    Azeqd,
}

impl std::str::FromStr for ProjectionMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mercator" => Ok(Self::Mercator),
            "tpeqd" => Ok(Self::Tpeqd),
            "azeqd" => Ok(Self::Azeqd),
            other => Err(format!("unknown projection '{other}' (expected mercator, tpeqd or azeqd)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransitionConfig {
    pub rho: f64,
    /// Path units per second along the zoom-pan path.
    pub animation_speed_v: f64,
    pub morph_duration_s: f64,
    pub frame_rate: f64,
    /// Ground extent kept in view around a vertex at rest.
    pub vertex_width_km: f64,
    pub aspect: f64,
    /// Fraction of viewport width reserved for the proxy band on each side.
    pub inset_margin: f64,
    pub rotation_reference: RotationReference,
}

impl Default for TransitionConfig {
    fn default() -> Self {
        Self {
            rho: 1.4,
            animation_speed_v: 1.0,
            morph_duration_s: 0.8,
            frame_rate: 30.0,
            vertex_width_km: 200.0,
            aspect: 0.75,
            inset_margin: 0.08,
            rotation_reference: RotationReference::Midpoint,
        }
    }
}

/// Extra room around the apex so the sampled frame nearest to it still
/// holds both endpoints.
const FRAMING_SLACK: f64 = 1.1;

impl TransitionConfig {
    pub fn validate(&self) -> Result<(), TransitionError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(TransitionError::InvalidConfig(format!("{name} must be positive, got {v}")))
            }
        };
        positive("rho", self.rho)?;
        positive("animation_speed_v", self.animation_speed_v)?;
        positive("frame_rate", self.frame_rate)?;
        positive("vertex_width_km", self.vertex_width_km)?;
        positive("aspect", self.aspect)?;
        if !(self.morph_duration_s >= 0.0 && self.morph_duration_s.is_finite()) {
            return Err(TransitionError::InvalidConfig("morph_duration_s must be >= 0".into()));
        }
        if !(self.inset_margin >= 0.0 && 2.0 * self.inset_margin < self.aspect.min(1.0)) {
            return Err(TransitionError::InvalidConfig(format!(
                "inset_margin {} leaves no inner viewport",
                self.inset_margin
            )));
        }
        Ok(())
    }

    /// Ratio of camera viewport width to the path width `w`.
    ///
    /// At the apex of a hop of image length Δ, w ≥ ρ²Δ/2; the inner
    /// rectangle must span Δ along its shorter side.
    pub fn viewport_scale(&self) -> f64 {
        let apex = (2.0 / (self.rho * self.rho)).max(1.0);
        FRAMING_SLACK * apex / (self.aspect.min(1.0) - 2.0 * self.inset_margin)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseKind {
    MorphIn,
    ZoomPan,
    MorphOut,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub kind: PhaseKind,
    pub duration: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionPlan {
    pub from_vertex: String,
    pub to_vertex: String,
    pub from: GeoCoord,
    pub to: GeoCoord,
    pub mode: ProjectionMode,
    pub spec_start: ProjectionSpec,
    pub spec_mid: ProjectionSpec,
    pub spec_end: ProjectionSpec,
    pub phases: Vec<Phase>,
    pub path: ZoomPanPath,
    pub frame_rate: f64,
    pub animation_speed_v: f64,
    pub viewport_scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameSpec {
    pub index: usize,
    pub t: f64,
    pub phase: PhaseKind,
    pub spec: ProjectionSpec,
    pub viewport: Viewport,
    /// Clockwise from screen-up, radians.
    pub north_arrow_angle: f64,
}

/// Plans a hop between two vertices of `graph`.
pub fn plan_transition(
    graph: &GeoGraph,
    from: &str,
    to: &str,
    mode: ProjectionMode,
    cfg: &TransitionConfig,
) -> Result<TransitionPlan, TransitionError> {
    let locate = |id: &str| {
        graph
            .vertex(id)
            .map(|v| v.coord)
            .ok_or_else(|| TransitionError::UnknownVertex(id.to_string()))
    };
    plan_transition_between((from, locate(from)?), (to, locate(to)?), mode, cfg)
}

/// Plans a hop between two located vertices.
pub fn plan_transition_between(
    from: (&str, GeoCoord),
    to: (&str, GeoCoord),
    mode: ProjectionMode,
    cfg: &TransitionConfig,
) -> Result<TransitionPlan, TransitionError> {
    cfg.validate()?;
    let (from_id, a) = from;
    let (to_id, b) = to;
    if a != b && geodesy::initial_bearing(a, b).is_err() {
        return Err(TransitionError::Antipodal);
    }
    let same = a == b;
    let rest_width = |p: GeoCoord| match mode {
        ProjectionMode::Mercator => {
            cfg.vertex_width_km / (2.0 * std::f64::consts::PI * EARTH_RADIUS_KM * p.lat().to_radians().cos())
        }
        _ => cfg.vertex_width_km,
    };

    let (spec_start, spec_mid, spec_end, p0, p1) = match mode {
        ProjectionMode::Mercator => {
            let s = ProjectionSpec::Mercator;
            let (p0, p1) = (projection::project(&s, a)?, projection::project(&s, b)?);
            (s.clone(), s.clone(), s, p0, p1)
        }
        ProjectionMode::Azeqd => {
            let s = make_azeqd(a);
            let p1 = projection::project(&s, b)?;
            (s.clone(), s.clone(), s, PlanePoint::ORIGIN, p1)
        }
        ProjectionMode::Tpeqd => {
            let start = make_azeqd(a);
            let start = with_reference(start, cfg.rotation_reference);
            let mid = morph_spec(&start, b, 1.0).map_err(antipodal)?;
            let p1 = projection::project(&mid, b)?;
            let end = morph_spec(&mid.swapped(), b, 1.0).map_err(antipodal)?;
            (start, mid, end, PlanePoint::ORIGIN, p1)
        }
    };
    let start_vp = Viewport::new(p0, rest_width(a), cfg.aspect)?;
    let end_vp = Viewport::new(p1, rest_width(b), cfg.aspect)?;
    let path = plan_zoom_pan(start_vp, end_vp, cfg.rho)?;

    let mut phases = Vec::new();
    let morph = if same { 0.0 } else { cfg.morph_duration_s };
    if mode == ProjectionMode::Tpeqd {
        phases.push(Phase { kind: PhaseKind::MorphIn, duration: morph });
    }
    phases.push(Phase {
        kind: PhaseKind::ZoomPan,
        duration: path.length / cfg.animation_speed_v,
    });
    if mode == ProjectionMode::Tpeqd {
        phases.push(Phase { kind: PhaseKind::MorphOut, duration: morph });
    }

    Ok(TransitionPlan {
        from_vertex: from_id.to_string(),
        to_vertex: to_id.to_string(),
        from: a,
        to: b,
        mode,
        spec_start,
        spec_mid,
        spec_end,
        phases,
        path,
        frame_rate: cfg.frame_rate,
        animation_speed_v: cfg.animation_speed_v,
        viewport_scale: cfg.viewport_scale(),
    })
}

fn with_reference(spec: ProjectionSpec, reference: RotationReference) -> ProjectionSpec {
    match spec {
        ProjectionSpec::Tpeqd(mut s) => {
            s.reference = reference;
            ProjectionSpec::Tpeqd(s)
        }
        other => other,
    }
}

fn antipodal(e: ProjectionError) -> TransitionError {
    match e {
        ProjectionError::AntipodalCrossing | ProjectionError::AntipodalNodes => TransitionError::Antipodal,
        other => other.into(),
    }
}

impl TransitionPlan {
    pub fn total_duration(&self) -> f64 {
        self.phases.iter().map(|p| p.duration).sum()
    }

    pub fn frame_count(&self) -> usize {
        frame_times(self.total_duration(), self.frame_rate).len()
    }

    /// Sampled frame closest in time to `t`; `t` must lie within the plan.
    pub fn nearest_frame(&self, t: f64) -> Result<FrameSpec, TransitionError> {
        let total = self.total_duration();
        if !(t >= 0.0 && t <= total + 1e-9) {
            return Err(TransitionError::OutOfRange { s: t, length: total });
        }
        let times = frame_times(total, self.frame_rate);
        let index = times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
            .expect("at least one frame");
        self.frame_at(index, times[index])
    }

    fn camera(&self, center: PlanePoint, w: f64) -> Viewport {
        Viewport {
            center,
            width: w * self.viewport_scale,
            aspect: self.path.aspect,
        }
    }

    /// Frame at time `t` (clamped into the plan).
    pub fn frame_at(&self, index: usize, t: f64) -> Result<FrameSpec, TransitionError> {
        let t = t.clamp(0.0, self.total_duration());
        let mut start = 0.0;
        let last = self.phases.len() - 1;
        for (i, phase) in self.phases.iter().enumerate() {
            let end = start + phase.duration;
            if t <= end || i == last {
                let local = (t - start).max(0.0);
                return self.frame_in_phase(index, t, *phase, local);
            }
            start = end;
        }
        unreachable!("plans always hold a zoom-pan phase")
    }

    fn frame_in_phase(&self, index: usize, t: f64, phase: Phase, local: f64) -> Result<FrameSpec, TransitionError> {
        let fraction = if phase.duration > 0.0 {
            (local / phase.duration).clamp(0.0, 1.0)
        } else {
            1.0
        };
        let path = &self.path;
        let (spec, viewport, anchor) = match phase.kind {
            PhaseKind::MorphIn => {
                let spec = morph_spec(&self.spec_start, self.to, fraction).map_err(antipodal)?;
                (spec, self.camera(path.point_at(path.u0), path.w0), Some(self.from))
            }
            PhaseKind::MorphOut => {
                let spec = morph_spec(&self.spec_mid.swapped(), self.to, fraction).map_err(antipodal)?;
                (spec, self.camera(path.point_at(path.u1), path.w1), Some(self.to))
            }
            PhaseKind::ZoomPan => {
                let s = (local * self.animation_speed_v).min(path.length);
                let (u, w) = path.evaluate(s);
                let anchor = match self.mode {
                    ProjectionMode::Tpeqd if path.u1 > 0.0 => {
                        Some(geodesy::geodesic_interpolate(self.from, self.to, (u / path.u1).clamp(0.0, 1.0))?)
                    }
                    ProjectionMode::Tpeqd => Some(self.from),
                    _ => None,
                };
                (self.spec_mid.clone(), self.camera(path.point_at(u), w), anchor)
            }
        };
        let at = match anchor {
            Some(g) => Ok(g),
            None => projection::unproject(&spec, viewport.center),
        };
        let north_arrow_angle = at
            .and_then(|g| projection::north_direction(&spec, g))
            .map(|n| arrow_angle(&spec, n))
            .unwrap_or(0.0);
        Ok(FrameSpec {
            index,
            t,
            phase: phase.kind,
            spec,
            viewport,
            north_arrow_angle,
        })
    }
}

/// Clockwise angle from screen-up of a plane direction.
pub fn arrow_angle(spec: &ProjectionSpec, dir: PlanePoint) -> f64 {
    let up = if spec.y_axis_up() { dir.y } else { -dir.y };
    dir.x.atan2(up)
}

fn frame_times(total: f64, fps: f64) -> Vec<f64> {
    let step = 1.0 / fps;
    let n = (total * fps + 1e-9).floor() as usize;
    let mut times: Vec<f64> = (0..=n).map(|k| k as f64 * step).collect();
    if total - times[n] > 1e-9 {
        times.push(total);
    }
    times
}

/// All frames of a plan at 1/frame_rate spacing, both endpoints included.
pub fn frames(plan: &TransitionPlan) -> Result<Vec<FrameSpec>, TransitionError> {
    frame_times(plan.total_duration(), plan.frame_rate)
        .into_iter()
        .enumerate()
        .map(|(i, t)| plan.frame_at(i, t))
        .collect()
}

/// Signed difference (degrees, clockwise positive) between the on-screen
/// direction of north at node A and at the geodesic midpoint of the nodes.
pub fn correct_azimuth_start_vs_mid(spec: &ProjectionSpec) -> Result<f64, TransitionError> {
    let Some(s) = spec.as_two_point() else {
        return Ok(0.0);
    };
    if s.node_a == s.node_b {
        return Ok(0.0);
    }
    let mid = geodesy::midpoint(s.node_a, s.node_b)?;
    let at_start = arrow_angle(spec, projection::north_direction(spec, s.node_a)?);
    let at_mid = arrow_angle(spec, projection::north_direction(spec, mid)?);
    let d = (at_start - at_mid).to_degrees();
    Ok((d + 180.0).rem_euclid(360.0) - 180.0)
}
