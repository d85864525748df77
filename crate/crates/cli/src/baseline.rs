//! How far a Mercator rendering departs from the tpeqd rendering near the
//! baseline, once both are aligned on the two endpoints.

use geohop_core::geodesy::{
    destination_point, geodesic_interpolate, great_circle_distance, initial_bearing, Azimuth, GeoCoord, Kilometers,
};
use geohop_core::projection::{make_tpeqd, project, project_mercator, PlanePoint, ProjectionSpec, MERCATOR_MAX_LAT};
use serde::Serialize;

use crate::CliError;

pub const STATIONS: usize = 64;
pub const OFFSET_STEPS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BaselineReport {
    pub from: GeoCoord,
    pub to: GeoCoord,
    pub distance_km: f64,
    pub radius_km: f64,
    /// Resolution: `screen_pixels` across the baseline length.
    pub screen_pixels: u32,
    pub px_per_km: f64,
    pub samples: usize,
    /// Samples beyond the Mercator latitude limit.
    pub excluded: usize,
    pub max_deviation_px: f64,
    pub max_at: Option<GeoCoord>,
    pub degenerate: bool,
}

// Plane point as a complex number; Mercator y is flipped to point north.
#[derive(Clone, Copy)]
struct C(f64, f64);

impl C {
    fn sub(self, o: C) -> C {
        C(self.0 - o.0, self.1 - o.1)
    }
    fn add(self, o: C) -> C {
        C(self.0 + o.0, self.1 + o.1)
    }
    fn mul(self, o: C) -> C {
        C(self.0 * o.0 - self.1 * o.1, self.0 * o.1 + self.1 * o.0)
    }
    fn div(self, o: C) -> C {
        let d = o.0 * o.0 + o.1 * o.1;
        C((self.0 * o.0 + self.1 * o.1) / d, (self.1 * o.0 - self.0 * o.1) / d)
    }
    fn abs(self) -> f64 {
        self.0.hypot(self.1)
    }
}

fn from_plane(p: PlanePoint) -> C {
    C(p.x, p.y)
}

/// Mercator position with x unwrapped to within half a world of `ref_x`.
fn mercator(p: GeoCoord, ref_x: f64) -> Option<C> {
    if p.lat().abs() > MERCATOR_MAX_LAT {
        return None;
    }
    let q = project_mercator(p).ok()?;
    let x = q.x - (q.x - ref_x).round();
    Some(C(x, -q.y))
}

/// Samples points on the baseline and at offsets up to `radius_km` on both
/// sides, aligns the Mercator images of the endpoints onto their tpeqd
/// images with a similarity transform and reports the largest remaining
/// displacement.
pub fn baseline_compare(from: GeoCoord, to: GeoCoord, radius_km: f64, screen_pixels: u32) -> Result<BaselineReport, CliError> {
    if !(radius_km >= 0.0 && radius_km.is_finite()) {
        return Err(CliError::InvalidArgument(format!("radius must be >= 0, got {radius_km}")));
    }
    let d = great_circle_distance(from, to).value();
    let mut report = BaselineReport {
        from,
        to,
        distance_km: d,
        radius_km,
        screen_pixels,
        px_per_km: 0.0,
        samples: 0,
        excluded: 0,
        max_deviation_px: 0.0,
        max_at: None,
        degenerate: true,
    };
    let spec = make_tpeqd(from, to)?;
    if !matches!(&spec, ProjectionSpec::Tpeqd(s) if s.node_a != s.node_b) || d < 1e-3 {
        return Ok(report);
    }
    report.degenerate = false;
    report.px_per_km = screen_pixels as f64 / d;

    let ref_x = project_mercator(geohop_core::geodesy::midpoint(from, to)?)
        .map(|q| q.x)
        .unwrap_or(0.5);
    let (ta, tb) = (from_plane(project(&spec, from)?), from_plane(project(&spec, to)?));
    let (Some(ma), Some(mb)) = (mercator(from, ref_x), mercator(to, ref_x)) else {
        return Err(CliError::InvalidArgument("endpoints beyond the Mercator latitude limit".into()));
    };
    let alpha = tb.sub(ta).div(mb.sub(ma));
    let align = |m: C| ta.add(alpha.mul(m.sub(ma)));

    for k in 0..=STATIONS {
        let t = k as f64 / STATIONS as f64;
        let station = geodesic_interpolate(from, to, t)?;
        let along = if k < STATIONS {
            initial_bearing(station, to)?.degrees()
        } else {
            initial_bearing(to, from)?.degrees() + 180.0
        };
        let rings = if radius_km > 0.0 { OFFSET_STEPS } else { 0 };
        for j in 0..=rings {
            let off = radius_km * j as f64 / OFFSET_STEPS as f64;
            let sides: &[f64] = if j == 0 { &[0.0] } else { &[90.0, -90.0] };
            for side in sides {
                let p = if j == 0 {
                    station
                } else {
                    destination_point(station, Azimuth::new(along + side), Kilometers::new(off)?)
                };
                let Some(m) = mercator(p, ref_x) else {
                    report.excluded += 1;
                    continue;
                };
                let Ok(tp) = project(&spec, p) else {
                    report.excluded += 1;
                    continue;
                };
                report.samples += 1;
                let dev = from_plane(tp).sub(align(m)).abs() * report.px_per_km;
                if dev > report.max_deviation_px {
                    report.max_deviation_px = dev;
                    report.max_at = Some(p);
                }
            }
        }
    }
    Ok(report)
}
