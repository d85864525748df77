use std::collections::BTreeMap;

use geo::{LineString, Simplify};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::clip::{clip_polyline, clip_ring, Rect};
use super::features::{FeatureGeometry, FeatureSet};
use super::PipelineError;
use crate::geodesy::{GeoCoord, Vec3};
use crate::projection::{self, distortion_report, PlanePoint, ProjectionSpec, MERCATOR_MAX_LAT};

/// Recursion cap for densification (segment halvings).
const MAX_DEPTH: u32 = 24;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "coordinates", rename_all = "snake_case")]
pub enum PlaneGeometry {
    Point([f64; 2]),
    Polyline(Vec<[f64; 2]>),
    Polygon(Vec<Vec<[f64; 2]>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryMetadata {
    pub spec_hash: String,
    pub tolerance: f64,
    pub clip: Rect,
    /// Features with at least one vertex past the distortion limit.
    pub distortion_flagged: usize,
    /// Polygons cut by a projection seam, emitted as polylines.
    pub split_features: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectedGeometry {
    pub layers: BTreeMap<String, Vec<PlaneGeometry>>,
    pub metadata: GeometryMetadata,
}

impl ProjectedGeometry {
    pub fn feature_count(&self) -> usize {
        self.layers.values().map(Vec::len).sum()
    }

    pub fn coordinates(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.layers.values().flatten().flat_map(|g| -> Box<dyn Iterator<Item = [f64; 2]> + '_> {
            match g {
                PlaneGeometry::Point(p) => Box::new(std::iter::once(*p)),
                PlaneGeometry::Polyline(l) => Box::new(l.iter().copied()),
                PlaneGeometry::Polygon(rs) => Box::new(rs.iter().flatten().copied()),
            }
        })
    }
}

pub fn spec_hash(spec: &ProjectionSpec) -> String {
    let bytes = serde_json::to_vec(spec).expect("spec serialises");
    hex::encode(Sha256::digest(bytes))
}

fn project_point(spec: &ProjectionSpec, g: GeoCoord) -> Result<PlanePoint, PipelineError> {
    let g = match spec {
        // Basemap data reaches the poles; pin it to the WebMercator edge.
        ProjectionSpec::Mercator if g.lat().abs() > MERCATOR_MAX_LAT => {
            GeoCoord::new(g.lat().clamp(-MERCATOR_MAX_LAT, MERCATOR_MAX_LAT), g.lon())?
        }
        _ => g,
    };
    Ok(projection::project(spec, g)?)
}

fn segment_distance(p: PlanePoint, a: PlanePoint, b: PlanePoint) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a.add(ab.scale(t)))
}

fn geo_mid(a: GeoCoord, b: GeoCoord) -> Option<GeoCoord> {
    let m = a.to_vec().add(b.to_vec());
    (m.norm() > 1e-12).then(|| GeoCoord::from_vec(m.normalized()))
}

/// Projects a geodesic path, inserting midpoints until each projected chord
/// is within `tolerance` of the projected curve at its middle. A tolerance of
/// zero disables densification.
pub fn densify_path(
    spec: &ProjectionSpec,
    path: &[GeoCoord],
    tolerance: f64,
) -> Result<Vec<(GeoCoord, PlanePoint)>, PipelineError> {
    let mut out = Vec::with_capacity(path.len());
    let Some(&first) = path.first() else {
        return Ok(out);
    };
    out.push((first, project_point(spec, first)?));
    for w in path.windows(2) {
        let b = (w[1], project_point(spec, w[1])?);
        if tolerance > 0.0 {
            let a = *out.last().expect("non-empty");
            refine(spec, a, b, tolerance, 0, &mut out)?;
        }
        out.push(b);
    }
    Ok(out)
}

fn refine(
    spec: &ProjectionSpec,
    a: (GeoCoord, PlanePoint),
    b: (GeoCoord, PlanePoint),
    tol: f64,
    depth: u32,
    out: &mut Vec<(GeoCoord, PlanePoint)>,
) -> Result<(), PipelineError> {
    if depth >= MAX_DEPTH || a.0 == b.0 {
        return Ok(());
    }
    let Some(mg) = geo_mid(a.0, b.0) else {
        return Ok(());
    };
    let m = (mg, project_point(spec, mg)?);
    if segment_distance(m.1, a.1, b.1) < tol {
        return Ok(());
    }
    refine(spec, a, m, tol, depth + 1, out)?;
    out.push(m);
    refine(spec, m, b, tol, depth + 1, out)
}

/// Where the geodesic a→b crosses the tpeqd seam (the far arc of the node
/// great circle between the two node antipodes), if it does.
fn seam_crossing(spec: &ProjectionSpec, a: GeoCoord, b: GeoCoord) -> Option<Vec3> {
    let s = spec.as_two_point()?;
    if s.is_azimuthal() {
        return None;
    }
    let (na, nb) = (s.node_a.to_vec(), s.node_b.to_vec());
    let normal = na.cross(nb).normalized();
    let (va, vb) = (a.to_vec(), b.to_vec());
    let (sa, sb) = (normal.dot(va), normal.dot(vb));
    if sa * sb > 0.0 || (sa == 0.0 && sb == 0.0) {
        return None;
    }
    // Point on the segment where it meets the node great circle.
    let t = sa / (sa - sb);
    let c = va.scale(1.0 - t).add(vb.scale(t));
    if c.norm() < 1e-12 {
        return None;
    }
    let c = c.normalized();
    // Seam: angle from node A along the A→B direction within (π, π + δ).
    let tangent = normal.cross(na);
    let angle = c.dot(tangent).atan2(c.dot(na)).rem_euclid(2.0 * std::f64::consts::PI);
    let delta = na.dot(nb).clamp(-1.0, 1.0).acos();
    let pi = std::f64::consts::PI;
    (angle > pi && angle < pi + delta).then_some(c)
}

fn nudge(c: Vec3, toward: GeoCoord) -> GeoCoord {
    let v = c.add(toward.to_vec().sub(c).scale(1e-9));
    GeoCoord::from_vec(v.normalized())
}

/// Splits a geodesic path at seam crossings. Returns the pieces and whether
/// any split happened.
fn split_at_seam(spec: &ProjectionSpec, path: &[GeoCoord], closed: bool) -> (Vec<Vec<GeoCoord>>, bool) {
    let mut pieces = vec![Vec::new()];
    for (i, &p) in path.iter().enumerate() {
        if i > 0 {
            let prev = path[i - 1];
            if let Some(c) = seam_crossing(spec, prev, p) {
                pieces.last_mut().expect("non-empty").push(nudge(c, prev));
                pieces.push(vec![nudge(c, p)]);
            }
        }
        pieces.last_mut().expect("non-empty").push(p);
    }
    let split = pieces.len() > 1;
    if split && closed {
        // The ring closes through its start: join the last piece onto the first.
        let first = pieces.remove(0);
        let last = pieces.last_mut().expect("split gives several pieces");
        last.extend(first.into_iter().skip(1));
    }
    (pieces, split)
}

/// Splits Mercator lines where consecutive points jump across the antimeridian.
fn split_at_antimeridian(line: Vec<PlanePoint>) -> Vec<Vec<PlanePoint>> {
    let mut pieces = vec![Vec::new()];
    for (i, &p) in line.iter().enumerate() {
        if i > 0 {
            let prev = line[i - 1];
            let dx = p.x - prev.x;
            if dx.abs() > 0.5 {
                let unwrapped = if dx > 0.0 { p.x - 1.0 } else { p.x + 1.0 };
                let edge = if dx > 0.0 { 0.0 } else { 1.0 };
                let t = (edge - prev.x) / (unwrapped - prev.x);
                let y = prev.y + (p.y - prev.y) * t;
                pieces.last_mut().expect("non-empty").push(PlanePoint::new(edge, y));
                pieces.push(vec![PlanePoint::new(1.0 - edge, y)]);
            }
        }
        pieces.last_mut().expect("non-empty").push(p);
    }
    pieces
}

/// Plane pieces of a path with seams removed.
fn project_path(
    spec: &ProjectionSpec,
    path: &[GeoCoord],
    closed: bool,
    tolerance: f64,
    flagged: &mut bool,
) -> Result<(Vec<Vec<PlanePoint>>, bool), PipelineError> {
    let (geo_pieces, mut split) = split_at_seam(spec, path, closed);
    let mut plane_pieces = Vec::new();
    for piece in geo_pieces {
        let dense = densify_path(spec, &piece, tolerance)?;
        if dense.iter().any(|(g, _)| !distortion_report(spec, *g).within_limit) {
            *flagged = true;
        }
        let line: Vec<PlanePoint> = dense.into_iter().map(|(_, p)| p).collect();
        if matches!(spec, ProjectionSpec::Mercator) {
            let parts = split_at_antimeridian(line);
            if parts.len() > 1 {
                split = true;
            }
            plane_pieces.extend(parts);
        } else {
            plane_pieces.push(line);
        }
    }
    Ok((plane_pieces, split))
}

fn simplify(line: Vec<PlanePoint>, tolerance: f64) -> Vec<[f64; 2]> {
    let coords: Vec<[f64; 2]> = line.into_iter().map(|p| [p.x, p.y]).collect();
    if tolerance <= 0.0 || coords.len() < 3 {
        return coords;
    }
    let ls: LineString<f64> = coords.into();
    ls.simplify(&tolerance).0.into_iter().map(|c| [c.x, c.y]).collect()
}

struct FeatureOutput {
    layer: String,
    geometries: Vec<PlaneGeometry>,
    flagged: bool,
    split: bool,
}

/// Densifies, projects, clips to `clip` and simplifies every feature.
pub fn project_features(
    spec: &ProjectionSpec,
    fs: &FeatureSet,
    clip: Rect,
    tolerance: f64,
) -> Result<ProjectedGeometry, PipelineError> {
    if !(tolerance >= 0.0 && tolerance.is_finite()) {
        return Err(PipelineError::InvalidTolerance(tolerance));
    }
    let outputs: Vec<FeatureOutput> = fs
        .features
        .par_iter()
        .map(|f| {
            let mut flagged = false;
            let mut split = false;
            let mut geometries = Vec::new();
            match &f.geometry {
                FeatureGeometry::Point(g) => {
                    let p = project_point(spec, *g)?;
                    flagged = !distortion_report(spec, *g).within_limit;
                    if clip.contains(p) {
                        geometries.push(PlaneGeometry::Point([p.x, p.y]));
                    }
                }
                FeatureGeometry::LineString(l) => {
                    let (pieces, _) = project_path(spec, l, false, tolerance, &mut flagged)?;
                    for piece in pieces {
                        for c in clip_polyline(&clip, &piece) {
                            let s = simplify(c, tolerance);
                            if s.len() >= 2 {
                                geometries.push(PlaneGeometry::Polyline(s));
                            }
                        }
                    }
                }
                FeatureGeometry::Polygon(rings) => {
                    let mut projected = Vec::new();
                    for r in rings {
                        let (pieces, s) = project_path(spec, r, true, tolerance, &mut flagged)?;
                        split |= s;
                        projected.push(pieces);
                    }
                    if split {
                        for piece in projected.into_iter().flatten() {
                            for c in clip_polyline(&clip, &piece) {
                                let s = simplify(c, tolerance);
                                if s.len() >= 2 {
                                    geometries.push(PlaneGeometry::Polyline(s));
                                }
                            }
                        }
                    } else {
                        let mut out_rings = Vec::new();
                        for (i, mut pieces) in projected.into_iter().enumerate() {
                            let ring = clip_ring(&clip, &pieces.remove(0));
                            let ring = simplify(ring, tolerance);
                            if ring.len() >= 4 {
                                out_rings.push(ring);
                            } else if i == 0 {
                                break;
                            }
                        }
                        if !out_rings.is_empty() {
                            geometries.push(PlaneGeometry::Polygon(out_rings));
                        }
                    }
                }
            }
            Ok(FeatureOutput {
                layer: f.layer.clone(),
                geometries,
                flagged,
                split,
            })
        })
        .collect::<Result<_, PipelineError>>()?;

    let mut layers: BTreeMap<String, Vec<PlaneGeometry>> = BTreeMap::new();
    let (mut flagged, mut split) = (0, 0);
    for o in outputs {
        flagged += o.flagged as usize;
        if o.geometries.is_empty() {
            continue;
        }
        split += o.split as usize;
        layers.entry(o.layer).or_default().extend(o.geometries);
    }
    Ok(ProjectedGeometry {
        layers,
        metadata: GeometryMetadata {
            spec_hash: spec_hash(spec),
            tolerance,
            clip,
            distortion_flagged: flagged,
            split_features: split,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::make_tpeqd;

    fn c(lat: f64, lon: f64) -> GeoCoord {
        GeoCoord::new(lat, lon).unwrap()
    }

    #[test]
    fn antimeridian_split_interpolates_edges() {
        let parts = split_at_antimeridian(vec![PlanePoint::new(0.9, 0.4), PlanePoint::new(0.1, 0.6)]);
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].last().unwrap().x, 1.0);
        assert_eq!(parts[1][0].x, 0.0);
        assert!((parts[0].last().unwrap().y - 0.5).abs() < 1e-12);
    }

    #[test]
    fn seam_is_the_far_arc_between_node_antipodes() {
        let spec = make_tpeqd(c(0.0, -10.0), c(0.0, 10.0)).unwrap();
        // Crossing the equator at lon 180 lies between the antipodes (170 and -170).
        assert!(seam_crossing(&spec, c(-5.0, 180.0), c(5.0, 180.0)).is_some());
        // Crossing on the baseline itself is not a seam.
        assert!(seam_crossing(&spec, c(-5.0, 0.0), c(5.0, 0.0)).is_none());
        // Beyond node B but short of its antipode: still continuous.
        assert!(seam_crossing(&spec, c(-5.0, 90.0), c(5.0, 90.0)).is_none());
    }

    #[test]
    fn densification_respects_tolerance_at_midpoints() {
        let spec = make_tpeqd(c(50.0, 0.0), c(40.0, 60.0)).unwrap();
        let dense = densify_path(&spec, &[c(70.0, -40.0), c(-20.0, 100.0)], 1.0).unwrap();
        assert!(dense.len() > 2);
        for w in dense.windows(2) {
            let m = geo_mid(w[0].0, w[1].0).unwrap();
            let pm = projection::project(&spec, m).unwrap();
            assert!(segment_distance(pm, w[0].1, w[1].1) < 1.0);
        }
    }
}
