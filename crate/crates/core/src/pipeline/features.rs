use std::collections::BTreeMap;
use std::path::Path;

use geojson::{GeoJson, Geometry, Value};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::geodesy::GeoCoord;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "coordinates", rename_all = "snake_case")]
pub enum FeatureGeometry {
    Point(GeoCoord),
    LineString(Vec<GeoCoord>),
    /// Outer ring first; every ring closed.
    Polygon(Vec<Vec<GeoCoord>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub geometry: FeatureGeometry,
    pub layer: String,
    pub properties: BTreeMap<String, serde_json::Value>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub features: Vec<Feature>,
    /// Input geometries that were skipped (unsupported kind, null, too short).
    pub warnings: usize,
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn extend(&mut self, other: FeatureSet) {
        self.features.extend(other.features);
        self.warnings += other.warnings;
    }

    /// Content hash over the canonical serialisation.
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(&self.features).expect("features serialise");
        hex::encode(Sha256::digest(bytes))
    }
}

/// Reads a GeoJSON file. The layer of each feature is its `layer` property if
/// present, otherwise the file stem.
pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureSet, PipelineError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let layer = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "default".into());
    parse_features(&text, &layer)
}

pub fn parse_features(text: &str, default_layer: &str) -> Result<FeatureSet, PipelineError> {
    let gj: GeoJson = text.parse().map_err(|e: geojson::Error| PipelineError::Parse(e.to_string()))?;
    let inputs: Vec<(Option<Geometry>, geojson::JsonObject)> = match gj {
        GeoJson::FeatureCollection(fc) => fc
            .features
            .into_iter()
            .map(|f| (f.geometry, f.properties.unwrap_or_default()))
            .collect(),
        GeoJson::Feature(f) => vec![(f.geometry, f.properties.unwrap_or_default())],
        GeoJson::Geometry(g) => vec![(Some(g), Default::default())],
    };
    let total = inputs.len();
    let mut set = FeatureSet::default();
    for (geometry, props) in inputs {
        let layer = props
            .get("layer")
            .and_then(|v| v.as_str())
            .unwrap_or(default_layer)
            .to_string();
        let properties: BTreeMap<String, serde_json::Value> = props.into_iter().collect();
        let Some(geometry) = geometry else {
            set.warnings += 1;
            continue;
        };
        let parts = convert(&geometry.value)?;
        if parts.is_empty() {
            set.warnings += 1;
            continue;
        }
        for geometry in parts {
            set.features.push(Feature {
                geometry,
                layer: layer.clone(),
                properties: properties.clone(),
            });
        }
    }
    if total > 0 && set.features.is_empty() {
        return Err(PipelineError::EmptySet { skipped: set.warnings });
    }
    Ok(set)
}

fn coord(p: &[f64]) -> Result<GeoCoord, PipelineError> {
    if p.len() < 2 {
        return Err(PipelineError::InvalidCoordinate(format!("position {p:?} has fewer than two values")));
    }
    GeoCoord::new(p[1], p[0]).map_err(|e| PipelineError::InvalidCoordinate(format!("[{}, {}]: {e}", p[0], p[1])))
}

fn line(ps: &[Vec<f64>]) -> Result<Option<Vec<GeoCoord>>, PipelineError> {
    let cs = ps.iter().map(|p| coord(p)).collect::<Result<Vec<_>, _>>()?;
    Ok((cs.len() >= 2).then_some(cs))
}

fn ring(ps: &[Vec<f64>]) -> Result<Option<Vec<GeoCoord>>, PipelineError> {
    let mut cs = ps.iter().map(|p| coord(p)).collect::<Result<Vec<_>, _>>()?;
    if cs.first() != cs.last() {
        cs.push(cs[0]);
    }
    Ok((cs.len() >= 4).then_some(cs))
}

fn polygon(rings: &[Vec<Vec<f64>>]) -> Result<Option<FeatureGeometry>, PipelineError> {
    let mut out = Vec::new();
    for (i, r) in rings.iter().enumerate() {
        match ring(r)? {
            Some(r) => out.push(r),
            // A degenerate outer ring invalidates the polygon.
            None if i == 0 => return Ok(None),
            None => {}
        }
    }
    Ok(Some(FeatureGeometry::Polygon(out)))
}

/// Supported geometries, multi-geometries flattened. Empty for unsupported kinds.
fn convert(v: &Value) -> Result<Vec<FeatureGeometry>, PipelineError> {
    Ok(match v {
        Value::Point(p) => vec![FeatureGeometry::Point(coord(p)?)],
        Value::MultiPoint(ps) => ps
            .iter()
            .map(|p| coord(p).map(FeatureGeometry::Point))
            .collect::<Result<_, _>>()?,
        Value::LineString(l) => line(l)?.map(FeatureGeometry::LineString).into_iter().collect(),
        Value::MultiLineString(ls) => {
            let mut out = Vec::new();
            for l in ls {
                out.extend(line(l)?.map(FeatureGeometry::LineString));
            }
            out
        }
        Value::Polygon(p) => polygon(p)?.into_iter().collect(),
        Value::MultiPolygon(ps) => {
            let mut out = Vec::new();
            for p in ps {
                out.extend(polygon(p)?);
            }
            out
        }
        Value::GeometryCollection(_) => Vec::new(),
    })
}
