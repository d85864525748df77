//! Geo-referenced graph model and degree-of-interest scoring.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodesy::{great_circle_distance, GeoCoord, Kilometers};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("cannot read graph file: {0}")]
    Io(#[from] std::io::Error),
    #[error("graph document is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("graph has {} violation(s): {}", .0.len(), join(.0))]
    Invalid(Vec<GraphViolation>),
}

fn join(v: &[GraphViolation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphViolation {
    DuplicateVertex(String),
    EmptyId,
    InvalidCoordinate { id: String, reason: String },
    InvalidAttribute { id: String, name: String },
    DanglingEdge { a: String, b: String, missing: String },
    SelfLoop(String),
    DuplicateEdge(String, String),
}

impl fmt::Display for GraphViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DuplicateVertex(id) => write!(f, "duplicate vertex id '{id}'"),
            Self::EmptyId => write!(f, "vertex with empty id"),
            Self::InvalidCoordinate { id, reason } => write!(f, "vertex '{id}': {reason}"),
            Self::InvalidAttribute { id, name } => {
                write!(f, "vertex '{id}': attribute '{name}' is not a finite number")
            }
            Self::DanglingEdge { a, b, missing } => {
                write!(f, "edge [{a}, {b}] references unknown vertex '{missing}'")
            }
            Self::SelfLoop(id) => write!(f, "self-loop on '{id}'"),
            Self::DuplicateEdge(a, b) => write!(f, "duplicate edge [{a}, {b}]"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoVertex {
    pub id: String,
    #[serde(default)]
    pub name: String,
    #[serde(flatten)]
    pub coord: GeoCoord,
    #[serde(default)]
    pub attributes: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
struct RawVertex {
    id: String,
    #[serde(default)]
    name: String,
    lat: f64,
    lon: f64,
    #[serde(default)]
    attributes: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
struct RawGraph {
    vertices: Vec<RawVertex>,
    #[serde(default)]
    edges: Vec<(String, String)>,
}

#[derive(Serialize)]
struct GraphDocument<'a> {
    vertices: &'a [GeoVertex],
    edges: &'a [(String, String)],
}

/// Immutable undirected graph with vertex positions.
#[derive(Clone, Debug)]
pub struct GeoGraph {
    vertices: Vec<GeoVertex>,
    edges: Vec<(String, String)>,
    index: HashMap<String, usize>,
    adjacency: Vec<Vec<usize>>,
    max_degree: usize,
    attribute_max: BTreeMap<String, f64>,
}

impl Serialize for GeoGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GraphDocument {
            vertices: &self.vertices,
            edges: &self.edges,
        }
        .serialize(s)
    }
}

impl GeoGraph {
    pub fn empty() -> Self {
        Self::new(Vec::new(), Vec::new()).expect("empty graph is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn from_json_str(s: &str) -> Result<Self, GraphError> {
        let raw: RawGraph = serde_json::from_str(s)?;
        let mut violations = Vec::new();
        let mut vertices = Vec::with_capacity(raw.vertices.len());
        for v in raw.vertices {
            match GeoCoord::new(v.lat, v.lon) {
                Ok(coord) => vertices.push(GeoVertex {
                    id: v.id,
                    name: v.name,
                    coord,
                    attributes: v.attributes,
                }),
                Err(e) => violations.push(GraphViolation::InvalidCoordinate {
                    id: v.id,
                    reason: e.to_string(),
                }),
            }
        }
        match Self::new(vertices, raw.edges) {
            Ok(g) if violations.is_empty() => Ok(g),
            Ok(_) => Err(GraphError::Invalid(violations)),
            Err(GraphError::Invalid(more)) => {
                violations.extend(more);
                Err(GraphError::Invalid(violations))
            }
            Err(e) => Err(e),
        }
    }

    /// Builds a graph, collecting every invariant violation.
    pub fn new(vertices: Vec<GeoVertex>, edges: Vec<(String, String)>) -> Result<Self, GraphError> {
        let mut violations = Vec::new();
        let mut index = HashMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if v.id.is_empty() {
                violations.push(GraphViolation::EmptyId);
            }
            if index.insert(v.id.clone(), i).is_some() {
                violations.push(GraphViolation::DuplicateVertex(v.id.clone()));
            }
            for (name, value) in &v.attributes {
                if !value.is_finite() {
                    violations.push(GraphViolation::InvalidAttribute {
                        id: v.id.clone(),
                        name: name.clone(),
                    });
                }
            }
        }
        let mut adjacency = vec![Vec::new(); vertices.len()];
        let mut seen = BTreeSet::new();
        for (a, b) in &edges {
            let (ia, ib) = (index.get(a), index.get(b));
            let (Some(&ia), Some(&ib)) = (ia, ib) else {
                let missing = if ia.is_none() { a } else { b };
                violations.push(GraphViolation::DanglingEdge {
                    a: a.clone(),
                    b: b.clone(),
                    missing: missing.clone(),
                });
                continue;
            };
            if ia == ib {
                violations.push(GraphViolation::SelfLoop(a.clone()));
                continue;
            }
            if !seen.insert((ia.min(ib), ia.max(ib))) {
                violations.push(GraphViolation::DuplicateEdge(a.clone(), b.clone()));
                continue;
            }
            adjacency[ia].push(ib);
            adjacency[ib].push(ia);
        }
        if !violations.is_empty() {
            return Err(GraphError::Invalid(violations));
        }
        let max_degree = adjacency.iter().map(Vec::len).max().unwrap_or(0);
        let mut attribute_max: BTreeMap<String, f64> = BTreeMap::new();
        for v in &vertices {
            for (name, &value) in &v.attributes {
                let m = attribute_max.entry(name.clone()).or_insert(value);
                *m = m.max(value);
            }
        }
        Ok(Self {
            vertices,
            edges,
            index,
            adjacency,
            max_degree,
            attribute_max,
        })
    }

    pub fn vertices(&self) -> &[GeoVertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(String, String)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, id: &str) -> Option<&GeoVertex> {
        self.index.get(id).map(|&i| &self.vertices[i])
    }

    fn idx(&self, id: &str) -> Result<usize, DoIError> {
        self.index.get(id).copied().ok_or_else(|| DoIError::UnknownVertex(id.to_string()))
    }

    pub fn degree(&self, id: &str) -> Option<usize> {
        self.index.get(id).map(|&i| self.adjacency[i].len())
    }

    pub fn are_adjacent(&self, a: &str, b: &str) -> bool {
        match (self.index.get(a), self.index.get(b)) {
            (Some(&ia), Some(&ib)) => self.adjacency[ia].contains(&ib),
            _ => false,
        }
    }

    pub fn neighbors(&self, id: &str) -> Vec<&str> {
        self.index
            .get(id)
            .map(|&i| self.adjacency[i].iter().map(|&j| self.vertices[j].id.as_str()).collect())
            .unwrap_or_default()
    }

    /// Breadth-first hop counts from `id`; `None` for unreachable vertices.
    pub fn hops_from(&self, id: &str) -> Option<Vec<Option<usize>>> {
        let start = *self.index.get(id)?;
        let mut hops = vec![None; self.vertices.len()];
        hops[start] = Some(0);
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let next = hops[i].map(|h| h + 1);
            for &j in &self.adjacency[i] {
                if hops[j].is_none() {
                    hops[j] = next;
                    queue.push_back(j);
                }
            }
        }
        Some(hops)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DoIError {
    #[error("unknown vertex '{0}'")]
    UnknownVertex(String),
    #[error("attribute '{0}' is not defined on any vertex")]
    UnknownAttribute(String),
    #[error("all DoI weights are zero")]
    ZeroWeights,
    #[error("invalid DoI config: {0}")]
    InvalidConfig(String),
    #[error("expected {expected} component scores, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

pub const DEFAULT_HALF_LIFE_KM: f64 = 2000.0;
pub const DEFAULT_MAX_HOPS: u32 = 4;

#[derive(Clone, Debug, PartialEq)]
pub enum DoIFunction {
    GeoDistance { half_life_km: f64 },
    TopoDistance { max_hops: u32 },
    Degree,
    Attribute(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawComponent", into = "RawComponent")]
pub struct DoIComponent {
    pub function: DoIFunction,
    pub weight: f64,
}

#[derive(Serialize, Deserialize)]
struct RawComponent {
    function: String,
    weight: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    params: BTreeMap<String, f64>,
}

impl TryFrom<RawComponent> for DoIComponent {
    type Error = String;
    fn try_from(r: RawComponent) -> Result<Self, String> {
        let param = |key: &str| r.params.get(key).copied();
        let function = match r.function.as_str() {
            "geo_distance" => DoIFunction::GeoDistance {
                half_life_km: param("half_life_km").unwrap_or(DEFAULT_HALF_LIFE_KM),
            },
            "topo_distance" => {
                let h = param("max_hops").unwrap_or(DEFAULT_MAX_HOPS as f64);
                if h.fract() != 0.0 || !(1.0..=u32::MAX as f64).contains(&h) {
                    return Err(format!("max_hops must be a positive integer, got {h}"));
                }
                DoIFunction::TopoDistance { max_hops: h as u32 }
            }
            "degree" => DoIFunction::Degree,
            f => match f.strip_prefix("attribute:") {
                Some(name) if !name.is_empty() => DoIFunction::Attribute(name.to_string()),
                _ => return Err(format!("unknown DoI function '{f}'")),
            },
        };
        Ok(Self { function, weight: r.weight })
    }
}

impl From<DoIComponent> for RawComponent {
    fn from(c: DoIComponent) -> Self {
        let mut params = BTreeMap::new();
        let function = match c.function {
            DoIFunction::GeoDistance { half_life_km } => {
                params.insert("half_life_km".into(), half_life_km);
                "geo_distance".to_string()
            }
            DoIFunction::TopoDistance { max_hops } => {
                params.insert("max_hops".into(), max_hops as f64);
                "topo_distance".to_string()
            }
            DoIFunction::Degree => "degree".to_string(),
            DoIFunction::Attribute(name) => format!("attribute:{name}"),
        };
        Self {
            function,
            weight: c.weight,
            params,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoIConfig {
    pub components: Vec<DoIComponent>,
    pub threshold: f64,
    pub max_proxies: usize,
}

impl Default for DoIConfig {
    fn default() -> Self {
        Self {
            components: vec![
                DoIComponent {
                    function: DoIFunction::GeoDistance {
                        half_life_km: DEFAULT_HALF_LIFE_KM,
                    },
                    weight: 1.0,
                },
                DoIComponent {
                    function: DoIFunction::TopoDistance {
                        max_hops: DEFAULT_MAX_HOPS,
                    },
                    weight: 1.0,
                },
                DoIComponent {
                    function: DoIFunction::Degree,
                    weight: 0.5,
                },
            ],
            threshold: 0.3,
            max_proxies: 8,
        }
    }
}

impl DoIConfig {
    pub fn validate(&self) -> Result<(), DoIError> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(DoIError::InvalidConfig(format!(
                "threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        for c in &self.components {
            if !(c.weight.is_finite() && c.weight >= 0.0) {
                return Err(DoIError::InvalidConfig(format!("weight {} must be finite and >= 0", c.weight)));
            }
            if let DoIFunction::GeoDistance { half_life_km } = c.function {
                if !(half_life_km > 0.0 && half_life_km.is_finite()) {
                    return Err(DoIError::InvalidConfig(format!("half_life_km {half_life_km} must be > 0")));
                }
            }
            if let DoIFunction::TopoDistance { max_hops: 0 } = c.function {
                return Err(DoIError::InvalidConfig("max_hops must be >= 1".into()));
            }
        }
        if !self.components.iter().any(|c| c.weight > 0.0) {
            return Err(DoIError::ZeroWeights);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoIScore {
    pub id: String,
    pub score: f64,
}

pub fn doi_geo_distance(focus: &GeoVertex, v: &GeoVertex, half_life: Kilometers) -> f64 {
    let d = great_circle_distance(focus.coord, v.coord).value();
    (-std::f64::consts::LN_2 * d / half_life.value()).exp()
}

fn topo_score(hops: Option<usize>, max_hops: u32) -> f64 {
    match hops {
        Some(h) => {
            let m = max_hops.max(1) as f64;
            1.0 - (h as f64).min(m) / m
        }
        None => 0.0,
    }
}

pub fn doi_topo_distance(graph: &GeoGraph, focus: &str, v: &str, max_hops: u32) -> Result<f64, DoIError> {
    let target = graph.idx(v)?;
    let hops = graph
        .hops_from(focus)
        .ok_or_else(|| DoIError::UnknownVertex(focus.to_string()))?;
    Ok(topo_score(hops[target], max_hops))
}

pub fn doi_degree(graph: &GeoGraph, v: &str) -> Result<f64, DoIError> {
    let i = graph.idx(v)?;
    Ok(if graph.max_degree == 0 {
        0.0
    } else {
        graph.adjacency[i].len() as f64 / graph.max_degree as f64
    })
}

pub fn doi_attribute(graph: &GeoGraph, v: &str, name: &str) -> Result<f64, DoIError> {
    let i = graph.idx(v)?;
    let max = *graph
        .attribute_max
        .get(name)
        .ok_or_else(|| DoIError::UnknownAttribute(name.to_string()))?;
    let value = graph.vertices[i].attributes.get(name).copied().unwrap_or(0.0);
    Ok(if max > 0.0 { (value / max).clamp(0.0, 1.0) } else { 0.0 })
}

pub fn combine_doi(cfg: &DoIConfig, scores: &[f64]) -> Result<f64, DoIError> {
    if scores.len() != cfg.components.len() {
        return Err(DoIError::LengthMismatch {
            expected: cfg.components.len(),
            got: scores.len(),
        });
    }
    let total: f64 = cfg.components.iter().map(|c| c.weight).sum();
    if total <= 0.0 {
        return Err(DoIError::ZeroWeights);
    }
    let sum: f64 = cfg.components.iter().zip(scores).map(|(c, f)| c.weight * f).sum();
    Ok((sum / total).clamp(0.0, 1.0))
}

/// Per-focus scoring context with the hop table computed once.
struct Scorer<'a> {
    graph: &'a GeoGraph,
    cfg: &'a DoIConfig,
    focus: usize,
    hops: Vec<Option<usize>>,
}

impl<'a> Scorer<'a> {
    fn new(graph: &'a GeoGraph, focus: &str, cfg: &'a DoIConfig) -> Result<Self, DoIError> {
        cfg.validate()?;
        for c in &cfg.components {
            if let DoIFunction::Attribute(name) = &c.function {
                if !graph.attribute_max.contains_key(name) {
                    return Err(DoIError::UnknownAttribute(name.clone()));
                }
            }
        }
        let idx = graph.idx(focus)?;
        let hops = graph.hops_from(focus).expect("focus exists");
        Ok(Self {
            graph,
            cfg,
            focus: idx,
            hops,
        })
    }

    fn components(&self, v: usize) -> Vec<f64> {
        let g = self.graph;
        let vertex = &g.vertices[v];
        self.cfg
            .components
            .iter()
            .map(|c| match &c.function {
                DoIFunction::GeoDistance { half_life_km } => doi_geo_distance(
                    &g.vertices[self.focus],
                    vertex,
                    Kilometers::new(half_life_km.min(crate::geodesy::HALF_CIRCUMFERENCE_KM))
                        .expect("validated half-life"),
                ),
                DoIFunction::TopoDistance { max_hops } => topo_score(self.hops[v], *max_hops),
                DoIFunction::Degree => doi_degree(g, &vertex.id).expect("vertex exists"),
                DoIFunction::Attribute(name) => doi_attribute(g, &vertex.id, name).expect("checked attribute"),
            })
            .collect()
    }

    fn score(&self, v: usize) -> f64 {
        combine_doi(self.cfg, &self.components(v)).expect("validated config")
    }
}

fn rank(scores: &mut Vec<DoIScore>, cfg: &DoIConfig) {
    scores.retain(|s| s.score >= cfg.threshold);
    scores.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
    scores.truncate(cfg.max_proxies);
}

/// Scores every vertex except `focus`, keeps those ≥ threshold, best first
/// (ties by id), at most `max_proxies`.
pub fn select_vertices(graph: &GeoGraph, focus: &str, cfg: &DoIConfig) -> Result<Vec<DoIScore>, DoIError> {
    let scorer = Scorer::new(graph, focus, cfg)?;
    let mut scores: Vec<DoIScore> = (0..graph.len())
        .into_par_iter()
        .filter(|&i| i != scorer.focus)
        .map(|i| DoIScore {
            id: graph.vertices[i].id.clone(),
            score: scorer.score(i),
        })
        .collect();
    rank(&mut scores, cfg);
    Ok(scores)
}

/// Vertices of interest to either end of a hop. Each candidate is scored
/// against the geographically nearer endpoint; the endpoints themselves are
/// not part of the set.
pub fn transition_interest_set(
    graph: &GeoGraph,
    from: &str,
    to: &str,
    cfg: &DoIConfig,
) -> Result<Vec<DoIScore>, DoIError> {
    let a = select_vertices(graph, from, cfg)?;
    if from == to {
        return Ok(a);
    }
    let b = select_vertices(graph, to, cfg)?;
    let from_scorer = Scorer::new(graph, from, cfg)?;
    let to_scorer = Scorer::new(graph, to, cfg)?;
    let (fc, tc) = (graph.vertices[from_scorer.focus].coord, graph.vertices[to_scorer.focus].coord);
    let ids: BTreeSet<&str> = a
        .iter()
        .chain(&b)
        .map(|s| s.id.as_str())
        .filter(|id| *id != from && *id != to)
        .collect();
    let mut scores: Vec<DoIScore> = ids
        .into_iter()
        .map(|id| {
            let i = graph.index[id];
            let c = graph.vertices[i].coord;
            let nearer_from = great_circle_distance(fc, c).value() <= great_circle_distance(tc, c).value();
            let scorer = if nearer_from { &from_scorer } else { &to_scorer };
            DoIScore {
                id: id.to_string(),
                score: scorer.score(i),
            }
        })
        .collect();
    rank(&mut scores, cfg);
    Ok(scores)
}
