//! On-screen classification, edge proxies for off-screen vertices and their
//! aggregation.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{DoIScore, GeoGraph};
use crate::projection::{self, PlanePoint, ProjectionError};
use crate::transition::{FrameSpec, Viewport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("target coincides with the viewport center")]
    DegenerateTarget,
    #[error("unknown vertex '{0}'")]
    UnknownVertex(String),
    #[error("vertex '{id}': {source}")]
    Projection {
        id: String,
        #[source]
        source: ProjectionError,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutConfig {
    /// Proxy band as a fraction of viewport width.
    pub inset_margin: f64,
    /// Proxy widget diameter as a fraction of viewport width.
    pub proxy_diameter: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            inset_margin: 0.08,
            proxy_diameter: 0.12,
        }
    }
}

/// Half extents of the viewport shrunk by the inset margin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Inset {
    pub center: PlanePoint,
    pub hx: f64,
    pub hy: f64,
}

impl Inset {
    pub fn of(viewport: &Viewport, margin: f64) -> Self {
        let m = margin * viewport.width;
        Self {
            center: viewport.center,
            hx: (viewport.width / 2.0 - m).max(0.0),
            hy: (viewport.height() / 2.0 - m).max(0.0),
        }
    }

    pub fn contains(&self, p: PlanePoint) -> bool {
        (p.x - self.center.x).abs() <= self.hx && (p.y - self.center.y).abs() <= self.hy
    }

    pub fn perimeter(&self) -> f64 {
        4.0 * (self.hx + self.hy)
    }

    /// Arc length of a boundary point, counter-clockwise from the middle of
    /// the right edge.
    pub fn boundary_position(&self, p: PlanePoint) -> f64 {
        let (x, y) = (p.x - self.center.x, p.y - self.center.y);
        let (hx, hy) = (self.hx, self.hy);
        let per = self.perimeter();
        // Pick the edge the point is closest to.
        let dr = (x - hx).abs();
        let dt = (y - hy).abs();
        let dl = (x + hx).abs();
        let db = (y + hy).abs();
        let m = dr.min(dt).min(dl).min(db);
        let pos = if m == dr && y >= 0.0 {
            y
        } else if m == dt {
            hy + (hx - x)
        } else if m == dl {
            hy + 2.0 * hx + (hy - y)
        } else if m == db {
            3.0 * hy + 2.0 * hx + (x + hx)
        } else {
            // right edge, below the start point
            4.0 * hy + 4.0 * hx + y
        };
        pos.rem_euclid(per.max(f64::MIN_POSITIVE))
    }

    pub fn boundary_distance(&self, a: f64, b: f64) -> f64 {
        let d = (a - b).abs();
        d.min(self.perimeter() - d)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProxyMember {
    pub id: String,
    pub doi: f64,
    pub is_neighbor: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProxyAnchor {
    /// Highest DoI first.
    pub members: Vec<ProxyMember>,
    pub anchor: PlanePoint,
    /// Plane angle (radians, counter-clockwise from +x) of the ray toward
    /// the target of the first member.
    pub direction: f64,
    pub boundary_position: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnScreenVertex {
    pub id: String,
    pub position: PlanePoint,
    pub doi: f64,
    pub is_focus: bool,
    pub is_neighbor: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameLayout {
    pub viewport: Viewport,
    pub on_screen: Vec<OnScreenVertex>,
    pub proxies: Vec<ProxyAnchor>,
    pub explicit_edges: Vec<(String, String)>,
    pub north_arrow_angle: f64,
}

pub type Target = (String, PlanePoint);

/// Splits targets into those inside the inset rectangle (boundary inclusive)
/// and the rest, preserving order.
pub fn classify(viewport: &Viewport, margin: f64, targets: &[Target]) -> (Vec<Target>, Vec<Target>) {
    let inset = Inset::of(viewport, margin);
    targets.iter().cloned().partition(|(_, p)| inset.contains(*p))
}

/// Singleton proxy where the ray from the viewport center toward `target`
/// leaves the inset rectangle.
pub fn proxy_anchor(
    viewport: &Viewport,
    margin: f64,
    member: ProxyMember,
    target: PlanePoint,
) -> Result<ProxyAnchor, LayoutError> {
    let inset = Inset::of(viewport, margin);
    let d = target.sub(viewport.center);
    if d.x == 0.0 && d.y == 0.0 {
        return Err(LayoutError::DegenerateTarget);
    }
    let tx = if d.x != 0.0 { inset.hx / d.x.abs() } else { f64::INFINITY };
    let ty = if d.y != 0.0 { inset.hy / d.y.abs() } else { f64::INFINITY };
    let anchor = viewport.center.add(d.scale(tx.min(ty)));
    Ok(ProxyAnchor {
        members: vec![member],
        anchor,
        direction: d.y.atan2(d.x),
        boundary_position: inset.boundary_position(anchor),
    })
}

fn by_rank(a: &ProxyMember, b: &ProxyMember) -> std::cmp::Ordering {
    b.doi.total_cmp(&a.doi).then_with(|| a.id.cmp(&b.id))
}

/// Greedy clustering in DoI order: an anchor joins the first (highest
/// ranked) cluster whose representative lies within `diameter` along the
/// inset perimeter, otherwise it starts a new cluster.
pub fn aggregate_proxies(inset: &Inset, anchors: Vec<ProxyAnchor>, diameter: f64) -> Vec<ProxyAnchor> {
    let mut ordered = anchors;
    for a in &mut ordered {
        a.members.sort_by(by_rank);
    }
    ordered.sort_by(|a, b| by_rank(&a.members[0], &b.members[0]));
    let mut clusters: Vec<ProxyAnchor> = Vec::new();
    for a in ordered {
        let home = clusters
            .iter_mut()
            .find(|c| inset.boundary_distance(c.boundary_position, a.boundary_position) <= diameter);
        match home {
            Some(c) => {
                c.members.extend(a.members);
                c.members.sort_by(by_rank);
            }
            None => clusters.push(a),
        }
    }
    clusters
}

/// Projects and lays out the focus vertices plus the DoI selection for one frame.
pub fn layout_frame(
    frame: &FrameSpec,
    graph: &GeoGraph,
    focus: &[&str],
    selection: &[DoIScore],
    cfg: &LayoutConfig,
) -> Result<FrameLayout, LayoutError> {
    let viewport = frame.viewport;
    let inset = Inset::of(&viewport, cfg.inset_margin);
    let focus_set: BTreeSet<&str> = focus.iter().copied().collect();
    let mut entries: Vec<(&str, f64, bool)> = focus.iter().map(|id| (*id, 1.0, true)).collect();
    let mut seen = focus_set.clone();
    for s in selection {
        if seen.insert(s.id.as_str()) {
            entries.push((s.id.as_str(), s.score, false));
        }
    }

    let mut on_screen = Vec::new();
    let mut singles = Vec::new();
    for (id, doi, is_focus) in entries {
        let vertex = graph.vertex(id).ok_or_else(|| LayoutError::UnknownVertex(id.to_string()))?;
        let position = projection::project(&frame.spec, vertex.coord).map_err(|source| LayoutError::Projection {
            id: id.to_string(),
            source,
        })?;
        let is_neighbor = !is_focus && focus.iter().any(|f| graph.are_adjacent(f, id));
        if inset.contains(position) {
            on_screen.push(OnScreenVertex {
                id: id.to_string(),
                position,
                doi,
                is_focus,
                is_neighbor,
            });
        } else {
            let member = ProxyMember {
                id: id.to_string(),
                doi,
                is_neighbor,
            };
            singles.push(proxy_anchor(&viewport, cfg.inset_margin, member, position)?);
        }
    }
    let proxies = aggregate_proxies(&inset, singles, cfg.proxy_diameter * viewport.width);

    let visible: BTreeSet<&str> = on_screen.iter().map(|v| v.id.as_str()).collect();
    let explicit_edges = graph
        .edges()
        .iter()
        .filter(|(a, b)| visible.contains(a.as_str()) && visible.contains(b.as_str()))
        .cloned()
        .collect();
    Ok(FrameLayout {
        viewport,
        on_screen,
        proxies,
        explicit_edges,
        north_arrow_angle: frame.north_arrow_angle,
    })
}
