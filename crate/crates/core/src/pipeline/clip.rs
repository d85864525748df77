//! Axis-aligned rectangle clipping for polylines (Liang–Barsky) and rings
//! (Sutherland–Hodgman).

use serde::{Deserialize, Serialize};

use crate::projection::PlanePoint;
use crate::transition::Viewport;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub fn of_viewport(v: &Viewport) -> Self {
        let (min_x, min_y, max_x, max_y) = v.bounds();
        Self { min_x, min_y, max_x, max_y }
    }

    pub fn contains(&self, p: PlanePoint) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }

    pub fn expanded(&self, d: f64) -> Self {
        Self {
            min_x: self.min_x - d,
            min_y: self.min_y - d,
            max_x: self.max_x + d,
            max_y: self.max_y + d,
        }
    }

    pub fn union(&self, o: &Rect) -> Rect {
        Rect {
            min_x: self.min_x.min(o.min_x),
            min_y: self.min_y.min(o.min_y),
            max_x: self.max_x.max(o.max_x),
            max_y: self.max_y.max(o.max_y),
        }
    }

    fn clamp(&self, p: PlanePoint) -> PlanePoint {
        PlanePoint::new(p.x.clamp(self.min_x, self.max_x), p.y.clamp(self.min_y, self.max_y))
    }
}

/// Parametric range of segment a→b inside the rectangle, if any.
fn liang_barsky(r: &Rect, a: PlanePoint, b: PlanePoint) -> Option<(f64, f64)> {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let mut t0: f64 = 0.0;
    let mut t1: f64 = 1.0;
    for (p, q) in [
        (-dx, a.x - r.min_x),
        (dx, r.max_x - a.x),
        (-dy, a.y - r.min_y),
        (dy, r.max_y - a.y),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
        }
    }
    (t0 <= t1).then_some((t0, t1))
}

fn lerp(a: PlanePoint, b: PlanePoint, t: f64) -> PlanePoint {
    PlanePoint::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t)
}

/// Pieces of a polyline inside the rectangle.
pub fn clip_polyline(r: &Rect, line: &[PlanePoint]) -> Vec<Vec<PlanePoint>> {
    let mut pieces = Vec::new();
    let mut current: Vec<PlanePoint> = Vec::new();
    if line.len() == 1 {
        if r.contains(line[0]) {
            pieces.push(line.to_vec());
        }
        return pieces;
    }
    for w in line.windows(2) {
        let (a, b) = (w[0], w[1]);
        match liang_barsky(r, a, b) {
            Some((t0, t1)) => {
                let start = if t0 == 0.0 { a } else { r.clamp(lerp(a, b, t0)) };
                let end = if t1 == 1.0 { b } else { r.clamp(lerp(a, b, t1)) };
                if t0 > 0.0 && current.len() > 1 {
                    pieces.push(std::mem::take(&mut current));
                }
                if current.is_empty() || t0 > 0.0 {
                    current = vec![start];
                }
                current.push(end);
                if t1 < 1.0 {
                    pieces.push(std::mem::take(&mut current));
                }
            }
            None => {
                if current.len() > 1 {
                    pieces.push(std::mem::take(&mut current));
                }
                current.clear();
            }
        }
    }
    if current.len() > 1 {
        pieces.push(current);
    }
    pieces
}

/// Clips a closed ring; the result is closed, or empty when nothing is left.
pub fn clip_ring(r: &Rect, ring: &[PlanePoint]) -> Vec<PlanePoint> {
    let mut pts: Vec<PlanePoint> = ring.to_vec();
    if pts.len() > 1 && pts.first() == pts.last() {
        pts.pop();
    }
    type Inside = Box<dyn Fn(PlanePoint) -> bool>;
    type Cross = Box<dyn Fn(PlanePoint, PlanePoint) -> PlanePoint>;
    let r2 = *r;
    let edges: [(Inside, Cross); 4] = [
        (
            Box::new(move |p| p.x >= r2.min_x),
            Box::new(move |a, b| PlanePoint::new(r2.min_x, a.y + (b.y - a.y) * (r2.min_x - a.x) / (b.x - a.x))),
        ),
        (
            Box::new(move |p| p.x <= r2.max_x),
            Box::new(move |a, b| PlanePoint::new(r2.max_x, a.y + (b.y - a.y) * (r2.max_x - a.x) / (b.x - a.x))),
        ),
        (
            Box::new(move |p| p.y >= r2.min_y),
            Box::new(move |a, b| PlanePoint::new(a.x + (b.x - a.x) * (r2.min_y - a.y) / (b.y - a.y), r2.min_y)),
        ),
        (
            Box::new(move |p| p.y <= r2.max_y),
            Box::new(move |a, b| PlanePoint::new(a.x + (b.x - a.x) * (r2.max_y - a.y) / (b.y - a.y), r2.max_y)),
        ),
    ];
    for (inside, cross) in edges.iter() {
        if pts.is_empty() {
            break;
        }
        let input = std::mem::take(&mut pts);
        let mut prev = *input.last().expect("non-empty");
        for &cur in &input {
            match (inside(cur), inside(prev)) {
                (true, true) => pts.push(cur),
                (true, false) => {
                    pts.push(r.clamp(cross(prev, cur)));
                    pts.push(cur);
                }
                (false, true) => pts.push(r.clamp(cross(prev, cur))),
                (false, false) => {}
            }
            prev = cur;
        }
    }
    pts.dedup();
    if pts.len() < 3 {
        return Vec::new();
    }
    pts.push(pts[0]);
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> PlanePoint {
        PlanePoint::new(x, y)
    }

    const R: Rect = Rect {
        min_x: 0.0,
        min_y: 0.0,
        max_x: 10.0,
        max_y: 10.0,
    };

    #[test]
    fn inside_line_is_unchanged() {
        let l = vec![p(1.0, 1.0), p(5.0, 5.0), p(9.0, 2.0)];
        assert_eq!(clip_polyline(&R, &l), vec![l]);
    }

    #[test]
    fn line_leaving_and_reentering_splits() {
        let l = vec![p(5.0, 5.0), p(15.0, 5.0), p(15.0, 8.0), p(5.0, 8.0)];
        let pieces = clip_polyline(&R, &l);
        assert_eq!(pieces, vec![vec![p(5.0, 5.0), p(10.0, 5.0)], vec![p(10.0, 8.0), p(5.0, 8.0)]]);
    }

    #[test]
    fn outside_line_vanishes() {
        assert!(clip_polyline(&R, &[p(-5.0, -5.0), p(-1.0, 20.0)]).is_empty());
    }

    #[test]
    fn crossing_segment_is_trimmed_both_ends() {
        let pieces = clip_polyline(&R, &[p(-5.0, 5.0), p(15.0, 5.0)]);
        assert_eq!(pieces, vec![vec![p(0.0, 5.0), p(10.0, 5.0)]]);
    }

    #[test]
    fn ring_clipping() {
        let big = vec![p(-5.0, -5.0), p(15.0, -5.0), p(15.0, 15.0), p(-5.0, 15.0), p(-5.0, -5.0)];
        let c = clip_ring(&R, &big);
        assert_eq!(c.len(), 5);
        assert!(c.iter().all(|q| R.contains(*q)));
        let away = vec![p(20.0, 20.0), p(30.0, 20.0), p(30.0, 30.0), p(20.0, 20.0)];
        assert!(clip_ring(&R, &away).is_empty());
        let tri = vec![p(5.0, 5.0), p(15.0, 5.0), p(5.0, 8.0), p(5.0, 5.0)];
        let c = clip_ring(&R, &tri);
        assert!(c.iter().all(|q| R.contains(*q)));
        assert_eq!(c.first(), c.last());
    }
}
