//! Minimal SVG writer for projected frames.

use std::fmt::Write;

use geohop_core::pipeline::{PlaneGeometry, ProjectedGeometry};
use geohop_core::projection::PlanePoint;
use geohop_core::transition::FrameSpec;

pub struct Marker<'a> {
    pub at: PlanePoint,
    pub class: &'a str,
}

struct Screen {
    min_x: f64,
    min_y: f64,
    max_y: f64,
    scale: f64,
    y_up: bool,
}

impl Screen {
    fn px(&self, p: [f64; 2]) -> (f64, f64) {
        let x = (p[0] - self.min_x) * self.scale;
        let y = if self.y_up {
            (self.max_y - p[1]) * self.scale
        } else {
            (p[1] - self.min_y) * self.scale
        };
        (x, y)
    }
}

fn style(layer: &str) -> &'static str {
    match layer {
        "land" => r##"fill="#ece6d6" stroke="none""##,
        "countries" => r##"fill="none" stroke="#9a9488" stroke-width="0.6""##,
        "coastline" => r##"fill="none" stroke="#4d6a82" stroke-width="0.9""##,
        _ => r##"fill="none" stroke="#333" stroke-width="0.8""##,
    }
}

fn path(out: &mut String, s: &Screen, pts: &[[f64; 2]], close: bool) {
    for (i, p) in pts.iter().enumerate() {
        let (x, y) = s.px(*p);
        let _ = write!(out, "{}{x:.2} {y:.2}", if i == 0 { "M" } else { "L" });
    }
    if close {
        out.push('Z');
    }
}

/// Renders one frame at `width_px`; height follows the viewport aspect.
pub fn render_frame(frame: &FrameSpec, geometry: &ProjectedGeometry, markers: &[Marker], width_px: u32) -> String {
    let vp = &frame.viewport;
    let (min_x, min_y, _, max_y) = vp.bounds();
    let w = width_px as f64;
    let h = (w * vp.aspect).round();
    let s = Screen {
        min_x,
        min_y,
        max_y,
        scale: w / vp.width,
        y_up: frame.spec.y_axis_up(),
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"##
    );
    let _ = writeln!(out, r##"<rect width="{w}" height="{h}" fill="#f7fbff"/>"##);
    for (layer, items) in &geometry.layers {
        let _ = writeln!(out, r#"<g class="{layer}" {}>"#, style(layer));
        for g in items {
            match g {
                PlaneGeometry::Point(p) => {
                    let (x, y) = s.px(*p);
                    let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2"/>"#);
                }
                PlaneGeometry::Polyline(line) => {
                    let mut d = String::new();
                    path(&mut d, &s, line, false);
                    let _ = writeln!(out, r#"<path d="{d}"/>"#);
                }
                PlaneGeometry::Polygon(rings) => {
                    let mut d = String::new();
                    for r in rings {
                        path(&mut d, &s, r, true);
                    }
                    let _ = writeln!(out, r#"<path fill-rule="evenodd" d="{d}"/>"#);
                }
            }
        }
        out.push_str("</g>\n");
    }
    for m in markers {
        let (x, y) = s.px([m.at.x, m.at.y]);
        let fill = if m.class == "start" { "#1a9850" } else { "#d73027" };
        let _ = writeln!(
            out,
            r##"<circle class="{}" cx="{x:.2}" cy="{y:.2}" r="6" fill="{fill}" stroke="#fff" stroke-width="1.5"/>"##,
            m.class
        );
    }
    // North arrow, top right.
    let (ax, ay) = (w - 30.0, 40.0);
    let _ = writeln!(
        out,
        r##"<g class="north" transform="translate({ax:.2} {ay:.2}) rotate({:.4})"><path d="M0 -18L7 10L0 4L-7 10Z" fill="#222"/><text y="-22" text-anchor="middle" font-size="11">N</text></g>"##,
        frame.north_arrow_angle.to_degrees()
    );
    out.push_str("</svg>\n");
    out
}
