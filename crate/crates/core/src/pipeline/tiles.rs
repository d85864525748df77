use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::clip::Rect;
use super::PipelineError;
use crate::transition::{frames, ProjectionMode, TransitionPlan, Viewport};

pub const DEFAULT_MAX_ZOOM: u8 = 18;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TileRef {
    pub z: u8,
    pub x: u32,
    pub y: u32,
}

impl TileRef {
    pub fn new(z: u8, x: u32, y: u32) -> Option<Self> {
        let n = 1u64 << z;
        ((x as u64) < n && (y as u64) < n).then_some(Self { z, x, y })
    }

    /// Normalised square covered by the tile.
    pub fn bounds(&self) -> Rect {
        let n = (1u64 << self.z) as f64;
        Rect {
            min_x: self.x as f64 / n,
            min_y: self.y as f64 / n,
            max_x: (self.x + 1) as f64 / n,
            max_y: (self.y + 1) as f64 / n,
        }
    }

    pub fn url(&self, template: &str) -> String {
        template
            .replace("{z}", &self.z.to_string())
            .replace("{x}", &self.x.to_string())
            .replace("{y}", &self.y.to_string())
    }
}

/// Zoom level at which one tile pixel is about one screen pixel.
pub fn zoom_for_width(width: f64, tile_pixels: u32, screen_pixels: u32, max_zoom: u8) -> u8 {
    let z = (screen_pixels as f64 / (tile_pixels as f64 * width)).log2().round();
    if z.is_nan() {
        return 0;
    }
    z.clamp(0.0, max_zoom as f64) as u8
}

/// Inclusive tile index range covering [lo, hi] on an axis with `n` tiles.
fn index_range(lo: f64, hi: f64, n: u32) -> Option<(u32, u32)> {
    let (lo, hi) = (lo.max(0.0), hi.min(1.0));
    if lo > hi {
        return None;
    }
    let nf = n as f64;
    let first = ((lo * nf).floor() as i64).clamp(0, n as i64 - 1);
    let last = ((hi * nf).ceil() as i64 - 1).clamp(first, n as i64 - 1);
    Some((first as u32, last as u32))
}

/// Tiles at zoom `z` intersecting the viewport, plus `pad` tiles on every
/// side, clamped to the world.
pub fn tiles_for_viewport(v: &Viewport, z: u8, pad: u32) -> Vec<TileRef> {
    let n = 1u32 << z;
    let r = Rect::of_viewport(v);
    let (Some((x0, x1)), Some((y0, y1))) = (index_range(r.min_x, r.max_x, n), index_range(r.min_y, r.max_y, n))
    else {
        return Vec::new();
    };
    let (x0, y0) = (x0.saturating_sub(pad), y0.saturating_sub(pad));
    let (x1, y1) = ((x1 + pad).min(n - 1), (y1 + pad).min(n - 1));
    let mut out = Vec::new();
    for x in x0..=x1 {
        for y in y0..=y1 {
            out.push(TileRef { z, x, y });
        }
    }
    out
}

/// Union over all frames of a Mercator plan of the tiles each frame needs.
pub fn plan_tiles(
    plan: &TransitionPlan,
    tile_pixels: u32,
    screen_pixels: u32,
    max_zoom: u8,
) -> Result<BTreeSet<TileRef>, PipelineError> {
    if plan.mode != ProjectionMode::Mercator {
        return Err(PipelineError::NotMercator);
    }
    let mut set = BTreeSet::new();
    for f in frames(plan)? {
        let z = zoom_for_width(f.viewport.width, tile_pixels, screen_pixels, max_zoom);
        set.extend(tiles_for_viewport(&f.viewport, z, 1));
    }
    Ok(set)
}
