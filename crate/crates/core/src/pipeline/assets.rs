use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::clip::Rect;
use super::features::FeatureSet;
use super::project::{project_features, ProjectedGeometry};
use super::tiles::{plan_tiles, TileRef, DEFAULT_MAX_ZOOM};
use super::PipelineError;
use crate::graph::GeoGraph;
use crate::transition::{
    frames, plan_transition, FrameSpec, PhaseKind, ProjectionMode, TransitionConfig, TransitionPlan,
};

pub const BUNDLE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssetConfig {
    /// Specs sampled per morph phase, endpoints included.
    pub morph_keyframes: usize,
    /// Output raster width the simplification tolerance refers to.
    pub screen_pixels: u32,
    pub tolerance_px: f64,
    pub tile_pixels: u32,
    pub max_zoom: u8,
    /// Largest width ratio within one zoom-pan keyframe.
    pub zoom_band: f64,
}

impl Default for AssetConfig {
    fn default() -> Self {
        Self {
            morph_keyframes: 5,
            screen_pixels: 1024,
            tolerance_px: 0.5,
            tile_pixels: 256,
            max_zoom: DEFAULT_MAX_ZOOM,
            zoom_band: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub phase: PhaseKind,
    /// Inclusive frame index range served by this keyframe.
    pub first_frame: usize,
    pub last_frame: usize,
    pub geometry: ProjectedGeometry,
    pub spec: crate::projection::ProjectionSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssetBundle {
    pub version: u32,
    pub from: String,
    pub to: String,
    pub mode: ProjectionMode,
    pub config_hash: String,
    pub total_duration: f64,
    pub frame_count: usize,
    pub keyframes: Vec<Keyframe>,
    pub tiles: Vec<TileRef>,
}

impl AssetBundle {
    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("bundle serialises")
    }

    /// Keyframe to draw for frame `index`.
    pub fn keyframe_for(&self, index: usize) -> Option<&Keyframe> {
        self.keyframes
            .iter()
            .find(|k| k.first_frame <= index && index <= k.last_frame)
    }
}

/// Hash over everything that influences a bundle besides the vertex pair.
pub fn config_hash(
    mode: ProjectionMode,
    transition: &TransitionConfig,
    assets: &AssetConfig,
    features: &FeatureSet,
) -> String {
    let doc = serde_json::json!({
        "version": BUNDLE_VERSION,
        "mode": mode,
        "transition": transition,
        "assets": assets,
        "features": features.fingerprint(),
    });
    hex::encode(Sha256::digest(serde_json::to_vec(&doc).expect("json")))
}

fn tolerance_for(width: f64, cfg: &AssetConfig) -> f64 {
    width / cfg.screen_pixels as f64 * cfg.tolerance_px
}

fn phase_frames(all: &[FrameSpec], kind: PhaseKind) -> Vec<&FrameSpec> {
    all.iter().filter(|f| f.phase == kind).collect()
}

fn morph_keyframes(
    frames_in_phase: &[&FrameSpec],
    fs: &FeatureSet,
    cfg: &AssetConfig,
    out: &mut Vec<Keyframe>,
) -> Result<(), PipelineError> {
    let Some(first) = frames_in_phase.first() else {
        return Ok(());
    };
    let n = frames_in_phase.len();
    let k = cfg.morph_keyframes.max(2).min(n);
    let viewport = first.viewport;
    let clip = Rect::of_viewport(&viewport);
    let tol = tolerance_for(viewport.width, cfg);
    for i in 0..k {
        // Frames [lo, hi] of this phase map to keyframe i.
        let lo = (i * n) / k;
        let hi = ((i + 1) * n) / k - 1;
        let mid = &frames_in_phase[(lo + hi) / 2];
        let spec = if i == 0 {
            frames_in_phase[0].spec.clone()
        } else if i + 1 == k {
            frames_in_phase[n - 1].spec.clone()
        } else {
            mid.spec.clone()
        };
        out.push(Keyframe {
            phase: first.phase,
            first_frame: frames_in_phase[lo].index,
            last_frame: frames_in_phase[hi].index,
            geometry: project_features(&spec, fs, clip, tol)?,
            spec,
        });
    }
    Ok(())
}

fn zoom_pan_keyframes(
    frames_in_phase: &[&FrameSpec],
    fs: &FeatureSet,
    cfg: &AssetConfig,
    out: &mut Vec<Keyframe>,
) -> Result<(), PipelineError> {
    let mut i = 0;
    while i < frames_in_phase.len() {
        let start = i;
        let (mut lo_w, mut hi_w) = (frames_in_phase[i].viewport.width, frames_in_phase[i].viewport.width);
        let mut clip = Rect::of_viewport(&frames_in_phase[i].viewport);
        i += 1;
        while i < frames_in_phase.len() {
            let w = frames_in_phase[i].viewport.width;
            if hi_w.max(w) / lo_w.min(w) > cfg.zoom_band {
                break;
            }
            lo_w = lo_w.min(w);
            hi_w = hi_w.max(w);
            clip = clip.union(&Rect::of_viewport(&frames_in_phase[i].viewport));
            i += 1;
        }
        let spec = frames_in_phase[start].spec.clone();
        out.push(Keyframe {
            phase: PhaseKind::ZoomPan,
            first_frame: frames_in_phase[start].index,
            last_frame: frames_in_phase[i - 1].index,
            geometry: project_features(&spec, fs, clip, tolerance_for(lo_w, cfg))?,
            spec,
        });
    }
    Ok(())
}

/// Precomputes the geometry (or tile list, for Mercator) needed to play a hop.
pub fn precompute_transition_assets(
    graph: &GeoGraph,
    from: &str,
    to: &str,
    mode: ProjectionMode,
    fs: &FeatureSet,
    transition: &TransitionConfig,
    cfg: &AssetConfig,
) -> Result<AssetBundle, PipelineError> {
    let plan = plan_transition(graph, from, to, mode, transition)?;
    bundle_for_plan(&plan, fs, transition, cfg)
}

pub fn bundle_for_plan(
    plan: &TransitionPlan,
    fs: &FeatureSet,
    transition: &TransitionConfig,
    cfg: &AssetConfig,
) -> Result<AssetBundle, PipelineError> {
    let all = frames(plan)?;
    let mut keyframes = Vec::new();
    let mut tiles = Vec::new();
    match plan.mode {
        ProjectionMode::Mercator => {
            tiles = plan_tiles(plan, cfg.tile_pixels, cfg.screen_pixels, cfg.max_zoom)?
                .into_iter()
                .collect();
        }
        _ if plan.from == plan.to => {
            // A hop onto the same place is the static view.
            let f = &all[0];
            keyframes.push(Keyframe {
                phase: PhaseKind::ZoomPan,
                first_frame: 0,
                last_frame: all.len() - 1,
                geometry: project_features(
                    &plan.spec_end,
                    fs,
                    Rect::of_viewport(&f.viewport),
                    tolerance_for(f.viewport.width, cfg),
                )?,
                spec: plan.spec_end.clone(),
            });
        }
        _ => {
            morph_keyframes(&phase_frames(&all, PhaseKind::MorphIn), fs, cfg, &mut keyframes)?;
            zoom_pan_keyframes(&phase_frames(&all, PhaseKind::ZoomPan), fs, cfg, &mut keyframes)?;
            morph_keyframes(&phase_frames(&all, PhaseKind::MorphOut), fs, cfg, &mut keyframes)?;
        }
    }
    Ok(AssetBundle {
        version: BUNDLE_VERSION,
        from: plan.from_vertex.clone(),
        to: plan.to_vertex.clone(),
        mode: plan.mode,
        config_hash: config_hash(plan.mode, transition, cfg, fs),
        total_duration: plan.total_duration(),
        frame_count: all.len(),
        keyframes,
        tiles,
    })
}

/// Directory of bundles keyed by (from, to, config hash).
#[derive(Clone, Debug)]
pub struct AssetStore {
    root: PathBuf,
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

impl AssetStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_for(&self, from: &str, to: &str, config_hash: &str) -> PathBuf {
        let short = &config_hash[..config_hash.len().min(16)];
        self.root
            .join(format!("{}__{}__{}.json", sanitize(from), sanitize(to), short))
    }

    pub fn load(&self, from: &str, to: &str, config_hash: &str) -> Result<Option<AssetBundle>, PipelineError> {
        let path = self.path_for(from, to, config_hash);
        match std::fs::read(&path) {
            Ok(bytes) => Ok(Some(serde_json::from_slice(&bytes).map_err(|e| PipelineError::Parse(e.to_string()))?)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(PipelineError::Io {
                path: path.display().to_string(),
                source: e,
            }),
        }
    }

    /// Writes the bundle atomically. Returns false if an identical file was
    /// already present.
    pub fn write(&self, bundle: &AssetBundle) -> Result<bool, PipelineError> {
        let io = |path: &Path| {
            let p = path.display().to_string();
            move |e| PipelineError::Io { path: p, source: e }
        };
        std::fs::create_dir_all(&self.root).map_err(io(&self.root))?;
        let path = self.path_for(&bundle.from, &bundle.to, &bundle.config_hash);
        let bytes = bundle.to_json();
        if std::fs::read(&path).ok().as_deref() == Some(bytes.as_slice()) {
            return Ok(false);
        }
        let tmp = path.with_extension(format!("json.tmp{}", std::process::id()));
        std::fs::write(&tmp, &bytes).map_err(io(&tmp))?;
        std::fs::rename(&tmp, &path).map_err(io(&path))?;
        Ok(true)
    }
}
