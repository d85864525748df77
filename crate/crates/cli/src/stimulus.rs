//! Video-stimulus reproduction: a hop between two sphere points rendered as
//! one SVG per frame, plus metadata with the ground-truth azimuth.

use std::path::Path;

use geohop_core::geodesy::{great_circle_distance, initial_bearing, GeoCoord};
use geohop_core::pipeline::{project_features, AssetConfig, FeatureSet, Rect};
use geohop_core::projection::{project, MERCATOR_MAX_LAT};
use geohop_core::transition::{
    correct_azimuth_start_vs_mid, frames, plan_transition_between, PhaseKind, ProjectionMode, TransitionConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::svg::{render_frame, Marker};
use crate::CliError;

/// Distance bins in km, inclusive.
pub const STUDY_BINS_KM: [(f64, f64); 4] = [(500.0, 3000.0), (3000.0, 6000.0), (6000.0, 9000.0), (9000.0, 12000.0)];

const MAX_DRAWS: usize = 1_000_000;

#[derive(Clone, Copy, Debug)]
pub enum Endpoints {
    Bin(u8),
    Explicit { from: GeoCoord, to: GeoCoord },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StimulusMetadata {
    pub projection: ProjectionMode,
    pub seed: u64,
    pub bin: Option<u8>,
    pub bin_km: Option<(f64, f64)>,
    pub from: GeoCoord,
    pub to: GeoCoord,
    pub distance_km: f64,
    /// Initial bearing from start to end, degrees clockwise from north.
    pub azimuth_deg: f64,
    /// North direction at the start minus north at the midpoint, degrees.
    pub azimuth_correction_deg: f64,
    pub projection_nodes: Vec<GeoCoord>,
    pub duration_s: f64,
    pub frame_rate: f64,
    pub frame_count: usize,
    pub width_px: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub index: usize,
    pub t: f64,
    pub phase: PhaseKind,
    pub file: String,
}

pub struct Stimulus {
    pub metadata: StimulusMetadata,
    pub frames: Vec<(FrameEntry, String)>,
}

// Restricted to the Mercator latitude band so that one seed gives the same
// pair in every projection.
fn sphere_point(rng: &mut ChaCha8Rng) -> GeoCoord {
    let zmax = MERCATOR_MAX_LAT.to_radians().sin();
    let z: f64 = rng.gen_range(-zmax..=zmax);
    let lon: f64 = rng.gen_range(-180.0..180.0);
    GeoCoord::new(z.asin().to_degrees(), lon).expect("in range")
}

/// Rejection-samples uniform sphere point pairs until one lands in the bin.
/// Points are uniform on the sphere inside the Mercator latitude band.
pub fn sample_pair(bin: u8, seed: u64) -> Result<(GeoCoord, GeoCoord), CliError> {
    let (lo, hi) = *STUDY_BINS_KM
        .get((bin as usize).wrapping_sub(1))
        .ok_or(CliError::InvalidBin(bin))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_DRAWS {
        let (a, b) = (sphere_point(&mut rng), sphere_point(&mut rng));
        let d = great_circle_distance(a, b).value();
        if (lo..=hi).contains(&d) {
            return Ok((a, b));
        }
    }
    Err(CliError::EmptyBin(bin))
}

pub fn render_stimulus(
    projection: ProjectionMode,
    endpoints: Endpoints,
    seed: u64,
    features: &FeatureSet,
    transition: &TransitionConfig,
    assets: &AssetConfig,
) -> Result<Stimulus, CliError> {
    let (from, to, bin) = match endpoints {
        Endpoints::Bin(k) => {
            let (a, b) = sample_pair(k, seed)?;
            (a, b, Some(k))
        }
        Endpoints::Explicit { from, to } => (from, to, None),
    };
    let plan = plan_transition_between(("start", from), ("end", to), projection, transition)?;
    let azimuth_deg = if from == to {
        0.0
    } else {
        initial_bearing(from, to)?.degrees()
    };
    let projection_nodes = match plan.spec_mid.as_two_point() {
        None => Vec::new(),
        Some(s) if s.node_a == s.node_b => vec![s.node_a],
        Some(s) => vec![s.node_a, s.node_b],
    };
    let all = frames(&plan)?;
    let width_px = assets.screen_pixels;
    let mut out = Vec::with_capacity(all.len());
    for f in &all {
        let tol = f.viewport.width / width_px as f64 * assets.tolerance_px;
        let geometry = project_features(&f.spec, features, Rect::of_viewport(&f.viewport), tol)?;
        let markers = [
            Marker {
                at: project(&f.spec, from)?,
                class: "start",
            },
            Marker {
                at: project(&f.spec, to)?,
                class: "end",
            },
        ];
        let entry = FrameEntry {
            index: f.index,
            t: f.t,
            phase: f.phase,
            file: format!("frame_{:05}.svg", f.index),
        };
        out.push((entry, render_frame(f, &geometry, &markers, width_px)));
    }
    Ok(Stimulus {
        metadata: StimulusMetadata {
            projection,
            seed,
            bin,
            bin_km: bin.map(|k| STUDY_BINS_KM[k as usize - 1]),
            from,
            to,
            distance_km: great_circle_distance(from, to).value(),
            azimuth_deg,
            azimuth_correction_deg: correct_azimuth_start_vs_mid(&plan.spec_mid)?,
            projection_nodes,
            duration_s: plan.total_duration(),
            frame_rate: plan.frame_rate,
            frame_count: all.len(),
            width_px,
        },
        frames: out,
    })
}

impl Stimulus {
    /// Writes the frames, `index.json` and `metadata.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        for (entry, svg) in &self.frames {
            let p = dir.join(&entry.file);
            std::fs::write(&p, svg).map_err(CliError::io(&p))?;
        }
        let index: Vec<&FrameEntry> = self.frames.iter().map(|(e, _)| e).collect();
        for (name, value) in [
            ("index.json", serde_json::to_vec_pretty(&index)),
            ("metadata.json", serde_json::to_vec_pretty(&self.metadata)),
        ] {
            let p = dir.join(name);
            std::fs::write(&p, value.expect("serialisable")).map_err(CliError::io(&p))?;
        }
        Ok(())
    }
}
