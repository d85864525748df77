//! Basemap ingestion, per-frame projected geometry, Mercator tile planning
//! and precomputed transition asset bundles.

pub mod assets;
pub mod clip;
pub mod features;
pub mod project;
pub mod tiles;

use thiserror::Error;

use crate::geodesy::GeodesyError;
use crate::projection::ProjectionError;
use crate::transition::TransitionError;

pub use assets::{bundle_for_plan, precompute_transition_assets, AssetBundle, AssetConfig, AssetStore, Keyframe};
pub use clip::Rect;
pub use features::{load_features, parse_features, Feature, FeatureGeometry, FeatureSet};
pub use project::{densify_path, project_features, PlaneGeometry, ProjectedGeometry};
pub use tiles::{plan_tiles, TileRef};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse input: {0}")]
    Parse(String),
    #[error("no usable features ({skipped} skipped)")]
    EmptySet { skipped: usize },
    #[error("invalid coordinate {0}")]
    InvalidCoordinate(String),
    #[error("tolerance must be finite and >= 0, got {0}")]
    InvalidTolerance(f64),
    #[error("tile plans need a Mercator transition")]
    NotMercator,
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error(transparent)]
    Transition(#[from] TransitionError),
}

impl From<GeodesyError> for PipelineError {
    fn from(e: GeodesyError) -> Self {
        PipelineError::Projection(e.into())
    }
}
