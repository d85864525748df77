//! Batch operations over a geohop dataset: validation, asset precomputation,
//! stimulus rendering and the tpeqd/Mercator baseline comparison.

pub mod baseline;
pub mod precompute;
pub mod stimulus;
pub mod svg;
pub mod validate;

use std::path::PathBuf;

use geohop_core::geodesy::{GeoCoord, GeodesyError};
use geohop_core::graph::GraphError;
use geohop_core::pipeline::PipelineError;
use geohop_core::projection::ProjectionError;
use geohop_core::transition::TransitionError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid coordinate '{0}': expected lat,lon in degrees")]
    InvalidCoordinate(String),
    #[error("bin must be 1..=4, got {0}")]
    InvalidBin(u8),
    #[error("no pair found for bin {0}")]
    EmptyBin(u8),
    #[error("{0}")]
    InvalidArgument(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Transition(#[from] TransitionError),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error(transparent)]
    Geodesy(#[from] GeodesyError),
    #[error(transparent)]
    Config(#[from] geohop_service::ConfigError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    /// 2 for I/O trouble, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Graph(GraphError::Io(_)) | CliError::Pipeline(PipelineError::Io { .. }) => 2,
            _ => 1,
        }
    }
}

/// Parses `lat,lon` in degrees.
pub fn parse_latlon(s: &str) -> Result<GeoCoord, CliError> {
    let bad = || CliError::InvalidCoordinate(s.to_string());
    let (lat, lon) = s.split_once(',').ok_or_else(bad)?;
    let lat: f64 = lat.trim().parse().map_err(|_| bad())?;
    let lon: f64 = lon.trim().parse().map_err(|_| bad())?;
    if !(-180.0..=180.0).contains(&lon) {
        return Err(bad());
    }
    GeoCoord::new(lat, lon).map_err(|_| bad())
}
