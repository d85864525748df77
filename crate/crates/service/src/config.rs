use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use geohop_core::graph::DoIConfig;
use geohop_core::layout::LayoutConfig;
use geohop_core::pipeline::AssetConfig;
use geohop_core::transition::TransitionConfig;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// One document shared by the service and the command line tool.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub graph: Option<PathBuf>,
    pub basemaps: Vec<PathBuf>,
    /// Static UI bundle; not served when absent.
    pub ui_dir: Option<PathBuf>,
    /// Precomputed asset bundles, also filled on demand when set.
    pub asset_dir: Option<PathBuf>,
    /// Template handed to clients in tile plans.
    pub tile_url_template: String,
    /// Upstream the built-in tile proxy fetches from.
    pub tile_upstream: Option<String>,
    pub tile_cache_dir: Option<PathBuf>,
    pub transition: TransitionConfig,
    pub doi: DoIConfig,
    pub layout: LayoutConfig,
    pub assets: AssetConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            graph: None,
            basemaps: Vec::new(),
            ui_dir: None,
            asset_dir: None,
            tile_url_template: "/api/tiles/{z}/{x}/{y}.png".into(),
            tile_upstream: None,
            tile_cache_dir: None,
            transition: TransitionConfig::default(),
            doi: DoIConfig::default(),
            layout: LayoutConfig::default(),
            assets: AssetConfig::default(),
        }
    }
}

impl ServiceConfig {
    /// Reads a TOML document; relative paths are taken relative to its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: PathBuf::new(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.transition
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.doi.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.graph.iter_mut().for_each(fix);
        self.basemaps.iter_mut().for_each(fix);
        self.ui_dir.iter_mut().for_each(fix);
        self.asset_dir.iter_mut().for_each(fix);
        self.tile_cache_dir.iter_mut().for_each(fix);
    }
}
