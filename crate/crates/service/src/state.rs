use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Instant;

use geohop_core::graph::{DoIConfig, GeoGraph};
use geohop_core::pipeline::assets::config_hash;
use geohop_core::pipeline::{load_features, AssetBundle, AssetStore, FeatureSet, PipelineError};
use geohop_core::transition::{ProjectionMode, TransitionPlan};
use thiserror::Error;

use crate::config::ServiceConfig;

/// Transitions kept per session for frame lookups.
const MAX_TRANSITIONS_PER_SESSION: usize = 32;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("no graph configured")]
    NoGraph,
    #[error("graph: {0}")]
    Graph(#[from] geohop_core::graph::GraphError),
    #[error("basemap: {0}")]
    Basemap(#[from] PipelineError),
}

pub struct Dataset {
    pub graph: GeoGraph,
    pub features: FeatureSet,
    /// Bundle config hash per projection mode.
    pub bundle_hashes: BTreeMap<&'static str, String>,
}

impl Dataset {
    pub fn load(cfg: &ServiceConfig) -> Result<Self, LoadError> {
        let graph = GeoGraph::load(cfg.graph.as_ref().ok_or(LoadError::NoGraph)?)?;
        let mut features = FeatureSet::default();
        for path in &cfg.basemaps {
            features.extend(load_features(path)?);
        }
        Ok(Self::new(graph, features, cfg))
    }

    pub fn new(graph: GeoGraph, features: FeatureSet, cfg: &ServiceConfig) -> Self {
        let bundle_hashes = [
            ("mercator", ProjectionMode::Mercator),
            ("tpeqd", ProjectionMode::Tpeqd),
            ("azeqd", ProjectionMode::Azeqd),
        ]
        .into_iter()
        .map(|(k, m)| (k, config_hash(m, &cfg.transition, &cfg.assets, &features)))
        .collect();
        Self {
            graph,
            features,
            bundle_hashes,
        }
    }

    pub fn bundle_hash(&self, mode: ProjectionMode) -> &str {
        let key = match mode {
            ProjectionMode::Mercator => "mercator",
            ProjectionMode::Tpeqd => "tpeqd",
            ProjectionMode::Azeqd => "azeqd",
        };
        &self.bundle_hashes[key]
    }
}

pub enum LoadState {
    Loading,
    Ready(Arc<Dataset>),
    Failed(String),
}

pub struct TransitionRecord {
    pub id: String,
    pub plan: TransitionPlan,
    pub bundle: Arc<AssetBundle>,
    pub started: Instant,
}

pub struct Session {
    pub doi: DoIConfig,
    pub current_vertex: Option<String>,
    pub history: Vec<String>,
    pub active: Option<Arc<TransitionRecord>>,
    pub transitions: BTreeMap<u64, Arc<TransitionRecord>>,
}

impl Session {
    fn new(doi: DoIConfig) -> Self {
        Self {
            doi,
            current_vertex: None,
            history: Vec::new(),
            active: None,
            transitions: BTreeMap::new(),
        }
    }

    /// Ends the active transition once its wall-clock duration has passed.
    pub fn refresh(&mut self, now: Instant) {
        let expired = self
            .active
            .as_ref()
            .is_some_and(|a| now.duration_since(a.started).as_secs_f64() >= a.plan.total_duration());
        if expired {
            self.finish();
        }
    }

    /// Completes the active transition: the destination becomes current.
    pub fn finish(&mut self) {
        if let Some(a) = self.active.take() {
            let to = a.plan.to_vertex.clone();
            if self.history.is_empty() {
                self.history.push(a.plan.from_vertex.clone());
            }
            self.history.push(to.clone());
            self.current_vertex = Some(to);
        }
    }

    pub fn insert(&mut self, seq: u64, record: Arc<TransitionRecord>) {
        self.transitions.insert(seq, record);
        while self.transitions.len() > MAX_TRANSITIONS_PER_SESSION {
            let oldest = *self.transitions.keys().next().expect("non-empty");
            self.transitions.remove(&oldest);
        }
    }

    pub fn transition(&self, id: &str) -> Option<Arc<TransitionRecord>> {
        let seq: u64 = id.strip_prefix('t')?.parse().ok()?;
        self.transitions.get(&seq).filter(|r| r.id == id).cloned()
    }
}

pub struct AppState {
    pub config: ServiceConfig,
    data: RwLock<LoadState>,
    sessions: Mutex<HashMap<String, Arc<tokio::sync::Mutex<Session>>>>,
    bundles: Mutex<HashMap<(String, String, ProjectionMode), Arc<AssetBundle>>>,
    next_id: AtomicU64,
    pub http: reqwest::Client,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        Self {
            config,
            data: RwLock::new(LoadState::Loading),
            sessions: Mutex::new(HashMap::new()),
            bundles: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
            http: reqwest::Client::new(),
        }
    }

    /// State with the dataset already in place.
    pub fn with_dataset(config: ServiceConfig, data: Dataset) -> Self {
        let s = Self::new(config);
        s.set_dataset(data);
        s
    }

    pub fn set_dataset(&self, data: Dataset) {
        *self.data.write().expect("lock") = LoadState::Ready(Arc::new(data));
    }

    pub fn set_failed(&self, message: String) {
        *self.data.write().expect("lock") = LoadState::Failed(message);
    }

    pub fn dataset(&self) -> Result<Arc<Dataset>, String> {
        match &*self.data.read().expect("lock") {
            LoadState::Ready(d) => Ok(d.clone()),
            LoadState::Loading => Err("graph is still loading".into()),
            LoadState::Failed(m) => Err(format!("graph failed to load: {m}")),
        }
    }

    pub fn session(&self, id: &str) -> Arc<tokio::sync::Mutex<Session>> {
        self.sessions
            .lock()
            .expect("lock")
            .entry(id.to_string())
            .or_insert_with(|| Arc::new(tokio::sync::Mutex::new(Session::new(self.config.doi.clone()))))
            .clone()
    }

    pub fn next_transition_id(&self) -> (u64, String) {
        let n = self.next_id.fetch_add(1, Ordering::Relaxed);
        (n, format!("t{n}"))
    }

    pub fn cached_bundle(&self, from: &str, to: &str, mode: ProjectionMode) -> Option<Arc<AssetBundle>> {
        self.bundles
            .lock()
            .expect("lock")
            .get(&(from.to_string(), to.to_string(), mode))
            .cloned()
    }

    pub fn cache_bundle(&self, bundle: Arc<AssetBundle>) {
        self.bundles
            .lock()
            .expect("lock")
            .insert((bundle.from.clone(), bundle.to.clone(), bundle.mode), bundle);
    }

    pub fn store(&self) -> Option<AssetStore> {
        self.config.asset_dir.as_ref().map(AssetStore::new)
    }
}
