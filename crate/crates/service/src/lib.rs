//! HTTP API over the geohop engine: graph, static vertex views, transition
//! planning with per-frame layouts, DoI configuration and Mercator tile plans.
//!
//! Sessions are keyed by the `X-Session-Id` request header (a shared
//! `default` session when absent) and live in memory only.

pub mod config;
pub mod error;
pub mod routes;
pub mod state;
pub mod tiles;

use std::sync::Arc;

use axum::routing::{get, post};
use axum::Router;
use tower_http::services::ServeDir;

pub use config::{ConfigError, ServiceConfig};
pub use state::{AppState, Dataset};

pub const SCHEMA_VERSION: u32 = 1;
pub const SESSION_HEADER: &str = "x-session-id";

pub fn router(state: Arc<AppState>) -> Router {
    let api = Router::new()
        .route("/api/graph", get(routes::graph))
        .route("/api/view", get(routes::view))
        .route("/api/session", get(routes::session_info))
        .route("/api/transition", post(routes::start_transition))
        .route("/api/transition/{id}/frame", get(routes::frame))
        .route("/api/transition/{id}/keyframe/{k}", get(routes::keyframe))
        .route("/api/doi-config", get(routes::get_doi).put(routes::put_doi))
        .route("/api/tiles/plan", get(routes::tile_plan))
        .route("/api/tiles/{z}/{x}/{y}", get(tiles::tile));
    let app = match state.config.ui_dir.as_ref().filter(|d| d.is_dir()) {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    app.with_state(state)
}

/// Binds, loads the dataset in the background (requests get 503 meanwhile)
/// and serves until the process ends.
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(config.listen).await?;
    serve_on(listener, config).await
}

pub async fn serve_on(listener: tokio::net::TcpListener, config: ServiceConfig) -> std::io::Result<()> {
    let state = Arc::new(AppState::new(config));
    let loader = state.clone();
    tokio::task::spawn_blocking(move || match Dataset::load(&loader.config) {
        Ok(d) => {
            tracing::info!(vertices = d.graph.len(), features = d.features.len(), "dataset loaded");
            loader.set_dataset(d);
        }
        Err(e) => {
            tracing::error!("dataset: {e}");
            loader.set_failed(e.to_string());
        }
    });
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
