//! Tile proxy with an on-disk cache.

use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use geohop_core::pipeline::TileRef;

use crate::error::ApiError;
use crate::state::AppState;

fn parse_tile(z: &str, x: &str, y: &str) -> Option<TileRef> {
    let y = y.strip_suffix(".png").unwrap_or(y);
    TileRef::new(z.parse().ok()?, x.parse().ok()?, y.parse().ok()?)
}

fn cache_path(root: &std::path::Path, t: &TileRef) -> PathBuf {
    root.join(t.z.to_string()).join(t.x.to_string()).join(format!("{}.png", t.y))
}

fn png(bytes: Vec<u8>) -> Response {
    (
        [
            (header::CONTENT_TYPE, HeaderValue::from_static("image/png")),
            (header::CACHE_CONTROL, HeaderValue::from_static("public, max-age=604800")),
        ],
        bytes,
    )
        .into_response()
}

pub async fn tile(State(state): State<Arc<AppState>>, Path((z, x, y)): Path<(String, String, String)>) -> Result<Response, ApiError> {
    let t = parse_tile(&z, &x, &y).ok_or_else(|| ApiError::not_found(format!("tile {z}/{x}/{y}")))?;
    let upstream = state
        .config
        .tile_upstream
        .as_ref()
        .ok_or_else(|| ApiError::not_found("tile upstream"))?;
    let cached = state.config.tile_cache_dir.as_ref().map(|root| cache_path(root, &t));
    if let Some(path) = &cached {
        if let Ok(bytes) = tokio::fs::read(path).await {
            return Ok(png(bytes));
        }
    }
    let url = t.url(upstream);
    let resp = state
        .http
        .get(&url)
        .send()
        .await
        .map_err(|e| ApiError::new(StatusCode::BAD_GATEWAY, format!("{url}: {e}")))?;
    if !resp.status().is_success() {
        return Err(ApiError::new(
            StatusCode::BAD_GATEWAY,
            format!("{url}: upstream answered {}", resp.status()),
        ));
    }
    let bytes = resp
        .bytes()
        .await
        .map_err(|e| ApiError::new(StatusCode::BAD_GATEWAY, format!("{url}: {e}")))?
        .to_vec();
    if let Some(path) = cached {
        // A failed cache write only costs a refetch later.
        if let Err(e) = write_atomic(&path, &bytes).await {
            tracing::warn!("tile cache {}: {e}", path.display());
        }
    }
    Ok(png(bytes))
}

async fn write_atomic(path: &std::path::Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        tokio::fs::create_dir_all(dir).await?;
    }
    let tmp = path.with_extension(format!("png.tmp{}", std::process::id()));
    tokio::fs::write(&tmp, bytes).await?;
    tokio::fs::rename(&tmp, path).await
}
