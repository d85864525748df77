use std::sync::Arc;
use std::time::Instant;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use geohop_core::graph::{doi_attribute, select_vertices, transition_interest_set, DoIConfig, DoIFunction};
use geohop_core::layout::layout_frame;
use geohop_core::pipeline::{bundle_for_plan, project_features, AssetBundle, Rect};
use geohop_core::transition::{plan_transition, ProjectionMode, TransitionPlan};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::ApiError;
use crate::state::{AppState, Dataset, TransitionRecord};
use crate::{SCHEMA_VERSION, SESSION_HEADER};

type Shared = State<Arc<AppState>>;
type ApiResult = Result<Response, ApiError>;

fn session_id(headers: &HeaderMap) -> String {
    headers
        .get(SESSION_HEADER)
        .and_then(|v| v.to_str().ok())
        .filter(|s| !s.is_empty())
        .unwrap_or("default")
        .to_string()
}

fn dataset(state: &AppState) -> Result<Arc<Dataset>, ApiError> {
    state
        .dataset()
        .map_err(|m| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, m))
}

fn ok(mut body: Value) -> ApiResult {
    body["schema_version"] = json!(SCHEMA_VERSION);
    Ok(Json(body).into_response())
}

fn json_body<T>(body: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    body.map(|Json(v)| v).map_err(|e| ApiError::unprocessable(e.body_text()))
}

pub async fn graph(State(state): Shared) -> ApiResult {
    let data = dataset(&state)?;
    ok(serde_json::to_value(&data.graph).map_err(ApiError::internal)?)
}

#[derive(Deserialize)]
pub struct ViewQuery {
    vertex: Option<String>,
}

pub async fn view(State(state): Shared, headers: HeaderMap, Query(q): Query<ViewQuery>) -> ApiResult {
    let data = dataset(&state)?;
    let session = state.session(&session_id(&headers));
    let (doi, current) = {
        let s = session.lock().await;
        (s.doi.clone(), s.current_vertex.clone())
    };
    let vertex = q
        .vertex
        .or(current)
        .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "no vertex given and no current vertex"))?;
    let plan = plan_transition(&data.graph, &vertex, &vertex, ProjectionMode::Tpeqd, &state.config.transition)?;
    let frame = plan.nearest_frame(0.0)?;
    let selection = select_vertices(&data.graph, &vertex, &doi)?;
    let layout = layout_frame(&frame, &data.graph, &[vertex.as_str()], &selection, &state.config.layout)?;
    let assets = &state.config.assets;
    let tolerance = frame.viewport.width / assets.screen_pixels as f64 * assets.tolerance_px;
    let data2 = data.clone();
    let spec = frame.spec.clone();
    let clip = Rect::of_viewport(&frame.viewport);
    let geometry = tokio::task::spawn_blocking(move || project_features(&spec, &data2.features, clip, tolerance))
        .await
        .map_err(ApiError::internal)??;
    ok(json!({
        "vertex": vertex,
        "frame": frame,
        "layout": layout,
        "geometry": geometry,
    }))
}

#[derive(Deserialize)]
pub struct TransitionRequest {
    from: String,
    to: String,
    #[serde(default = "default_projection")]
    projection: ProjectionMode,
}

fn default_projection() -> ProjectionMode {
    ProjectionMode::Tpeqd
}

async fn resolve_bundle(state: &Arc<AppState>, data: &Arc<Dataset>, plan: &TransitionPlan) -> Result<Arc<AssetBundle>, ApiError> {
    if let Some(b) = state.cached_bundle(&plan.from_vertex, &plan.to_vertex, plan.mode) {
        return Ok(b);
    }
    let store = state.store();
    let hash = data.bundle_hash(plan.mode).to_string();
    if let Some(store) = &store {
        if let Some(b) = store.load(&plan.from_vertex, &plan.to_vertex, &hash)? {
            let b = Arc::new(b);
            state.cache_bundle(b.clone());
            return Ok(b);
        }
    }
    let (data, plan, cfg) = (data.clone(), plan.clone(), state.config.clone());
    let bundle = tokio::task::spawn_blocking(move || -> Result<AssetBundle, ApiError> {
        let b = bundle_for_plan(&plan, &data.features, &cfg.transition, &cfg.assets)?;
        if let Some(store) = store {
            store.write(&b)?;
        }
        Ok(b)
    })
    .await
    .map_err(ApiError::internal)??;
    let b = Arc::new(bundle);
    state.cache_bundle(b.clone());
    Ok(b)
}

fn transition_summary(r: &TransitionRecord) -> Value {
    json!({
        "id": r.id,
        "from": r.plan.from_vertex,
        "to": r.plan.to_vertex,
        "projection": r.plan.mode,
        "duration": r.plan.total_duration(),
        "frame_count": r.plan.frame_count(),
        "frame_rate": r.plan.frame_rate,
        "phases": r.plan.phases,
        "assets": {
            "config_hash": r.bundle.config_hash,
            "keyframes": r.bundle.keyframes.len(),
            "tiles": r.bundle.tiles.len(),
        },
    })
}

pub async fn start_transition(
    State(state): Shared,
    headers: HeaderMap,
    body: Result<Json<TransitionRequest>, JsonRejection>,
) -> ApiResult {
    let data = dataset(&state)?;
    let req = json_body(body)?;
    let session = state.session(&session_id(&headers));
    // Held for the whole request: one transition start at a time per session.
    let mut s = session.lock().await;
    s.refresh(Instant::now());
    if let Some(active) = &s.active {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            format!("transition {} is still active", active.id),
        ));
    }
    let plan = plan_transition(&data.graph, &req.from, &req.to, req.projection, &state.config.transition)?;
    let bundle = resolve_bundle(&state, &data, &plan).await?;
    let (seq, id) = state.next_transition_id();
    let record = Arc::new(TransitionRecord {
        id,
        plan,
        bundle,
        started: Instant::now(),
    });
    s.insert(seq, record.clone());
    s.active = Some(record.clone());
    s.refresh(Instant::now());
    let mut body = transition_summary(&record);
    body["schema_version"] = json!(SCHEMA_VERSION);
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

#[derive(Deserialize)]
pub struct FrameQuery {
    t: Option<String>,
}

pub async fn frame(State(state): Shared, headers: HeaderMap, Path(id): Path<String>, Query(q): Query<FrameQuery>) -> ApiResult {
    let data = dataset(&state)?;
    let session = state.session(&session_id(&headers));
    let mut s = session.lock().await;
    let record = s.transition(&id).ok_or_else(|| ApiError::not_found(format!("transition '{id}'")))?;
    let t: f64 = q
        .t
        .as_deref()
        .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "missing t"))?
        .parse()
        .map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "t must be a number"))?;
    let plan = &record.plan;
    let frame = plan.nearest_frame(t)?;
    let interest = transition_interest_set(&data.graph, &plan.from_vertex, &plan.to_vertex, &s.doi)?;
    let focus = [plan.from_vertex.as_str(), plan.to_vertex.as_str()];
    let focus = if focus[0] == focus[1] { &focus[..1] } else { &focus[..] };
    let layout = layout_frame(&frame, &data.graph, focus, &interest, &state.config.layout)?;
    let geometry = match plan.mode {
        ProjectionMode::Mercator => json!({ "tiles": format!("/api/tiles/plan?transition={id}") }),
        _ => {
            let k = record
                .bundle
                .keyframes
                .iter()
                .position(|k| k.first_frame <= frame.index && frame.index <= k.last_frame)
                .ok_or_else(|| ApiError::internal("no keyframe covers the frame"))?;
            json!({ "keyframe": k, "href": format!("/api/transition/{id}/keyframe/{k}") })
        }
    };
    let last = frame.index + 1 == plan.frame_count();
    if last && s.active.as_ref().is_some_and(|a| a.id == id) {
        s.finish();
    }
    ok(json!({
        "transition": id,
        "frame": frame,
        "layout": layout,
        "geometry": geometry,
    }))
}

pub async fn keyframe(State(state): Shared, headers: HeaderMap, Path((id, k)): Path<(String, usize)>) -> ApiResult {
    dataset(&state)?;
    let session = state.session(&session_id(&headers));
    let record = session
        .lock()
        .await
        .transition(&id)
        .ok_or_else(|| ApiError::not_found(format!("transition '{id}'")))?;
    let kf = record
        .bundle
        .keyframes
        .get(k)
        .ok_or_else(|| ApiError::not_found(format!("keyframe {k}")))?;
    let mut resp = ok(json!({
        "transition": id,
        "index": k,
        "keyframe": kf,
    }))?;
    resp.headers_mut()
        .insert(header::CACHE_CONTROL, HeaderValue::from_static("private, max-age=3600"));
    Ok(resp)
}

fn check_attributes(data: &Dataset, cfg: &DoIConfig) -> Result<(), ApiError> {
    let Some(v) = data.graph.vertices().first() else {
        return Ok(());
    };
    for c in &cfg.components {
        if let DoIFunction::Attribute(name) = &c.function {
            doi_attribute(&data.graph, &v.id, name)?;
        }
    }
    Ok(())
}

pub async fn get_doi(State(state): Shared, headers: HeaderMap) -> ApiResult {
    let session = state.session(&session_id(&headers));
    let doi = session.lock().await.doi.clone();
    ok(json!({ "config": doi }))
}

pub async fn put_doi(State(state): Shared, headers: HeaderMap, body: Result<Json<DoIConfig>, JsonRejection>) -> ApiResult {
    let data = dataset(&state)?;
    let cfg = json_body(body)?;
    cfg.validate()?;
    check_attributes(&data, &cfg)?;
    let session = state.session(&session_id(&headers));
    session.lock().await.doi = cfg.clone();
    ok(json!({ "config": cfg }))
}

pub async fn session_info(State(state): Shared, headers: HeaderMap) -> ApiResult {
    let id = session_id(&headers);
    let session = state.session(&id);
    let mut s = session.lock().await;
    s.refresh(Instant::now());
    ok(json!({
        "session": id,
        "current_vertex": s.current_vertex,
        "history": s.history,
        "active_transition": s.active.as_ref().map(|a| a.id.clone()),
    }))
}

#[derive(Deserialize)]
pub struct TilePlanQuery {
    transition: String,
}

pub async fn tile_plan(State(state): Shared, headers: HeaderMap, Query(q): Query<TilePlanQuery>) -> ApiResult {
    dataset(&state)?;
    let session = state.session(&session_id(&headers));
    let record = session
        .lock()
        .await
        .transition(&q.transition)
        .ok_or_else(|| ApiError::not_found(format!("transition '{}'", q.transition)))?;
    if record.plan.mode != ProjectionMode::Mercator {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            format!("transition {} does not use Mercator tiles", q.transition),
        ));
    }
    let template = &state.config.tile_url_template;
    let tiles: Vec<Value> = record
        .bundle
        .tiles
        .iter()
        .map(|t| json!({ "z": t.z, "x": t.x, "y": t.y, "url": t.url(template) }))
        .collect();
    let mut resp = ok(json!({ "transition": q.transition, "tiles": tiles }))?;
    resp.headers_mut()
        .insert(header::CACHE_CONTROL, HeaderValue::from_static("public, max-age=86400"));
    Ok(resp)
}
