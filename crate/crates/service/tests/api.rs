use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use geohop_core::graph::{select_vertices, DoIConfig, GeoGraph};
use geohop_core::layout::{layout_frame, FrameLayout};
use geohop_core::pipeline::{load_features, FeatureSet};
use geohop_core::transition::{plan_transition, ProjectionMode};
use geohop_service::{router, AppState, Dataset, ServiceConfig};
use serde_json::{json, Value};

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn graph5() -> GeoGraph {
    GeoGraph::load(data_dir().join("fixtures/graph5.json")).unwrap()
}

fn synthetic() -> FeatureSet {
    load_features(data_dir().join("fixtures/synthetic.geojson")).unwrap()
}

async fn spawn(state: AppState) -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move {
        axum::serve(listener, router(Arc::new(state))).await.unwrap();
    });
    format!("http://{addr}")
}

async fn spawn_with(cfg: ServiceConfig, graph: GeoGraph) -> String {
    let data = Dataset::new(graph, synthetic(), &cfg);
    spawn(AppState::with_dataset(cfg, data)).await
}

async fn fixture_server() -> String {
    spawn_with(ServiceConfig::default(), graph5()).await
}

struct Client {
    base: String,
    session: &'static str,
    http: reqwest::Client,
}

impl Client {
    fn new(base: &str, session: &'static str) -> Self {
        Self {
            base: base.to_string(),
            session,
            http: reqwest::Client::new(),
        }
    }

    async fn send(&self, rb: reqwest::RequestBuilder) -> (u16, reqwest::header::HeaderMap, Value) {
        let resp = rb.header("X-Session-Id", self.session).send().await.unwrap();
        let status = resp.status().as_u16();
        let headers = resp.headers().clone();
        let text = resp.text().await.unwrap();
        (status, headers, serde_json::from_str(&text).unwrap_or(Value::String(text)))
    }

    async fn get(&self, path: &str) -> (u16, Value) {
        let (s, _, v) = self.send(self.http.get(format!("{}{path}", self.base))).await;
        (s, v)
    }

    async fn post(&self, path: &str, body: Value) -> (u16, Value) {
        let rb = self
            .http
            .post(format!("{}{path}", self.base))
            .header("content-type", "application/json")
            .body(body.to_string());
        let (s, _, v) = self.send(rb).await;
        (s, v)
    }

    async fn put(&self, path: &str, body: Value) -> (u16, Value) {
        let rb = self
            .http
            .put(format!("{}{path}", self.base))
            .header("content-type", "application/json")
            .body(body.to_string());
        let (s, _, v) = self.send(rb).await;
        (s, v)
    }
}

fn proxied_ids(layout: &Value) -> BTreeSet<String> {
    let l: FrameLayout = serde_json::from_value(layout.clone()).unwrap();
    let mut ids: BTreeSet<String> = l.on_screen.iter().filter(|v| !v.is_focus).map(|v| v.id.clone()).collect();
    ids.extend(l.proxies.iter().flat_map(|p| p.members.iter().map(|m| m.id.clone())));
    ids
}

#[tokio::test]
async fn graph_endpoint() {
    let base = fixture_server().await;
    let c = Client::new(&base, "g");
    let (status, body) = c.get("/api/graph").await;
    assert_eq!(status, 200);
    assert_eq!(body["schema_version"], 1);
    assert_eq!(body["vertices"].as_array().unwrap().len(), 5);
    assert_eq!(c.get("/api/graph").await.1, body);

    let empty = spawn_with(ServiceConfig::default(), GeoGraph::empty()).await;
    let (_, body) = Client::new(&empty, "g").get("/api/graph").await;
    assert_eq!(body["vertices"], json!([]));
    assert_eq!(body["edges"], json!([]));
}

#[tokio::test]
async fn unavailable_until_loaded() {
    let base = spawn(AppState::new(ServiceConfig::default())).await;
    let (status, body) = Client::new(&base, "x").get("/api/graph").await;
    assert_eq!(status, 503);
    assert_eq!(body["schema_version"], 1);
}

#[tokio::test]
async fn view_matches_layout_module() {
    let base = fixture_server().await;
    let c = Client::new(&base, "v");
    assert_eq!(c.get("/api/view?vertex=atlantis").await.0, 404);
    let (status, body) = c.get("/api/view?vertex=berlin").await;
    assert_eq!(status, 200);
    assert_eq!(body["layout"]["north_arrow_angle"].as_f64().unwrap().abs() < 1e-12, true);

    let g = graph5();
    let cfg = ServiceConfig::default();
    let plan = plan_transition(&g, "berlin", "berlin", ProjectionMode::Tpeqd, &cfg.transition).unwrap();
    let frame = plan.nearest_frame(0.0).unwrap();
    let sel = select_vertices(&g, "berlin", &DoIConfig::default()).unwrap();
    let expected = layout_frame(&frame, &g, &["berlin"], &sel, &cfg.layout).unwrap();
    let got: FrameLayout = serde_json::from_value(body["layout"].clone()).unwrap();
    assert_eq!(got, expected);
}

#[tokio::test]
async fn transition_lifecycle() {
    let base = fixture_server().await;
    let c = Client::new(&base, "t");

    let (status, same) = c.post("/api/transition", json!({"from": "paris", "to": "paris"})).await;
    assert_eq!(status, 201);
    assert_eq!(same["duration"], 0.0);
    assert_eq!(same["frame_count"], 1);

    let (status, _) = c.post("/api/transition", json!({"from": "paris", "to": "atlantis"})).await;
    assert_eq!(status, 404);
    assert_eq!(c.get("/api/session").await.1["active_transition"], Value::Null);

    let (status, t) = c
        .post("/api/transition", json!({"from": "berlin", "to": "tokyo", "projection": "tpeqd"}))
        .await;
    assert_eq!(status, 201, "{t}");
    assert_eq!(t["phases"].as_array().unwrap().len(), 3);
    let id = t["id"].as_str().unwrap();
    let duration = t["duration"].as_f64().unwrap();

    let (status, _) = c.post("/api/transition", json!({"from": "paris", "to": "vienna"})).await;
    assert_eq!(status, 409);

    let (status, f0) = c.get(&format!("/api/transition/{id}/frame?t=0")).await;
    assert_eq!(status, 200);
    assert_eq!(f0["frame"]["index"], 0);
    let href = f0["geometry"]["href"].as_str().unwrap().to_string();
    assert_eq!(c.get(&href).await.0, 200);

    let mut last = -1i64;
    for k in 0..=10 {
        let t = duration * k as f64 / 10.0;
        let (status, f) = c.get(&format!("/api/transition/{id}/frame?t={t}")).await;
        assert_eq!(status, 200);
        let index = f["frame"]["index"].as_i64().unwrap();
        assert!(index > last);
        last = index;
    }
    let (_, end) = c.get(&format!("/api/transition/{id}/frame?t={duration}")).await;
    let layout: FrameLayout = serde_json::from_value(end["layout"].clone()).unwrap();
    let tokyo = layout.on_screen.iter().find(|v| v.id == "tokyo").unwrap();
    assert!(tokyo.position.distance(layout.viewport.center) < 1e-6);

    assert_eq!(c.get(&format!("/api/transition/{id}/frame?t={}", duration + 1.0)).await.0, 416);
    assert_eq!(c.get(&format!("/api/transition/{id}/frame?t=-1")).await.0, 416);
    assert_eq!(c.get("/api/transition/t999999/frame?t=0").await.0, 404);

    // The end frame completes the hop.
    let (_, s) = c.get("/api/session").await;
    assert_eq!(s["current_vertex"], "tokyo");
    assert_eq!(s["active_transition"], Value::Null);
    assert_eq!(c.post("/api/transition", json!({"from": "tokyo", "to": "vienna"})).await.0, 201);

    // Other sessions cannot see this transition.
    assert_eq!(Client::new(&base, "other").get(&format!("/api/transition/{id}/frame?t=0")).await.0, 404);
}

#[tokio::test]
async fn antipodal_pair_is_rejected() {
    let g = GeoGraph::from_json_str(
        r#"{"vertices":[{"id":"a","lat":10,"lon":20},{"id":"b","lat":-10,"lon":-160}],"edges":[["a","b"]]}"#,
    )
    .unwrap();
    let base = spawn_with(ServiceConfig::default(), g).await;
    let c = Client::new(&base, "x");
    assert_eq!(c.post("/api/transition", json!({"from": "a", "to": "b"})).await.0, 422);
    assert_eq!(c.get("/api/session").await.1["active_transition"], Value::Null);
}

#[tokio::test]
async fn doi_config_validation_and_monotonicity() {
    let base = fixture_server().await;
    let c = Client::new(&base, "d");
    let cfg = |threshold: f64, w: f64| {
        json!({
            "components": [
                {"function": "geo_distance", "weight": w, "params": {"half_life_km": 3000}},
                {"function": "attribute:population", "weight": w}
            ],
            "threshold": threshold,
            "max_proxies": 10
        })
    };
    assert_eq!(c.put("/api/doi-config", cfg(1.1, 1.0)).await.0, 422);
    assert_eq!(c.put("/api/doi-config", cfg(0.2, 0.0)).await.0, 422);
    assert_eq!(c.put("/api/doi-config", json!({"threshold": "x"})).await.0, 422);
    let mut bad = cfg(0.2, 1.0);
    bad["components"][1]["function"] = json!("attribute:elevation");
    assert_eq!(c.put("/api/doi-config", bad).await.0, 422);

    let mut previous: Option<BTreeSet<String>> = None;
    for threshold in [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.7, 0.9, 1.0] {
        let (status, body) = c.put("/api/doi-config", cfg(threshold, 1.0)).await;
        assert_eq!(status, 200);
        assert_eq!(body["config"]["threshold"], threshold);
        let ids = proxied_ids(&c.get("/api/view?vertex=vienna").await.1["layout"]);
        if let Some(prev) = &previous {
            assert!(ids.is_subset(prev), "{threshold}: {ids:?} vs {prev:?}");
        }
        previous = Some(ids);
    }

    // Session isolation.
    let other = Client::new(&base, "d2");
    assert_eq!(other.get("/api/doi-config").await.1["config"]["threshold"], 0.3);
}

#[tokio::test]
async fn tile_plans() {
    let base = fixture_server().await;
    let c = Client::new(&base, "tiles");
    let (_, t) = c
        .post("/api/transition", json!({"from": "paris", "to": "berlin", "projection": "mercator"}))
        .await;
    assert_eq!(t["phases"].as_array().unwrap().len(), 1);
    let id = t["id"].as_str().unwrap();
    let (status, headers, plan) = c
        .send(c.http.get(format!("{base}/api/tiles/plan?transition={id}")))
        .await;
    assert_eq!(status, 200);
    assert!(headers["cache-control"].to_str().unwrap().contains("max-age"));
    let tiles = plan["tiles"].as_array().unwrap();
    assert!(!tiles.is_empty());
    let first = &tiles[0];
    assert_eq!(
        first["url"],
        format!("/api/tiles/{}/{}/{}.png", first["z"], first["x"], first["y"])
    );
    assert_eq!(c.get("/api/tiles/plan?transition=t424242").await.0, 404);

    let c2 = Client::new(&base, "tiles2");
    let (_, t) = c2.post("/api/transition", json!({"from": "paris", "to": "berlin"})).await;
    let id = t["id"].as_str().unwrap();
    assert_eq!(c2.get(&format!("/api/tiles/plan?transition={id}")).await.0, 409);
}

#[tokio::test]
async fn tile_proxy_caches_on_disk() {
    use axum::routing::get;
    let upstream = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let up_addr = upstream.local_addr().unwrap();
    let up = tokio::spawn(async move {
        let app = axum::Router::new().route(
            "/{z}/{x}/{y}",
            get(|axum::extract::Path((z, x, y)): axum::extract::Path<(u8, u32, String)>| async move {
                format!("tile {z} {x} {y}").into_bytes()
            }),
        );
        axum::serve(upstream, app).await.unwrap();
    });
    let cache = tempfile::tempdir().unwrap();
    let cfg = ServiceConfig {
        tile_upstream: Some(format!("http://{up_addr}/{{z}}/{{x}}/{{y}}.png")),
        tile_cache_dir: Some(cache.path().to_path_buf()),
        ..ServiceConfig::default()
    };
    let base = spawn_with(cfg, graph5()).await;
    let c = Client::new(&base, "p");
    let (status, headers, body) = c.send(c.http.get(format!("{base}/api/tiles/3/2/1.png"))).await;
    assert_eq!(status, 200);
    assert_eq!(headers["content-type"], "image/png");
    assert_eq!(body, Value::String("tile 3 2 1.png".into()));
    assert!(cache.path().join("3/2/1.png").exists());
    up.abort();
    let (status, _) = c.get("/api/tiles/3/2/1.png").await;
    assert_eq!(status, 200);
    assert_eq!(c.get("/api/tiles/1/5/0.png").await.0, 404);
}

#[tokio::test]
async fn serves_static_ui() {
    let ui = tempfile::tempdir().unwrap();
    std::fs::write(ui.path().join("index.html"), "<!doctype html><title>geohop</title>").unwrap();
    let cfg = ServiceConfig {
        ui_dir: Some(ui.path().to_path_buf()),
        ..ServiceConfig::default()
    };
    let base = spawn_with(cfg, graph5()).await;
    let (status, body) = Client::new(&base, "s").get("/").await;
    assert_eq!(status, 200);
    assert!(body.as_str().unwrap().contains("geohop"));
}

#[test]
fn config_parses_and_resolves_paths() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("geohop.toml");
    std::fs::write(
        &path,
        r#"
listen = "0.0.0.0:9000"
graph = "graph.json"
basemaps = ["land.geojson"]
tile_url_template = "https://tiles.example/{z}/{x}/{y}.png"

[transition]
rho = 1.4
frame_rate = 60

[doi]
threshold = 0.25
max_proxies = 5
components = [
  { function = "geo_distance", weight = 1.0, params = { half_life_km = 1500 } },
  { function = "degree", weight = 0.5 },
]
"#,
    )
    .unwrap();
    let cfg = ServiceConfig::load(&path).unwrap();
    assert_eq!(cfg.graph.unwrap(), dir.path().join("graph.json"));
    assert_eq!(cfg.basemaps[0], dir.path().join("land.geojson"));
    assert_eq!(cfg.transition.frame_rate, 60.0);
    assert_eq!(cfg.transition.morph_duration_s, 0.8);
    assert_eq!(cfg.doi.max_proxies, 5);
    assert!(ServiceConfig::from_toml("[transition]\nrho = -1").is_err());
    assert!(ServiceConfig::from_toml("bogus = 1").is_err());
}
