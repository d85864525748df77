mod common;

use std::collections::BTreeMap;

use common::{fixture, rng, sphere_point};
use geohop_core::graph::*;
use rand::Rng;

fn vertex(id: &str, lat: f64, lon: f64, attrs: &[(&str, f64)]) -> GeoVertex {
    GeoVertex {
        id: id.into(),
        name: String::new(),
        coord: geohop_core::geodesy::GeoCoord::new(lat, lon).unwrap(),
        attributes: attrs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
    }
}

fn random_graph(r: &mut impl Rng) -> GeoGraph {
    let n = r.gen_range(2..=50);
    let vertices: Vec<GeoVertex> = (0..n)
        .map(|i| {
            let p = sphere_point(r);
            vertex(&format!("v{i:02}"), p.lat(), p.lon(), &[("w", r.gen_range(0.0..100.0))])
        })
        .collect();
    let p = r.gen_range(0.02..0.2);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.gen_bool(p) {
                edges.push((format!("v{i:02}"), format!("v{j:02}")));
            }
        }
    }
    GeoGraph::new(vertices, edges).unwrap()
}

fn floyd_warshall(g: &GeoGraph) -> Vec<Vec<Option<usize>>> {
    let n = g.len();
    let idx: BTreeMap<&str, usize> = g.vertices().iter().enumerate().map(|(i, v)| (v.id.as_str(), i)).collect();
    let mut d = vec![vec![None; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = Some(0);
    }
    for (a, b) in g.edges() {
        let (i, j) = (idx[a.as_str()], idx[b.as_str()]);
        d[i][j] = Some(1);
        d[j][i] = Some(1);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(x), Some(y)) = (d[i][k], d[k][j]) {
                    if d[i][j].map_or(true, |cur| x + y < cur) {
                        d[i][j] = Some(x + y);
                    }
                }
            }
        }
    }
    d
}

#[test]
fn topo_distance_matches_all_pairs_shortest_paths() {
    let mut r = rng(31);
    for _ in 0..50 {
        let g = random_graph(&mut r);
        let d = floyd_warshall(&g);
        let max_hops = r.gen_range(1..6u32);
        for (i, f) in g.vertices().iter().enumerate() {
            for (j, v) in g.vertices().iter().enumerate() {
                let want = match d[i][j] {
                    Some(h) => 1.0 - (h as f64).min(max_hops as f64) / max_hops as f64,
                    None => 0.0,
                };
                let got = doi_topo_distance(&g, &f.id, &v.id, max_hops).unwrap();
                assert_eq!(got, want, "{} -> {}", f.id, v.id);
            }
        }
    }
}

#[test]
fn component_outputs_stay_in_unit_interval_on_fixtures() {
    let g = GeoGraph::load(fixture("fixtures/graph5.json")).unwrap();
    let half = geohop_core::geodesy::Kilometers::new(2000.0).unwrap();
    for f in g.vertices() {
        for v in g.vertices() {
            let values = [
                doi_geo_distance(f, v, half),
                doi_topo_distance(&g, &f.id, &v.id, 4).unwrap(),
                doi_degree(&g, &v.id).unwrap(),
                doi_attribute(&g, &v.id, "population").unwrap(),
                doi_attribute(&g, &v.id, "area_km2").unwrap(),
            ];
            assert!(values.iter().all(|x| (0.0..=1.0).contains(x)), "{values:?}");
        }
    }
    assert_eq!(doi_attribute(&g, "tokyo", "area_km2").unwrap(), 0.0);
    assert!(matches!(
        doi_attribute(&g, "tokyo", "elevation"),
        Err(DoIError::UnknownAttribute(_))
    ));
}

#[test]
fn selection_is_ranked_bounded_and_scale_invariant() {
    let mut r = rng(32);
    for _ in 0..50 {
        let g = random_graph(&mut r);
        let mut cfg = DoIConfig::default();
        cfg.components.push(DoIComponent {
            function: DoIFunction::Attribute("w".into()),
            weight: r.gen_range(0.0..2.0),
        });
        cfg.threshold = r.gen_range(0.0..0.6);
        cfg.max_proxies = r.gen_range(0..10);
        let focus = g.vertices()[0].id.clone();
        let sel = select_vertices(&g, &focus, &cfg).unwrap();
        assert!(sel.len() <= cfg.max_proxies);
        assert!(sel.iter().all(|s| s.score >= cfg.threshold && s.id != focus));
        for w in sel.windows(2) {
            assert!(w[0].score > w[1].score || (w[0].score == w[1].score && w[0].id < w[1].id));
        }
        assert_eq!(sel, select_vertices(&g, &focus, &cfg).unwrap());

        let c = r.gen_range(0.1..10.0);
        let mut scaled = cfg.clone();
        for comp in &mut scaled.components {
            comp.weight *= c;
        }
        let ids = |s: &[DoIScore]| s.iter().map(|x| x.id.clone()).collect::<Vec<_>>();
        let again = select_vertices(&g, &focus, &scaled).unwrap();
        assert_eq!(ids(&sel), ids(&again));
        for (a, b) in sel.iter().zip(&again) {
            assert!((a.score - b.score).abs() < 1e-12);
        }
    }
}

fn attribute_only(threshold: f64, n: usize) -> DoIConfig {
    DoIConfig {
        components: vec![DoIComponent {
            function: DoIFunction::Attribute("s".into()),
            weight: 1.0,
        }],
        threshold,
        max_proxies: n,
    }
}

#[test]
fn selection_examples() {
    let scores = [("f", 1.0), ("a", 0.9), ("b", 0.8), ("c", 0.6), ("d", 0.55), ("e", 0.4)];
    let vs = scores
        .iter()
        .enumerate()
        .map(|(i, (id, s))| vertex(id, 0.0, i as f64, &[("s", *s)]))
        .collect();
    let g = GeoGraph::new(vs, Vec::new()).unwrap();
    let ids = |cfg: &DoIConfig| -> Vec<String> {
        select_vertices(&g, "f", cfg).unwrap().into_iter().map(|s| s.id).collect()
    };
    assert_eq!(ids(&attribute_only(0.5, 3)), ["a", "b", "c"]);
    assert!(ids(&attribute_only(0.5, 0)).is_empty());

    let tied = ["z", "m", "a", "q"].iter().map(|id| vertex(id, 0.0, 0.0, &[("s", 1.0)])).collect();
    let g = GeoGraph::new(tied, Vec::new()).unwrap();
    let got: Vec<String> = select_vertices(&g, "z", &attribute_only(0.0, 10))
        .unwrap()
        .into_iter()
        .map(|s| s.id)
        .collect();
    assert_eq!(got, ["a", "m", "q"]);
}

#[test]
fn interest_set_has_no_duplicates_or_endpoints() {
    let g = GeoGraph::load(fixture("fixtures/graph5.json")).unwrap();
    let cfg = DoIConfig {
        threshold: 0.0,
        max_proxies: 10,
        ..DoIConfig::default()
    };
    let set = transition_interest_set(&g, "paris", "vienna", &cfg).unwrap();
    let mut ids: Vec<&str> = set.iter().map(|s| s.id.as_str()).collect();
    ids.sort();
    assert_eq!(ids, ["berlin", "madrid", "tokyo"]);
    assert_eq!(
        transition_interest_set(&g, "paris", "paris", &cfg).unwrap(),
        select_vertices(&g, "paris", &cfg).unwrap()
    );
}

#[test]
fn config_round_trips_through_json() {
    let json = r#"{
        "components": [
            {"function": "geo_distance", "weight": 1.0, "params": {"half_life_km": 500}},
            {"function": "attribute:population", "weight": 2.0}
        ],
        "threshold": 0.2,
        "max_proxies": 4
    }"#;
    let cfg: DoIConfig = serde_json::from_str(json).unwrap();
    assert_eq!(cfg.components[0].function, DoIFunction::GeoDistance { half_life_km: 500.0 });
    assert_eq!(cfg.components[1].function, DoIFunction::Attribute("population".into()));
    let back: DoIConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(back, cfg);
    assert!(serde_json::from_str::<DoIConfig>(r#"{"components":[{"function":"bogus","weight":1}],"threshold":0,"max_proxies":1}"#).is_err());
}
