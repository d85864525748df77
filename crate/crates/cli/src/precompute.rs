use std::path::PathBuf;

use geohop_core::graph::GeoGraph;
use geohop_core::pipeline::assets::config_hash;
use geohop_core::pipeline::{bundle_for_plan, AssetConfig, AssetStore, FeatureSet};
use geohop_core::transition::{plan_transition, ProjectionMode, TransitionConfig, TransitionError};
use rayon::prelude::*;
use serde::Serialize;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scope {
    Edges,
    AllPairs,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct PrecomputeReport {
    pub written: Vec<PathBuf>,
    pub unchanged: Vec<PathBuf>,
    /// Antipodal pairs have no transition.
    pub skipped: Vec<(String, String)>,
}

/// Unordered pairs in scope, each once. Edges keep their file orientation,
/// all-pairs follows vertex order.
pub fn pairs(graph: &GeoGraph, scope: Scope) -> Vec<(String, String)> {
    match scope {
        Scope::Edges => graph.edges().to_vec(),
        Scope::AllPairs => {
            let vs = graph.vertices();
            let mut out = Vec::new();
            for (i, a) in vs.iter().enumerate() {
                for b in &vs[i + 1..] {
                    out.push((a.id.clone(), b.id.clone()));
                }
            }
            out
        }
    }
}

enum Outcome {
    Written(PathBuf),
    Unchanged(PathBuf),
    Skipped(String, String),
}

pub fn precompute(
    graph: &GeoGraph,
    features: &FeatureSet,
    store: &AssetStore,
    scope: Scope,
    mode: ProjectionMode,
    transition: &TransitionConfig,
    assets: &AssetConfig,
) -> Result<PrecomputeReport, CliError> {
    let hash = config_hash(mode, transition, assets, features);
    let outcomes: Vec<Outcome> = pairs(graph, scope)
        .into_par_iter()
        .map(|(from, to)| -> Result<Outcome, CliError> {
            let path = store.path_for(&from, &to, &hash);
            if store.load(&from, &to, &hash)?.is_some() {
                return Ok(Outcome::Unchanged(path));
            }
            let plan = match plan_transition(graph, &from, &to, mode, transition) {
                Ok(p) => p,
                Err(TransitionError::Antipodal) => return Ok(Outcome::Skipped(from, to)),
                Err(e) => return Err(e.into()),
            };
            let bundle = bundle_for_plan(&plan, features, transition, assets)?;
            Ok(match store.write(&bundle)? {
                true => Outcome::Written(path),
                false => Outcome::Unchanged(path),
            })
        })
        .collect::<Result<_, _>>()?;
    let mut r = PrecomputeReport::default();
    for o in outcomes {
        match o {
            Outcome::Written(p) => r.written.push(p),
            Outcome::Unchanged(p) => r.unchanged.push(p),
            Outcome::Skipped(a, b) => {
                tracing::warn!("{a} -> {b}: antipodal, skipped");
                r.skipped.push((a, b));
            }
        }
    }
    Ok(r)
}

