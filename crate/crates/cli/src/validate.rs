use std::path::{Path, PathBuf};

use geohop_core::graph::{GeoGraph, GraphError};
use geohop_core::pipeline::{load_features, PipelineError};
use serde::Serialize;

#[derive(Clone, Debug, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub io_errors: Vec<String>,
    pub notes: Vec<String>,
}

impl ValidationReport {
    /// 0 when clean, 1 on violations, 2 when a file could not be read.
    pub fn exit_code(&self) -> i32 {
        if !self.io_errors.is_empty() {
            2
        } else if !self.violations.is_empty() {
            1
        } else {
            0
        }
    }
}

pub fn validate(graph: &Path, basemaps: &[PathBuf]) -> ValidationReport {
    let mut r = ValidationReport::default();
    let gname = graph.display();
    match GeoGraph::load(graph) {
        Ok(g) => r
            .notes
            .push(format!("{gname}: {} vertices, {} edges", g.len(), g.edges().len())),
        Err(GraphError::Io(e)) => r.io_errors.push(format!("{gname}: {e}")),
        Err(GraphError::Parse(e)) => r.violations.push(format!("{gname}: not valid JSON: {e}")),
        Err(GraphError::Invalid(vs)) => r
            .violations
            .extend(vs.iter().map(|v| format!("{gname}: {v}"))),
    }
    for path in basemaps {
        let name = path.display();
        match load_features(path) {
            Ok(fs) => {
                r.notes.push(format!("{name}: {} features", fs.len()));
                if fs.warnings > 0 {
                    r.notes
                        .push(format!("{name}: {} unsupported geometries skipped", fs.warnings));
                }
            }
            Err(e @ PipelineError::Io { .. }) => r.io_errors.push(e.to_string()),
            Err(e) => r.violations.push(format!("{name}: {e}")),
        }
    }
    r
}
