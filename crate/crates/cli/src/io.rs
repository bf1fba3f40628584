//! Problem and face-spec files.
//!
//! A problem file is a JSON document:
//!
//! ```json
//! {"ground_set": 4,
//!  "components": [
//!    {"type": "edge_cut", "u": 0, "v": 1, "weight": 1.0},
//!    {"type": "graph_cut", "edges": [[1, 2, 1.0], [3, 0, 0.5]]},
//!    {"type": "concave_cardinality", "values": [0, 1, 1.5], "support": [0, 2]},
//!    {"type": "modular", "weights": [0.5, -1], "support": [1, 3]},
//!    {"type": "table", "support": [0, 1], "values": [0, 1, 1, 1]}
//!  ]}
//! ```
//!
//! Table values are listed in binary-counter order: bit `p` of the position
//! is membership of `support[p]`, so the lowest support index is the least
//! significant bit. A face-spec file lists one ordered partition per
//! component: `{"ground_set": 4, "partitions": [[[0, 1], [2, 3]], [[1, 2], [3, 0]]]}`.

use serde::{Deserialize, Serialize};

use apsfm_core::spectral::FacePartitionSpec;
use apsfm_core::{ComponentKind, DecomposableProblem, SfmError, SimpleComponent, EXHAUSTIVE_PAIR_LIMIT};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub ground_set: usize,
    pub components: Vec<ComponentRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ComponentRecord {
    EdgeCut { u: usize, v: usize, weight: f64 },
    GraphCut { edges: Vec<(usize, usize, f64)> },
    ConcaveCardinality { values: Vec<f64>, support: Vec<usize> },
    Modular { weights: Vec<f64>, support: Vec<usize> },
    Table { support: Vec<usize>, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceFile {
    pub ground_set: usize,
    pub partitions: Vec<Vec<Vec<usize>>>,
}

impl From<ComponentRecord> for ComponentKind {
    fn from(r: ComponentRecord) -> Self {
        match r {
            ComponentRecord::EdgeCut { u, v, weight } => ComponentKind::EdgeCut { u, v, weight },
            ComponentRecord::GraphCut { edges } => ComponentKind::GraphCut { edges },
            ComponentRecord::ConcaveCardinality { values, support } => {
                ComponentKind::ConcaveCardinality { values, support }
            }
            ComponentRecord::Modular { weights, support } => ComponentKind::Modular { weights, support },
            ComponentRecord::Table { support, values } => ComponentKind::Table { support, values },
        }
    }
}

impl From<&ComponentKind> for ComponentRecord {
    fn from(k: &ComponentKind) -> Self {
        match k.clone() {
            ComponentKind::EdgeCut { u, v, weight } => ComponentRecord::EdgeCut { u, v, weight },
            ComponentKind::GraphCut { edges } => ComponentRecord::GraphCut { edges },
            ComponentKind::ConcaveCardinality { values, support } => {
                ComponentRecord::ConcaveCardinality { values, support }
            }
            ComponentKind::Modular { weights, support } => ComponentRecord::Modular { weights, support },
            ComponentKind::Table { support, values } => ComponentRecord::Table { support, values },
        }
    }
}

/// Parses and validates a problem document. Table components with at most
/// 15 support elements are checked for submodularity.
pub fn parse_problem(text: &str) -> Result<DecomposableProblem, CliError> {
    let file: ProblemFile = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    let n = file.ground_set;
    let mut components = Vec::with_capacity(file.components.len());
    for (r, record) in file.components.into_iter().enumerate() {
        let c = SimpleComponent::new(record.into()).map_err(|e| CliError::component(r, e))?;
        if c.min_ground_size() > n {
            return Err(CliError::Input(format!(
                "component {r} uses element {} outside the ground set of size {n}",
                c.min_ground_size() - 1
            )));
        }
        if matches!(c.kind(), ComponentKind::Table { .. }) && c.support().len() <= EXHAUSTIVE_PAIR_LIMIT {
            if let Some((a, b)) = c.check_submodular().map_err(|e| CliError::component(r, e))? {
                return Err(CliError::NotSubmodular { component: r, a, b });
            }
        }
        components.push(c);
    }
    DecomposableProblem::new(n, components).map_err(CliError::from)
}

/// Serializes a problem; shifted components have no file form.
pub fn problem_to_json(p: &DecomposableProblem) -> Result<String, CliError> {
    let mut components = Vec::with_capacity(p.num_components());
    for (r, c) in p.components().iter().enumerate() {
        if c.shift().is_some() {
            return Err(CliError::Input(format!("component {r} carries a modular shift")));
        }
        components.push(ComponentRecord::from(c.kind()));
    }
    let file = ProblemFile {
        ground_set: p.ground_size(),
        components,
    };
    Ok(serde_json::to_string_pretty(&file).expect("plain data serializes") + "\n")
}

pub fn parse_face_spec(text: &str) -> Result<FacePartitionSpec, CliError> {
    let file: FaceFile = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    FacePartitionSpec::new(file.ground_set, file.partitions).map_err(CliError::from)
}

pub fn face_spec_to_json(spec: &FacePartitionSpec) -> String {
    let file = FaceFile {
        ground_set: spec.ground_size(),
        partitions: spec.parts().to_vec(),
    };
    serde_json::to_string_pretty(&file).expect("plain data serializes") + "\n"
}

impl CliError {
    fn component(r: usize, e: SfmError) -> Self {
        match CliError::from(e) {
            CliError::Input(msg) => CliError::Input(format!("component {r}: {msg}")),
            other => other,
        }
    }
}
