//! Graph JSON documents.
//!
//! ```json
//! {"layers":["net"],
//!  "nodes":[{"id":0,"layer":"net","is":3,"no_update":false,"internet":false}],
//!  "edges":[{"a":0,"b":1,"s":1.0}],
//!  "metadata":{"seed":7}}
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::graph::{EdgeSpec, InfrastructureGraph, NodeSpec};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDocument {
    layers: Vec<String>,
    nodes: Vec<NodeSpec>,
    edges: Vec<EdgeSpec>,
    #[serde(default)]
    metadata: BTreeMap<String, serde_json::Value>,
}

pub fn load_graph(bytes: &[u8]) -> Result<InfrastructureGraph> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let doc: GraphDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::parse(path, e.into_inner().to_string())
    })?;
    InfrastructureGraph::new(doc.layers, doc.nodes, doc.edges, doc.metadata)
}

/// Canonical, pretty-printed JSON followed by a newline.
pub fn save_graph(g: &InfrastructureGraph) -> Vec<u8> {
    let doc = GraphDocument {
        layers: g.layers().to_vec(),
        nodes: g.nodes().to_vec(),
        edges: g.edges().to_vec(),
        metadata: g.metadata().clone(),
    };
    let mut out = serde_json::to_vec_pretty(&doc).expect("graph documents always serialize");
    out.push(b'\n');
    out
}
