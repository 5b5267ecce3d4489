use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest risk level a node may carry.
pub const MAX_SCORE: u32 = 10;

/// Lowest risk level a node may carry.
pub const MIN_SCORE: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: u32,
    pub layer: String,
    /// Standalone risk rating, assigned independently of topology.
    #[serde(rename = "is")]
    pub initial_score: u32,
    /// Node does not receive regular security updates.
    #[serde(rename = "no_update")]
    pub no_update_flag: bool,
    /// Node is reachable from the internet.
    #[serde(rename = "internet")]
    pub internet_flag: bool,
}

impl NodeSpec {
    pub fn new(id: u32, layer: impl Into<String>, initial_score: u32) -> Self {
        Self {
            id,
            layer: layer.into(),
            initial_score,
            no_update_flag: false,
            internet_flag: false,
        }
    }

    /// Number of raised exposure flags (0, 1 or 2).
    pub fn flag_count(&self) -> u32 {
        u32::from(self.no_update_flag) + u32::from(self.internet_flag)
    }
}

/// Undirected link with a positive coupling strength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub a: u32,
    pub b: u32,
    #[serde(rename = "s")]
    pub strength: f64,
}

impl EdgeSpec {
    pub fn new(a: u32, b: u32, strength: f64) -> Self {
        Self { a, b, strength }
    }

    fn key(&self) -> (u32, u32) {
        (self.a.min(self.b), self.a.max(self.b))
    }
}

/// Attributed, undirected infrastructure graph.
///
/// Always held in canonical form: nodes sorted by id, every edge stored
/// with `a < b`, edges sorted by `(a, b)`. Node *indices* (positions in
/// [`nodes`](Self::nodes)) are what the encoding and QUBO layers address.
#[derive(Debug, Clone, PartialEq)]
pub struct InfrastructureGraph {
    layers: Vec<String>,
    nodes: Vec<NodeSpec>,
    edges: Vec<EdgeSpec>,
    metadata: BTreeMap<String, serde_json::Value>,
    index: HashMap<u32, usize>,
}

impl InfrastructureGraph {
    /// Validates and canonicalizes.
    pub fn new(
        layers: Vec<String>,
        mut nodes: Vec<NodeSpec>,
        edges: Vec<EdgeSpec>,
        metadata: BTreeMap<String, serde_json::Value>,
    ) -> Result<Self> {
        let known: HashSet<&str> = layers.iter().map(String::as_str).collect();
        if known.len() != layers.len() {
            return Err(Error::parse("layers", "duplicate layer label"));
        }

        let mut seen = HashSet::new();
        for (i, node) in nodes.iter().enumerate() {
            if !seen.insert(node.id) {
                return Err(Error::parse(
                    format!("nodes[{i}].id"),
                    format!("duplicate id {}", node.id),
                ));
            }
            if !(MIN_SCORE..=MAX_SCORE).contains(&node.initial_score) {
                return Err(Error::parse(
                    format!("nodes[{i}].is"),
                    format!("score out of range [{MIN_SCORE},{MAX_SCORE}]"),
                ));
            }
            if !known.contains(node.layer.as_str()) {
                return Err(Error::parse(
                    format!("nodes[{i}].layer"),
                    format!("layer `{}` is not listed in layers", node.layer),
                ));
            }
        }

        let mut pairs = HashSet::new();
        let mut canonical = Vec::with_capacity(edges.len());
        for (i, edge) in edges.iter().enumerate() {
            for end in [edge.a, edge.b] {
                if !seen.contains(&end) {
                    return Err(Error::parse(
                        format!("edges[{i}]"),
                        format!("edge ({}, {}) references missing node {end}", edge.a, edge.b),
                    ));
                }
            }
            if edge.a == edge.b {
                return Err(Error::parse(
                    format!("edges[{i}]"),
                    format!("self-loop on node {}", edge.a),
                ));
            }
            if !(edge.strength.is_finite() && edge.strength > 0.0) {
                return Err(Error::parse(
                    format!("edges[{i}].s"),
                    "strength must be a positive finite number",
                ));
            }
            let (a, b) = edge.key();
            if !pairs.insert((a, b)) {
                return Err(Error::parse(
                    format!("edges[{i}]"),
                    format!("duplicate edge ({a}, {b})"),
                ));
            }
            canonical.push(EdgeSpec::new(a, b, edge.strength));
        }

        nodes.sort_by_key(|n| n.id);
        canonical.sort_by_key(EdgeSpec::key);
        let index = nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();

        Ok(Self {
            layers,
            nodes,
            edges: canonical,
            metadata,
            index,
        })
    }

    pub fn layers(&self) -> &[String] {
        &self.layers
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn edges(&self) -> &[EdgeSpec] {
        &self.edges
    }

    pub fn metadata(&self) -> &BTreeMap<String, serde_json::Value> {
        &self.metadata
    }

    pub fn metadata_mut(&mut self) -> &mut BTreeMap<String, serde_json::Value> {
        &mut self.metadata
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_index(&self, id: u32) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn node(&self, id: u32) -> Option<&NodeSpec> {
        self.node_index(id).map(|i| &self.nodes[i])
    }

    pub fn node_ids(&self) -> Vec<u32> {
        self.nodes.iter().map(|n| n.id).collect()
    }

    pub fn initial_scores(&self) -> Vec<u32> {
        self.nodes.iter().map(|n| n.initial_score).collect()
    }

    pub fn layer_index(&self, label: &str) -> Option<usize> {
        self.layers.iter().position(|l| l == label)
    }

    /// Edges as `(index_a, index_b, strength)` with `index_a < index_b`.
    pub fn indexed_edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(move |e| {
            let (i, j) = (self.index[&e.a], self.index[&e.b]);
            (i.min(j), i.max(j), e.strength)
        })
    }

    /// Neighbor lists by node index, each sorted ascending.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (i, j, _) in self.indexed_edges() {
            adj[i].push(j);
            adj[j].push(i);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn degree(&self, id: u32) -> Option<usize> {
        self.node_index(id)?;
        Some(self.edges.iter().filter(|e| e.a == id || e.b == id).count())
    }

    /// Same topology and flags, different initial scores (indexed like `nodes()`).
    pub fn with_initial_scores(&self, scores: &[u32]) -> Result<Self> {
        if scores.len() != self.nodes.len() {
            return Err(Error::Validation(format!(
                "expected {} scores, got {}",
                self.nodes.len(),
                scores.len()
            )));
        }
        let mut nodes = self.nodes.clone();
        for (i, (node, &s)) in nodes.iter_mut().zip(scores).enumerate() {
            if !(MIN_SCORE..=MAX_SCORE).contains(&s) {
                return Err(Error::parse(
                    format!("scores[{i}]"),
                    format!("score out of range [{MIN_SCORE},{MAX_SCORE}]"),
                ));
            }
            node.initial_score = s;
        }
        Ok(Self {
            nodes,
            ..self.clone()
        })
    }

    pub fn set_flags(&mut self, id: u32, no_update: bool, internet: bool) -> Result<()> {
        let i = self.node_index(id).ok_or(Error::UnknownNode(id))?;
        self.nodes[i].no_update_flag = no_update;
        self.nodes[i].internet_flag = internet;
        Ok(())
    }
}

/// Multiplies the strength of every edge incident to `node_id` by `factor`.
pub fn amplify_node_influence(
    g: &InfrastructureGraph,
    node_id: u32,
    factor: f64,
) -> Result<InfrastructureGraph> {
    if g.node_index(node_id).is_none() {
        return Err(Error::UnknownNode(node_id));
    }
    if !(factor.is_finite() && factor >= 1.0) {
        return Err(Error::Validation(format!(
            "amplification factor must be finite and >= 1, got {factor}"
        )));
    }
    let mut out = g.clone();
    for edge in &mut out.edges {
        if edge.a == node_id || edge.b == node_id {
            edge.strength *= factor;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star(leaves: u32) -> InfrastructureGraph {
        let mut nodes = vec![NodeSpec::new(0, "net", 3)];
        let mut edges = Vec::new();
        for id in 1..=leaves {
            nodes.push(NodeSpec::new(id, "net", 1));
            edges.push(EdgeSpec::new(0, id, 1.0));
        }
        InfrastructureGraph::new(vec!["net".into()], nodes, edges, BTreeMap::new()).unwrap()
    }

    #[test]
    fn canonicalizes_edge_orientation_and_order() {
        let g = InfrastructureGraph::new(
            vec!["l".into()],
            vec![NodeSpec::new(5, "l", 1), NodeSpec::new(2, "l", 1), NodeSpec::new(9, "l", 1)],
            vec![EdgeSpec::new(9, 2, 1.0), EdgeSpec::new(5, 2, 2.0)],
            BTreeMap::new(),
        )
        .unwrap();
        assert_eq!(g.node_ids(), vec![2, 5, 9]);
        assert_eq!(g.edges()[0], EdgeSpec::new(2, 5, 2.0));
        assert_eq!(g.edges()[1], EdgeSpec::new(2, 9, 1.0));
        assert_eq!(g.adjacency(), vec![vec![1, 2], vec![0], vec![0]]);
    }

    #[test]
    fn rejects_reversed_duplicate_edge() {
        let err = InfrastructureGraph::new(
            vec!["l".into()],
            vec![NodeSpec::new(0, "l", 1), NodeSpec::new(1, "l", 1)],
            vec![EdgeSpec::new(0, 1, 1.0), EdgeSpec::new(1, 0, 1.0)],
            BTreeMap::new(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("edges[1]"), "{err}");
    }

    #[test]
    fn rejects_unlisted_layer() {
        let err = InfrastructureGraph::new(
            vec!["l".into()],
            vec![NodeSpec::new(0, "m", 1)],
            vec![],
            BTreeMap::new(),
        )
        .unwrap_err();
        assert!(err.to_string().starts_with("nodes[0].layer"), "{err}");
    }

    #[test]
    fn amplify_identity_factor() {
        let g = star(4);
        assert_eq!(amplify_node_influence(&g, 0, 1.0).unwrap(), g);
    }

    #[test]
    fn amplify_star_center() {
        let g = star(4);
        let h = amplify_node_influence(&g, 0, 5.0).unwrap();
        assert!(h.edges().iter().all(|e| e.strength == 5.0));
        let h = amplify_node_influence(&g, 3, 5.0).unwrap();
        let changed: Vec<_> = h.edges().iter().filter(|e| e.strength != 1.0).collect();
        assert_eq!(changed, vec![&EdgeSpec::new(0, 3, 5.0)]);
    }

    #[test]
    fn amplify_errors() {
        let g = star(2);
        assert!(matches!(
            amplify_node_influence(&g, 42, 2.0),
            Err(Error::UnknownNode(42))
        ));
        assert!(matches!(
            amplify_node_influence(&g, 0, 0.5),
            Err(Error::Validation(_))
        ));
    }
}
