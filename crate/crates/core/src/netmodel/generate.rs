//! Seeded generators for layered infrastructures.
//!
//! All randomness flows through a single [`ChaCha8Rng`] seeded from
//! `rng_seed`, drawn in a fixed order (scores by node id, then inter-layer
//! pairs layer by layer, then the exception pick), so a spec reproduces the
//! same graph on every platform.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::graph::{EdgeSpec, InfrastructureGraph, NodeSpec, MAX_SCORE, MIN_SCORE};
use crate::error::{Error, Result};

/// How nodes of one layer connect among themselves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntraRule {
    Full,
    None,
    /// Consecutive blocks of `size` nodes form isolated cliques.
    Subnets { size: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub name: String,
    pub count: usize,
    pub intra: IntraRule,
    /// Overrides the global sampling range for this layer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score_range: Option<(u32, u32)>,
}

impl LayerSpec {
    pub fn new(name: impl Into<String>, count: usize, intra: IntraRule) -> Self {
        Self {
            name: name.into(),
            count,
            intra,
            score_range: None,
        }
    }

    pub fn with_fixed_score(mut self, score: u32) -> Self {
        self.score_range = Some((score, score));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeSelection {
    /// Uniform over all nodes.
    Random,
    /// Uniform over the nodes of the listed layers.
    RandomInLayers(Vec<String>),
    Id(u32),
}

/// A single high-risk node planted into an otherwise calm network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExceptionSpec {
    pub selection: NodeSelection,
    pub score: u32,
    #[serde(default = "one")]
    pub strength_multiplier: f64,
    #[serde(default)]
    pub no_update: bool,
    #[serde(default)]
    pub internet: bool,
}

fn one() -> f64 {
    1.0
}

impl ExceptionSpec {
    pub fn new(selection: NodeSelection, score: u32) -> Self {
        Self {
            selection,
            score,
            strength_multiplier: 1.0,
            no_update: false,
            internet: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayeredGenSpec {
    pub layers: Vec<LayerSpec>,
    /// Bernoulli probability for each node pair drawn from adjacent layers.
    pub inter_probability: f64,
    pub score_range: (u32, u32),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exception: Option<ExceptionSpec>,
    pub rng_seed: u64,
}

pub const WORKSTATIONS: &str = "workstation";
pub const NETWORK: &str = "network";
pub const SERVERS: &str = "server";
pub const DATABASES: &str = "database";
pub const SECURITY_1: &str = "security_1";
pub const SECURITY_2: &str = "security_2";
pub const SECURITY_3: &str = "security_3";

/// Default probability of an edge between two nodes in adjacent layers.
pub const DEFAULT_INTER_PROBABILITY: f64 = 0.1;

/// Node id of the central network node used as the risky exception in the preset.
pub const PRESET_EXCEPTION_ID: u32 = 143;

impl LayeredGenSpec {
    /// The seven-layer, 255-node infrastructure: 100 workstations in ten
    /// isolated subnets, 30 network nodes, 20 servers, 15 databases, and a
    /// 30-node security layer (score 1, no intra links) between each pair of
    /// functional layers. Initial scores are drawn from `[1, 4]` and node
    /// 143 (a network node) is raised to score 8.
    pub fn infrastructure_255(seed: u64) -> Self {
        Self::scaled_infrastructure(255, seed).with_exception(ExceptionSpec::new(
            NodeSelection::Id(PRESET_EXCEPTION_ID),
            8,
        ))
    }

    /// The preset's layer mix rescaled to `n_nodes` (largest-remainder
    /// rounding, at least one node per layer). Carries an exception of score
    /// 8 picked at random among the functional layers.
    pub fn scaled_infrastructure(n_nodes: usize, seed: u64) -> Self {
        const BASE: [(&str, usize); 7] = [
            (WORKSTATIONS, 100),
            (SECURITY_1, 30),
            (NETWORK, 30),
            (SECURITY_2, 30),
            (SERVERS, 20),
            (SECURITY_3, 30),
            (DATABASES, 15),
        ];
        let counts = apportion(n_nodes.max(BASE.len()), &BASE.map(|(_, c)| c));
        let layers = BASE
            .iter()
            .zip(counts)
            .map(|(&(name, _), count)| {
                if name.starts_with("security") {
                    LayerSpec::new(name, count, IntraRule::None).with_fixed_score(MIN_SCORE)
                } else if name == WORKSTATIONS {
                    LayerSpec::new(name, count, IntraRule::Subnets { size: 10 })
                } else {
                    LayerSpec::new(name, count, IntraRule::Full)
                }
            })
            .collect();
        Self {
            layers,
            inter_probability: DEFAULT_INTER_PROBABILITY,
            score_range: (1, 4),
            exception: Some(ExceptionSpec::new(
                NodeSelection::RandomInLayers(vec![
                    WORKSTATIONS.into(),
                    NETWORK.into(),
                    SERVERS.into(),
                    DATABASES.into(),
                ]),
                8,
            )),
            rng_seed: seed,
        }
    }

    pub fn with_exception(mut self, exception: ExceptionSpec) -> Self {
        self.exception = Some(exception);
        self
    }

    pub fn without_exception(mut self) -> Self {
        self.exception = None;
        self
    }

    pub fn node_count(&self) -> usize {
        self.layers.iter().map(|l| l.count).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if self.layers.is_empty() {
            return bad("generator spec has no layers".into());
        }
        if !(0.0..=1.0).contains(&self.inter_probability) {
            return bad(format!(
                "inter_probability {} outside [0, 1]",
                self.inter_probability
            ));
        }
        check_range("score_range", self.score_range)?;
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.count == 0 {
                return bad(format!("layers[{i}] ({}) has zero nodes", layer.name));
            }
            if let IntraRule::Subnets { size: 0 } = layer.intra {
                return bad(format!("layers[{i}] subnet size must be positive"));
            }
            if let Some(r) = layer.score_range {
                check_range(&format!("layers[{i}].score_range"), r)?;
            }
            if self.layers[..i].iter().any(|l| l.name == layer.name) {
                return bad(format!("duplicate layer name `{}`", layer.name));
            }
        }
        if let Some(ex) = &self.exception {
            if !(MIN_SCORE..=MAX_SCORE).contains(&ex.score) {
                return bad(format!(
                    "exception score {} out of range [{MIN_SCORE},{MAX_SCORE}]",
                    ex.score
                ));
            }
            if !(ex.strength_multiplier.is_finite() && ex.strength_multiplier >= 1.0) {
                return bad("exception strength multiplier must be >= 1".into());
            }
            match &ex.selection {
                NodeSelection::Id(id) if *id as usize >= self.node_count() => {
                    return bad(format!("exception node {id} does not exist"));
                }
                NodeSelection::RandomInLayers(names) => {
                    if !names.iter().any(|n| self.layers.iter().any(|l| &l.name == n)) {
                        return bad("exception layer selection matches no layer".into());
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

fn check_range(what: &str, (lo, hi): (u32, u32)) -> Result<()> {
    if lo > hi || lo < MIN_SCORE || hi > MAX_SCORE {
        return Err(Error::Validation(format!(
            "{what} [{lo}, {hi}] must lie within [{MIN_SCORE}, {MAX_SCORE}]"
        )));
    }
    Ok(())
}

/// Largest-remainder apportionment of `total` over `weights`, each share >= 1.
/// Requires `total >= weights.len()`.
fn apportion(total: usize, weights: &[usize]) -> Vec<usize> {
    let sum: usize = weights.iter().sum();
    let mut shares: Vec<usize> = weights.iter().map(|w| total * w / sum).collect();
    let mut rest: Vec<(usize, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, w)| ((total * w) % sum, i))
        .collect();
    rest.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let assigned: usize = shares.iter().sum();
    for &(_, i) in rest.iter().take(total - assigned) {
        shares[i] += 1;
    }
    while let Some(empty) = shares.iter().position(|&s| s == 0) {
        let largest = (0..shares.len()).max_by_key(|&i| (shares[i], usize::MAX - i)).unwrap();
        shares[largest] -= 1;
        shares[empty] = 1;
    }
    shares
}

/// Builds a layered infrastructure. Node ids are assigned consecutively in
/// layer order starting at 0.
pub fn generate_layered(spec: &LayeredGenSpec) -> Result<InfrastructureGraph> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);

    let mut nodes = Vec::with_capacity(spec.node_count());
    let mut spans = Vec::with_capacity(spec.layers.len());
    for layer in &spec.layers {
        let (lo, hi) = layer.score_range.unwrap_or(spec.score_range);
        let start = nodes.len() as u32;
        for _ in 0..layer.count {
            let id = nodes.len() as u32;
            nodes.push(NodeSpec::new(id, layer.name.clone(), rng.gen_range(lo..=hi)));
        }
        spans.push(start..nodes.len() as u32);
    }

    let mut edges = Vec::new();
    for (layer, span) in spec.layers.iter().zip(&spans) {
        let ids: Vec<u32> = span.clone().collect();
        let groups: Vec<&[u32]> = match layer.intra {
            IntraRule::None => Vec::new(),
            IntraRule::Full => vec![&ids[..]],
            IntraRule::Subnets { size } => ids.chunks(size).collect(),
        };
        for group in groups {
            for (k, &a) in group.iter().enumerate() {
                for &b in &group[k + 1..] {
                    edges.push(EdgeSpec::new(a, b, 1.0));
                }
            }
        }
    }
    for pair in spans.windows(2) {
        for a in pair[0].clone() {
            for b in pair[1].clone() {
                if rng.gen_bool(spec.inter_probability) {
                    edges.push(EdgeSpec::new(a, b, 1.0));
                }
            }
        }
    }

    let mut metadata = BTreeMap::new();
    metadata.insert("seed".into(), spec.rng_seed.into());
    metadata.insert("generator".into(), "layered".into());

    if let Some(ex) = &spec.exception {
        let id = match &ex.selection {
            NodeSelection::Id(id) => *id,
            NodeSelection::Random => rng.gen_range(0..nodes.len() as u32),
            NodeSelection::RandomInLayers(names) => {
                let pool: Vec<u32> = spec
                    .layers
                    .iter()
                    .zip(&spans)
                    .filter(|(l, _)| names.contains(&l.name))
                    .flat_map(|(_, s)| s.clone())
                    .collect();
                pool[rng.gen_range(0..pool.len())]
            }
        };
        let node = &mut nodes[id as usize];
        node.initial_score = ex.score;
        node.no_update_flag |= ex.no_update;
        node.internet_flag |= ex.internet;
        for edge in edges.iter_mut().filter(|e| e.a == id || e.b == id) {
            edge.strength *= ex.strength_multiplier;
        }
        metadata.insert("exception".into(), id.into());
    }

    let layers = spec.layers.iter().map(|l| l.name.clone()).collect();
    InfrastructureGraph::new(layers, nodes, edges, metadata)
}

/// Id of the planted exception, when the graph came from [`generate_layered`].
pub fn exception_id(g: &InfrastructureGraph) -> Option<u32> {
    g.metadata()
        .get("exception")
        .and_then(|v| v.as_u64())
        .map(|v| v as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer_of(g: &InfrastructureGraph) -> Vec<usize> {
        g.nodes()
            .iter()
            .map(|n| g.layer_index(&n.layer).unwrap())
            .collect()
    }

    #[test]
    fn preset_has_255_nodes_in_seven_layers() {
        let g = generate_layered(&LayeredGenSpec::infrastructure_255(1)).unwrap();
        assert_eq!(g.len(), 255);
        let counts: Vec<usize> = g
            .layers()
            .iter()
            .map(|l| g.nodes().iter().filter(|n| &n.layer == l).count())
            .collect();
        assert_eq!(counts, vec![100, 30, 30, 30, 20, 30, 15]);
    }

    #[test]
    fn preset_exception_is_unique_score_8() {
        let g = generate_layered(&LayeredGenSpec::infrastructure_255(3)).unwrap();
        let high: Vec<_> = g.nodes().iter().filter(|n| n.initial_score == 8).collect();
        assert_eq!(high.len(), 1);
        assert_eq!(high[0].id, PRESET_EXCEPTION_ID);
        assert_eq!(high[0].layer, NETWORK);
        assert!(g
            .nodes()
            .iter()
            .filter(|n| n.id != PRESET_EXCEPTION_ID)
            .all(|n| (1..=4).contains(&n.initial_score)));
        assert!(g
            .nodes()
            .iter()
            .filter(|n| n.layer.starts_with("security"))
            .all(|n| n.initial_score == 1));
    }

    #[test]
    fn single_node_single_layer() {
        let spec = LayeredGenSpec {
            layers: vec![LayerSpec::new("solo", 1, IntraRule::Full)],
            inter_probability: 0.5,
            score_range: (1, 4),
            exception: None,
            rng_seed: 0,
        };
        let g = generate_layered(&spec).unwrap();
        assert_eq!(g.len(), 1);
        assert!(g.edges().is_empty());
    }

    #[test]
    fn rejects_bad_specs() {
        let mut spec = LayeredGenSpec::infrastructure_255(0);
        spec.inter_probability = 1.5;
        assert!(generate_layered(&spec).is_err());
        spec.layers.clear();
        assert!(generate_layered(&spec).is_err());
        let mut spec = LayeredGenSpec::infrastructure_255(0);
        spec.exception.as_mut().unwrap().score = 11;
        assert!(generate_layered(&spec).is_err());
    }

    #[test]
    fn structure_invariants_hold() {
        for seed in 0..5 {
            let g = generate_layered(&LayeredGenSpec::infrastructure_255(seed)).unwrap();
            let layer = layer_of(&g);
            for (i, j, s) in g.indexed_edges() {
                assert!(layer[i].abs_diff(layer[j]) <= 1, "edge skips a layer");
                assert_eq!(s, 1.0);
                if layer[i] == 0 && layer[j] == 0 {
                    assert_eq!(i / 10, j / 10, "workstation subnets must stay isolated");
                }
                if g.layers()[layer[i]].starts_with("security") {
                    assert_ne!(layer[i], layer[j], "security layers carry no intra links");
                }
            }
        }
    }

    #[test]
    fn same_seed_same_graph() {
        let a = generate_layered(&LayeredGenSpec::infrastructure_255(9)).unwrap();
        let b = generate_layered(&LayeredGenSpec::infrastructure_255(9)).unwrap();
        let c = generate_layered(&LayeredGenSpec::infrastructure_255(10)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn scaled_instances_hit_requested_size() {
        for n in [7, 10, 50, 100, 200, 400, 500, 1000] {
            let g = generate_layered(&LayeredGenSpec::scaled_infrastructure(n, 1)).unwrap();
            assert_eq!(g.len(), n);
        }
    }

    #[test]
    fn exception_multiplier_and_flags() {
        let mut ex = ExceptionSpec::new(NodeSelection::Id(143), 8);
        ex.strength_multiplier = 3.0;
        ex.internet = true;
        let g = generate_layered(&LayeredGenSpec::infrastructure_255(2).with_exception(ex)).unwrap();
        let node = g.node(143).unwrap();
        assert!(node.internet_flag && !node.no_update_flag);
        for e in g.edges() {
            let incident = e.a == 143 || e.b == 143;
            assert_eq!(e.strength, if incident { 3.0 } else { 1.0 });
        }
    }

    #[test]
    fn apportion_matches_total() {
        assert_eq!(apportion(255, &[100, 30, 30, 30, 20, 30, 15]), vec![100, 30, 30, 30, 20, 30, 15]);
        assert_eq!(apportion(7, &[100, 30, 30, 30, 20, 30, 15]), vec![1; 7]);
    }
}
