//! The five risk terms and their assembly into one QUBO.
//!
//! Every term is quadratic in the final scores `FS_i`, so each builder
//! produces a [`ScoreForm`]: a quadratic polynomial over scores. Substituting
//! the one-hot expansion `FS_i = sum_l l * x_{i,l}` turns the weighted sum
//! into bit-level QUBO terms. Squares use `FS_i^2 = sum_l l^2 x_{i,l}`,
//! which is exact on one-hot assignments; the penalty keeps the minimizer
//! there.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::model::{QuboModel, TermProvenance};
use super::terms::SparseTerms;
use crate::encoding::{ScoreEncoding, DEFAULT_LEVELS};
use crate::error::{Error, Result};
use crate::netmodel::InfrastructureGraph;

/// Nodes with an initial score at or above this count as critical.
pub const CRITICAL_THRESHOLD: u32 = 7;

/// Relative weights of the five terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weights {
    /// Keeps final scores near initial scores, weighted by the initial score.
    pub anchor: f64,
    /// Rewards high scores across strong links (connected nodes are riskier).
    pub connectivity: f64,
    /// Pulls each score toward the mean of its neighbors.
    pub neighbor: f64,
    /// Raises scores on links touching no-update or internet-exposed nodes.
    pub exposure: f64,
    /// Rewards high scores on critical nodes.
    pub critical: f64,
}

impl Weights {
    pub const fn new(anchor: f64, connectivity: f64, neighbor: f64, exposure: f64, critical: f64) -> Self {
        Self {
            anchor,
            connectivity,
            neighbor,
            exposure,
            critical,
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.anchor, self.connectivity, self.neighbor, self.exposure, self.critical]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let [a, b, c, d, e] = self.as_array().map(|w| w * factor);
        Self::new(a, b, c, d, e)
    }
}

/// Calibrated on the layered generator: a lone high-score node is pulled
/// down while its neighbours rise, and the global mean drifts upward.
impl Default for Weights {
    fn default() -> Self {
        Self::new(1.0, 0.09, 8.0, 0.5, 1.0)
    }
}

/// Everything needed to turn a graph into a QUBO.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub weights: Weights,
    pub levels: u32,
    /// One-hot penalty. `None` derives it from the objective: twice the
    /// largest single-flip energy bound.
    pub penalty: Option<f64>,
    /// Sum the exposure term over all node pairs instead of edges only.
    pub h4_all_pairs: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            weights: Weights::default(),
            levels: DEFAULT_LEVELS,
            penalty: None,
            h4_all_pairs: false,
        }
    }
}

impl ModelConfig {
    pub fn with_weights(weights: Weights) -> Self {
        Self {
            weights,
            ..Self::default()
        }
    }

    pub fn with_levels(mut self, levels: u32) -> Self {
        self.levels = levels;
        self
    }
}

/// Quadratic polynomial in node scores:
/// `offset + sum_i linear_i FS_i + sum_i square_i FS_i^2 + sum_{i<j} pair_ij FS_i FS_j`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreForm {
    pub offset: f64,
    pub linear: Vec<f64>,
    pub square: Vec<f64>,
    pub pairs: BTreeMap<(usize, usize), f64>,
}

impl ScoreForm {
    pub fn zeros(n: usize) -> Self {
        Self {
            offset: 0.0,
            linear: vec![0.0; n],
            square: vec![0.0; n],
            pairs: BTreeMap::new(),
        }
    }

    fn add_pair(&mut self, i: usize, j: usize, c: f64) {
        debug_assert_ne!(i, j);
        *self.pairs.entry((i.min(j), i.max(j))).or_insert(0.0) += c;
    }

    pub fn add_scaled(&mut self, other: &ScoreForm, w: f64) {
        self.offset += w * other.offset;
        for (a, b) in self.linear.iter_mut().zip(&other.linear) {
            *a += w * b;
        }
        for (a, b) in self.square.iter_mut().zip(&other.square) {
            *a += w * b;
        }
        for (&k, &c) in &other.pairs {
            *self.pairs.entry(k).or_insert(0.0) += w * c;
        }
    }

    pub fn evaluate(&self, scores: &[u32]) -> f64 {
        let fs = |i: usize| f64::from(scores[i]);
        let mut e = self.offset;
        for i in 0..self.linear.len() {
            e += self.linear[i] * fs(i) + self.square[i] * fs(i) * fs(i);
        }
        for (&(i, j), &c) in &self.pairs {
            e += c * fs(i) * fs(j);
        }
        e
    }

    /// Bit-level terms under the one-hot encoding with `levels` levels.
    pub fn expand(&self, levels: u32) -> SparseTerms {
        let k = levels as usize;
        let mut terms = SparseTerms::default();
        terms.offset = self.offset;
        for i in 0..self.linear.len() {
            for l in 1..=k {
                let lf = l as f64;
                terms.add_linear(i * k + l - 1, self.linear[i] * lf + self.square[i] * lf * lf);
            }
        }
        for (&(i, j), &c) in &self.pairs {
            for l in 1..=k {
                for m in 1..=k {
                    terms.add_quadratic(i * k + l - 1, j * k + m - 1, c * (l * m) as f64);
                }
            }
        }
        terms.compact();
        terms
    }

    /// Sums of the bit-level linear and quadratic coefficients `expand` would produce.
    fn expanded_sums(&self, levels: u32) -> (f64, f64) {
        let k = f64::from(levels);
        let sum_l = k * (k + 1.0) / 2.0;
        let sum_l2 = k * (k + 1.0) * (2.0 * k + 1.0) / 6.0;
        let lin: f64 = self
            .linear
            .iter()
            .zip(&self.square)
            .map(|(a, b)| a * sum_l + b * sum_l2)
            .sum();
        let quad: f64 = self.pairs.values().map(|c| c * sum_l * sum_l).sum();
        (lin, quad)
    }
}

fn initial(g: &InfrastructureGraph, i: usize) -> f64 {
    f64::from(g.nodes()[i].initial_score)
}

/// `sum_i IS_i (IS_i - FS_i)^2`.
pub fn build_h1(g: &InfrastructureGraph) -> ScoreForm {
    let mut f = ScoreForm::zeros(g.len());
    for i in 0..g.len() {
        let is = initial(g, i);
        f.offset += is * is * is;
        f.linear[i] = -2.0 * is * is;
        f.square[i] = is;
    }
    f
}

/// `-sum_{(i,j) in E} S_ij FS_i FS_j`.
pub fn build_h2(g: &InfrastructureGraph) -> ScoreForm {
    let mut f = ScoreForm::zeros(g.len());
    for (i, j, s) in g.indexed_edges() {
        f.add_pair(i, j, -s);
    }
    f
}

/// `sum_i (FS_i - mean_{j in N(i)} FS_j)^2`, skipping isolated nodes.
/// Expanding the square couples every pair of neighbors of `i`.
pub fn build_h3(g: &InfrastructureGraph) -> ScoreForm {
    let mut f = ScoreForm::zeros(g.len());
    for (i, nbrs) in g.adjacency().iter().enumerate() {
        if nbrs.is_empty() {
            continue;
        }
        let d = nbrs.len() as f64;
        f.square[i] += 1.0;
        for (a, &j) in nbrs.iter().enumerate() {
            f.add_pair(i, j, -2.0 / d);
            f.square[j] += 1.0 / (d * d);
            for &k in &nbrs[a + 1..] {
                f.add_pair(j, k, 2.0 / (d * d));
            }
        }
    }
    f
}

/// `-sum (f_i + f_j)(FS_i + FS_j)` over edges, or over all node pairs when
/// `all_pairs` is set, where `f` counts a node's raised flags.
pub fn build_h4(g: &InfrastructureGraph, all_pairs: bool) -> ScoreForm {
    let n = g.len();
    let mut f = ScoreForm::zeros(n);
    let flags: Vec<f64> = g.nodes().iter().map(|n| f64::from(n.flag_count())).collect();
    if all_pairs {
        let total: f64 = flags.iter().sum();
        for i in 0..n {
            // sum over j != i of (f_i + f_j)
            f.linear[i] -= (n as f64 - 1.0) * flags[i] + (total - flags[i]);
        }
    } else {
        for (i, j, _) in g.indexed_edges() {
            let w = flags[i] + flags[j];
            f.linear[i] -= w;
            f.linear[j] -= w;
        }
    }
    f
}

/// `-sum_{i critical} FS_i`. Critical nodes are those with an initial score of
/// at least [`CRITICAL_THRESHOLD`] unless `critical` overrides the set.
pub fn build_h5(g: &InfrastructureGraph, critical: Option<&[bool]>) -> ScoreForm {
    let mut f = ScoreForm::zeros(g.len());
    for (i, node) in g.nodes().iter().enumerate() {
        let is_critical = match critical {
            Some(set) => set[i],
            None => node.initial_score >= CRITICAL_THRESHOLD,
        };
        if is_critical {
            f.linear[i] = -1.0;
        }
    }
    f
}

/// The weighted sum of the five terms as a score polynomial.
pub fn weighted_form(g: &InfrastructureGraph, cfg: &ModelConfig, critical: Option<&[bool]>) -> ScoreForm {
    let mut total = ScoreForm::zeros(g.len());
    for (form, w) in term_forms(g, cfg, critical).iter().zip(cfg.weights.as_array()) {
        total.add_scaled(&form.1, w);
    }
    total
}

fn term_forms(g: &InfrastructureGraph, cfg: &ModelConfig, critical: Option<&[bool]>) -> Vec<(&'static str, ScoreForm)> {
    vec![
        ("h1", build_h1(g)),
        ("h2", build_h2(g)),
        ("h3", build_h3(g)),
        ("h4", build_h4(g, cfg.h4_all_pairs)),
        ("h5", build_h5(g, critical)),
    ]
}

pub fn assemble(g: &InfrastructureGraph, cfg: &ModelConfig) -> Result<QuboModel> {
    assemble_with_critical(g, cfg, None)
}

/// [`assemble`] with an explicit critical-node set (indexed like `g.nodes()`).
pub fn assemble_with_critical(
    g: &InfrastructureGraph,
    cfg: &ModelConfig,
    critical: Option<&[bool]>,
) -> Result<QuboModel> {
    if cfg.weights.as_array().iter().any(|w| !w.is_finite()) {
        return Err(Error::Validation("weights must be finite".into()));
    }
    if cfg.levels == 0 {
        return Err(Error::Validation("levels must be positive".into()));
    }
    if let Some(set) = critical {
        if set.len() != g.len() {
            return Err(Error::Validation("critical set length mismatch".into()));
        }
    }

    let mut total = ScoreForm::zeros(g.len());
    let mut provenance = Vec::with_capacity(6);
    for ((name, form), w) in term_forms(g, cfg, critical).into_iter().zip(cfg.weights.as_array()) {
        let (lin, quad) = form.expanded_sums(cfg.levels);
        provenance.push(TermProvenance {
            term: name.into(),
            weight: w,
            offset: w * form.offset,
            linear_sum: w * lin,
            quadratic_sum: w * quad,
        });
        total.add_scaled(&form, w);
    }

    let mut terms = total.expand(cfg.levels);
    let n_vars = g.len() * cfg.levels as usize;
    let penalty = match cfg.penalty {
        Some(p) => p,
        None => default_penalty(&terms, n_vars),
    };
    let encoding = ScoreEncoding::new(cfg.levels, g.node_ids(), penalty)?;
    let onehot = encoding.onehot_penalty_terms();
    provenance.push(TermProvenance {
        term: "onehot".into(),
        weight: penalty,
        offset: onehot.offset,
        linear_sum: onehot.linear().iter().map(|t| t.1).sum(),
        quadratic_sum: onehot.quadratic().iter().map(|t| t.2).sum(),
    });
    terms.extend(&onehot);
    QuboModel::from_terms(n_vars, terms, Some(encoding), provenance)
}

/// Twice the largest single-flip bound of the objective; 1 for a null objective.
pub fn default_penalty(objective: &SparseTerms, n_vars: usize) -> f64 {
    let bound = objective.row_bounds(n_vars).into_iter().fold(0.0, f64::max);
    if bound > 0.0 {
        2.0 * bound
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{EdgeSpec, NodeSpec};

    fn graph(scores: &[u32], edges: &[(u32, u32, f64)]) -> InfrastructureGraph {
        let nodes = scores
            .iter()
            .enumerate()
            .map(|(i, &s)| NodeSpec::new(i as u32, "l", s))
            .collect();
        let edges = edges.iter().map(|&(a, b, s)| EdgeSpec::new(a, b, s)).collect();
        InfrastructureGraph::new(vec!["l".into()], nodes, edges, BTreeMap::new()).unwrap()
    }

    #[test]
    fn h1_examples() {
        assert_eq!(build_h1(&graph(&[5], &[])).evaluate(&[5]), 0.0);
        assert_eq!(build_h1(&graph(&[5], &[])).evaluate(&[3]), 20.0);
        assert_eq!(build_h1(&graph(&[1, 10], &[])).evaluate(&[1, 10]), 0.0);
    }

    #[test]
    fn h2_examples() {
        assert_eq!(build_h2(&graph(&[1, 1], &[])).evaluate(&[4, 4]), 0.0);
        assert_eq!(build_h2(&graph(&[1, 1], &[(0, 1, 1.0)])).evaluate(&[2, 3]), -6.0);
        assert_eq!(build_h2(&graph(&[1, 1], &[(0, 1, 5.0)])).evaluate(&[10, 10]), -500.0);
    }

    #[test]
    fn h3_examples() {
        assert_eq!(build_h3(&graph(&[1, 1], &[(0, 1, 1.0)])).evaluate(&[4, 4]), 0.0);
        let path = graph(&[1, 1, 1], &[(0, 1, 1.0), (1, 2, 1.0)]);
        assert!((build_h3(&path).evaluate(&[2, 4, 6]) - 8.0).abs() < 1e-12);
        assert_eq!(build_h3(&graph(&[3], &[])).evaluate(&[9]), 0.0);
    }

    #[test]
    fn h4_examples() {
        let mut g = graph(&[1, 1], &[(0, 1, 1.0)]);
        assert_eq!(build_h4(&g, false).evaluate(&[3, 5]), 0.0);
        g.set_flags(0, false, true).unwrap();
        assert_eq!(build_h4(&g, false).evaluate(&[3, 5]), -8.0);
        g.set_flags(0, true, true).unwrap();
        g.set_flags(1, true, true).unwrap();
        assert_eq!(build_h4(&g, false).evaluate(&[10, 10]), -80.0);
    }

    #[test]
    fn h4_all_pairs_counts_non_edges() {
        let mut g = graph(&[1, 1, 1], &[(0, 1, 1.0)]);
        g.set_flags(2, false, true).unwrap();
        assert_eq!(build_h4(&g, false).evaluate(&[2, 3, 4]), 0.0);
        // pairs (0,2) and (1,2) each carry weight 1
        assert_eq!(build_h4(&g, true).evaluate(&[2, 3, 4]), -(6.0 + 7.0));
    }

    #[test]
    fn h5_examples() {
        assert_eq!(build_h5(&graph(&[6, 2], &[]), None).evaluate(&[9, 9]), 0.0);
        assert_eq!(build_h5(&graph(&[8], &[]), None).evaluate(&[8]), -8.0);
        assert_eq!(build_h5(&graph(&[7, 6], &[]), None).evaluate(&[9, 9]), -9.0);
        assert_eq!(build_h5(&graph(&[7, 6], &[]), Some(&[false, true])).evaluate(&[9, 5]), -5.0);
    }

    #[test]
    fn null_weights_give_zero_energy() {
        let g = graph(&[3, 4, 5], &[(0, 1, 1.0), (1, 2, 2.0)]);
        let cfg = ModelConfig::with_weights(Weights::new(0.0, 0.0, 0.0, 0.0, 0.0)).with_levels(4);
        let q = assemble(&g, &cfg).unwrap();
        let enc = q.encoding().unwrap();
        assert_eq!(enc.penalty(), 1.0);
        for s in [[1, 1, 1], [4, 2, 3], [4, 4, 4]] {
            assert_eq!(q.energy(&enc.encode(&s).unwrap()), 0.0);
        }
    }

    #[test]
    fn expand_agrees_with_evaluate_on_one_hot() {
        let g = graph(&[2, 7, 3], &[(0, 1, 1.5), (1, 2, 1.0)]);
        let form = weighted_form(&g, &ModelConfig::default().with_levels(4), None);
        let terms = form.expand(4);
        let enc = ScoreEncoding::new(4, g.node_ids(), 1.0).unwrap();
        for s in [[1, 1, 1], [2, 4, 3], [4, 3, 1]] {
            let a = enc.encode(&s).unwrap();
            assert!((terms.evaluate(&a) - form.evaluate(&s)).abs() < 1e-9);
        }
    }

    #[test]
    fn provenance_has_all_terms() {
        let g = graph(&[2, 8], &[(0, 1, 1.0)]);
        let q = assemble(&g, &ModelConfig::default()).unwrap();
        let names: Vec<_> = q.provenance().iter().map(|p| p.term.as_str()).collect();
        assert_eq!(names, ["h1", "h2", "h3", "h4", "h5", "onehot"]);
        // provenance sums add up to the stored coefficients
        let lin: f64 = q.provenance().iter().map(|p| p.linear_sum).sum();
        let stored: f64 = q.linear().iter().map(|t| t.1).sum();
        assert!((lin - stored).abs() < 1e-9 * stored.abs().max(1.0));
    }
}
