//! One-hot encoding of discrete risk levels.
//!
//! Node `i` (by index) at level `l` in `1..=K` owns variable `i * K + (l - 1)`.
//! A valid assignment sets exactly one variable per node.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::SparseTerms;

pub const DEFAULT_LEVELS: u32 = 10;

/// A binary vector over all encoded variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment {
    bits: Vec<u8>,
}

impl Assignment {
    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![0; n] }
    }

    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if let Some(i) = bits.iter().position(|&b| b > 1) {
            return Err(Error::Validation(format!("bit {i} is {}, expected 0 or 1", bits[i])));
        }
        Ok(Self { bits })
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        Self {
            bits: bits.iter().map(|&b| u8::from(b)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i] == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.bits[i] = u8::from(value);
    }

    pub fn flip(&mut self, i: usize) {
        self.bits[i] ^= 1;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }
}

/// Nodes whose level bits do not form a one-hot group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvalidityReport {
    /// `(node index, number of set bits)`, ascending by node index.
    pub nodes: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decoded {
    Valid(Vec<u32>),
    Invalid(InvalidityReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEncoding {
    levels: u32,
    node_ids: Vec<u32>,
    penalty: f64,
}

impl ScoreEncoding {
    pub fn new(levels: u32, node_ids: Vec<u32>, penalty: f64) -> Result<Self> {
        if levels == 0 {
            return Err(Error::Validation("encoding needs at least one level".into()));
        }
        if !(penalty.is_finite() && penalty > 0.0) {
            return Err(Error::Validation(format!(
                "one-hot penalty must be positive and finite, got {penalty}"
            )));
        }
        Ok(Self {
            levels,
            node_ids,
            penalty,
        })
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn node_ids(&self) -> &[u32] {
        &self.node_ids
    }

    pub fn num_nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn num_vars(&self) -> usize {
        self.node_ids.len() * self.levels as usize
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    pub fn var_index(&self, node: usize, level: u32) -> usize {
        debug_assert!((1..=self.levels).contains(&level));
        node * self.levels as usize + (level - 1) as usize
    }

    /// Inverse of [`var_index`](Self::var_index): `(node index, level)`.
    pub fn var_location(&self, var: usize) -> (usize, u32) {
        let k = self.levels as usize;
        (var / k, (var % k) as u32 + 1)
    }

    /// Variable range owned by one node.
    pub fn node_vars(&self, node: usize) -> std::ops::Range<usize> {
        let k = self.levels as usize;
        node * k..(node + 1) * k
    }

    pub fn encode(&self, scores: &[u32]) -> Result<Assignment> {
        if scores.len() != self.num_nodes() {
            return Err(Error::Validation(format!(
                "expected {} scores, got {}",
                self.num_nodes(),
                scores.len()
            )));
        }
        let mut a = Assignment::zeros(self.num_vars());
        for (node, &s) in scores.iter().enumerate() {
            if !(1..=self.levels).contains(&s) {
                return Err(Error::parse(
                    format!("scores[{node}]"),
                    format!("score out of range [1,{}]", self.levels),
                ));
            }
            a.set(self.var_index(node, s), true);
        }
        Ok(a)
    }

    fn set_levels(&self, a: &Assignment, node: usize) -> Vec<u32> {
        a.bits()[self.node_vars(node)]
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == 1)
            .map(|(k, _)| k as u32 + 1)
            .collect()
    }

    /// # Panics
    /// If the assignment length does not match the encoding.
    pub fn decode(&self, a: &Assignment) -> Decoded {
        assert_eq!(a.len(), self.num_vars(), "assignment length mismatch");
        let mut scores = Vec::with_capacity(self.num_nodes());
        let mut bad = Vec::new();
        for node in 0..self.num_nodes() {
            let set = self.set_levels(a, node);
            if set.len() == 1 {
                scores.push(set[0]);
            } else {
                bad.push((node, set.len()));
            }
        }
        if bad.is_empty() {
            Decoded::Valid(scores)
        } else {
            Decoded::Invalid(InvalidityReport { nodes: bad })
        }
    }

    /// Decodes with the deterministic repair rule: several set bits keep the
    /// lowest level; no set bit falls back to `previous[node]` (clamped to
    /// the level range), or level 1 without a fallback. Returns the scores
    /// and the number of repaired nodes.
    pub fn decode_repaired(&self, a: &Assignment, previous: Option<&[u32]>) -> (Vec<u32>, usize) {
        assert_eq!(a.len(), self.num_vars(), "assignment length mismatch");
        let mut repairs = 0;
        let scores = (0..self.num_nodes())
            .map(|node| {
                let set = self.set_levels(a, node);
                match set.as_slice() {
                    [only] => *only,
                    [] => {
                        repairs += 1;
                        previous.map_or(1, |p| p[node].clamp(1, self.levels))
                    }
                    [lowest, ..] => {
                        repairs += 1;
                        *lowest
                    }
                }
            })
            .collect();
        (scores, repairs)
    }

    /// `P * (sum_l x_{i,l} - 1)^2` summed over nodes, expanded with `x^2 = x`.
    pub fn onehot_penalty_terms(&self) -> SparseTerms {
        let p = self.penalty;
        let mut terms = SparseTerms::default();
        for node in 0..self.num_nodes() {
            terms.offset += p;
            let vars = self.node_vars(node);
            for u in vars.clone() {
                terms.add_linear(u, -p);
                for v in u + 1..vars.end {
                    terms.add_quadratic(u, v, 2.0 * p);
                }
            }
        }
        terms.compact();
        terms
    }
}
