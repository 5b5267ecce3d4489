use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::mean_std;
use crate::error::{Error, Result};
use crate::netmodel::{InfrastructureGraph, MAX_SCORE};
use crate::solvers::Solution;

/// Report format version, bumped on any schema change.
pub const REPORT_VERSION: u32 = 1;

/// `counts[i - 1][f - 1]` = nodes of the layer that went from score `i` to `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionMatrix {
    pub layer: String,
    pub counts: Vec<Vec<u64>>,
}

impl TransitionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn diagonal(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreStats {
    pub count: usize,
    pub mean_initial: f64,
    pub std_initial: f64,
    pub mean_final: f64,
    pub std_final: f64,
}

impl ScoreStats {
    fn of(initial: &[u32], fin: &[u32]) -> Self {
        let (mean_initial, std_initial) = mean_std(initial);
        let (mean_final, std_final) = mean_std(fin);
        Self {
            count: initial.len(),
            mean_initial,
            std_initial,
            mean_final,
            std_final,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerStats {
    pub layer: String,
    #[serde(flatten)]
    pub stats: ScoreStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRow {
    pub id: u32,
    pub layer: String,
    pub initial: u32,
    #[serde(rename = "final")]
    pub final_score: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverMeta {
    pub solver_name: String,
    pub seed: u64,
    pub energy: f64,
    pub repairs: usize,
    pub iterations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskReport {
    pub version: u32,
    /// Side length of every transition matrix.
    pub levels: u32,
    pub global: ScoreStats,
    pub layers: Vec<LayerStats>,
    pub transitions: Vec<TransitionMatrix>,
    pub nodes: Vec<NodeRow>,
    pub solver: SolverMeta,
}

/// Builds the per-layer transition matrices and statistics for a decoded
/// solution of `g`. Matrices cover scores `1..=max(10, highest final score)`.
pub fn transition_report(g: &InfrastructureGraph, solution: &Solution) -> Result<RiskReport> {
    let fin = &solution.decoded_scores;
    if fin.len() != g.len() {
        return Err(Error::Validation(format!(
            "solution decodes {} scores for a graph of {} nodes",
            fin.len(),
            g.len()
        )));
    }
    if let Some(i) = fin.iter().position(|&s| s == 0) {
        return Err(Error::Validation(format!("final score of node {} is 0", g.nodes()[i].id)));
    }
    let initial = g.initial_scores();
    let levels = fin.iter().copied().max().unwrap_or(0).max(MAX_SCORE);
    let k = levels as usize;

    let mut layers = Vec::new();
    let mut transitions = Vec::new();
    for label in g.layers() {
        let idx: Vec<usize> = (0..g.len()).filter(|&i| &g.nodes()[i].layer == label).collect();
        let is: Vec<u32> = idx.iter().map(|&i| initial[i]).collect();
        let fs: Vec<u32> = idx.iter().map(|&i| fin[i]).collect();
        let mut counts = vec![vec![0u64; k]; k];
        for (&a, &b) in is.iter().zip(&fs) {
            counts[a as usize - 1][b as usize - 1] += 1;
        }
        layers.push(LayerStats {
            layer: label.clone(),
            stats: ScoreStats::of(&is, &fs),
        });
        transitions.push(TransitionMatrix {
            layer: label.clone(),
            counts,
        });
    }
    let nodes = g
        .nodes()
        .iter()
        .zip(fin)
        .map(|(n, &f)| NodeRow {
            id: n.id,
            layer: n.layer.clone(),
            initial: n.initial_score,
            final_score: f,
        })
        .collect();
    Ok(RiskReport {
        version: REPORT_VERSION,
        levels,
        global: ScoreStats::of(&initial, fin),
        layers,
        transitions,
        nodes,
        solver: SolverMeta {
            solver_name: solution.solver_name.clone(),
            seed: solution.seed,
            energy: solution.energy,
            repairs: solution.repairs,
            iterations: solution.iterations,
        },
    })
}

impl RiskReport {
    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_slice(bytes);
        serde_path_to_error::deserialize(de).map_err(|e| Error::parse(e.path().to_string(), e.inner().to_string()))
    }

    /// `id,layer,initial,final` per node.
    pub fn nodes_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.nodes {
            w.serialize(row)?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
    }

    /// Global and per-layer statistics, one row per scope.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("scope,count,mean_initial,std_initial,mean_final,std_final\n");
        let mut row = |scope: &str, s: &ScoreStats| {
            let _ = writeln!(
                out,
                "{scope},{},{},{},{},{}",
                s.count, s.mean_initial, s.std_initial, s.mean_final, s.std_final
            );
        };
        row("global", &self.global);
        for l in &self.layers {
            row(&l.layer, &l.stats);
        }
        out
    }

    /// Transition grids for plotting: `layer,initial,f1..fK`, one row per initial score.
    pub fn transitions_csv(&self) -> String {
        let mut out = String::from("layer,initial");
        for f in 1..=self.levels {
            let _ = write!(out, ",f{f}");
        }
        out.push('\n');
        for t in &self.transitions {
            for (i, row) in t.counts.iter().enumerate() {
                let _ = write!(out, "{},{}", t.layer, i + 1);
                for c in row {
                    let _ = write!(out, ",{c}");
                }
                out.push('\n');
            }
        }
        out
    }
}
