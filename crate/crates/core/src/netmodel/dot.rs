use std::fmt::Write;

use super::graph::{InfrastructureGraph, MAX_SCORE, MIN_SCORE};

/// Renders an undirected DOT graph. Nodes are labelled with their id and
/// colored green (score 1) to red (score 10), with diameter growing with
/// the score. `scores` (indexed like `g.nodes()`) overrides the initial
/// scores, e.g. to draw an optimized configuration.
pub fn to_dot(g: &InfrastructureGraph, scores: Option<&[u32]>) -> String {
    let mut out = String::new();
    writeln!(out, "graph infrastructure {{").unwrap();
    writeln!(out, "    graph [rankdir=LR]").unwrap();
    writeln!(out, "    node [shape=circle style=filled fixedsize=true]").unwrap();
    for (layer_idx, layer) in g.layers().iter().enumerate() {
        writeln!(out, "    subgraph cluster_{layer_idx} {{").unwrap();
        writeln!(out, "        label=\"{}\"", escape(layer)).unwrap();
        for (i, node) in g.nodes().iter().enumerate().filter(|(_, n)| &n.layer == layer) {
            let score = scores.map_or(node.initial_score, |s| s[i]);
            writeln!(
                out,
                "        {} [label=\"{}\" fillcolor=\"{}\" width={:.2}]",
                node.id,
                node.id,
                score_color(score),
                node_size(score)
            )
            .unwrap();
        }
        writeln!(out, "    }}").unwrap();
    }
    for edge in g.edges() {
        if edge.strength == 1.0 {
            writeln!(out, "    {} -- {}", edge.a, edge.b).unwrap();
        } else {
            writeln!(out, "    {} -- {} [penwidth={}]", edge.a, edge.b, edge.strength).unwrap();
        }
    }
    writeln!(out, "}}").unwrap();
    out
}

/// Linear green to red ramp over `[MIN_SCORE, MAX_SCORE]`.
pub fn score_color(score: u32) -> String {
    let t = f64::from(score.clamp(MIN_SCORE, MAX_SCORE) - MIN_SCORE)
        / f64::from(MAX_SCORE - MIN_SCORE);
    let red = (255.0 * t).round() as u8;
    let green = (255.0 * (1.0 - t)).round() as u8;
    format!("#{red:02x}{green:02x}00")
}

fn node_size(score: u32) -> f64 {
    0.3 + 0.07 * f64::from(score)
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
