//! Exposure flags push scores up. A three-node chain is solved exactly with
//! node 1 unflagged and flagged, at increasing exposure weights.

use std::collections::BTreeMap;

use qubo_risk::netmodel::{EdgeSpec, InfrastructureGraph, NodeSpec};
use qubo_risk::qubo::{assemble, ModelConfig, Weights};
use qubo_risk::solvers::{solve_exhaustive, Budget, SolverRequest, DEFAULT_EXHAUSTIVE_CAP};

fn solve(g: &InfrastructureGraph, exposure: f64, all_pairs: bool) -> qubo_risk::Result<Vec<u32>> {
    let d = Weights::default();
    let cfg = ModelConfig {
        weights: Weights::new(d.anchor, d.connectivity, d.neighbor, exposure, d.critical),
        h4_all_pairs: all_pairs,
        ..ModelConfig::default().with_levels(6)
    };
    let q = assemble(g, &cfg)?;
    let req = SolverRequest::new(&q, 0, Budget::Iterations(1));
    Ok(solve_exhaustive(&req, DEFAULT_EXHAUSTIVE_CAP)?.decoded_scores)
}

fn main() -> qubo_risk::Result<()> {
    let nodes = vec![NodeSpec::new(1, "edge", 2), NodeSpec::new(2, "edge", 2), NodeSpec::new(3, "core", 2)];
    let edges = vec![EdgeSpec::new(1, 2, 1.0), EdgeSpec::new(2, 3, 1.0)];
    let plain = InfrastructureGraph::new(vec!["edge".into(), "core".into()], nodes, edges, BTreeMap::new())?;
    let mut flagged = plain.clone();
    flagged.set_flags(1, true, true)?;

    println!("{:>8}  {:<12} {:<12} {:<12}", "weight", "no flags", "flagged", "all pairs");
    for w in [0.5, 2.0, 4.0, 8.0] {
        println!(
            "{w:>8}  {:<12} {:<12} {:<12}",
            format!("{:?}", solve(&plain, w, false)?),
            format!("{:?}", solve(&flagged, w, false)?),
            format!("{:?}", solve(&flagged, w, true)?)
        );
    }
    Ok(())
}
