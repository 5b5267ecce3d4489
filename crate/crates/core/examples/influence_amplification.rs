//! Strengthen every link of the exception node and compare the final score
//! distribution with the unmodified network.
//!
//!     cargo run --release --example influence_amplification -- [factor] [seed]

use qubo_risk::analysis::mean_std;
use qubo_risk::netmodel::{amplify_node_influence, exception_id, generate_layered, InfrastructureGraph, LayeredGenSpec};
use qubo_risk::qubo::{assemble, ModelConfig};
use qubo_risk::solvers::{SolverRequest, SolverSpec};

fn final_scores(g: &InfrastructureGraph, seed: u64) -> qubo_risk::Result<Vec<u32>> {
    let q = assemble(g, &ModelConfig::default())?;
    let spec = SolverSpec::from_name("tabu")?;
    let req = SolverRequest::new(&q, seed, spec.default_budget(q.n_vars())).with_reference(g.initial_scores());
    Ok(spec.solve(&req)?.decoded_scores)
}

fn main() -> qubo_risk::Result<()> {
    let mut args = std::env::args().skip(1);
    let factor: f64 = args.next().map_or(5.0, |s| s.parse().expect("factor"));
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));

    let g = generate_layered(&LayeredGenSpec::infrastructure_255(seed))?;
    let amplified = amplify_node_influence(&g, exception_id(&g).unwrap(), factor)?;

    let show = |label: &str, s: &[u32]| {
        let (m, sd) = mean_std(s);
        println!("{label:<10} mean {m:.3}  std {sd:.3}");
    };
    show("initial", &g.initial_scores());
    show("baseline", &final_scores(&g, seed)?);
    show(&format!("x{factor}"), &final_scores(&amplified, seed)?);
    Ok(())
}
