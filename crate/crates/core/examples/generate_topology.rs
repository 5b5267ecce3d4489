//! Generate the 255-node reference infrastructure, print its layer sizes and
//! write it as JSON and DOT.
//!
//!     cargo run --example generate_topology -- [seed] [out_dir]

use std::collections::BTreeMap;

use qubo_risk::netmodel::{exception_id, generate_layered, save_graph, to_dot, LayeredGenSpec};

fn main() -> qubo_risk::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed must be an integer"));
    let out = std::path::PathBuf::from(args.next().unwrap_or_else(|| "out".into()));

    let g = generate_layered(&LayeredGenSpec::infrastructure_255(seed))?;
    let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
    for n in g.nodes() {
        *sizes.entry(n.layer.as_str()).or_default() += 1;
    }
    println!("{} nodes, {} edges", g.len(), g.edges().len());
    for layer in g.layers() {
        println!("  {layer:<12} {}", sizes[layer.as_str()]);
    }
    if let Some(id) = exception_id(&g) {
        let node = g.node(id).unwrap();
        println!("exception: node {id} ({}) score {}", node.layer, node.initial_score);
    }

    std::fs::create_dir_all(&out)?;
    std::fs::write(out.join("graph.json"), save_graph(&g))?;
    std::fs::write(out.join("graph.dot"), to_dot(&g, None))?;
    println!("wrote {}/graph.json and graph.dot", out.display());
    Ok(())
}
