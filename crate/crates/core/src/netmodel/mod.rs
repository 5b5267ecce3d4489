//! Attributed infrastructure graphs, their generators and file formats.

mod dot;
mod generate;
mod graph;
mod io;

pub use dot::{score_color, to_dot};
pub use generate::{
    exception_id, generate_layered, ExceptionSpec, IntraRule, LayerSpec, LayeredGenSpec,
    NodeSelection, DATABASES, DEFAULT_INTER_PROBABILITY, NETWORK, PRESET_EXCEPTION_ID,
    SECURITY_1, SECURITY_2, SECURITY_3, SERVERS, WORKSTATIONS,
};
pub use graph::{
    amplify_node_influence, EdgeSpec, InfrastructureGraph, NodeSpec, MAX_SCORE, MIN_SCORE,
};
pub use io::{load_graph, save_graph};
