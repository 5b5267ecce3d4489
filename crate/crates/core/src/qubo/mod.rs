//! Sparse QUBO models: assembly from an infrastructure graph, evaluation and text I/O.

mod format;
mod hamiltonian;
mod model;
mod terms;

pub use format::{export_qubo, import_qubo};
pub use hamiltonian::{
    assemble, assemble_with_critical, build_h1, build_h2, build_h3, build_h4, build_h5,
    default_penalty, weighted_form, ModelConfig, ScoreForm, Weights, CRITICAL_THRESHOLD,
};
pub use model::{QuboModel, TermProvenance};
pub use terms::{SparseTerms, PRUNE_THRESHOLD};
