pub mod analysis;
pub mod cli;
pub mod encoding;
pub mod error;
pub mod netmodel;
pub mod qubo;
pub mod solvers;

pub use error::{Error, Result};
