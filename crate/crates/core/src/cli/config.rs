//! Declarative run configuration (JSON). Command-line flags override the
//! file, and the file overrides built-in defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{BenchSolver, RecursionOptions};
use crate::error::{Error, Result};
use crate::netmodel::{generate_layered, load_graph, InfrastructureGraph, LayeredGenSpec};
use crate::qubo::ModelConfig;
use crate::solvers::{Budget, SolverSpec, TabuParams};

/// Where the graph comes from. Exactly one source per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSource {
    /// A graph JSON file, relative to the config file.
    File(PathBuf),
    Generator(LayeredGenSpec),
    /// The layered preset at `nodes` nodes (255 gives the reference
    /// infrastructure with the exception at node 143).
    Preset {
        nodes: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
}

impl GraphSource {
    pub fn load(&self, base: &Path, run_seed: u64) -> Result<InfrastructureGraph> {
        match self {
            GraphSource::File(p) => {
                let path = base.join(p);
                let bytes = std::fs::read(&path)
                    .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
                load_graph(&bytes)
            }
            GraphSource::Generator(spec) => generate_layered(spec),
            GraphSource::Preset { nodes, seed } => generate_layered(&preset_spec(*nodes, seed.unwrap_or(run_seed))),
        }
    }
}

pub fn preset_spec(nodes: usize, seed: u64) -> LayeredGenSpec {
    if nodes == 255 {
        LayeredGenSpec::infrastructure_255(seed)
    } else {
        LayeredGenSpec::scaled_infrastructure(nodes, seed)
    }
}

/// A budget given explicitly or by regime name (`min`, `30s`, `180s`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BudgetSetting {
    Regime(String),
    Explicit(Budget),
}

impl BudgetSetting {
    pub fn resolve(&self) -> Result<Budget> {
        match self {
            BudgetSetting::Explicit(b) => Ok(*b),
            BudgetSetting::Regime(name) => Budget::preset(name).ok_or_else(|| {
                Error::parse("budget", format!("unknown regime `{name}` (expected min, 30s or 180s)"))
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    pub sizes: Vec<usize>,
    pub solvers: Vec<BenchSolver>,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub parallel: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Write the transition report next to the solution.
    pub report: bool,
    pub recurse: RecursionOptions,
    pub bench: Option<BenchSection>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            report: true,
            recurse: RecursionOptions::default(),
            bench: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub graph: Option<GraphSource>,
    pub model: ModelConfig,
    pub solver: SolverSpec,
    pub budget: Option<BudgetSetting>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Write measured wall times. Off by default for `solve` and `recurse`
    /// so repeated runs are byte-identical; on by default for `bench`.
    pub record_timing: Option<bool>,
    pub analysis: AnalysisConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            graph: None,
            model: ModelConfig::default(),
            solver: SolverSpec::Tabu(TabuParams::default()),
            budget: None,
            seed: 0,
            out: None,
            record_timing: None,
            analysis: AnalysisConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_slice(bytes);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::parse(if path == "." { "config".into() } else { path }, e.inner().to_string())
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::from_json(br#"{"graph": {"preset": {"nodes": 30}}}"#).unwrap();
        assert_eq!(c.solver.name(), "tabu");
        assert!(c.analysis.report);
        assert_eq!(c.analysis.recurse.n_iters, 20);
    }

    #[test]
    fn budgets_by_regime_or_value() {
        let c = RunConfig::from_json(br#"{"budget": "30s"}"#).unwrap();
        assert_eq!(c.budget.unwrap().resolve().unwrap(), Budget::Seconds(30.0));
        let c = RunConfig::from_json(br#"{"budget": {"iterations": 7}}"#).unwrap();
        assert_eq!(c.budget.unwrap().resolve().unwrap(), Budget::Iterations(7));
        let c = RunConfig::from_json(br#"{"budget": "forever"}"#).unwrap();
        assert!(c.budget.unwrap().resolve().is_err());
    }

    #[test]
    fn errors_name_the_offending_field() {
        let err = RunConfig::from_json(br#"{"solver": {"name": "magic"}}"#).unwrap_err();
        assert!(err.to_string().starts_with("solver"), "{err}");
        let err = RunConfig::from_json(br#"{"model": {"levels": "x"}}"#).unwrap_err();
        assert!(err.to_string().starts_with("model.levels"), "{err}");
        assert!(RunConfig::from_json(br#"{"graph": {"file": "a", "preset": {"nodes": 3}}}"#).is_err());
    }

    #[test]
    fn round_trips() {
        let c = RunConfig {
            graph: Some(GraphSource::Preset { nodes: 50, seed: Some(3) }),
            budget: Some(BudgetSetting::Regime("min".into())),
            ..RunConfig::default()
        };
        assert_eq!(RunConfig::from_json(c.to_json().as_bytes()).unwrap(), c);
    }
}
