//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a run fails, 2 for usage and
//! configuration errors. Output files land in the `--out` directory.

mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{preset_spec, AnalysisConfig, BenchSection, BudgetSetting, GraphSource, RunConfig};

use crate::analysis::{
    bench_csv, recursive_minimize, scaling_bench, transition_report, BenchConfig, BenchSolver,
};
use crate::error::Error;
use crate::netmodel::{generate_layered, load_graph, save_graph, to_dot, InfrastructureGraph, LayeredGenSpec};
use crate::qubo::{assemble, export_qubo};
use crate::solvers::remote::SAMPLER_URL_ENV;
use crate::solvers::{Budget, Solution, SolverRequest, SolverSpec};

#[derive(Debug, Parser)]
#[command(name = "qubo-risk", version, about = "Cyber-risk propagation scoring as a QUBO")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a layered infrastructure graph.
    Generate(GenerateArgs),
    /// Assemble, solve and report on one graph.
    Solve(SolveArgs),
    /// Feed final scores back as initial scores, repeatedly.
    Recurse(RecurseArgs),
    /// Time solvers over instance sizes.
    Bench(BenchArgs),
    /// Write a Graphviz rendering of a graph, optionally colored by scores.
    ExportDot(ExportDotArgs),
    /// Write the assembled QUBO in text form.
    ExportQubo(ExportQuboArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Generator spec (JSON).
    #[arg(long, conflicts_with = "preset")]
    spec: Option<PathBuf>,
    /// Layered preset with this many nodes (255 = reference infrastructure).
    #[arg(long)]
    preset: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value = "graph.json")]
    name: String,
    /// Also write a DOT rendering.
    #[arg(long)]
    dot: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Graph file; replaces the config's graph source.
    #[arg(long, conflicts_with = "preset")]
    graph: Option<PathBuf>,
    /// Layered preset size; replaces the config's graph source.
    #[arg(long)]
    preset: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    levels: Option<u32>,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// exhaustive, tabu, anneal or hybrid (default parameters).
    #[arg(long)]
    solver: Option<String>,
    #[arg(long, conflicts_with_all = ["seconds", "regime"])]
    iterations: Option<u64>,
    #[arg(long, conflicts_with = "regime")]
    seconds: Option<f64>,
    /// Named time regime: min, 30s or 180s.
    #[arg(long)]
    regime: Option<String>,
    /// Record wall-clock times in the outputs.
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct RecurseArgs {
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    iters: Option<usize>,
    /// Keep the critical set of the starting scores.
    #[arg(long)]
    h5_frozen: bool,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    /// Solver names; replaces the config's bench solvers.
    #[arg(long, value_delimiter = ',')]
    solvers: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Write zero wall times so the CSV is reproducible.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Debug, Args)]
struct ExportDotArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Solution JSON whose decoded scores color the nodes.
    #[arg(long)]
    scores: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExportQuboArgs {
    #[command(flatten)]
    run: RunArgs,
}

/// Usage problems exit with 2, everything else with 1.
enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::Recurse(a) => recurse(a),
        Command::Bench(a) => bench(a),
        Command::ExportDot(a) => export_dot(a),
        Command::ExportQubo(a) => export_qubo_cmd(a),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// A configuration with command-line overrides applied.
struct Resolved {
    cfg: RunConfig,
    /// Directory that relative paths in the config file refer to.
    base: PathBuf,
    out: PathBuf,
}

fn resolve(args: &RunArgs) -> CliResult<Resolved> {
    let (mut cfg, base) = match &args.config {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            let cfg = RunConfig::from_json(&bytes).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (cfg, base)
        }
        None => (RunConfig::default(), PathBuf::new()),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(levels) = args.levels {
        cfg.model.levels = levels;
    }
    if let Some(g) = &args.graph {
        cfg.graph = Some(GraphSource::File(std::path::absolute(g).map_err(usage)?));
    }
    if let Some(nodes) = args.preset {
        cfg.graph = Some(GraphSource::Preset { nodes, seed: None });
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    Ok(Resolved { cfg, base, out })
}

fn apply_solver_args(cfg: &mut RunConfig, a: &SolverArgs) -> CliResult<()> {
    if let Some(name) = &a.solver {
        cfg.solver = SolverSpec::from_name(name).map_err(usage)?;
    }
    if let Some(n) = a.iterations {
        cfg.budget = Some(BudgetSetting::Explicit(Budget::Iterations(n)));
    }
    if let Some(s) = a.seconds {
        cfg.budget = Some(BudgetSetting::Explicit(Budget::Seconds(s)));
    }
    if let Some(r) = &a.regime {
        cfg.budget = Some(BudgetSetting::Regime(r.clone()));
    }
    if a.timing {
        cfg.record_timing = Some(true);
    }
    if let SolverSpec::Hybrid(p) = &mut cfg.solver {
        if p.remote_endpoint.is_none() {
            p.remote_endpoint = std::env::var(SAMPLER_URL_ENV).ok().filter(|s| !s.is_empty());
        }
    }
    Ok(())
}

fn load(r: &Resolved) -> CliResult<InfrastructureGraph> {
    let source = r
        .cfg
        .graph
        .as_ref()
        .ok_or_else(|| usage("no graph source: pass --graph, --preset or set `graph` in the config"))?;
    Ok(source.load(&r.base, r.cfg.seed)?)
}

fn budget(cfg: &RunConfig) -> CliResult<Option<Budget>> {
    cfg.budget.as_ref().map(|b| b.resolve().map_err(usage)).transpose()
}

fn write(out: &Path, name: &str, contents: impl AsRef<[u8]>) -> CliResult<()> {
    std::fs::create_dir_all(out).map_err(Error::from)?;
    std::fs::write(out.join(name), contents).map_err(Error::from)?;
    Ok(())
}

/// The resolved configuration, minus the output directory so that runs into
/// different directories stay comparable.
fn write_config(r: &Resolved) -> CliResult<()> {
    let cfg = RunConfig { out: None, ..r.cfg.clone() };
    write(&r.out, "run_config.json", cfg.to_json())
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn generate(a: GenerateArgs) -> CliResult<()> {
    let spec = match &a.spec {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            let de = &mut serde_json::Deserializer::from_slice(&bytes);
            serde_path_to_error::deserialize::<_, LayeredGenSpec>(de).map_err(|e| {
                let at = e.path().to_string();
                let at = if at == "." { "spec".to_string() } else { at };
                usage(format!("{}: {at}: {}", path.display(), e.inner()))
            })?
        }
        None => preset_spec(a.preset.unwrap_or(255), a.seed),
    };
    let g = generate_layered(&spec).map_err(usage)?;
    write(&a.out, &a.name, save_graph(&g))?;
    if a.dot {
        let stem = a.name.strip_suffix(".json").unwrap_or(&a.name);
        write(&a.out, &format!("{stem}.dot"), to_dot(&g, None))?;
    }
    Ok(())
}

fn solve(a: SolveArgs) -> CliResult<()> {
    let mut r = resolve(&a.run)?;
    apply_solver_args(&mut r.cfg, &a.solver)?;
    let timing = r.cfg.record_timing.unwrap_or(false);
    let g = load(&r)?;
    let q = assemble(&g, &r.cfg.model)?;
    let budget = budget(&r.cfg)?.unwrap_or_else(|| r.cfg.solver.default_budget(q.n_vars()));
    let req = SolverRequest::new(&q, r.cfg.seed, budget).with_reference(g.initial_scores());
    let mut sol: Solution = r.cfg.solver.solve(&req)?;
    if !timing {
        sol.wall_time = 0.0;
    }

    write_config(&r)?;
    write(&r.out, "solution.json", json(&sol))?;
    write(&r.out, "trace.csv", sol.trace_csv(timing))?;
    if r.cfg.analysis.report {
        let report = transition_report(&g, &sol)?;
        write(&r.out, "report.json", report.to_json())?;
        write(&r.out, "report_nodes.csv", report.nodes_csv()?)?;
        write(&r.out, "report_summary.csv", report.summary_csv())?;
        write(&r.out, "report_transitions.csv", report.transitions_csv())?;
    }
    Ok(())
}

fn recurse(a: RecurseArgs) -> CliResult<()> {
    let mut r = resolve(&a.run)?;
    apply_solver_args(&mut r.cfg, &a.solver)?;
    if let Some(n) = a.iters {
        r.cfg.analysis.recurse.n_iters = n;
    }
    if a.h5_frozen {
        r.cfg.analysis.recurse.h5_frozen = true;
    }
    if r.cfg.analysis.recurse.n_iters == 0 {
        return Err(usage("recursion needs at least one iteration"));
    }
    let g = load(&r)?;
    let budget = budget(&r.cfg)?;
    let trace = recursive_minimize(&g, &r.cfg.model, &r.cfg.solver, budget, r.cfg.seed, &r.cfg.analysis.recurse)?;
    write_config(&r)?;
    write(&r.out, "recursion.json", json(&trace))?;
    write(&r.out, "recursion_series.csv", trace.series_csv())?;
    Ok(())
}

fn bench(a: BenchArgs) -> CliResult<()> {
    let mut r = resolve(&a.run)?;
    apply_solver_args(&mut r.cfg, &a.solver)?;
    let budget = budget(&r.cfg)?;
    let section = r.cfg.analysis.bench.clone();
    let sizes = if a.sizes.is_empty() {
        section.as_ref().map(|s| s.sizes.clone()).unwrap_or_default()
    } else {
        a.sizes.clone()
    };
    let mut solvers = if a.solvers.is_empty() {
        match &section {
            Some(s) => s.solvers.clone(),
            None => vec![BenchSolver::new(r.cfg.solver.clone(), None)],
        }
    } else {
        a.solvers
            .iter()
            .map(|n| SolverSpec::from_name(n).map(|s| BenchSolver::new(s, None)))
            .collect::<Result<_, _>>()
            .map_err(usage)?
    };
    if let Some(b) = budget {
        for s in &mut solvers {
            s.budget = Some(b);
        }
    }
    let seeds = if a.seeds.is_empty() {
        section.as_ref().and_then(|s| s.seeds.clone()).unwrap_or_else(|| vec![r.cfg.seed])
    } else {
        a.seeds.clone()
    };
    if sizes.is_empty() {
        return Err(usage("no bench sizes: pass --sizes or set analysis.bench.sizes"));
    }
    let cfg = BenchConfig {
        sizes,
        solvers,
        seeds,
        model: r.cfg.model.clone(),
        parallel: section.is_some_and(|s| s.parallel),
    };
    let records = scaling_bench(&cfg)?;
    let timing = !a.no_timing && r.cfg.record_timing.unwrap_or(true);
    write_config(&r)?;
    write(&r.out, "bench.csv", bench_csv(&records, timing))?;
    Ok(())
}

fn export_dot(a: ExportDotArgs) -> CliResult<()> {
    let r = resolve(&a.run)?;
    let g = load(&r)?;
    let scores = match &a.scores {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            let sol: Solution = serde_json::from_slice(&bytes).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            if sol.decoded_scores.len() != g.len() {
                return Err(usage("solution does not match the graph"));
            }
            Some(sol.decoded_scores)
        }
        None => None,
    };
    write(&r.out, "graph.dot", to_dot(&g, scores.as_deref()))
}

fn export_qubo_cmd(a: ExportQuboArgs) -> CliResult<()> {
    let r = resolve(&a.run)?;
    let g = load(&r)?;
    let q = assemble(&g, &r.cfg.model)?;
    write(&r.out, "model.qubo", export_qubo(&q))
}

/// Reads a graph file; convenience for callers that script the CLI.
pub fn read_graph(path: &Path) -> crate::Result<InfrastructureGraph> {
    load_graph(&std::fs::read(path)?)
}
