//! Result artifacts: transition matrices and score statistics, recursive
//! re-minimization, and the scaling benchmark.

mod bench;
mod recursion;
mod report;

pub use bench::{bench_csv, scaling_bench, BenchConfig, BenchRecord, BenchSolver};
pub use recursion::{
    recursive_minimize, recursive_minimize_with, Classification, IterationRecord, RecursionOptions,
    RecursionTrace,
};
pub use report::{transition_report, NodeRow, RiskReport, ScoreStats, SolverMeta, TransitionMatrix};

/// Population mean and standard deviation.
pub fn mean_std(values: &[u32]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
    let var = values.iter().map(|&v| (f64::from(v) - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_statistics() {
        assert_eq!(mean_std(&[]), (0.0, 0.0));
        assert_eq!(mean_std(&[2, 4]), (3.0, 1.0));
        let (m, s) = mean_std(&[1, 2, 3, 4]);
        assert_eq!(m, 2.5);
        assert!((s - 1.25f64.sqrt()).abs() < 1e-15);
    }
}
