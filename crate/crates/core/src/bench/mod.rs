//! Experiment runner and statistics: budget sweeps over repeated seeded runs,
//! fraction-of-optimum curves, pairwise t-test competitions and the
//! per-budget hyperparameter selection procedure.

mod compete;
mod import;
mod run;
mod select;
mod stats;

use thiserror::Error;

use crate::fitness::FitnessError;
use crate::optim::OptimError;

pub use compete::{competition_heatmaps, BandHeatmap, CellOutcome, CompetitionResult, TotalRow, ALTERNATE_SPLITS, DEFAULT_SPLIT};
pub use import::{import_external_trace, ExternalTrace, RepetitionCount};
pub use run::{
    fraction_curve, read_records, run_experiment, run_experiment_with_workers, write_records, AlgorithmTemplate,
    CacheSource, CurvePoint, ExperimentPlan, NkSpec, RunRecord, SyntheticSpec, DEFAULT_BUDGETS, DEFAULT_REPETITIONS,
};
pub use select::{
    canonical_setting, expand_grid, grid_from_records, select_hyperparameters, to_defaults, GridCell, HyperGrid,
    HyperparameterChoice, NearMiss, K_MAX, K_RESOLUTION,
};
pub use stats::{mean, ttest_win, variance, welch, Outcome, WelchTest};

/// Significance level of the pairwise competitions.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid experiment plan: {0}")]
    Plan(String),
    #[error("no default hyperparameters for: {}", .0.iter().map(|(a, b)| format!("{a}@{b}")).collect::<Vec<_>>().join(", "))]
    MissingDefaults(Vec<(String, usize)>),
    #[error("cache {cache}: {source}")]
    Cache { cache: String, source: FitnessError },
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error("incomplete hyperparameter grid: {0}")]
    Grid(String),
    #[error("no common hyperparameter setting at budget {budget} within k = {k_max}:\n{}", .diagnostics.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n"))]
    NoCommonSetting { budget: usize, k_max: f64, diagnostics: Vec<NearMiss> },
    #[error("line {line}: {message}")]
    Trace { line: u64, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
