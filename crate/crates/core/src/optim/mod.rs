//! Optimizers over cached search spaces.
//!
//! Every algorithm implements [`Optimizer`]: it draws configurations, asks the
//! [`Evaluator`] for their fitness and keeps going until the evaluator raises
//! a stop signal (budget spent, space exhausted, or stalled on revisits). The
//! evaluator tracks the incumbent, so an interrupted algorithm never has to
//! hand back a result itself.

mod climb;
pub mod continuous;
mod discrete;
mod hyper;
mod population;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fitness::{EvalError, Evaluator, FitnessMode, OptimizerRun, SearchSpaceCache, StopReason};
use crate::fixtures::DEFAULTS_JSON;

pub use climb::{climb, metropolis, perturb, perturbed_dims, ClimbSettings, ClimberKind};
pub use hyper::{AlgorithmConfig, Hyperparameters};
pub use population::{crossover, two_point_crossover, Reproduction, Selection};

pub type Rng = ChaCha8Rng;

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("invalid hyperparameters for {algorithm}: {message}")]
    Config { algorithm: Algorithm, message: String },
    #[error("no default hyperparameters for {algorithm} at budget {budget} (tabulated budgets: {available:?})")]
    MissingDefaults { algorithm: Algorithm, budget: usize, available: Vec<usize> },
    #[error("{0} is an external algorithm; import its traces instead of running it")]
    External(Algorithm),
    #[error("budget must be at least 1")]
    ZeroBudget,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// The registry of algorithm names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    #[serde(rename = "random")]
    RandomSampling,
    FirstMls,
    BestMls,
    FirstIls,
    BestIls,
    FirstTabu,
    BestTabu,
    SimulatedAnnealing,
    Gls,
    Ga,
    BasinHopping,
    DualAnnealing,
    Pso,
    DifferentialEvolution,
    /// Slot for traces produced by an external SMAC run.
    Smac,
    /// Slot for traces produced by an external irace run.
    Irace,
}

impl Algorithm {
    pub const ALL: [Algorithm; 16] = [
        Algorithm::RandomSampling,
        Algorithm::FirstMls,
        Algorithm::BestMls,
        Algorithm::FirstIls,
        Algorithm::BestIls,
        Algorithm::FirstTabu,
        Algorithm::BestTabu,
        Algorithm::SimulatedAnnealing,
        Algorithm::Gls,
        Algorithm::Ga,
        Algorithm::BasinHopping,
        Algorithm::DualAnnealing,
        Algorithm::Pso,
        Algorithm::DifferentialEvolution,
        Algorithm::Smac,
        Algorithm::Irace,
    ];

    pub const DISCRETE: [Algorithm; 10] = [
        Algorithm::RandomSampling,
        Algorithm::FirstMls,
        Algorithm::BestMls,
        Algorithm::FirstIls,
        Algorithm::BestIls,
        Algorithm::FirstTabu,
        Algorithm::BestTabu,
        Algorithm::SimulatedAnnealing,
        Algorithm::Gls,
        Algorithm::Ga,
    ];

    pub const CONTINUOUS: [Algorithm; 4] =
        [Algorithm::BasinHopping, Algorithm::DualAnnealing, Algorithm::Pso, Algorithm::DifferentialEvolution];

    /// Runnable algorithms, in registry order.
    pub fn implemented() -> impl Iterator<Item = Algorithm> {
        Self::ALL.into_iter().filter(|a| !a.is_external())
    }

    pub fn is_external(self) -> bool {
        matches!(self, Algorithm::Smac | Algorithm::Irace)
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::RandomSampling => "random",
            Algorithm::FirstMls => "first-mls",
            Algorithm::BestMls => "best-mls",
            Algorithm::FirstIls => "first-ils",
            Algorithm::BestIls => "best-ils",
            Algorithm::FirstTabu => "first-tabu",
            Algorithm::BestTabu => "best-tabu",
            Algorithm::SimulatedAnnealing => "simulated-annealing",
            Algorithm::Gls => "gls",
            Algorithm::Ga => "ga",
            Algorithm::BasinHopping => "basin-hopping",
            Algorithm::DualAnnealing => "dual-annealing",
            Algorithm::Pso => "pso",
            Algorithm::DifferentialEvolution => "differential-evolution",
            Algorithm::Smac => "smac",
            Algorithm::Irace => "irace",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        let alias = match norm.as_str() {
            "random-sampling" | "randomsampling" => Some(Algorithm::RandomSampling),
            "firstmls" => Some(Algorithm::FirstMls),
            "bestmls" => Some(Algorithm::BestMls),
            "firstils" => Some(Algorithm::FirstIls),
            "bestils" => Some(Algorithm::BestIls),
            "firsttabu" => Some(Algorithm::FirstTabu),
            "besttabu" => Some(Algorithm::BestTabu),
            "sa" | "simulatedannealing" => Some(Algorithm::SimulatedAnnealing),
            "genetic-local-search" => Some(Algorithm::Gls),
            "genetic-algorithm" => Some(Algorithm::Ga),
            "basinhopping" => Some(Algorithm::BasinHopping),
            "dualannealing" | "da" => Some(Algorithm::DualAnnealing),
            "de" | "differentialevolution" => Some(Algorithm::DifferentialEvolution),
            _ => None,
        };
        alias
            .or_else(|| Algorithm::ALL.into_iter().find(|a| a.name() == norm))
            .ok_or_else(|| {
                let names: Vec<_> = Algorithm::ALL.iter().map(|a| a.name()).collect();
                format!("unknown algorithm `{s}` (known: {})", names.join(", "))
            })
    }
}

/// Algorithm choice, hyperparameters and seed for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSpec {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub hyperparameters: Hyperparameters,
    #[serde(default)]
    pub seed: u64,
}

impl OptimizerSpec {
    pub fn new(algorithm: Algorithm, hyperparameters: Hyperparameters, seed: u64) -> Self {
        OptimizerSpec { algorithm, hyperparameters, seed }
    }

    /// Validated, typed configuration.
    pub fn config(&self) -> Result<AlgorithmConfig, OptimError> {
        AlgorithmConfig::parse(self.algorithm, &self.hyperparameters)
    }
}

/// An optimization algorithm working through an [`Evaluator`].
///
/// `optimize` returns `Err` with a stop signal when the evaluator ends the
/// run, or `Ok` if the algorithm terminates on its own.
pub trait Optimizer {
    fn optimize(&self, ev: &mut Evaluator<'_>, rng: &mut Rng) -> Result<(), EvalError>;
}

/// Runs one optimizer on a cache with the given budget.
pub fn run(spec: &OptimizerSpec, cache: &SearchSpaceCache, mode: FitnessMode, max_evals: usize) -> Result<OptimizerRun, OptimError> {
    let config = spec.config()?;
    run_config(&config, spec.seed, cache, mode, max_evals)
}

pub fn run_config(
    config: &AlgorithmConfig,
    seed: u64,
    cache: &SearchSpaceCache,
    mode: FitnessMode,
    max_evals: usize,
) -> Result<OptimizerRun, OptimError> {
    if max_evals == 0 {
        return Err(OptimError::ZeroBudget);
    }
    let mut ev = Evaluator::new(cache, mode, max_evals, seed);
    let stop = run_with(config, seed, &mut ev)?;
    Ok(ev.finish(seed, stop))
}

/// Drives an optimizer on an existing evaluator, translating stop signals.
pub fn run_with(config: &AlgorithmConfig, seed: u64, ev: &mut Evaluator<'_>) -> Result<StopReason, OptimError> {
    let mut rng = Rng::seed_from_u64(seed);
    let optimizer = config.build();
    match optimizer.optimize(ev, &mut rng) {
        Ok(()) => Ok(StopReason::Finished),
        Err(e) => Ok(e.stop_reason().ok_or(e)?),
    }
}

/// Per-budget default hyperparameters, keyed by algorithm then budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DefaultsTable(pub BTreeMap<String, BTreeMap<String, Hyperparameters>>);

impl DefaultsTable {
    pub fn bundled() -> Self {
        serde_json::from_str(DEFAULTS_JSON).expect("bundled defaults parse")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn budgets(&self, algorithm: Algorithm) -> Vec<usize> {
        let mut b: Vec<usize> = self
            .0
            .get(algorithm.name())
            .map(|m| m.keys().filter_map(|k| k.parse().ok()).collect())
            .unwrap_or_default();
        b.sort_unstable();
        b
    }

    /// Exact lookup.
    pub fn get(&self, algorithm: Algorithm, budget: usize) -> Result<Hyperparameters, OptimError> {
        self.0
            .get(algorithm.name())
            .and_then(|m| m.get(&budget.to_string()))
            .cloned()
            .ok_or_else(|| OptimError::MissingDefaults { algorithm, budget, available: self.budgets(algorithm) })
    }

    /// Settings of the largest tabulated budget not above `budget` (the
    /// smallest tabulated one if `budget` is below all of them).
    pub fn nearest(&self, algorithm: Algorithm, budget: usize) -> Result<(usize, Hyperparameters), OptimError> {
        let budgets = self.budgets(algorithm);
        let pick = budgets.iter().rev().find(|&&b| b <= budget).or_else(|| budgets.first()).copied();
        match pick {
            Some(b) => Ok((b, self.get(algorithm, b)?)),
            None => Err(OptimError::MissingDefaults { algorithm, budget, available: budgets }),
        }
    }

    pub fn insert(&mut self, algorithm: Algorithm, budget: usize, setting: Hyperparameters) {
        self.0.entry(algorithm.name().to_string()).or_default().insert(budget.to_string(), setting);
    }
}
