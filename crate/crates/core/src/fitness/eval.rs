use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{SearchSpaceCache, FAIL_FITNESS};
use crate::space::{Configuration, ParameterSpace, SpaceError};

/// How a cache entry turns into a fitness value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FitnessMode {
    /// The stored mean runtime; revisits are served from the visited set for free.
    #[default]
    DeterministicMean,
    /// One uniformly drawn runtime sample per call; every call costs budget.
    StochasticDraw,
}

impl std::str::FromStr for FitnessMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "deterministic" | "deterministic_mean" | "mean" => Ok(FitnessMode::DeterministicMean),
            "stochastic" | "stochastic_draw" | "draw" => Ok(FitnessMode::StochasticDraw),
            other => Err(format!("unknown fitness mode `{other}` (expected deterministic or stochastic)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("evaluation budget of {0} exhausted")]
    BudgetExhausted(usize),
    #[error("every configuration of the space has been evaluated")]
    SpaceExhausted,
    #[error("no unseen configuration requested in {0} consecutive evaluations")]
    Stalled(usize),
    #[error("configuration `{0}` has no cache entry")]
    MissingEntry(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

impl EvalError {
    /// Stop signals end a run normally; everything else is a real error.
    pub fn stop_reason(&self) -> Option<StopReason> {
        match self {
            EvalError::BudgetExhausted(_) => Some(StopReason::BudgetExhausted),
            EvalError::SpaceExhausted => Some(StopReason::SpaceExhausted),
            EvalError::Stalled(_) => Some(StopReason::Stalled),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    BudgetExhausted,
    SpaceExhausted,
    Stalled,
    /// The algorithm's own termination criterion fired.
    Finished,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// 1-based count of budget-consuming evaluations at this point.
    pub eval: usize,
    pub config: Configuration,
    pub fitness: f64,
}

/// Outcome of one optimization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerRun {
    pub seed: u64,
    pub best_config: Configuration,
    pub best_fitness: f64,
    pub evals_used: usize,
    /// Deterministic-mode revisits answered from the visited set.
    pub cache_hits: usize,
    pub stop: StopReason,
    pub trace: Vec<TraceEntry>,
}

impl OptimizerRun {
    /// Best fitness among the first `budget` charged evaluations.
    pub fn best_within(&self, budget: usize) -> Option<(&Configuration, f64)> {
        self.trace
            .iter()
            .take_while(|t| t.eval <= budget)
            .fold(None, |best: Option<(&Configuration, f64)>, t| match best {
                Some((_, f)) if f <= t.fitness => best,
                _ => Some((&t.config, t.fitness)),
            })
    }

    pub fn evals_within(&self, budget: usize) -> usize {
        self.evals_used.min(budget)
    }
}

/// Budgeted access to a cache for a single run.
///
/// In deterministic mode only the first visit of a configuration is charged;
/// in stochastic mode every call is. Each charged evaluation is appended to
/// the trace.
pub struct Evaluator<'a> {
    cache: &'a SearchSpaceCache,
    mode: FitnessMode,
    max_evals: usize,
    used: usize,
    visited: Vec<bool>,
    visited_count: usize,
    rng: ChaCha8Rng,
    trace: Vec<TraceEntry>,
    best: Option<(Configuration, f64)>,
    free_streak: usize,
    stall_limit: usize,
    cache_hits: usize,
}

impl<'a> Evaluator<'a> {
    pub fn new(cache: &'a SearchSpaceCache, mode: FitnessMode, max_evals: usize, seed: u64) -> Self {
        let size = cache.space().size();
        let visited = match mode {
            FitnessMode::DeterministicMean => vec![false; size],
            FitnessMode::StochasticDraw => Vec::new(),
        };
        Evaluator {
            cache,
            mode,
            max_evals,
            used: 0,
            visited,
            visited_count: 0,
            // separate stream from the optimizer's own generator
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_d4a3_0000_0001),
            trace: Vec::new(),
            best: None,
            free_streak: 0,
            stall_limit: 10_000usize.max(size.saturating_mul(2)),
            cache_hits: 0,
        }
    }

    /// Consecutive free (cached) evaluations tolerated before `Stalled`.
    pub fn with_stall_limit(mut self, limit: usize) -> Self {
        self.stall_limit = limit;
        self
    }

    pub fn space(&self) -> &'a ParameterSpace {
        self.cache.space()
    }

    pub fn cache(&self) -> &'a SearchSpaceCache {
        self.cache
    }

    pub fn mode(&self) -> FitnessMode {
        self.mode
    }

    pub fn used(&self) -> usize {
        self.used
    }

    pub fn max_evals(&self) -> usize {
        self.max_evals
    }

    pub fn remaining(&self) -> usize {
        self.max_evals - self.used
    }

    pub fn best(&self) -> Option<(&Configuration, f64)> {
        self.best.as_ref().map(|(c, f)| (c, *f))
    }

    pub fn trace(&self) -> &[TraceEntry] {
        &self.trace
    }

    /// Whether `x` would be served from the visited set.
    pub fn is_visited(&self, x: &Configuration) -> bool {
        self.mode == FitnessMode::DeterministicMean && self.visited[self.space().linear_index(x)]
    }

    pub fn evaluate(&mut self, x: &Configuration) -> Result<f64, EvalError> {
        let space = self.cache.space();
        let lin = space.try_linear_index(x)?;
        let entry = self.cache.entry(lin).ok_or_else(|| EvalError::MissingEntry(space.key(x)))?;
        // nothing can improve once the budget is spent, so revisits stop too
        if self.used >= self.max_evals {
            return Err(EvalError::BudgetExhausted(self.max_evals));
        }
        let fitness = match self.mode {
            FitnessMode::DeterministicMean => {
                if self.visited[lin] {
                    if self.visited_count == space.size() {
                        return Err(EvalError::SpaceExhausted);
                    }
                    self.free_streak += 1;
                    if self.free_streak > self.stall_limit {
                        return Err(EvalError::Stalled(self.stall_limit));
                    }
                    self.cache_hits += 1;
                    return Ok(entry.fitness());
                }
                self.visited[lin] = true;
                self.visited_count += 1;
                entry.fitness()
            }
            FitnessMode::StochasticDraw => {
                if entry.ok {
                    entry.times[self.rng.random_range(0..entry.times.len())]
                } else {
                    FAIL_FITNESS
                }
            }
        };
        self.used += 1;
        self.free_streak = 0;
        self.trace.push(TraceEntry { eval: self.used, config: x.clone(), fitness });
        if self.best.as_ref().is_none_or(|(_, b)| fitness < *b) {
            self.best = Some((x.clone(), fitness));
        }
        Ok(fitness)
    }

    /// Closes the run and hands over the trace.
    pub fn finish(self, seed: u64, stop: StopReason) -> OptimizerRun {
        let (best_config, best_fitness) = self
            .best
            .unwrap_or_else(|| (Configuration::new(vec![0; self.cache.space().dims()]), f64::INFINITY));
        OptimizerRun {
            seed,
            best_config,
            best_fitness,
            evals_used: self.used,
            cache_hits: self.cache_hits,
            stop,
            trace: self.trace,
        }
    }
}
