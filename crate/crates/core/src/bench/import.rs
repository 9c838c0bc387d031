use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::run::RunRecord;
use super::BenchError;
use crate::fitness::fraction_of_optimum;

#[derive(Debug, Deserialize)]
struct Row {
    algorithm: String,
    cache: String,
    budget: usize,
    rep: usize,
    best_fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionCount {
    pub algorithm: String,
    pub cache: String,
    pub budget: usize,
    pub runs: usize,
}

/// Runs of an externally driven optimizer, ready to join native results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalTrace {
    pub records: Vec<RunRecord>,
    pub repetitions: Vec<RepetitionCount>,
}

/// Reads a CSV with columns `algorithm, cache, budget, rep, best_fitness`.
///
/// `f_opt` maps cache ids to their optimum. The budget is taken as the
/// evaluations used, and the repetition index as the seed.
pub fn import_external_trace<R: Read>(input: R, f_opt: &HashMap<String, f64>) -> Result<ExternalTrace, BenchError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut records = Vec::new();
    let mut counts: BTreeMap<(String, String, usize), usize> = BTreeMap::new();
    let headers = reader.headers()?.clone();
    for row in reader.records() {
        let row = row.map_err(|e| BenchError::Trace { line: e.position().map_or(0, |p| p.line()), message: e.to_string() })?;
        let line = row.position().map_or(0, |p| p.line());
        let fail = |message: String| BenchError::Trace { line, message };
        let row: Row = row.deserialize(Some(&headers)).map_err(|e| fail(e.to_string()))?;
        let opt = *f_opt.get(&row.cache).ok_or_else(|| fail(format!("unknown cache `{}`", row.cache)))?;
        if row.budget == 0 {
            return Err(fail("budget must be positive".into()));
        }
        let fraction = fraction_of_optimum(opt, row.best_fitness).map_err(|e| fail(e.to_string()))?;
        *counts.entry((row.algorithm.clone(), row.cache.clone(), row.budget)).or_default() += 1;
        records.push(RunRecord {
            cache: row.cache,
            algorithm: row.algorithm,
            budget: row.budget,
            rep: row.rep,
            seed: row.rep as u64,
            best_fitness: row.best_fitness,
            fraction,
            evals_used: row.budget,
        });
    }
    let repetitions = counts
        .into_iter()
        .map(|((algorithm, cache, budget), runs)| RepetitionCount { algorithm, cache, budget, runs })
        .collect();
    Ok(ExternalTrace { records, repetitions })
}
