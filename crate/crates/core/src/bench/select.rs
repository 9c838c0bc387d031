use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use super::run::RunRecord;
use super::stats::{mean, variance};
use super::BenchError;
use crate::optim::{Algorithm, DefaultsTable, Hyperparameters};

/// Upper end of the threshold search.
pub const K_MAX: f64 = 16.0;
/// Step of the threshold search.
pub const K_RESOLUTION: f64 = 1e-3;

/// Mean and standard deviation of the best fitness of one setting's runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub cache: String,
    pub budget: usize,
    pub setting: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub algorithm: Algorithm,
    pub settings: Vec<Hyperparameters>,
    pub cells: Vec<GridCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperparameterChoice {
    pub budget: usize,
    pub setting: usize,
    pub hyperparameters: Hyperparameters,
    /// Smallest admitting threshold, in units of the best setting's std.
    pub k: f64,
    /// Settings admitted on every cache at `k`.
    pub candidates: usize,
    pub rank_sum: f64,
}

/// Why one cache keeps the intersection empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearMiss {
    pub cache: String,
    pub best_setting: usize,
    pub best_mean: f64,
    pub best_std: f64,
    /// Settings admitted on this cache at the largest threshold.
    pub admitted: usize,
    /// Setting with the smallest worst-case threshold over all caches.
    pub nearest_setting: usize,
    /// Threshold this cache needs to admit `nearest_setting`.
    pub needed_k: f64,
}

impl fmt::Display for NearMiss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: best setting #{} (mean {:.6}, std {:.3e}), {} admitted; nearest common setting #{} needs k = {:.3}",
            self.cache, self.best_setting, self.best_mean, self.best_std, self.admitted, self.nearest_setting, self.needed_k
        )
    }
}

/// Setting as JSON with sorted keys, used for ordering and labels.
pub fn canonical_setting(h: &Hyperparameters) -> String {
    let sorted: BTreeMap<&String, &Json> = h.iter().collect();
    serde_json::to_string(&sorted).expect("json values serialize")
}

/// Cartesian product of per-key choice lists, first key varying slowest.
pub fn expand_grid(choices: &serde_json::Map<String, Json>) -> Result<Vec<Hyperparameters>, BenchError> {
    let mut out = vec![Hyperparameters::new()];
    for (key, values) in choices {
        let values = values
            .as_array()
            .filter(|v| !v.is_empty())
            .ok_or_else(|| BenchError::Grid(format!("`{key}` must be a non-empty list of choices")))?;
        out = out
            .into_iter()
            .flat_map(|h| {
                values.iter().map(move |v| {
                    let mut h = h.clone();
                    h.insert(key.clone(), v.clone());
                    h
                })
            })
            .collect();
    }
    Ok(out)
}

/// Summarizes runs labelled with `labels[i]` into cells for setting `i`.
pub fn grid_from_records(
    algorithm: Algorithm,
    settings: Vec<Hyperparameters>,
    labels: &[String],
    records: &[RunRecord],
) -> Result<HyperGrid, BenchError> {
    if labels.len() != settings.len() {
        return Err(BenchError::Grid("one label per setting required".into()));
    }
    let mut runs: BTreeMap<(String, usize, usize), Vec<f64>> = BTreeMap::new();
    for r in records {
        if let Some(s) = labels.iter().position(|l| *l == r.algorithm) {
            runs.entry((r.cache.clone(), r.budget, s)).or_default().push(r.best_fitness);
        }
    }
    let cells = runs
        .into_iter()
        .map(|((cache, budget, setting), v)| GridCell {
            cache,
            budget,
            setting,
            mean: mean(&v),
            std: if v.len() > 1 { variance(&v).sqrt() } else { 0.0 },
        })
        .collect();
    Ok(HyperGrid { algorithm, settings, cells })
}

/// Mean fitness per cache and setting for one budget.
struct BudgetTable {
    caches: Vec<String>,
    means: Vec<Vec<f64>>,
    best: Vec<usize>,
    std: Vec<f64>,
}

impl BudgetTable {
    fn build(grid: &HyperGrid, budget: usize) -> Result<Self, BenchError> {
        let n = grid.settings.len();
        let mut rows: BTreeMap<&str, Vec<Option<(f64, f64)>>> = BTreeMap::new();
        for c in grid.cells.iter().filter(|c| c.budget == budget) {
            if c.setting >= n {
                return Err(BenchError::Grid(format!("cell refers to setting #{} of {n}", c.setting)));
            }
            rows.entry(&c.cache).or_insert_with(|| vec![None; n])[c.setting] = Some((c.mean, c.std));
        }
        let mut table = BudgetTable { caches: Vec::new(), means: Vec::new(), best: Vec::new(), std: Vec::new() };
        for (cache, row) in rows {
            let row: Vec<(f64, f64)> = row
                .into_iter()
                .enumerate()
                .map(|(s, v)| v.ok_or_else(|| BenchError::Grid(format!("no result for setting #{s} on {cache} at budget {budget}"))))
                .collect::<Result<_, _>>()?;
            let best = (0..n).fold(0, |b, s| if row[s].0 < row[b].0 { s } else { b });
            table.caches.push(cache.to_string());
            table.std.push(row[best].1);
            table.best.push(best);
            table.means.push(row.into_iter().map(|(m, _)| m).collect());
        }
        Ok(table)
    }

    fn admitted(&self, cache: usize, setting: usize, k: f64) -> bool {
        let b = self.best[cache];
        self.means[cache][setting] <= self.means[cache][b] + k * self.std[cache]
    }

    fn intersection(&self, k: f64) -> Vec<usize> {
        let n = self.means.first().map_or(0, Vec::len);
        (0..n).filter(|&s| (0..self.caches.len()).all(|c| self.admitted(c, s, k))).collect()
    }

    fn needed_k(&self, cache: usize, setting: usize) -> f64 {
        let gap = self.means[cache][setting] - self.means[cache][self.best[cache]];
        if gap <= 0.0 {
            0.0
        } else if self.std[cache] > 0.0 {
            gap / self.std[cache]
        } else {
            f64::INFINITY
        }
    }

    /// Sum over caches of each setting's rank by mean (ties share the average rank).
    fn rank_sums(&self) -> Vec<f64> {
        let n = self.means.first().map_or(0, Vec::len);
        let mut sums = vec![0.0; n];
        for row in &self.means {
            for s in 0..n {
                let below = row.iter().filter(|&&m| m < row[s]).count() as f64;
                let equal = row.iter().filter(|&&m| m == row[s]).count() as f64;
                sums[s] += below + (equal + 1.0) / 2.0;
            }
        }
        sums
    }
}

/// Picks one setting per budget that is near-best on every cache.
///
/// For each budget, finds the smallest threshold `k` (on a grid of step
/// [`K_RESOLUTION`] up to [`K_MAX`]) at which some setting has mean fitness
/// within `k` standard deviations of the best setting on every cache. Ties
/// go to the lowest rank sum, then the lexicographically first setting.
pub fn select_hyperparameters(grid: &HyperGrid) -> Result<Vec<HyperparameterChoice>, BenchError> {
    if grid.settings.is_empty() {
        return Err(BenchError::Grid("no settings".into()));
    }
    let budgets: BTreeSet<usize> = grid.cells.iter().map(|c| c.budget).collect();
    let steps = (K_MAX / K_RESOLUTION).round() as usize;
    let k_of = |i: usize| i as f64 * K_RESOLUTION;
    let mut out = Vec::new();
    for budget in budgets {
        let table = BudgetTable::build(grid, budget)?;
        let i = if !table.intersection(0.0).is_empty() {
            0
        } else if table.intersection(k_of(steps)).is_empty() {
            return Err(no_common_setting(&table, budget, k_of(steps)));
        } else {
            let (mut lo, mut hi) = (0, steps);
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if table.intersection(k_of(mid)).is_empty() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            hi
        };
        let k = k_of(i);
        let candidates = table.intersection(k);
        let ranks = table.rank_sums();
        let setting = *candidates
            .iter()
            .min_by(|&&a, &&b| {
                ranks[a]
                    .total_cmp(&ranks[b])
                    .then_with(|| canonical_setting(&grid.settings[a]).cmp(&canonical_setting(&grid.settings[b])))
            })
            .expect("non-empty intersection");
        out.push(HyperparameterChoice {
            budget,
            setting,
            hyperparameters: grid.settings[setting].clone(),
            k,
            candidates: candidates.len(),
            rank_sum: ranks[setting],
        });
    }
    Ok(out)
}

fn no_common_setting(table: &BudgetTable, budget: usize, k_max: f64) -> BenchError {
    let n = table.means[0].len();
    let worst = |s: usize| (0..table.caches.len()).map(|c| table.needed_k(c, s)).fold(0.0, f64::max);
    let nearest = (0..n).fold(0, |b, s| if worst(s) < worst(b) { s } else { b });
    let diagnostics = (0..table.caches.len())
        .map(|c| NearMiss {
            cache: table.caches[c].clone(),
            best_setting: table.best[c],
            best_mean: table.means[c][table.best[c]],
            best_std: table.std[c],
            admitted: (0..n).filter(|&s| table.admitted(c, s, k_max)).count(),
            nearest_setting: nearest,
            needed_k: table.needed_k(c, nearest),
        })
        .collect();
    BenchError::NoCommonSetting { budget, k_max, diagnostics }
}

/// Selected settings in the layout of the defaults table.
pub fn to_defaults(algorithm: Algorithm, choices: &[HyperparameterChoice]) -> DefaultsTable {
    let mut t = DefaultsTable(BTreeMap::new());
    for c in choices {
        t.insert(algorithm, c.budget, c.hyperparameters.clone());
    }
    t
}
