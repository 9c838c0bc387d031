use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::stats::{ttest_win, Outcome};
use super::run::RunRecord;
use super::BenchError;

/// Budget at which low and high bands are split by default.
pub const DEFAULT_SPLIT: usize = 200;
pub const ALTERNATE_SPLITS: [usize; 2] = [100, 400];

/// Outcome of one algorithm pair on one (cache, budget) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub cache: String,
    pub budget: usize,
    pub a: String,
    pub b: String,
    pub outcome: Outcome,
}

/// Win counts for one budget band. `wins[i][j]` counts the cells where
/// algorithm `i` beat algorithm `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandHeatmap {
    pub band: String,
    pub cells: usize,
    pub wins: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TotalRow {
    pub algorithm: String,
    pub band: String,
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompetitionResult {
    pub test: String,
    pub alpha: f64,
    pub split: usize,
    pub excluded: Vec<String>,
    pub algorithms: Vec<String>,
    pub outcomes: Vec<CellOutcome>,
    /// Low band (budget at or below the split), then high band.
    pub bands: Vec<BandHeatmap>,
    pub totals: Vec<TotalRow>,
}

/// Pairwise t-test competitions over every (cache, budget) cell, counted per
/// budget band. Caches listed in `exclude` take no part.
pub fn competition_heatmaps(records: &[RunRecord], split: usize, exclude: &[String], alpha: f64) -> CompetitionResult {
    let mut algorithms: Vec<String> = Vec::new();
    for r in records {
        if !algorithms.contains(&r.algorithm) {
            algorithms.push(r.algorithm.clone());
        }
    }
    let index = |name: &str| algorithms.iter().position(|a| a == name).expect("collected above");

    // (cache, budget) -> algorithm -> fractions in repetition order
    let mut cells: BTreeMap<(String, usize), BTreeMap<usize, Vec<(usize, f64)>>> = BTreeMap::new();
    for r in records.iter().filter(|r| !exclude.contains(&r.cache)) {
        cells.entry((r.cache.clone(), r.budget)).or_default().entry(index(&r.algorithm)).or_default().push((r.rep, r.fraction));
    }

    let n = algorithms.len();
    let names = [format!("<={split}"), format!(">{split}")];
    let mut bands: Vec<BandHeatmap> =
        names.iter().map(|b| BandHeatmap { band: b.clone(), cells: 0, wins: vec![vec![0; n]; n] }).collect();
    let mut ties = vec![[0usize; 2]; n];
    let mut outcomes = Vec::new();
    for ((cache, budget), per_alg) in &cells {
        let band = usize::from(*budget > split);
        bands[band].cells += 1;
        let samples: BTreeMap<usize, Vec<f64>> = per_alg
            .iter()
            .map(|(&a, v)| {
                let mut v = v.clone();
                v.sort_by_key(|(rep, _)| *rep);
                (a, v.into_iter().map(|(_, f)| f).collect())
            })
            .collect();
        for (&i, si) in &samples {
            for (&j, sj) in samples.range(i + 1..) {
                let outcome = ttest_win(si, sj, alpha);
                match outcome {
                    Outcome::AWins => bands[band].wins[i][j] += 1,
                    Outcome::BWins => bands[band].wins[j][i] += 1,
                    Outcome::Tie => {
                        ties[i][band] += 1;
                        ties[j][band] += 1;
                    }
                }
                outcomes.push(CellOutcome {
                    cache: cache.clone(),
                    budget: *budget,
                    a: algorithms[i].clone(),
                    b: algorithms[j].clone(),
                    outcome,
                });
            }
        }
    }

    let mut totals = Vec::new();
    for (i, name) in algorithms.iter().enumerate() {
        let mut all = TotalRow { algorithm: name.clone(), band: "all".into(), wins: 0, losses: 0, ties: 0 };
        for (b, band) in bands.iter().enumerate() {
            let wins: usize = band.wins[i].iter().sum();
            let losses: usize = band.wins.iter().map(|row| row[i]).sum();
            totals.push(TotalRow { algorithm: name.clone(), band: band.band.clone(), wins, losses, ties: ties[i][b] });
            all.wins += wins;
            all.losses += losses;
            all.ties += ties[i][b];
        }
        totals.push(all);
    }

    CompetitionResult {
        test: "welch one-sided".into(),
        alpha,
        split,
        excluded: exclude.to_vec(),
        algorithms,
        outcomes,
        bands,
        totals,
    }
}

impl CompetitionResult {
    /// Heatmap CSV of one band: the cell at (row, column) counts how often
    /// the column algorithm beat the row algorithm.
    pub fn write_heatmap_csv<W: Write>(&self, band: usize, out: W) -> Result<(), BenchError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["algorithm".to_string()];
        header.extend(self.algorithms.iter().cloned());
        w.write_record(&header)?;
        let wins = &self.bands[band].wins;
        for (r, name) in self.algorithms.iter().enumerate() {
            let mut row = vec![name.clone()];
            row.extend((0..self.algorithms.len()).map(|c| wins[c][r].to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_totals_csv<W: Write>(&self, out: W) -> Result<(), BenchError> {
        let mut w = csv::Writer::from_writer(out);
        for t in &self.totals {
            w.serialize(t)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn total(&self, algorithm: &str, band: &str) -> Option<&TotalRow> {
        self.totals.iter().find(|t| t.algorithm == algorithm && t.band == band)
    }
}
