//! Search-space analysis: point census, fitness flow graphs, PageRank
//! centrality and the proportion-of-centrality difficulty metric.

mod centrality;
mod export;
mod ffg;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fitness::{FitnessError, SearchSpaceCache, FAIL_FITNESS};
use crate::space::NeighbourhoodKind;

pub use centrality::{
    analyze, minima_fraction_report, proportion_of_centrality, CentralityReport, CpPoint, MinimaFractions, MinimumRecord,
    DEFAULT_P_MAX,
};
pub use export::{export_graph, node_colour, GraphFormat, FLOOD_BELOW, FLOOD_COLOUR};
pub use ffg::{pagerank, FitnessFlowGraph, PageRankSettings, DEFAULT_NODE_LIMIT};

#[derive(Debug, Error)]
pub enum LandscapeError {
    #[error(transparent)]
    Fitness(#[from] FitnessError),
    #[error("search space has {size} points, above the graph node limit of {limit}; analyze a sampled sub-space or raise the limit")]
    TooLarge { size: usize, limit: usize },
    #[error("graph is empty")]
    EmptyGraph,
    #[error("PageRank did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("local minima carry no centrality")]
    DegenerateCentrality,
    #[error("no local minima")]
    NoMinima,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Role of a point in the landscape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointClass {
    /// Every neighbour is strictly worse.
    LocalMinimum,
    /// No strictly better neighbour, but at least one of equal fitness.
    PlateauSink,
    /// Has a strictly better neighbour.
    Slope,
    /// Failed configuration.
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaCensus {
    pub neighbourhood: NeighbourhoodKind,
    pub points: usize,
    pub local_minima: usize,
    pub plateau_sinks: usize,
    pub slopes: usize,
    pub fail_points: usize,
    /// Failed points whose neighbours all failed too.
    pub fail_plateaus: usize,
    #[serde(skip)]
    pub classes: Vec<PointClass>,
}

impl MinimaCensus {
    pub fn minima(&self) -> impl Iterator<Item = usize> + '_ {
        self.classes.iter().enumerate().filter(|(_, c)| **c == PointClass::LocalMinimum).map(|(i, _)| i)
    }
}

fn is_fail(f: f64) -> bool {
    f >= FAIL_FITNESS
}

/// Classifies every point of a complete cache.
pub fn classify_points(cache: &SearchSpaceCache, kind: NeighbourhoodKind) -> Result<MinimaCensus, LandscapeError> {
    cache.require_complete()?;
    let space = cache.space();
    let f = cache.fitness_values();
    let classes: Vec<(PointClass, bool)> = (0..space.size())
        .into_par_iter()
        .map(|u| {
            let fu = f[u];
            let neighbours = space.neighbour_indices(u, kind);
            if is_fail(fu) {
                return (PointClass::Fail, neighbours.iter().all(|&v| is_fail(f[v])));
            }
            let mut equal = false;
            for &v in &neighbours {
                if f[v] < fu {
                    return (PointClass::Slope, false);
                }
                equal |= f[v] == fu;
            }
            (if equal { PointClass::PlateauSink } else { PointClass::LocalMinimum }, false)
        })
        .collect();
    let count = |c: PointClass| classes.iter().filter(|(k, _)| *k == c).count();
    Ok(MinimaCensus {
        neighbourhood: kind,
        points: classes.len(),
        local_minima: count(PointClass::LocalMinimum),
        plateau_sinks: count(PointClass::PlateauSink),
        slopes: count(PointClass::Slope),
        fail_points: count(PointClass::Fail),
        fail_plateaus: classes.iter().filter(|(_, p)| *p).count(),
        classes: classes.into_iter().map(|(c, _)| c).collect(),
    })
}
