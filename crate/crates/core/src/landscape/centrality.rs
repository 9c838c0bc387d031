use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ffg::{pagerank, FitnessFlowGraph, PageRankSettings};
use super::{classify_points, LandscapeError, MinimaCensus};
use crate::fitness::SearchSpaceCache;
use crate::space::NeighbourhoodKind;

/// Largest band of the default C_p sweep, in percent.
pub const DEFAULT_P_MAX: u32 = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimumRecord {
    pub linear: usize,
    pub key: String,
    pub fitness: f64,
    pub fraction: f64,
    pub pagerank: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpPoint {
    pub p: u32,
    pub c_p: f64,
}

/// Share of the minima's PageRank held by minima within `(1 + p) · f_opt`.
///
/// The band is strict (`f < (1 + p) · f_opt`) except at `p = 0`, where it is
/// `f ≤ f_opt` so the global minimum counts.
pub fn proportion_of_centrality(minima: &[MinimumRecord], f_opt: f64, p: f64) -> Result<f64, LandscapeError> {
    if minima.is_empty() {
        return Err(LandscapeError::NoMinima);
    }
    let total: f64 = minima.iter().map(|m| m.pagerank).sum();
    if !(total > 0.0) {
        return Err(LandscapeError::DegenerateCentrality);
    }
    let inside = |f: f64| if p == 0.0 { f <= f_opt } else { f < (1.0 + p) * f_opt };
    let part: f64 = minima.iter().filter(|m| inside(m.fitness)).map(|m| m.pagerank).sum();
    Ok((part / total).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityReport {
    pub kernel: String,
    pub device: String,
    pub neighbourhood: NeighbourhoodKind,
    pub damping: f64,
    pub tolerance: f64,
    /// How sinks redistribute their mass.
    pub sink_rule: String,
    pub nodes: usize,
    pub edges: usize,
    pub f_opt: f64,
    pub census: MinimaCensus,
    pub minima: Vec<MinimumRecord>,
    pub c_p_curve: Vec<CpPoint>,
    /// PageRank of every configuration, by linear index.
    pub pagerank: Vec<f64>,
}

/// Builds the flow graph, ranks it and sweeps C_p for p = 0..=p_max percent.
pub fn analyze(
    cache: &SearchSpaceCache,
    kind: NeighbourhoodKind,
    settings: &PageRankSettings,
    p_max: u32,
) -> Result<CentralityReport, LandscapeError> {
    let f_opt = cache.f_opt()?;
    let graph = FitnessFlowGraph::build(cache, kind)?;
    let rank = pagerank(&graph, settings)?;
    let space = cache.space();
    let minima: Vec<MinimumRecord> = graph
        .census()
        .minima()
        .map(|u| MinimumRecord {
            linear: u,
            key: space.key(&space.configuration(u)),
            fitness: graph.fitness(u),
            fraction: f_opt / graph.fitness(u),
            pagerank: rank[u],
        })
        .collect();
    let c_p_curve = (0..=p_max)
        .map(|p| Ok(CpPoint { p, c_p: proportion_of_centrality(&minima, f_opt, p as f64 / 100.0)? }))
        .collect::<Result<Vec<_>, LandscapeError>>()?;
    let meta = cache.metadata();
    Ok(CentralityReport {
        kernel: meta.kernel.clone(),
        device: meta.device.clone(),
        neighbourhood: kind,
        damping: settings.damping,
        tolerance: settings.tol,
        sink_rule: "uniform teleport".into(),
        nodes: graph.node_count(),
        edges: graph.edge_count(),
        f_opt,
        census: graph.census().clone(),
        minima,
        c_p_curve,
        pagerank: rank,
    })
}

impl CentralityReport {
    pub fn c_p(&self, p: u32) -> Option<f64> {
        self.c_p_curve.iter().find(|c| c.p == p).map(|c| c.c_p)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<(), LandscapeError> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(file, self)?;
        Ok(())
    }

    /// One row per local minimum.
    pub fn write_minima_csv(&self, path: impl AsRef<Path>) -> Result<(), LandscapeError> {
        let mut w = csv::Writer::from_path(path)?;
        for m in &self.minima {
            w.serialize(m)?;
        }
        w.flush()?;
        Ok(())
    }

    /// One row per p of the C_p sweep.
    pub fn write_curve_csv(&self, path: impl AsRef<Path>) -> Result<(), LandscapeError> {
        let mut w = csv::Writer::from_path(path)?;
        for c in &self.c_p_curve {
            w.serialize(c)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Distribution of `f_opt / f` over the local minima.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaFractions {
    pub neighbourhood: NeighbourhoodKind,
    /// Sorted in descending order.
    pub fractions: Vec<f64>,
    pub mean: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

fn quantile(sorted_asc: &[f64], q: f64) -> f64 {
    // linear interpolation between closest ranks
    let pos = q * (sorted_asc.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted_asc[lo] + (pos - lo as f64) * (sorted_asc[hi] - sorted_asc[lo])
}

pub fn minima_fraction_report(cache: &SearchSpaceCache, kind: NeighbourhoodKind) -> Result<MinimaFractions, LandscapeError> {
    let f_opt = cache.f_opt()?;
    let census = classify_points(cache, kind)?;
    let mut asc: Vec<f64> = census.minima().map(|u| f_opt / cache.fitness(u)).collect();
    if asc.is_empty() {
        return Err(LandscapeError::NoMinima);
    }
    asc.sort_by(f64::total_cmp);
    let mean = asc.iter().sum::<f64>() / asc.len() as f64;
    Ok(MinimaFractions {
        neighbourhood: kind,
        mean,
        min: asc[0],
        q1: quantile(&asc, 0.25),
        median: quantile(&asc, 0.5),
        q3: quantile(&asc, 0.75),
        max: asc[asc.len() - 1],
        fractions: asc.into_iter().rev().collect(),
    })
}
