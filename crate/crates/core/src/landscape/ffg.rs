use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{classify_points, LandscapeError, MinimaCensus, PointClass};
use crate::fitness::SearchSpaceCache;
use crate::space::NeighbourhoodKind;

pub const DEFAULT_NODE_LIMIT: usize = 1_000_000;

/// Directed graph over all configurations with an edge from each point to
/// every strictly better neighbour. Stored as compressed adjacency rows.
#[derive(Debug, Clone)]
pub struct FitnessFlowGraph {
    kind: NeighbourhoodKind,
    fitness: Vec<f64>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    census: MinimaCensus,
}

impl FitnessFlowGraph {
    pub fn build(cache: &SearchSpaceCache, kind: NeighbourhoodKind) -> Result<Self, LandscapeError> {
        Self::build_with_limit(cache, kind, DEFAULT_NODE_LIMIT)
    }

    pub fn build_with_limit(cache: &SearchSpaceCache, kind: NeighbourhoodKind, limit: usize) -> Result<Self, LandscapeError> {
        let size = cache.space().size();
        if size > limit {
            return Err(LandscapeError::TooLarge { size, limit });
        }
        let census = classify_points(cache, kind)?;
        let space = cache.space();
        let f = cache.fitness_values();
        let rows: Vec<Vec<u32>> = (0..size)
            .into_par_iter()
            .map(|u| space.neighbour_indices(u, kind).into_iter().filter(|&v| f[v] < f[u]).map(|v| v as u32).collect())
            .collect();
        let mut offsets = Vec::with_capacity(size + 1);
        offsets.push(0);
        let mut targets = Vec::with_capacity(rows.iter().map(Vec::len).sum());
        for mut row in rows {
            row.sort_unstable();
            targets.extend(row);
            offsets.push(targets.len());
        }
        Ok(FitnessFlowGraph { kind, fitness: f.to_vec(), offsets, targets, census })
    }

    pub fn neighbourhood(&self) -> NeighbourhoodKind {
        self.kind
    }

    pub fn node_count(&self) -> usize {
        self.fitness.len()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn fitness(&self, u: usize) -> f64 {
        self.fitness[u]
    }

    pub fn out_edges(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        self.targets[self.offsets[u]..self.offsets[u + 1]].iter().map(|&v| v as usize)
    }

    pub fn out_degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.node_count()).flat_map(move |u| self.out_edges(u).map(move |v| (u, v)))
    }

    pub fn census(&self) -> &MinimaCensus {
        &self.census
    }

    pub fn is_local_minimum(&self, u: usize) -> bool {
        self.census.classes[u] == PointClass::LocalMinimum
    }

    /// Kahn's algorithm; edges always lower fitness, so this holds by construction.
    pub fn is_acyclic(&self) -> bool {
        let n = self.node_count();
        let mut indegree = vec![0usize; n];
        for &v in &self.targets {
            indegree[v as usize] += 1;
        }
        let mut stack: Vec<usize> = (0..n).filter(|&u| indegree[u] == 0).collect();
        let mut seen = 0;
        while let Some(u) = stack.pop() {
            seen += 1;
            for v in self.out_edges(u) {
                indegree[v] -= 1;
                if indegree[v] == 0 {
                    stack.push(v);
                }
            }
        }
        seen == n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PageRankSettings {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PageRankSettings {
    fn default() -> Self {
        PageRankSettings { damping: 0.85, tol: 1e-10, max_iter: 100_000 }
    }
}

/// PageRank by power iteration on the column-normalized graph. Sinks spread
/// their mass uniformly over all nodes.
pub fn pagerank(g: &FitnessFlowGraph, settings: &PageRankSettings) -> Result<Vec<f64>, LandscapeError> {
    let n = g.node_count();
    if n == 0 {
        return Err(LandscapeError::EmptyGraph);
    }
    // incoming rows for a parallel pull step
    let mut in_offsets = vec![0usize; n + 1];
    for &v in &g.targets {
        in_offsets[v as usize + 1] += 1;
    }
    for i in 0..n {
        in_offsets[i + 1] += in_offsets[i];
    }
    let mut fill = in_offsets.clone();
    let mut sources = vec![0u32; g.edge_count()];
    for (u, v) in g.edges() {
        sources[fill[v]] = u as u32;
        fill[v] += 1;
    }
    let inv_degree: Vec<f64> = (0..n).map(|u| g.out_degree(u)).map(|d| if d == 0 { 0.0 } else { 1.0 / d as f64 }).collect();
    let sinks: Vec<usize> = (0..n).filter(|&u| g.out_degree(u) == 0).collect();

    let d = settings.damping;
    let nf = n as f64;
    let mut rank = vec![1.0 / nf; n];
    let mut residual = f64::INFINITY;
    for _ in 0..settings.max_iter {
        let sink_mass: f64 = sinks.iter().map(|&u| rank[u]).sum();
        let base = (1.0 - d) / nf + d * sink_mass / nf;
        let next: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|v| {
                let flow: f64 = sources[in_offsets[v]..in_offsets[v + 1]].iter().map(|&u| rank[u as usize] * inv_degree[u as usize]).sum();
                base + d * flow
            })
            .collect();
        residual = next.iter().zip(&rank).map(|(a, b)| (a - b).abs()).sum();
        rank = next;
        if residual < settings.tol {
            let total: f64 = rank.iter().sum();
            rank.iter_mut().for_each(|r| *r /= total);
            return Ok(rank);
        }
    }
    Err(LandscapeError::NonConvergence { iterations: settings.max_iter, residual })
}
