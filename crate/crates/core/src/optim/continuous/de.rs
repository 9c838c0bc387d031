use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng as _;

use super::{clamp_unit, random_point, Snapped, STALE_GENERATIONS};
use crate::fitness::{EvalError, Evaluator};
use crate::optim::{Optimizer, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeStrategy {
    Best1Bin,
    Best1Exp,
    Best2Bin,
    Best2Exp,
}

impl DeStrategy {
    fn differences(self) -> usize {
        match self {
            DeStrategy::Best1Bin | DeStrategy::Best1Exp => 1,
            DeStrategy::Best2Bin | DeStrategy::Best2Exp => 2,
        }
    }

    fn binomial(self) -> bool {
        matches!(self, DeStrategy::Best1Bin | DeStrategy::Best2Bin)
    }
}

impl fmt::Display for DeStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeStrategy::Best1Bin => "best1bin",
            DeStrategy::Best1Exp => "best1exp",
            DeStrategy::Best2Bin => "best2bin",
            DeStrategy::Best2Exp => "best2exp",
        })
    }
}

impl FromStr for DeStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "best1bin" => Ok(DeStrategy::Best1Bin),
            "best1exp" => Ok(DeStrategy::Best1Exp),
            "best2bin" => Ok(DeStrategy::Best2Bin),
            "best2exp" => Ok(DeStrategy::Best2Exp),
            _ => Err(format!("unknown strategy `{s}` (expected best1bin, best1exp, best2bin or best2exp)")),
        }
    }
}

/// Differential evolution around the current best with greedy one-to-one
/// replacement, updated in place within a generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifferentialEvolution {
    /// Population multiplier: the population holds `max(pop_size · n, 5)` members.
    pub pop_size: usize,
    pub strategy: DeStrategy,
    pub recombination: f64,
    /// Differential weight range; a fresh weight is drawn every generation.
    pub mutation: (f64, f64),
}

impl DifferentialEvolution {
    pub fn population(&self, dims: usize) -> usize {
        (self.pop_size * dims).max(5)
    }

    /// Donor vector for member `i`.
    pub(crate) fn donor(&self, pop: &[Vec<f64>], best: usize, i: usize, weight: f64, rng: &mut Rng) -> Vec<f64> {
        let picks = 2 * self.strategy.differences();
        let others: Vec<usize> = sample(rng, pop.len() - 1, picks).into_iter().map(|j| if j >= i { j + 1 } else { j }).collect();
        let mut donor = pop[best].clone();
        for pair in others.chunks(2) {
            for (d, v) in donor.iter_mut().enumerate() {
                *v += weight * (pop[pair[0]][d] - pop[pair[1]][d]);
            }
        }
        clamp_unit(&mut donor);
        donor
    }

    /// Mixes `donor` into `target`; at least one coordinate always comes
    /// from the donor.
    pub(crate) fn cross(&self, target: &[f64], donor: &[f64], rng: &mut Rng) -> Vec<f64> {
        let n = target.len();
        let mut trial = target.to_vec();
        let start = rng.random_range(0..n);
        if self.strategy.binomial() {
            for d in 0..n {
                if d == start || rng.random::<f64>() < self.recombination {
                    trial[d] = donor[d];
                }
            }
        } else {
            let mut d = start;
            let mut copied = 0;
            while copied == 0 || (copied < n && rng.random::<f64>() < self.recombination) {
                trial[d] = donor[d];
                d = (d + 1) % n;
                copied += 1;
            }
        }
        trial
    }
}

impl Optimizer for DifferentialEvolution {
    /// A population that charges no evaluation for several generations in a
    /// row is re-drawn at random around its best member.
    fn optimize(&self, ev: &mut Evaluator<'_>, rng: &mut Rng) -> Result<(), EvalError> {
        let mut obj = Snapped::new(ev);
        let n = obj.dims();
        let size = self.population(n);
        let mut pop = Vec::with_capacity(size);
        let mut energy = Vec::with_capacity(size);
        for _ in 0..size {
            let x = random_point(n, rng);
            energy.push(obj.eval(&x)?);
            pop.push(x);
        }
        if n == 0 {
            return Ok(());
        }
        let mut best = (0..size).fold(0, |b, i| if energy[i] < energy[b] { i } else { b });
        let mut stale = 0;
        loop {
            let before = obj.used();
            let (lo, hi) = self.mutation;
            let weight = if hi > lo { rng.random_range(lo..hi) } else { lo };
            for i in 0..size {
                let donor = self.donor(&pop, best, i, weight, rng);
                let trial = self.cross(&pop[i], &donor, rng);
                let e = obj.eval(&trial)?;
                if e <= energy[i] {
                    pop[i] = trial;
                    energy[i] = e;
                    if e < energy[best] {
                        best = i;
                    }
                }
            }
            stale = if obj.used() == before { stale + 1 } else { 0 };
            if stale >= STALE_GENERATIONS {
                stale = 0;
                let keep = best;
                for i in (0..size).filter(|&i| i != keep) {
                    pop[i] = random_point(n, rng);
                    energy[i] = obj.eval(&pop[i])?;
                    if energy[i] < energy[best] {
                        best = i;
                    }
                }
            }
        }
    }
}
