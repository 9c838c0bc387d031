//! Population-based discrete algorithms: genetic local search and a plain
//! genetic algorithm.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;

use super::climb::{climb, perturb, ClimbSettings};
use super::{Optimizer, Rng};
use crate::fitness::{EvalError, Evaluator};
use crate::space::Configuration;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reproduction {
    Uniform,
    OnePoint,
    TwoPoint,
}

impl fmt::Display for Reproduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reproduction::Uniform => "uniform",
            Reproduction::OnePoint => "1point",
            Reproduction::TwoPoint => "2point",
        })
    }
}

impl FromStr for Reproduction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(Reproduction::Uniform),
            "1point" | "onepoint" | "one-point" => Ok(Reproduction::OnePoint),
            "2point" | "twopoint" | "two-point" => Ok(Reproduction::TwoPoint),
            _ => Err(format!("unknown reproductor `{s}` (expected uniform, 1point or 2point)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    /// Restricted tournament: each child challenges the Hamming-closest of
    /// `pop_size` uniformly drawn members and replaces it if strictly better.
    Rts,
    /// Tournaments of `k` uniformly drawn entrants from parents and children.
    Tournament(usize),
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selection::Rts => f.write_str("RTS"),
            Selection::Tournament(k) => write!(f, "tour{k}"),
        }
    }
}

impl FromStr for Selection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        if lower == "rts" {
            return Ok(Selection::Rts);
        }
        match lower.strip_prefix("tour").map(str::parse::<usize>) {
            Some(Ok(k)) if k >= 1 => Ok(Selection::Tournament(k)),
            _ => Err(format!("unknown selector `{s}` (expected RTS or tourK)")),
        }
    }
}

/// Swaps the segment `[c1, c2)` between `a` and `b`.
pub fn two_point_crossover(a: &Configuration, b: &Configuration, c1: usize, c2: usize) -> (Configuration, Configuration) {
    let mut x = a.clone();
    let mut y = b.clone();
    x.indices_mut()[c1..c2].copy_from_slice(&b.indices()[c1..c2]);
    y.indices_mut()[c1..c2].copy_from_slice(&a.indices()[c1..c2]);
    (x, y)
}

/// Two children from parents `a` and `b`.
pub fn crossover(a: &Configuration, b: &Configuration, kind: Reproduction, rng: &mut Rng) -> (Configuration, Configuration) {
    let n = a.len();
    match kind {
        Reproduction::Uniform => {
            let mut x = a.clone();
            let mut y = b.clone();
            for d in 0..n {
                if rng.random::<bool>() {
                    x.indices_mut()[d] = b.indices()[d];
                    y.indices_mut()[d] = a.indices()[d];
                }
            }
            (x, y)
        }
        _ if n < 2 => (a.clone(), b.clone()),
        Reproduction::OnePoint => two_point_crossover(a, b, rng.random_range(1..n), n),
        Reproduction::TwoPoint if n < 3 => two_point_crossover(a, b, 1, n),
        Reproduction::TwoPoint => {
            let c1 = rng.random_range(1..n - 1);
            let c2 = rng.random_range(c1 + 1..n);
            two_point_crossover(a, b, c1, c2)
        }
    }
}

type Member = (Configuration, f64);

fn breed(pop: &[Member], count: usize, kind: Reproduction, rng: &mut Rng) -> Vec<Configuration> {
    let mut children = Vec::with_capacity(count + 1);
    while children.len() < count {
        let a = &pop[rng.random_range(0..pop.len())].0;
        let b = &pop[rng.random_range(0..pop.len())].0;
        let (x, y) = crossover(a, b, kind, rng);
        children.push(x);
        children.push(y);
    }
    children.truncate(count);
    children
}

fn select(pop: Vec<Member>, children: Vec<Member>, selection: Selection, rng: &mut Rng) -> Vec<Member> {
    let size = pop.len();
    match selection {
        Selection::Tournament(k) => {
            let pool: Vec<Member> = pop.into_iter().chain(children).collect();
            (0..size)
                .map(|_| {
                    let mut winner = rng.random_range(0..pool.len());
                    for _ in 1..k {
                        let c = rng.random_range(0..pool.len());
                        if pool[c].1 < pool[winner].1 {
                            winner = c;
                        }
                    }
                    pool[winner].clone()
                })
                .collect()
        }
        Selection::Rts => {
            let mut pop = pop;
            for child in children {
                let mut closest = rng.random_range(0..size);
                let mut dist = pop[closest].0.hamming_distance(&child.0);
                for _ in 1..size {
                    let c = rng.random_range(0..size);
                    let d = pop[c].0.hamming_distance(&child.0);
                    if d < dist {
                        (closest, dist) = (c, d);
                    }
                }
                if child.1 < pop[closest].1 {
                    pop[closest] = child;
                }
            }
            pop
        }
    }
}

/// Genetic algorithm whose every individual is hill climbed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneticLocalSearch {
    pub climber: ClimbSettings,
    pub pop_size: usize,
    pub reproduction: Reproduction,
    pub selection: Selection,
}

impl Optimizer for GeneticLocalSearch {
    fn optimize(&self, ev: &mut Evaluator<'_>, rng: &mut Rng) -> Result<(), EvalError> {
        let space = ev.space();
        let mut pop = Vec::with_capacity(self.pop_size);
        for _ in 0..self.pop_size {
            let x = space.random_configuration(rng);
            let fx = ev.evaluate(&x)?;
            pop.push(climb(ev, &self.climber, x, fx, rng)?);
        }
        loop {
            let mut children = Vec::with_capacity(self.pop_size);
            for x in breed(&pop, self.pop_size, self.reproduction, rng) {
                let fx = ev.evaluate(&x)?;
                children.push(climb(ev, &self.climber, x, fx, rng)?);
            }
            pop = select(pop, children, self.selection, rng);
        }
    }
}

/// Crossover plus mutation of a fraction of the dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneticAlgorithm {
    /// Fraction of dimensions mutated per child; 0 disables mutation.
    pub mutation: f64,
    pub pop_size: usize,
    pub reproduction: Reproduction,
    pub selection: Selection,
}

impl Optimizer for GeneticAlgorithm {
    fn optimize(&self, ev: &mut Evaluator<'_>, rng: &mut Rng) -> Result<(), EvalError> {
        let space = ev.space();
        let mut pop = Vec::with_capacity(self.pop_size);
        for _ in 0..self.pop_size {
            let x = space.random_configuration(rng);
            let fx = ev.evaluate(&x)?;
            pop.push((x, fx));
        }
        loop {
            let mut children = Vec::with_capacity(self.pop_size);
            for mut x in breed(&pop, self.pop_size, self.reproduction, rng) {
                if self.mutation > 0.0 {
                    x = perturb(space, &x, self.mutation, rng);
                }
                let fx = ev.evaluate(&x)?;
                children.push((x, fx));
            }
            pop = select(pop, children, self.selection, rng);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitness::{FitnessMode, SearchSpaceCache};
    use crate::space::{NeighbourhoodKind, Parameter, ParameterSpace};
    use rand::SeedableRng;

    fn cfg(v: &[usize]) -> Configuration {
        Configuration::new(v.to_vec())
    }

    #[test]
    fn two_point_swaps_middle() {
        let (x, y) = two_point_crossover(&cfg(&[0, 0, 0, 0, 0]), &cfg(&[1, 1, 1, 1, 1]), 1, 3);
        assert_eq!(x, cfg(&[0, 1, 1, 0, 0]));
        assert_eq!(y, cfg(&[1, 0, 0, 1, 1]));
    }

    #[test]
    fn identical_parents_give_identical_children() {
        let mut rng = Rng::seed_from_u64(0);
        let a = cfg(&[3, 1, 4, 1, 5]);
        for kind in [Reproduction::Uniform, Reproduction::OnePoint, Reproduction::TwoPoint] {
            let (x, y) = crossover(&a, &a, kind, &mut rng);
            assert_eq!((&x, &y), (&a, &a));
        }
    }

    #[test]
    fn crossover_children_take_genes_from_parents() {
        let mut rng = Rng::seed_from_u64(1);
        let a = cfg(&[0; 6]);
        let b = cfg(&[1; 6]);
        for kind in [Reproduction::Uniform, Reproduction::OnePoint, Reproduction::TwoPoint] {
            for _ in 0..20 {
                let (x, y) = crossover(&a, &b, kind, &mut rng);
                for d in 0..6 {
                    assert_eq!(x.indices()[d] + y.indices()[d], 1);
                }
            }
        }
    }

    #[test]
    fn dominant_member_wins_every_tournament_it_enters() {
        let mut rng = Rng::seed_from_u64(2);
        let pop: Vec<Member> = (0..8).map(|i| (cfg(&[i]), 10.0 + i as f64)).collect();
        let children: Vec<Member> = vec![(cfg(&[99]), 1.0)];
        let next = select(pop, children, Selection::Tournament(8), &mut rng);
        // with 9 members and 8 entrants the dominant one enters most tournaments
        let wins = next.iter().filter(|m| m.1 == 1.0).count();
        assert!(wins >= 1);
        for m in &next {
            assert!(m.1 == 1.0 || m.1 >= 10.0);
        }
    }

    #[test]
    fn selector_names() {
        assert_eq!("tour8".parse::<Selection>().unwrap(), Selection::Tournament(8));
        assert_eq!("RTS".parse::<Selection>().unwrap(), Selection::Rts);
        assert!("tour".parse::<Selection>().is_err());
        assert_eq!("2point".parse::<Reproduction>().unwrap().to_string(), "2point");
    }

    #[test]
    fn gls_and_ga_find_optimum_with_enough_budget() {
        let space = ParameterSpace::new(vec![Parameter::new("a", 0..6i64), Parameter::new("b", 0..6i64)]).unwrap();
        let values: Vec<f64> = (0..36).map(|l| ((l / 6) as f64 - 3.0).powi(2) + ((l % 6) as f64 - 2.0).powi(2) + 1.0).collect();
        let c = SearchSpaceCache::from_fitness(space, &values);
        let gls = GeneticLocalSearch {
            climber: ClimbSettings::first(NeighbourhoodKind::Hamming, true),
            pop_size: 4,
            reproduction: Reproduction::Uniform,
            selection: Selection::Rts,
        };
        let ga = GeneticAlgorithm { mutation: 0.5, pop_size: 8, reproduction: Reproduction::TwoPoint, selection: Selection::Tournament(4) };
        for opt in [&gls as &dyn Optimizer, &ga] {
            let mut ev = Evaluator::new(&c, FitnessMode::DeterministicMean, 36, 3);
            let _ = opt.optimize(&mut ev, &mut Rng::seed_from_u64(3));
            assert_eq!(ev.best().unwrap().1, 1.0);
        }
    }

    #[test]
    fn zero_mutation_children_are_pure_crossovers() {
        let space = ParameterSpace::new(vec![Parameter::new("a", 0..4i64), Parameter::new("b", 0..4i64), Parameter::new("c", 0..4i64)]).unwrap();
        let c = SearchSpaceCache::from_fitness(space, &(0..64).map(f64::from).collect::<Vec<_>>());
        let ga = GeneticAlgorithm { mutation: 0.0, pop_size: 2, reproduction: Reproduction::Uniform, selection: Selection::Tournament(2) };
        let mut ev = Evaluator::new(&c, FitnessMode::StochasticDraw, 4, 1);
        let _ = ga.optimize(&mut ev, &mut Rng::seed_from_u64(4));
        let t = ev.trace();
        // the first two children only carry genes found in the two parents
        for child in &t[2..4] {
            for d in 0..3 {
                let g = child.config.indices()[d];
                assert!(g == t[0].config.indices()[d] || g == t[1].config.indices()[d]);
            }
        }
    }
}
