//! Single-trajectory discrete algorithms.

use std::collections::{HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng as _;

use super::climb::{climb, metropolis, perturb, ClimbSettings};
use super::{Optimizer, Rng};
use crate::fitness::{EvalError, Evaluator, FitnessMode, FAIL_FITNESS};
use crate::space::{Configuration, NeighbourhoodKind};

/// Uniform sampling. In deterministic mode points are drawn without
/// replacement, so every draw costs one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RandomSampling;

impl Optimizer for RandomSampling {
    fn optimize(&self, ev: &mut Evaluator<'_>, rng: &mut Rng) -> Result<(), EvalError> {
        let space = ev.space();
        match ev.mode() {
            FitnessMode::StochasticDraw => loop {
                ev.evaluate(&space.random_configuration(rng))?;
            },
            FitnessMode::DeterministicMean => {
                // lazy Fisher-Yates over linear indices
                let size = space.size();
                let mut swapped: HashMap<usize, usize> = HashMap::new();
                for i in 0..size {
                    let j = rng.random_range(i..size);
                    let pick = *swapped.get(&j).unwrap_or(&j);
                    let displaced = *swapped.get(&i).unwrap_or(&i);
                    swapped.insert(j, displaced);
                    ev.evaluate(&space.configuration(pick))?;
                }
                Err(EvalError::SpaceExhausted)
            }
        }
    }
}

/// Random restarts, each climbed to a local minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultiStartLocalSearch {
    pub climber: ClimbSettings,
}

impl Optimizer for MultiStartLocalSearch {
    fn optimize(&self, ev: &mut Evaluator<'_>, rng: &mut Rng) -> Result<(), EvalError> {
        loop {
            let x = ev.space().random_configuration(rng);
            let fx = ev.evaluate(&x)?;
            climb(ev, &self.climber, x, fx, rng)?;
        }
    }
}

/// Climb, perturb part of the local minimum, climb again; keep strict
/// improvements and restart at random after a run of failures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IteratedLocalSearch {
    pub climber: ClimbSettings,
    /// Fraction of dimensions re-drawn per perturbation, in (0, 1].
    pub perturbation: f64,
    pub exit_after_no_improve: usize,
}

impl Optimizer for IteratedLocalSearch {
    fn optimize(&self, ev: &mut Evaluator<'_>, rng: &mut Rng) -> Result<(), EvalError> {
        let space = ev.space();
        loop {
            let x0 = space.random_configuration(rng);
            let f0 = ev.evaluate(&x0)?;
            let (mut x, mut fx) = climb(ev, &self.climber, x0, f0, rng)?;
            let mut failures = 0;
            while failures < self.exit_after_no_improve {
                let y0 = perturb(space, &x, self.perturbation, rng);
                let fy0 = ev.evaluate(&y0)?;
                let (y, fy) = climb(ev, &self.climber, y0, fy0, rng)?;
                if fy < fx {
                    (x, fx) = (y, fy);
                    failures = 0;
                } else {
                    failures += 1;
                }
            }
        }
    }
}

/// Always moves to a non-tabu neighbour; visited points queue up as tabu.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TabuSearch {
    /// Take the first scanned neighbour that improves on the current point
    /// (falling back to the best non-tabu one) instead of the best overall.
    pub first_improvement: bool,
    pub tabu_size: usize,
    pub neighbourhood: NeighbourhoodKind,
}

struct TabuList {
    queue: VecDeque<usize>,
    counts: HashMap<usize, usize>,
    capacity: usize,
}

impl TabuList {
    fn push(&mut self, lin: usize) {
        self.queue.push_back(lin);
        *self.counts.entry(lin).or_default() += 1;
        if self.queue.len() > self.capacity {
            let old = self.queue.pop_front().expect("non-empty");
            let c = self.counts.get_mut(&old).expect("counted");
            *c -= 1;
            if *c == 0 {
                self.counts.remove(&old);
            }
        }
    }

    fn contains(&self, lin: usize) -> bool {
        self.counts.contains_key(&lin)
    }

    fn distinct(&self) -> usize {
        self.counts.len()
    }
}

const ESCAPE_ATTEMPTS: usize = 64;

impl Optimizer for TabuSearch {
    fn optimize(&self, ev: &mut Evaluator<'_>, rng: &mut Rng) -> Result<(), EvalError> {
        let space = ev.space();
        let mut tabu = TabuList { queue: VecDeque::new(), counts: HashMap::new(), capacity: self.tabu_size };
        let mut x = space.random_configuration(rng);
        let mut fx = ev.evaluate(&x)?;
        loop {
            tabu.push(space.linear_index(&x));
            let mut candidates: Vec<Configuration> = space
                .neighbours(&x, self.neighbourhood)?
                .into_iter()
                .filter(|y| !tabu.contains(space.linear_index(y)))
                .collect();
            if self.first_improvement {
                candidates.shuffle(rng);
            }
            let mut chosen: Option<(Configuration, f64)> = None;
            for y in candidates {
                let fy = ev.evaluate(&y)?;
                let improves = fy < fx;
                if chosen.as_ref().is_none_or(|c| fy < c.1) {
                    chosen = Some((y, fy));
                }
                if self.first_improvement && improves {
                    break;
                }
            }
            (x, fx) = match chosen {
                Some(c) => c,
                None => {
                    let y = escape(space, &tabu, &x, rng);
                    let fy = ev.evaluate(&y)?;
                    (y, fy)
                }
            };
        }
    }
}

/// A uniform random non-tabu point other than `x`, or any uniform point if
/// none is found quickly.
fn escape(space: &crate::space::ParameterSpace, tabu: &TabuList, x: &Configuration, rng: &mut Rng) -> Configuration {
    if tabu.distinct() < space.size() {
        for _ in 0..ESCAPE_ATTEMPTS {
            let y = space.random_configuration(rng);
            if &y != x && !tabu.contains(space.linear_index(&y)) {
                return y;
            }
        }
    }
    space.random_configuration(rng)
}

/// Perturb, optionally climb, accept by the Metropolis rule on a geometric
/// temperature schedule `t0 · alpha^k`.
///
/// Fitness differences are divided by the magnitude of the first non-failed
/// evaluation so the schedule is independent of the runtime unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulatedAnnealing {
    pub explore: f64,
    pub climber: ClimbSettings,
    pub t0: f64,
    pub alpha: f64,
}

impl Optimizer for SimulatedAnnealing {
    fn optimize(&self, ev: &mut Evaluator<'_>, rng: &mut Rng) -> Result<(), EvalError> {
        let space = ev.space();
        let mut scale: Option<f64> = None;
        let note = |f: f64, scale: &mut Option<f64>| {
            if scale.is_none() && f < FAIL_FITNESS {
                *scale = Some(f.abs().max(f64::MIN_POSITIVE));
            }
        };
        let mut x = space.random_configuration(rng);
        let mut fx = ev.evaluate(&x)?;
        note(fx, &mut scale);
        let mut t = self.t0;
        loop {
            let y0 = perturb(space, &x, self.explore, rng);
            let fy0 = ev.evaluate(&y0)?;
            note(fy0, &mut scale);
            let (y, fy) = climb(ev, &self.climber, y0, fy0, rng)?;
            let delta = (fy - fx) / scale.unwrap_or(1.0);
            if fy < fx || rng.random::<f64>() < metropolis(delta, t) {
                (x, fx) = (y, fy);
            }
            t *= self.alpha;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitness::SearchSpaceCache;
    use crate::optim::climb::ClimberKind;
    use crate::space::{Parameter, ParameterSpace};
    use rand::SeedableRng;

    fn grid(f: impl Fn(usize, usize) -> f64) -> SearchSpaceCache {
        let space = ParameterSpace::new(vec![Parameter::new("a", 0..6i64), Parameter::new("b", 0..6i64)]).unwrap();
        let values: Vec<f64> = (0..36).map(|l| f(l / 6, l % 6)).collect();
        SearchSpaceCache::from_fitness(space, &values)
    }

    fn run(opt: &dyn Optimizer, c: &SearchSpaceCache, budget: usize, seed: u64) -> crate::fitness::OptimizerRun {
        let mut ev = Evaluator::new(c, FitnessMode::DeterministicMean, budget, seed);
        let err = opt.optimize(&mut ev, &mut Rng::seed_from_u64(seed)).unwrap_err();
        let stop = err.stop_reason().unwrap();
        ev.finish(seed, stop)
    }

    #[test]
    fn random_sampling_visits_every_point() {
        let c = grid(|a, b| ((a * 7 + b * 13) % 36) as f64 + 1.0);
        let r = run(&RandomSampling, &c, 36, 3);
        assert_eq!(r.evals_used, 36);
        assert_eq!(r.best_fitness, c.f_opt().unwrap());
        let mut seen: Vec<_> = r.trace.iter().map(|t| c.space().linear_index(&t.config)).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..36).collect::<Vec<_>>());
    }

    #[test]
    fn first_mls_finds_unique_minimum() {
        let c = grid(|a, b| ((a as f64 - 4.0).powi(2) + (b as f64 - 1.0).powi(2)) + 1.0);
        let mls = MultiStartLocalSearch { climber: ClimbSettings::first(NeighbourhoodKind::Hamming, true) };
        let r = run(&mls, &c, 1000, 9);
        assert_eq!(r.best_fitness, 1.0);
    }

    #[test]
    fn budget_one_is_one_evaluation() {
        let c = grid(|a, b| (a + b) as f64);
        let algos: Vec<Box<dyn Optimizer>> = vec![
            Box::new(RandomSampling),
            Box::new(MultiStartLocalSearch { climber: ClimbSettings::best(NeighbourhoodKind::Adjacent) }),
            Box::new(TabuSearch { first_improvement: true, tabu_size: 10, neighbourhood: NeighbourhoodKind::Hamming }),
        ];
        for a in algos {
            let r = run(a.as_ref(), &c, 1, 4);
            assert_eq!(r.evals_used, 1);
            assert_eq!(r.best_fitness, r.trace[0].fitness);
        }
    }

    #[test]
    fn tabu_escapes_on_tiny_space() {
        let space = ParameterSpace::new(vec![Parameter::new("a", 0..2i64), Parameter::new("b", 0..2i64)]).unwrap();
        let c = SearchSpaceCache::from_fitness(space, &[4.0, 3.0, 2.0, 1.0]);
        let t = TabuSearch { first_improvement: false, tabu_size: 100, neighbourhood: NeighbourhoodKind::Hamming };
        let r = run(&t, &c, 100, 1);
        // all four points are visited, then every neighbour is tabu
        assert_eq!(r.evals_used, 4);
        assert_eq!(r.best_fitness, 1.0);
    }

    #[test]
    fn best_tabu_walks_monotone_line_without_revisits() {
        let space = ParameterSpace::new(vec![Parameter::new("a", 0..8i64)]).unwrap();
        let c = SearchSpaceCache::from_fitness(space, &[8.0, 7.0, 6.0, 5.0, 4.0, 3.0, 2.0, 1.0]);
        let t = TabuSearch { first_improvement: false, tabu_size: 2000, neighbourhood: NeighbourhoodKind::Adjacent };
        let r = run(&t, &c, 8, 2);
        assert_eq!(r.best_fitness, 1.0);
        let mut seen: Vec<_> = r.trace.iter().map(|t| t.config.indices()[0]).collect();
        let n = seen.len();
        seen.dedup();
        assert_eq!(seen.len(), n);
    }

    #[test]
    fn ils_and_sa_reach_optimum() {
        let c = grid(|a, b| ((a as f64 - 2.0).abs() + (b as f64 - 5.0).abs()) + 0.5);
        let ils = IteratedLocalSearch {
            climber: ClimbSettings::first(NeighbourhoodKind::Adjacent, false),
            perturbation: 0.05,
            exit_after_no_improve: 1,
        };
        assert_eq!(run(&ils, &c, 36, 5).best_fitness, 0.5);
        let sa = SimulatedAnnealing {
            explore: 1.0,
            climber: ClimbSettings { kind: ClimberKind::RandomFirst, neighbourhood: NeighbourhoodKind::Hamming, restart: true },
            t0: 1.0,
            alpha: 0.95,
        };
        assert_eq!(run(&sa, &c, 36, 5).best_fitness, 0.5);
    }

    #[test]
    fn same_seed_same_trace() {
        let c = grid(|a, b| ((a * 5 + b * 11) % 17) as f64);
        let sa = SimulatedAnnealing {
            explore: 0.5,
            climber: ClimbSettings { kind: ClimberKind::None, neighbourhood: NeighbourhoodKind::Hamming, restart: true },
            t0: 1.0,
            alpha: 0.95,
        };
        assert_eq!(run(&sa, &c, 20, 8).trace, run(&sa, &c, 20, 8).trace);
    }
}
