use rand::Rng as _;

use super::{clamp_unit, random_point, Snapped, STALE_GENERATIONS};
use crate::fitness::{EvalError, Evaluator};
use crate::optim::{Optimizer, Rng};

pub const INERTIA: f64 = 0.729;
pub const COGNITIVE: f64 = 1.49445;
pub const SOCIAL: f64 = 1.49445;
const INITIAL_SPEED: f64 = 0.1;

/// Particle swarm on a ring: each particle follows the best personal best
/// among the `neighbours` ring positions around it (itself included).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParticleSwarm {
    pub particles: usize,
    pub neighbours: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Particle {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub best_x: Vec<f64>,
    pub best_f: f64,
}

impl ParticleSwarm {
    pub fn new(particles: usize, neighbours: usize) -> Self {
        ParticleSwarm { particles, neighbours }
    }

    /// Ring positions informing particle `i`.
    pub fn ring(&self, i: usize) -> impl Iterator<Item = usize> {
        let p = self.particles;
        let k = self.neighbours.clamp(1, p);
        let start = i + p - (k - 1) / 2;
        (0..k).map(move |o| (start + o) % p)
    }

    fn local_bests(&self, swarm: &[Particle]) -> Vec<Vec<f64>> {
        (0..swarm.len())
            .map(|i| {
                let j = self.ring(i).fold(i, |b, j| if swarm[j].best_f < swarm[b].best_f { j } else { b });
                swarm[j].best_x.clone()
            })
            .collect()
    }

    /// Velocity and position update of the whole swarm (no evaluation).
    pub(crate) fn step(&self, swarm: &mut [Particle], rng: &mut Rng) {
        let lbest = self.local_bests(swarm);
        for (p, l) in swarm.iter_mut().zip(lbest) {
            for d in 0..p.x.len() {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                p.v[d] = INERTIA * p.v[d] + COGNITIVE * r1 * (p.best_x[d] - p.x[d]) + SOCIAL * r2 * (l[d] - p.x[d]);
                p.x[d] += p.v[d];
            }
            clamp_unit(&mut p.x);
        }
    }
}

impl ParticleSwarm {
    fn spawn(n: usize, obj: &mut Snapped<'_, '_>, rng: &mut Rng) -> Result<Particle, EvalError> {
        let x = random_point(n, rng);
        let v = (0..n).map(|_| rng.random_range(-INITIAL_SPEED..=INITIAL_SPEED)).collect();
        let fx = obj.eval(&x)?;
        Ok(Particle { best_x: x.clone(), x, v, best_f: fx })
    }
}

impl Optimizer for ParticleSwarm {
    /// A swarm that charges no evaluation for several iterations in a row is
    /// re-drawn at random, except for the particle holding the best position.
    fn optimize(&self, ev: &mut Evaluator<'_>, rng: &mut Rng) -> Result<(), EvalError> {
        let mut obj = Snapped::new(ev);
        let n = obj.dims();
        let mut swarm = Vec::with_capacity(self.particles);
        for _ in 0..self.particles {
            swarm.push(Self::spawn(n, &mut obj, rng)?);
        }
        let mut stale = 0;
        loop {
            let before = obj.used();
            self.step(&mut swarm, rng);
            for p in swarm.iter_mut() {
                let fx = obj.eval(&p.x)?;
                if fx < p.best_f {
                    p.best_f = fx;
                    p.best_x.clone_from(&p.x);
                }
            }
            stale = if obj.used() == before { stale + 1 } else { 0 };
            if stale >= STALE_GENERATIONS {
                stale = 0;
                let keep = (0..swarm.len()).fold(0, |b, i| if swarm[i].best_f < swarm[b].best_f { i } else { b });
                for i in 0..swarm.len() {
                    if i != keep {
                        swarm[i] = Self::spawn(n, &mut obj, rng)?;
                    }
                }
            }
        }
    }
}
