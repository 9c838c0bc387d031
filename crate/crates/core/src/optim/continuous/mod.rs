//! Continuous optimizers on the unit box.
//!
//! Dimension `d` with `m` values is split into `m` equal cells of `[0, 1]`;
//! a point is evaluated at the configuration whose cell centres are nearest.

mod anneal;
mod basin;
mod de;
mod minimize;
mod pso;

use crate::fitness::{EvalError, Evaluator};
use crate::space::{Configuration, ParameterSpace};

pub use anneal::DualAnnealing;
pub use basin::BasinHopping;
pub use de::{DeStrategy, DifferentialEvolution};
pub use minimize::{minimize, LocalMinimizer};
pub use pso::ParticleSwarm;

/// Index of the cell centre `(2i + 1) / 2m` nearest to `y`; ties go to the
/// lower index.
pub fn snap_index(m: usize, y: f64) -> usize {
    assert!(m > 0, "cannot snap onto an empty value list");
    let guess = ((y * m as f64).floor().max(0.0) as usize).min(m - 1);
    let centre = |i: usize| (2 * i + 1) as f64 / (2 * m) as f64;
    let lo = guess.saturating_sub(1);
    let hi = (guess + 1).min(m - 1);
    (lo..=hi)
        .fold((lo, f64::INFINITY), |(bi, bd), i| {
            let d = (centre(i) - y).abs();
            if d < bd {
                (i, d)
            } else {
                (bi, bd)
            }
        })
        .0
}

/// Value of `values` nearest to `y` under the equal-cell mapping.
pub fn snap<T: Clone>(values: &[T], y: f64) -> T {
    values[snap_index(values.len(), y)].clone()
}

pub fn snap_config(space: &ParameterSpace, p: &[f64]) -> Configuration {
    Configuration::new(p.iter().enumerate().map(|(d, &y)| snap_index(space.radix(d), y)).collect())
}

/// Cell centre of every index of `x`; the inverse of [`snap_config`].
pub fn centre_of(space: &ParameterSpace, x: &Configuration) -> Vec<f64> {
    x.indices()
        .iter()
        .enumerate()
        .map(|(d, &i)| (2 * i + 1) as f64 / (2 * space.radix(d)) as f64)
        .collect()
}

/// A point of the unit box.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousPoint(Vec<f64>);

impl ContinuousPoint {
    /// Clamps every coordinate into `[0, 1]`; NaN becomes 0.
    pub fn new(mut coords: Vec<f64>) -> Self {
        clamp_unit(&mut coords);
        ContinuousPoint(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn clamp_unit(p: &mut [f64]) {
    for y in p {
        *y = if y.is_nan() { 0.0 } else { y.clamp(0.0, 1.0) };
    }
}

pub(crate) fn random_point(dims: usize, rng: &mut super::Rng) -> Vec<f64> {
    use rand::Rng as _;
    (0..dims).map(|_| rng.random::<f64>()).collect()
}

/// Fitness of the configuration a point snaps to.
pub(crate) struct Snapped<'e, 'a> {
    ev: &'e mut Evaluator<'a>,
    space: &'a ParameterSpace,
}

impl<'e, 'a> Snapped<'e, 'a> {
    pub fn new(ev: &'e mut Evaluator<'a>) -> Self {
        let space = ev.space();
        Snapped { ev, space }
    }

    pub fn dims(&self) -> usize {
        self.space.dims()
    }

    pub fn eval(&mut self, p: &[f64]) -> Result<f64, EvalError> {
        self.ev.evaluate(&snap_config(self.space, p))
    }

    /// Budget charged so far.
    pub fn used(&self) -> usize {
        self.ev.used()
    }
}

/// Generations in a row that charge no evaluation before a population restarts.
pub(crate) const STALE_GENERATIONS: usize = 5;
