//! Hill climbing and perturbation shared by the discrete algorithms.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;

use super::Rng;
use crate::fitness::{EvalError, Evaluator};
use crate::space::{Configuration, NeighbourhoodKind, ParameterSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClimberKind {
    /// No climbing; the start point is returned as is.
    None,
    /// First improvement over a seeded-random scan order.
    RandomFirst,
    /// Best improvement over the whole neighbourhood.
    Best,
}

impl ClimberKind {
    pub fn name(self) -> &'static str {
        match self {
            ClimberKind::None => "None",
            ClimberKind::RandomFirst => "RandomFirst",
            ClimberKind::Best => "Best",
        }
    }
}

impl fmt::Display for ClimberKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClimberKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "null" => Ok(ClimberKind::None),
            "randomfirst" | "random-first" | "first" => Ok(ClimberKind::RandomFirst),
            "best" | "bestimprovement" | "best-improvement" => Ok(ClimberKind::Best),
            _ => Err(format!("unknown hill climber `{s}` (expected None, RandomFirst or Best)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClimbSettings {
    pub kind: ClimberKind,
    pub neighbourhood: NeighbourhoodKind,
    /// First improvement only: reshuffle the scan order after every move
    /// instead of continuing the current order cyclically.
    pub restart: bool,
}

impl ClimbSettings {
    pub fn best(neighbourhood: NeighbourhoodKind) -> Self {
        ClimbSettings { kind: ClimberKind::Best, neighbourhood, restart: false }
    }

    pub fn first(neighbourhood: NeighbourhoodKind, restart: bool) -> Self {
        ClimbSettings { kind: ClimberKind::RandomFirst, neighbourhood, restart }
    }
}

/// A neighbour move independent of the current position: for Hamming, shift
/// dimension `dim` by `step` modulo its radix; for Adjacent, step by ±1.
#[derive(Debug, Clone, Copy)]
struct Move {
    dim: usize,
    step: isize,
}

fn moves(space: &ParameterSpace, kind: NeighbourhoodKind) -> Vec<Move> {
    let mut out = Vec::new();
    for dim in 0..space.dims() {
        let m = space.radix(dim) as isize;
        match kind {
            NeighbourhoodKind::Hamming => out.extend((1..m).map(|step| Move { dim, step })),
            NeighbourhoodKind::Adjacent if m > 1 => {
                out.push(Move { dim, step: -1 });
                out.push(Move { dim, step: 1 });
            }
            NeighbourhoodKind::Adjacent => {}
        }
    }
    out
}

fn apply(space: &ParameterSpace, kind: NeighbourhoodKind, x: &Configuration, mv: Move) -> Option<Configuration> {
    let m = space.radix(mv.dim) as isize;
    let cur = x.indices()[mv.dim] as isize;
    let next = match kind {
        NeighbourhoodKind::Hamming => (cur + mv.step).rem_euclid(m),
        NeighbourhoodKind::Adjacent => cur + mv.step,
    };
    if !(0..m).contains(&next) || next == cur {
        return None;
    }
    let mut y = x.clone();
    y.indices_mut()[mv.dim] = next as usize;
    Some(y)
}

/// Climbs from `(x, fx)` until no neighbour is strictly better. Evaluator
/// stop signals propagate; the evaluator keeps the incumbent.
pub fn climb(
    ev: &mut Evaluator<'_>,
    settings: &ClimbSettings,
    mut x: Configuration,
    mut fx: f64,
    rng: &mut Rng,
) -> Result<(Configuration, f64), EvalError> {
    let space = ev.space();
    match settings.kind {
        ClimberKind::None => Ok((x, fx)),
        ClimberKind::Best => loop {
            let mut best: Option<(Configuration, f64)> = None;
            for y in space.neighbours(&x, settings.neighbourhood)? {
                let fy = ev.evaluate(&y)?;
                if fy < best.as_ref().map_or(fx, |b| b.1) {
                    best = Some((y, fy));
                }
            }
            match best {
                Some((y, fy)) => (x, fx) = (y, fy),
                None => return Ok((x, fx)),
            }
        },
        ClimberKind::RandomFirst => {
            let mut order = moves(space, settings.neighbourhood);
            order.shuffle(rng);
            let n = order.len();
            let mut pos = 0;
            let mut since_move = 0;
            while since_move < n {
                let mv = order[pos];
                pos = (pos + 1) % n;
                since_move += 1;
                let Some(y) = apply(space, settings.neighbourhood, &x, mv) else { continue };
                let fy = ev.evaluate(&y)?;
                if fy < fx {
                    (x, fx) = (y, fy);
                    since_move = 0;
                    if settings.restart {
                        order.shuffle(rng);
                        pos = 0;
                    }
                }
            }
            Ok((x, fx))
        }
    }
}

/// Number of dimensions touched by a perturbation of relative size `fraction`.
pub fn perturbed_dims(dims: usize, fraction: f64) -> usize {
    // the epsilon keeps 0.05 * 20 at exactly 1 despite rounding
    ((fraction * dims as f64 - 1e-9).ceil() as usize).clamp(1, dims.max(1))
}

/// Re-draws `perturbed_dims(n, fraction)` distinct dimensions of `x` to
/// different values. Dimensions with a single value are never chosen.
pub fn perturb(space: &ParameterSpace, x: &Configuration, fraction: f64, rng: &mut Rng) -> Configuration {
    let mut eligible: Vec<usize> = (0..space.dims()).filter(|&d| space.radix(d) > 1).collect();
    let count = perturbed_dims(space.dims(), fraction).min(eligible.len());
    let (chosen, _) = eligible.partial_shuffle(rng, count);
    let mut y = x.clone();
    for &d in chosen.iter() {
        let m = space.radix(d);
        let cur = y.indices()[d];
        let shift = rng.random_range(1..m);
        y.indices_mut()[d] = (cur + shift) % m;
    }
    y
}

/// Metropolis acceptance probability of a move that worsens fitness by `delta`
/// at temperature `t`.
pub fn metropolis(delta: f64, t: f64) -> f64 {
    if delta <= 0.0 {
        1.0
    } else if !(t > 0.0) {
        0.0
    } else {
        (-delta / t).exp()
    }
}
