use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::gamma::ln_gamma;

use super::{minimize, random_point, LocalMinimizer, Snapped};
use crate::fitness::{EvalError, Evaluator};
use crate::optim::{Optimizer, Rng};

const TAIL_LIMIT: f64 = 1e8;
const MIN_VISIT_BOUND: f64 = 1e-10;
const RESTART_RATIO: f64 = 1e-5;
/// Chains without a new best before a local search from the current point.
const STALE_CHAINS: usize = 1000;

/// Generalized simulated annealing with a heavy-tailed visiting distribution
/// plus local refinement of improving states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualAnnealing {
    pub minimizer: LocalMinimizer,
    /// Visiting parameter q_v, in (1, 3).
    pub visit: f64,
    /// Acceptance parameter q_a.
    pub accept: f64,
    pub initial_temp: f64,
}

impl DualAnnealing {
    pub fn new(minimizer: LocalMinimizer) -> Self {
        DualAnnealing { minimizer, visit: 2.62, accept: -5.0, initial_temp: 5230.0 }
    }

    /// Temperature after `k` completed chains (`k = 0` gives the start value).
    pub fn temperature(&self, k: usize) -> f64 {
        let q = self.visit - 1.0;
        self.initial_temp * (2f64.powf(q) - 1.0) / ((k as f64 + 2.0).powf(q) - 1.0)
    }

    /// Probability of accepting a move that worsens energy by `delta > 0`.
    pub fn acceptance(&self, delta: f64, step_temp: f64) -> f64 {
        let base = 1.0 - (1.0 - self.accept) * delta / step_temp;
        if base <= 0.0 {
            0.0
        } else {
            (base.ln() / (1.0 - self.accept)).exp()
        }
    }
}

/// Tsallis visiting distribution; wraps candidates back into the unit box.
struct Visitor {
    qv: f64,
    factor4_p: f64,
    factor6: f64,
}

impl Visitor {
    fn new(qv: f64) -> Self {
        let factor2 = ((4.0 - qv) * (qv - 1.0).ln()).exp();
        let factor3 = ((2.0 - qv) * 2f64.ln() / (qv - 1.0)).exp();
        let factor4_p = PI.sqrt() * factor2 / (factor3 * (3.0 - qv));
        let factor5 = 1.0 / (qv - 1.0) - 0.5;
        let d1 = 2.0 - factor5;
        let factor6 = PI * (1.0 - factor5) / (PI * (1.0 - factor5)).sin() / ln_gamma(d1).exp();
        Visitor { qv, factor4_p, factor6 }
    }

    fn draw(&self, temperature: f64, rng: &mut Rng) -> f64 {
        let x: f64 = StandardNormal.sample(rng);
        let y: f64 = StandardNormal.sample(rng);
        let qv = self.qv;
        let factor1 = (temperature.ln() / (qv - 1.0)).exp();
        let factor4 = self.factor4_p * factor1;
        let x = x * (-(qv - 1.0) * (self.factor6 / factor4).ln() / (3.0 - qv)).exp();
        let den = ((qv - 1.0) * y.abs().ln() / (3.0 - qv)).exp();
        x / den
    }

    fn tail(v: f64, rng: &mut Rng) -> f64 {
        if v > TAIL_LIMIT {
            TAIL_LIMIT * rng.random::<f64>()
        } else if v < -TAIL_LIMIT {
            -TAIL_LIMIT * rng.random::<f64>()
        } else if v.is_nan() {
            0.0
        } else {
            v
        }
    }

    fn wrap(v: f64) -> f64 {
        let w = (v % 1.0 + 1.0) % 1.0;
        if w.abs() < MIN_VISIT_BOUND {
            w + MIN_VISIT_BOUND
        } else {
            w
        }
    }

    /// Moves every coordinate when `step < n`, otherwise only `step - n`.
    fn visit(&self, x: &[f64], step: usize, temperature: f64, rng: &mut Rng) -> Vec<f64> {
        let n = x.len();
        let mut out = x.to_vec();
        if step < n {
            for v in out.iter_mut() {
                *v = Self::wrap(*v + Self::tail(self.draw(temperature, rng), rng));
            }
        } else {
            let d = step - n;
            out[d] = Self::wrap(out[d] + Self::tail(self.draw(temperature, rng), rng));
        }
        out
    }
}

impl Optimizer for DualAnnealing {
    fn optimize(&self, ev: &mut Evaluator<'_>, rng: &mut Rng) -> Result<(), EvalError> {
        let mut obj = Snapped::new(ev);
        let n = obj.dims();
        let mut f = |p: &[f64]| obj.eval(p);
        let visitor = Visitor::new(self.visit);
        let restart_below = self.initial_temp * RESTART_RATIO;

        let mut current = random_point(n, rng);
        let mut e_cur = f(&current)?;
        let (mut best, mut e_best) = (current.clone(), e_cur);
        let mut stale = 0;
        let mut stale_limit = STALE_CHAINS;
        loop {
            for k in 0.. {
                let temperature = self.temperature(k);
                if temperature < restart_below {
                    current = random_point(n, rng);
                    e_cur = f(&current)?;
                    if e_cur < e_best {
                        (best, e_best) = (current.clone(), e_cur);
                    }
                    break;
                }
                let step_temp = temperature / (k as f64 + 1.0);
                let mut improved = k == 0;
                stale += 1;
                for j in 0..2 * n {
                    let cand = visitor.visit(&current, j, temperature, rng);
                    let e = f(&cand)?;
                    if e < e_cur {
                        (current, e_cur) = (cand, e);
                        if e < e_best {
                            (best, e_best) = (current.clone(), e);
                            improved = true;
                            stale = 0;
                        }
                    } else if rng.random::<f64>() <= self.acceptance(e - e_cur, step_temp) {
                        (current, e_cur) = (cand, e);
                    }
                }
                if improved {
                    let (x, e) = minimize(self.minimizer, best.clone(), e_best, &mut f)?;
                    if e < e_best {
                        stale = 0;
                        (best, e_best) = (x.clone(), e);
                        (current, e_cur) = (x, e);
                    }
                }
                if stale >= stale_limit {
                    let (x, e) = minimize(self.minimizer, current.clone(), e_cur, &mut f)?;
                    stale = 0;
                    stale_limit = n.max(1);
                    if e < e_best {
                        (best, e_best) = (x.clone(), e);
                        (current, e_cur) = (x, e);
                    }
                }
            }
        }
    }
}
