use rand::Rng as _;

use super::{clamp_unit, minimize, random_point, LocalMinimizer, Snapped};
use crate::fitness::{EvalError, Evaluator};
use crate::optim::climb::metropolis;
use crate::optim::{Optimizer, Rng};

/// Random displacement followed by local minimization, accepted by the
/// Metropolis rule on raw fitness differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasinHopping {
    pub minimizer: LocalMinimizer,
    pub temperature: f64,
    /// Half-width of the uniform displacement per coordinate.
    pub step: f64,
}

impl Optimizer for BasinHopping {
    fn optimize(&self, ev: &mut Evaluator<'_>, rng: &mut Rng) -> Result<(), EvalError> {
        let mut obj = Snapped::new(ev);
        let dims = obj.dims();
        let mut f = |p: &[f64]| obj.eval(p);
        let x0 = random_point(dims, rng);
        let f0 = f(&x0)?;
        let (mut x, mut fx) = minimize(self.minimizer, x0, f0, &mut f)?;
        loop {
            let mut y0: Vec<f64> = x.iter().map(|v| v + rng.random_range(-self.step..=self.step)).collect();
            clamp_unit(&mut y0);
            let fy0 = f(&y0)?;
            let (y, fy) = minimize(self.minimizer, y0, fy0, &mut f)?;
            if fy < fx || rng.random::<f64>() < metropolis(fy - fx, self.temperature) {
                (x, fx) = (y, fy);
            }
        }
    }
}
