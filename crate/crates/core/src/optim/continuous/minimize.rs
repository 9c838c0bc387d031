//! Derivative-free local minimizers on the unit box.

use crate::fitness::EvalError;

use super::clamp_unit;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalMinimizer {
    NelderMead,
    /// Compass search: poll ± step along each axis, halve the step when no
    /// poll improves.
    PatternSearch,
}

impl LocalMinimizer {
    /// Maps a requested method name onto one of the two minimizers. Powell
    /// becomes pattern search; gradient-based names fall back to Nelder-Mead.
    pub fn from_method_name(name: &str) -> Self {
        match name.to_ascii_lowercase().replace(['-', '_', ' '], "").as_str() {
            "powell" | "patternsearch" => LocalMinimizer::PatternSearch,
            "neldermead" => LocalMinimizer::NelderMead,
            _ => {
                log::warn!("local minimizer `{name}` is not available; using Nelder-Mead");
                LocalMinimizer::NelderMead
            }
        }
    }
}

const NM_STEP: f64 = 0.1;
const NM_XTOL: f64 = 1e-4;
const NM_FTOL: f64 = 1e-4;
const PS_STEP: f64 = 0.25;
const PS_TOL: f64 = 1e-3;

/// Minimizes `f` from `(x0, f0)`; returns the best point seen.
pub fn minimize(
    kind: LocalMinimizer,
    x0: Vec<f64>,
    f0: f64,
    f: &mut dyn FnMut(&[f64]) -> Result<f64, EvalError>,
) -> Result<(Vec<f64>, f64), EvalError> {
    match kind {
        LocalMinimizer::NelderMead => nelder_mead(x0, f0, f),
        LocalMinimizer::PatternSearch => pattern_search(x0, f0, f),
    }
}

fn pattern_search(
    mut x: Vec<f64>,
    mut fx: f64,
    f: &mut dyn FnMut(&[f64]) -> Result<f64, EvalError>,
) -> Result<(Vec<f64>, f64), EvalError> {
    let mut step = PS_STEP;
    while step >= PS_TOL {
        let mut improved = false;
        for d in 0..x.len() {
            for sign in [1.0, -1.0] {
                let mut y = x.clone();
                y[d] = (y[d] + sign * step).clamp(0.0, 1.0);
                if y[d] == x[d] {
                    continue;
                }
                let fy = f(&y)?;
                if fy < fx {
                    (x, fx) = (y, fy);
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    Ok((x, fx))
}

fn nelder_mead(
    x0: Vec<f64>,
    f0: f64,
    f: &mut dyn FnMut(&[f64]) -> Result<f64, EvalError>,
) -> Result<(Vec<f64>, f64), EvalError> {
    let n = x0.len();
    if n == 0 {
        return Ok((x0, f0));
    }
    let mut simplex = vec![(x0.clone(), f0)];
    for d in 0..n {
        let mut y = x0.clone();
        y[d] = if y[d] + NM_STEP <= 1.0 { y[d] + NM_STEP } else { y[d] - NM_STEP };
        let fy = f(&y)?;
        simplex.push((y, fy));
    }
    let max_iter = 200 * n;
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0];
        let xspread = simplex[1..]
            .iter()
            .flat_map(|(y, _)| y.iter().zip(&best.0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let fspread = simplex[1..].iter().map(|(_, fy)| (fy - best.1).abs()).fold(0.0, f64::max);
        if xspread <= NM_XTOL && fspread <= NM_FTOL {
            break;
        }
        let centroid: Vec<f64> =
            (0..n).map(|d| simplex[..n].iter().map(|(y, _)| y[d]).sum::<f64>() / n as f64).collect();
        let worst = simplex[n].clone();
        let along = |t: f64| {
            let mut p: Vec<f64> = centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect();
            clamp_unit(&mut p);
            p
        };
        let xr = along(1.0);
        let fr = f(&xr)?;
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = f(&xe)?;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let xc = along(0.5);
                let fc = f(&xc)?;
                (xc, fc)
            } else {
                let xc = along(-0.5);
                let fc = f(&xc)?;
                (xc, fc)
            };
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    let p: Vec<f64> = x_best.iter().zip(&v.0).map(|(b, y)| b + 0.5 * (y - b)).collect();
                    let fp = f(&p)?;
                    *v = (p, fp);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(simplex.swap_remove(0))
}
