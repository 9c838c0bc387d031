use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Result of a pairwise competition, from A's point of view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    AWins,
    BWins,
    Tie,
}

impl Outcome {
    pub fn flip(self) -> Outcome {
        match self {
            Outcome::AWins => Outcome::BWins,
            Outcome::BWins => Outcome::AWins,
            Outcome::Tie => Outcome::Tie,
        }
    }
}

/// Welch's unequal-variance t statistic for `mean(a) - mean(b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    /// One-sided p-value in the direction of the larger mean.
    pub p: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance (n - 1 denominator).
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// `None` when either sample has fewer than two values or both variances
/// are zero.
pub fn welch(a: &[f64], b: &[f64]) -> Option<WelchTest> {
    if a.len() < 2 || b.len() < 2 {
        return None;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (sa, sb) = (variance(a) / na, variance(b) / nb);
    let se2 = sa + sb;
    if !(se2 > 0.0) {
        return None;
    }
    let t = (mean(a) - mean(b)) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    Some(WelchTest { t, df, p: dist.sf(t.abs()) })
}

/// Does A's sample (larger is better) beat B's at significance `alpha`?
///
/// One-sided Welch test toward the larger mean. Two constant samples tie if
/// equal and otherwise the larger wins; samples of fewer than two values tie.
pub fn ttest_win(a: &[f64], b: &[f64], alpha: f64) -> Outcome {
    if a.len() < 2 || b.len() < 2 {
        return Outcome::Tie;
    }
    let (ma, mb) = (mean(a), mean(b));
    if ma == mb {
        return Outcome::Tie;
    }
    let better = if ma > mb { Outcome::AWins } else { Outcome::BWins };
    match welch(a, b) {
        Some(w) if w.p < alpha => better,
        Some(_) => Outcome::Tie,
        None => better,
    }
}
