//! Seeded synthetic caches: NK landscapes and kernel-like runtime surfaces.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{CacheMetadata, Entry, FitnessError, SearchSpaceCache};
use crate::space::{Parameter, ParameterSpace};

/// Largest N for which an NK landscape is fully enumerated.
pub const NK_MAX_N: usize = 24;

/// Binary NK landscape over `n` bits with `k` epistatic links per bit.
///
/// Component `i` reads bit `i` followed by its `k` linked bits as a table
/// index (bit `i` most significant); fitness is the mean of the `n`
/// component values, each drawn uniform on (0, 1).
pub fn generate_nk_landscape(n: usize, k: usize, seed: u64) -> Result<SearchSpaceCache, FitnessError> {
    if n == 0 || n > NK_MAX_N {
        return Err(FitnessError::Parameter(format!("N must be in 1..={NK_MAX_N}, got {n}")));
    }
    if k >= n {
        return Err(FitnessError::Parameter(format!("K must be smaller than N (K={k}, N={n})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut links = Vec::with_capacity(n);
    let mut tables = Vec::with_capacity(n);
    for i in 0..n {
        let others: Vec<usize> = sample(&mut rng, n - 1, k).into_iter().map(|j| if j >= i { j + 1 } else { j }).collect();
        let mut bits = vec![i];
        bits.extend(others);
        links.push(bits);
        tables.push((0..1usize << (k + 1)).map(|_| rng.random::<f64>()).collect::<Vec<f64>>());
    }

    let params = (0..n).map(|i| Parameter::new(format!("x{i}"), [0i64, 1])).collect();
    let space = ParameterSpace::new(params)?;
    let metadata = CacheMetadata { kernel: format!("nk-n{n}-k{k}-s{seed}"), device: "synthetic".into(), units: "fitness".into() };
    let total = 1usize << n;
    let entries = (0..total)
        .map(|lin| {
            // parameter j is bit (n-1-j) of the linear index
            let bit = |j: usize| (lin >> (n - 1 - j)) & 1;
            let sum: f64 = links
                .iter()
                .zip(&tables)
                .map(|(l, t)| t[l.iter().fold(0, |acc, &j| (acc << 1) | bit(j))])
                .sum();
            Some(Entry::from_times(vec![sum / n as f64]))
        })
        .collect();
    Ok(SearchSpaceCache::new(space, metadata, entries))
}

/// Shape of a synthetic runtime surface.
///
/// Runtime is `base · (1 + bowl + ridge) · exp(ruggedness · z)` where the
/// bowl is a weighted quadratic around a random centre in normalized index
/// coordinates, the ridge couples consecutive parameters, and `z` is a
/// per-configuration standard normal. Each ok configuration gets 32 samples
/// jittered by `jitter` (relative standard deviation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RidgeProfile {
    pub curvature: f64,
    pub ridge: f64,
    pub ruggedness: f64,
    pub jitter: f64,
}

impl RidgeProfile {
    pub const SMOOTH: RidgeProfile = RidgeProfile { curvature: 1.0, ridge: 0.0, ruggedness: 0.02, jitter: 0.01 };
    pub const RIDGED: RidgeProfile = RidgeProfile { curvature: 1.0, ridge: 1.5, ruggedness: 0.05, jitter: 0.01 };
    pub const RUGGED: RidgeProfile = RidgeProfile { curvature: 0.5, ridge: 1.0, ruggedness: 0.25, jitter: 0.01 };

    pub fn named(name: &str) -> Option<RidgeProfile> {
        match name {
            "smooth" => Some(Self::SMOOTH),
            "ridged" => Some(Self::RIDGED),
            "rugged" => Some(Self::RUGGED),
            _ => None,
        }
    }
}

impl Default for RidgeProfile {
    fn default() -> Self {
        Self::RIDGED
    }
}

pub const SAMPLES_PER_CONFIG: usize = 32;

/// Complete kernel-like cache over `space` with about `fail_fraction` of the
/// configurations marked failed (independent seeded Bernoulli draws).
pub fn generate_synthetic_kernel_space(
    space: &ParameterSpace,
    fail_fraction: f64,
    profile: RidgeProfile,
    seed: u64,
) -> Result<SearchSpaceCache, FitnessError> {
    if !(0.0..1.0).contains(&fail_fraction) {
        return Err(FitnessError::Parameter(format!("fail fraction must be in [0, 1), got {fail_fraction}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = space.dims();
    let base = 1.0 + 9.0 * rng.random::<f64>();
    let centre: Vec<f64> = (0..dims).map(|_| rng.random()).collect();
    let weight: Vec<f64> = (0..dims).map(|_| profile.curvature * (0.5 + rng.random::<f64>())).collect();
    let coupling: Vec<f64> = (0..dims.saturating_sub(1)).map(|_| profile.ridge * rng.random::<f64>()).collect();
    let radices = space.radices();

    let metadata = CacheMetadata { kernel: format!("synthetic-s{seed}"), device: "synthetic".into(), units: "ms".into() };
    let mut entries = Vec::with_capacity(space.size());
    for x in space.enumerate() {
        let fails = rng.random::<f64>() < fail_fraction;
        let z: f64 = StandardNormal.sample(&mut rng);
        let jitters: Vec<f64> = (0..SAMPLES_PER_CONFIG).map(|_| StandardNormal.sample(&mut rng)).collect();
        if fails {
            entries.push(Some(Entry::failed()));
            continue;
        }
        let u: Vec<f64> = x
            .indices()
            .iter()
            .zip(&radices)
            .map(|(&i, &m)| if m > 1 { i as f64 / (m - 1) as f64 } else { 0.0 })
            .collect();
        let bowl: f64 = (0..dims).map(|d| weight[d] * (u[d] - centre[d]).powi(2)).sum();
        let ridge: f64 = coupling
            .iter()
            .enumerate()
            .map(|(d, c)| c * ((u[d] - u[d + 1]) - (centre[d] - centre[d + 1])).powi(2))
            .sum();
        let runtime = base * (1.0 + bowl + ridge) * (profile.ruggedness * z).exp();
        let times = jitters.iter().map(|j| (runtime * (1.0 + profile.jitter * j)).max(runtime * 1e-3)).collect();
        entries.push(Some(Entry::from_times(times)));
    }
    Ok(SearchSpaceCache::new(space.clone(), metadata, entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn nk_sizes_and_determinism() {
        let a = generate_nk_landscape(10, 2, 7).unwrap();
        assert_eq!(a.space().size(), 1024);
        let b = generate_nk_landscape(10, 2, 7).unwrap();
        assert_eq!(a.to_json_string(), b.to_json_string());
        assert!(a.entries().iter().flatten().all(|e| e.ok && e.times.len() == 1));
    }

    #[test]
    fn nk_rejects_bad_k() {
        assert!(matches!(generate_nk_landscape(5, 5, 0), Err(FitnessError::Parameter(_))));
        assert!(generate_nk_landscape(25, 1, 0).is_err());
    }

    #[test]
    fn nk_k0_is_separable() {
        // with K = 0 the per-bit argmin is the unique optimum; check by brute force
        let n = 10;
        let c = generate_nk_landscape(n, 0, 3).unwrap();
        let (opt_lin, _) = c.optimum().unwrap();
        let space = c.space();
        let mut greedy = vec![0usize; n];
        for (j, slot) in greedy.iter_mut().enumerate() {
            // flip bit j from the all-zero point; lower fitness means bit 1 is better
            let mut one = vec![0usize; n];
            one[j] = 1;
            let f0 = c.fitness(0);
            let f1 = c.fitness(space.linear_index(&one.into()));
            *slot = usize::from(f1 < f0);
        }
        assert_eq!(space.configuration(opt_lin).indices(), &greedy[..]);
        let f_opt = c.fitness(opt_lin);
        assert_eq!(c.fitness_values().iter().filter(|&&f| f == f_opt).count(), 1);
    }

    #[test]
    fn synthetic_without_failures_is_all_ok() {
        let space = fixtures::space("convolution_mi50").unwrap();
        let c = generate_synthetic_kernel_space(&space, 0.0, RidgeProfile::default(), 1).unwrap();
        assert_eq!(c.fail_count(), 0);
        assert!(c.is_complete());
        for e in c.entries().iter().flatten() {
            assert_eq!(e.times.len(), SAMPLES_PER_CONFIG);
            let avg = e.times.iter().sum::<f64>() / e.times.len() as f64;
            assert!((e.mean - avg).abs() <= 1e-9 * e.mean);
        }
    }

    #[test]
    fn synthetic_gemm_fail_count_magnitude() {
        let space = fixtures::space("gemm").unwrap();
        let c = generate_synthetic_kernel_space(&space, 0.78, RidgeProfile::default(), 11).unwrap();
        assert_eq!(space.size(), 82944);
        let fails = c.fail_count() as f64;
        // binomial sd is about 119
        assert!((fails - 0.78 * 82944.0).abs() < 1000.0, "fails = {fails}");
    }

    #[test]
    fn synthetic_is_reproducible() {
        let space = fixtures::space("convolution_mi50").unwrap();
        let a = generate_synthetic_kernel_space(&space, 0.5, RidgeProfile::RUGGED, 9).unwrap();
        let b = generate_synthetic_kernel_space(&space, 0.5, RidgeProfile::RUGGED, 9).unwrap();
        assert_eq!(a.to_json_string(), b.to_json_string());
        assert!(generate_synthetic_kernel_space(&space, 1.0, RidgeProfile::RUGGED, 9).is_err());
    }
}
