use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{mean, variance};
use super::BenchError;
use crate::fitness::{
    generate_nk_landscape, generate_synthetic_kernel_space, CacheMetadata, FitnessMode, RidgeProfile, SearchSpaceCache,
};
use crate::fixtures;
use crate::optim::{run_config, Algorithm, AlgorithmConfig, DefaultsTable, Hyperparameters, OptimError};

pub const DEFAULT_BUDGETS: [usize; 7] = [25, 50, 100, 200, 400, 800, 1600];
pub const DEFAULT_REPETITIONS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NkSpec {
    pub n: usize,
    pub k: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Synthetic kernel-like cache over one of the bundled fixture spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub fixture: String,
    #[serde(default)]
    pub seed: u64,
    /// `smooth`, `ridged` or `rugged`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    /// Defaults to the fixture kernel's typical fail share.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fail_fraction: Option<f64>,
}

/// Where a plan's cache comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CacheSource {
    Path(PathBuf),
    File { path: PathBuf },
    Nk { nk: NkSpec },
    Synthetic { synthetic: SyntheticSpec },
}

impl CacheSource {
    fn label(&self) -> String {
        match self {
            CacheSource::Path(p) | CacheSource::File { path: p } => p.display().to_string(),
            CacheSource::Nk { nk } => format!("nk n={} k={} seed={}", nk.n, nk.k, nk.seed),
            CacheSource::Synthetic { synthetic } => format!("synthetic {} seed={}", synthetic.fixture, synthetic.seed),
        }
    }

    /// Loads or generates the cache; relative paths resolve against `base`.
    pub fn load(&self, base: &Path) -> Result<SearchSpaceCache, BenchError> {
        let wrap = |source| BenchError::Cache { cache: self.label(), source };
        match self {
            CacheSource::Path(p) | CacheSource::File { path: p } => SearchSpaceCache::read_json(base.join(p)).map_err(wrap),
            CacheSource::Nk { nk } => generate_nk_landscape(nk.n, nk.k, nk.seed).map_err(wrap),
            CacheSource::Synthetic { synthetic: s } => {
                let space = fixtures::space(&s.fixture)
                    .ok_or_else(|| BenchError::Plan(format!("unknown fixture `{}`", s.fixture)))?;
                let profile = match &s.profile {
                    None => RidgeProfile::default(),
                    Some(name) => RidgeProfile::named(name).ok_or_else(|| BenchError::Plan(format!("unknown profile `{name}`")))?,
                };
                let fail = s.fail_fraction.or_else(|| fixtures::typical_fail_fraction(&s.fixture)).unwrap_or(0.0);
                let cache = generate_synthetic_kernel_space(&space, fail, profile, s.seed).map_err(wrap)?;
                let metadata =
                    CacheMetadata { kernel: s.fixture.clone(), device: format!("synthetic-s{}", s.seed), units: "ms".into() };
                Ok(cache.with_metadata(metadata))
            }
        }
    }
}

/// An algorithm entry of a plan. Without explicit hyperparameters the
/// defaults table supplies one setting per budget (random sampling has none).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "TemplateRepr")]
pub struct AlgorithmTemplate {
    pub algorithm: Algorithm,
    /// Name used in result files; defaults to the algorithm name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyperparameters: Option<Hyperparameters>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TemplateRepr {
    Name(Algorithm),
    Full {
        algorithm: Algorithm,
        #[serde(default)]
        label: Option<String>,
        #[serde(default)]
        hyperparameters: Option<Hyperparameters>,
    },
}

impl From<TemplateRepr> for AlgorithmTemplate {
    fn from(r: TemplateRepr) -> Self {
        match r {
            TemplateRepr::Name(algorithm) => AlgorithmTemplate::new(algorithm),
            TemplateRepr::Full { algorithm, label, hyperparameters } => AlgorithmTemplate { algorithm, label, hyperparameters },
        }
    }
}

impl AlgorithmTemplate {
    pub fn new(algorithm: Algorithm) -> Self {
        AlgorithmTemplate { algorithm, label: None, hyperparameters: None }
    }

    pub fn with(algorithm: Algorithm, label: impl Into<String>, hyperparameters: Hyperparameters) -> Self {
        AlgorithmTemplate { algorithm, label: Some(label.into()), hyperparameters: Some(hyperparameters) }
    }

    pub fn name(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.algorithm.name().to_string())
    }

    fn resolve(&self, defaults: &DefaultsTable, budget: usize) -> Result<AlgorithmConfig, OptimError> {
        match &self.hyperparameters {
            Some(h) => AlgorithmConfig::parse(self.algorithm, h),
            None if self.algorithm == Algorithm::RandomSampling => AlgorithmConfig::parse(self.algorithm, &Hyperparameters::new()),
            None => AlgorithmConfig::parse(self.algorithm, &defaults.get(self.algorithm, budget)?),
        }
    }
}

fn default_budgets() -> Vec<usize> {
    DEFAULT_BUDGETS.to_vec()
}

fn default_repetitions() -> usize {
    DEFAULT_REPETITIONS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub caches: Vec<CacheSource>,
    pub algorithms: Vec<AlgorithmTemplate>,
    #[serde(default = "default_budgets")]
    pub budgets: Vec<usize>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub mode: FitnessMode,
    /// Run `r` uses seed `seed + r`.
    #[serde(default)]
    pub seed: u64,
    /// One run per budget with its own seed, instead of reading every budget
    /// off the prefix of the longest run that shares its hyperparameters.
    #[serde(default)]
    pub independent_budgets: bool,
    /// Caches used for hyperparameter tuning; left out of competitions.
    #[serde(default)]
    pub tuning_caches: Vec<String>,
    /// Defaults table replacing the bundled one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defaults: Option<PathBuf>,
}

impl ExperimentPlan {
    pub fn new(caches: Vec<CacheSource>, algorithms: Vec<AlgorithmTemplate>) -> Self {
        ExperimentPlan {
            caches,
            algorithms,
            budgets: default_budgets(),
            repetitions: DEFAULT_REPETITIONS,
            mode: FitnessMode::DeterministicMean,
            seed: 0,
            independent_budgets: false,
            tuning_caches: Vec::new(),
            defaults: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load_caches(&self, base: &Path) -> Result<Vec<SearchSpaceCache>, BenchError> {
        self.caches.iter().map(|c| c.load(base)).collect()
    }

    /// Defaults table named by the plan, or the bundled one.
    pub fn load_defaults(&self, base: &Path) -> Result<DefaultsTable, BenchError> {
        match &self.defaults {
            Some(p) => Ok(DefaultsTable::from_json(&std::fs::read_to_string(base.join(p))?)?),
            None => Ok(DefaultsTable::bundled()),
        }
    }

    /// Seed of repetition `rep` at `budget`.
    pub fn run_seed(&self, rep: usize, budget: usize) -> u64 {
        let seed = self.seed.wrapping_add(rep as u64);
        if self.independent_budgets {
            seed.wrapping_add((budget as u64) << 32)
        } else {
            seed
        }
    }
}

/// One (cache, algorithm, budget, repetition) cell of the result tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub cache: String,
    pub algorithm: String,
    pub budget: usize,
    pub rep: usize,
    pub seed: u64,
    pub best_fitness: f64,
    pub fraction: f64,
    pub evals_used: usize,
}

struct Unit {
    cache: usize,
    template: usize,
    budgets: Vec<usize>,
    rep: usize,
    config: AlgorithmConfig,
}

/// Budgets grouped by identical resolved settings, each group sorted.
fn budget_groups(
    template: &AlgorithmTemplate,
    defaults: &DefaultsTable,
    budgets: &[usize],
    nested: bool,
    gaps: &mut Vec<(String, usize)>,
) -> Result<Vec<(AlgorithmConfig, Vec<usize>)>, BenchError> {
    let mut groups: Vec<(AlgorithmConfig, Vec<usize>)> = Vec::new();
    for &b in budgets {
        let config = match template.resolve(defaults, b) {
            Ok(c) => c,
            Err(OptimError::MissingDefaults { .. }) => {
                gaps.push((template.algorithm.name().to_string(), b));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        match groups.iter_mut().find(|(c, _)| nested && *c == config) {
            Some((_, g)) => g.push(b),
            None => groups.push((config, vec![b])),
        }
    }
    Ok(groups)
}

fn validate(plan: &ExperimentPlan, caches: &[SearchSpaceCache]) -> Result<Vec<usize>, BenchError> {
    if caches.is_empty() || plan.algorithms.is_empty() {
        return Err(BenchError::Plan("a plan needs at least one cache and one algorithm".into()));
    }
    if plan.repetitions == 0 {
        return Err(BenchError::Plan("repetitions must be at least 1".into()));
    }
    let budgets: Vec<usize> = plan.budgets.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if budgets.is_empty() || budgets[0] == 0 {
        return Err(BenchError::Plan("budgets must be a non-empty list of positive integers".into()));
    }
    let mut labels = BTreeSet::new();
    for t in &plan.algorithms {
        if t.algorithm.is_external() {
            return Err(OptimError::External(t.algorithm).into());
        }
        if !labels.insert(t.name()) {
            return Err(BenchError::Plan(format!("algorithm label `{}` appears twice", t.name())));
        }
    }
    let mut ids = BTreeSet::new();
    for c in caches {
        c.require_complete().and_then(|_| c.f_opt()).map_err(|source| BenchError::Cache { cache: c.id(), source })?;
        if !ids.insert(c.id()) {
            return Err(BenchError::Plan(format!("cache `{}` appears twice", c.id())));
        }
    }
    Ok(budgets)
}

/// Runs every cell of the plan on the current thread pool.
///
/// Records come back ordered by cache, algorithm, budget and repetition,
/// independent of scheduling.
pub fn run_experiment(
    plan: &ExperimentPlan,
    caches: &[SearchSpaceCache],
    defaults: &DefaultsTable,
) -> Result<Vec<RunRecord>, BenchError> {
    let budgets = validate(plan, caches)?;
    let mut gaps = Vec::new();
    let mut units = Vec::new();
    for (ti, template) in plan.algorithms.iter().enumerate() {
        let groups = budget_groups(template, defaults, &budgets, !plan.independent_budgets, &mut gaps)?;
        for ci in 0..caches.len() {
            for (config, group) in &groups {
                let split: Vec<Vec<usize>> =
                    if plan.independent_budgets { group.iter().map(|&b| vec![b]).collect() } else { vec![group.clone()] };
                for budgets in split {
                    for rep in 0..plan.repetitions {
                        units.push(Unit { cache: ci, template: ti, budgets: budgets.clone(), rep, config: config.clone() });
                    }
                }
            }
        }
    }
    if !gaps.is_empty() {
        return Err(BenchError::MissingDefaults(gaps));
    }

    let f_opts: Vec<f64> = caches.iter().map(|c| c.f_opt().expect("validated")).collect();
    let results: Vec<Vec<((usize, usize, usize, usize), RunRecord)>> = units
        .par_iter()
        .map(|u| {
            let cache = &caches[u.cache];
            let longest = *u.budgets.last().expect("non-empty group");
            let seed = plan.run_seed(u.rep, longest);
            let run = run_config(&u.config, seed, cache, plan.mode, longest)?;
            u.budgets
                .iter()
                .map(|&b| {
                    let (config, best) = run.best_within(b).ok_or(OptimError::ZeroBudget)?;
                    let mean_fitness = cache.fitness_of(config).map_err(|source| BenchError::Cache { cache: cache.id(), source })?;
                    let record = RunRecord {
                        cache: cache.id(),
                        algorithm: plan.algorithms[u.template].name(),
                        budget: b,
                        rep: u.rep,
                        seed,
                        best_fitness: best,
                        fraction: f_opts[u.cache] / mean_fitness,
                        evals_used: run.evals_within(b),
                    };
                    Ok(((u.cache, u.template, b, u.rep), record))
                })
                .collect()
        })
        .collect::<Result<_, BenchError>>()?;
    let mut keyed: Vec<_> = results.into_iter().flatten().collect();
    keyed.sort_by_key(|(k, _)| *k);
    Ok(keyed.into_iter().map(|(_, r)| r).collect())
}

/// [`run_experiment`] on a dedicated pool of `workers` threads.
pub fn run_experiment_with_workers(
    plan: &ExperimentPlan,
    caches: &[SearchSpaceCache],
    defaults: &DefaultsTable,
    workers: usize,
) -> Result<Vec<RunRecord>, BenchError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| BenchError::Plan(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_experiment(plan, caches, defaults))
}

/// One JSON object per line.
pub fn write_records<W: Write>(records: &[RunRecord], mut out: W) -> Result<(), BenchError> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records<R: BufRead>(input: R) -> Result<Vec<RunRecord>, BenchError> {
    let mut records = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line).map_err(|e| BenchError::Trace { line: i as u64 + 1, message: e.to_string() })?;
        records.push(r);
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub budget: usize,
    pub runs: usize,
    /// Mean number of charged evaluations actually used.
    pub mean_evals: f64,
    /// Mean fraction of optimum over the runs.
    pub fraction: f64,
    /// Half-width of the 95% normal-approximation confidence interval.
    pub ci95: f64,
}

/// Mean fraction of optimum per budget for one (cache, algorithm).
pub fn fraction_curve(records: &[RunRecord], cache: &str, algorithm: &str) -> Vec<CurvePoint> {
    let budgets: BTreeSet<usize> =
        records.iter().filter(|r| r.cache == cache && r.algorithm == algorithm).map(|r| r.budget).collect();
    budgets
        .into_iter()
        .map(|b| {
            let runs: Vec<&RunRecord> =
                records.iter().filter(|r| r.cache == cache && r.algorithm == algorithm && r.budget == b).collect();
            let fractions: Vec<f64> = runs.iter().map(|r| r.fraction).collect();
            let n = fractions.len();
            let ci95 = if n > 1 { 1.96 * (variance(&fractions) / n as f64).sqrt() } else { 0.0 };
            CurvePoint {
                budget: b,
                runs: n,
                mean_evals: runs.iter().map(|r| r.evals_used as f64).sum::<f64>() / n as f64,
                fraction: mean(&fractions),
                ci95,
            }
        })
        .collect()
}
