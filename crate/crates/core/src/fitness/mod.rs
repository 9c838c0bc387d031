//! Cache-backed fitness: search-space caches, their file formats, budgeted
//! evaluation and synthetic cache generators.

mod eval;
mod generate;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value as Json};
use thiserror::Error;

use crate::space::{Configuration, ParameterSpace, SpaceError};

pub use eval::{EvalError, Evaluator, FitnessMode, OptimizerRun, StopReason, TraceEntry};
pub use generate::{generate_nk_landscape, generate_synthetic_kernel_space, RidgeProfile};

/// Fitness assigned to configurations that failed to compile or run.
pub const FAIL_FITNESS: f64 = 1.0e10;

#[derive(Debug, Error)]
pub enum FitnessError {
    #[error("cache has no feasible (non-failing) configuration")]
    NoFeasiblePoint,
    #[error("fitness {fitness} is below the optimum {optimum}")]
    BelowOptimum { fitness: f64, optimum: f64 },
    #[error("invalid generator parameters: {0}")]
    Parameter(String),
    #[error("cache is partial: {missing} of {size} configurations have no entry")]
    Partial { missing: usize, size: usize },
    #[error("configuration `{key}` appears more than once in the cache")]
    DuplicateKey { key: String },
    #[error("malformed cache file: {0}")]
    Format(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Measurements for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    /// Individual runtime samples (ms). Empty for failed configurations.
    pub times: Vec<f64>,
    /// Mean runtime (ms); `FAIL_FITNESS` when `ok` is false.
    pub mean: f64,
    pub ok: bool,
}

impl Entry {
    pub fn from_times(times: Vec<f64>) -> Self {
        assert!(!times.is_empty(), "an ok entry needs at least one sample");
        let mean = times.iter().sum::<f64>() / times.len() as f64;
        Entry { times, mean, ok: true }
    }

    pub fn failed() -> Self {
        Entry { times: Vec::new(), mean: FAIL_FITNESS, ok: false }
    }

    pub fn fitness(&self) -> f64 {
        if self.ok {
            self.mean
        } else {
            FAIL_FITNESS
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheMetadata {
    pub kernel: String,
    pub device: String,
    #[serde(default = "default_units")]
    pub units: String,
}

fn default_units() -> String {
    "ms".to_string()
}

impl Default for CacheMetadata {
    fn default() -> Self {
        CacheMetadata { kernel: "unnamed".into(), device: "unknown".into(), units: default_units() }
    }
}

/// Every measured configuration of one (kernel, device) search space.
///
/// Entries are stored by linear index; a missing entry makes the cache
/// partial. Immutable once built.
#[derive(Debug, Clone)]
pub struct SearchSpaceCache {
    space: ParameterSpace,
    metadata: CacheMetadata,
    entries: Vec<Option<Entry>>,
    fitness: Vec<f64>,
    missing: usize,
}

impl SearchSpaceCache {
    pub fn new(space: ParameterSpace, metadata: CacheMetadata, entries: Vec<Option<Entry>>) -> Self {
        assert_eq!(entries.len(), space.size(), "one entry slot per configuration");
        let fitness = entries.iter().map(|e| e.as_ref().map_or(f64::NAN, Entry::fitness)).collect();
        let missing = entries.iter().filter(|e| e.is_none()).count();
        SearchSpaceCache { space, metadata, entries, fitness, missing }
    }

    /// Complete cache whose entry for each configuration comes from `f`.
    pub fn from_fn(space: ParameterSpace, metadata: CacheMetadata, mut f: impl FnMut(&Configuration) -> Entry) -> Self {
        let entries = space.enumerate().map(|x| Some(f(&x))).collect();
        SearchSpaceCache::new(space, metadata, entries)
    }

    /// Complete, all-ok cache with single-sample entries, handy for tests.
    pub fn from_fitness(space: ParameterSpace, values: &[f64]) -> Self {
        assert_eq!(values.len(), space.size());
        let entries = values
            .iter()
            .map(|&v| Some(if v >= FAIL_FITNESS { Entry::failed() } else { Entry::from_times(vec![v]) }))
            .collect();
        SearchSpaceCache::new(space, CacheMetadata::default(), entries)
    }

    pub fn space(&self) -> &ParameterSpace {
        &self.space
    }

    pub fn metadata(&self) -> &CacheMetadata {
        &self.metadata
    }

    pub fn with_metadata(mut self, metadata: CacheMetadata) -> Self {
        self.metadata = metadata;
        self
    }

    /// `kernel/device` label used in result files.
    pub fn id(&self) -> String {
        format!("{}/{}", self.metadata.kernel, self.metadata.device)
    }

    pub fn entry(&self, linear: usize) -> Option<&Entry> {
        self.entries[linear].as_ref()
    }

    pub fn entries(&self) -> &[Option<Entry>] {
        &self.entries
    }

    /// Deterministic fitness by linear index; NaN for missing entries.
    pub fn fitness(&self, linear: usize) -> f64 {
        self.fitness[linear]
    }

    pub fn fitness_values(&self) -> &[f64] {
        &self.fitness
    }

    pub fn fitness_of(&self, x: &Configuration) -> Result<f64, FitnessError> {
        let lin = self.space.try_linear_index(x)?;
        self.entries[lin]
            .as_ref()
            .map(Entry::fitness)
            .ok_or_else(|| FitnessError::Format(format!("no entry for {}", self.space.key(x))))
    }

    pub fn is_complete(&self) -> bool {
        self.missing == 0
    }

    pub fn require_complete(&self) -> Result<(), FitnessError> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(FitnessError::Partial { missing: self.missing, size: self.space.size() })
        }
    }

    pub fn missing_count(&self) -> usize {
        self.missing
    }

    pub fn fail_count(&self) -> usize {
        self.entries.iter().flatten().filter(|e| !e.ok).count()
    }

    pub fn ok_count(&self) -> usize {
        self.entries.iter().flatten().filter(|e| e.ok).count()
    }

    /// Linear index and fitness of the best ok entry (lowest index on ties).
    pub fn optimum(&self) -> Result<(usize, f64), FitnessError> {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.as_ref().filter(|e| e.ok).map(|e| (i, e.mean)))
            .fold(None, |best: Option<(usize, f64)>, (i, f)| match best {
                Some((_, bf)) if bf <= f => best,
                _ => Some((i, f)),
            })
            .ok_or(FitnessError::NoFeasiblePoint)
    }

    pub fn f_opt(&self) -> Result<f64, FitnessError> {
        self.optimum().map(|(_, f)| f)
    }

    /// `f_opt / f`: 1.0 at the optimum, tending to 0 for poor fitness.
    pub fn fraction_of_optimum(&self, f: f64) -> Result<f64, FitnessError> {
        fraction_of_optimum(self.f_opt()?, f)
    }

    pub fn to_json(&self) -> Json {
        let mut cache = Map::new();
        for (lin, e) in self.entries.iter().enumerate() {
            let Some(e) = e else { continue };
            let key = self.space.key(&self.space.configuration(lin));
            let value = if e.ok {
                json!({ "times": e.times, "time": e.mean })
            } else {
                json!({ "times": null, "time": null })
            };
            cache.insert(key, value);
        }
        json!({
            "metadata": self.metadata,
            "space": self.space,
            "cache": cache,
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("cache serializes")
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<(), FitnessError> {
        fs::write(path, self.to_json_string())?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self, FitnessError> {
        let text = fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// Parses either the native schema or a Kernel Tuner style cache file.
    pub fn from_json_str(text: &str) -> Result<Self, FitnessError> {
        let doc: Json = serde_json::from_str(text)?;
        Self::from_json(&doc)
    }

    pub fn from_json(doc: &Json) -> Result<Self, FitnessError> {
        let obj = doc.as_object().ok_or_else(|| FitnessError::Format("top level must be an object".into()))?;
        let (space, metadata) = if let Some(space) = obj.get("space") {
            let space: ParameterSpace = serde_json::from_value(space.clone())?;
            let metadata = match obj.get("metadata") {
                Some(m) => serde_json::from_value(m.clone())?,
                None => CacheMetadata::default(),
            };
            (space, metadata)
        } else if obj.contains_key("tune_params") {
            kernel_tuner_header(obj)?
        } else {
            return Err(FitnessError::Format("expected a `space` or `tune_params` section".into()));
        };
        let cache = obj
            .get("cache")
            .and_then(Json::as_object)
            .ok_or_else(|| FitnessError::Format("missing `cache` object".into()))?;

        let parser = space.key_parser();
        let mut entries: Vec<Option<Entry>> = vec![None; space.size()];
        for (key, record) in cache {
            let x = parser.parse(key)?;
            let lin = space.linear_index(&x);
            if entries[lin].is_some() {
                return Err(FitnessError::DuplicateKey { key: key.clone() });
            }
            entries[lin] = Some(parse_record(key, record)?);
        }
        Ok(SearchSpaceCache::new(space, metadata, entries))
    }
}

pub fn fraction_of_optimum(f_opt: f64, f: f64) -> Result<f64, FitnessError> {
    if f.is_nan() || f < f_opt * (1.0 - 1e-12) {
        return Err(FitnessError::BelowOptimum { fitness: f, optimum: f_opt });
    }
    Ok(f_opt / f)
}

fn kernel_tuner_header(obj: &Map<String, Json>) -> Result<(ParameterSpace, CacheMetadata), FitnessError> {
    let tune_params = obj["tune_params"]
        .as_object()
        .ok_or_else(|| FitnessError::Format("`tune_params` must be an object".into()))?;
    let order: Vec<String> = match obj.get("tune_params_keys") {
        Some(keys) => serde_json::from_value(keys.clone())?,
        None => tune_params.keys().cloned().collect(),
    };
    let params = order
        .iter()
        .map(|name| {
            let values = tune_params
                .get(name)
                .ok_or_else(|| FitnessError::Format(format!("tune parameter `{name}` has no value list")))?;
            Ok(crate::space::Parameter { name: name.clone(), values: serde_json::from_value(values.clone())? })
        })
        .collect::<Result<Vec<_>, FitnessError>>()?;
    let text = |k: &str| obj.get(k).and_then(Json::as_str).map(str::to_string);
    let metadata = CacheMetadata {
        kernel: text("kernel_name").unwrap_or_else(|| "unnamed".into()),
        device: text("device_name").unwrap_or_else(|| "unknown".into()),
        units: "ms".into(),
    };
    Ok((ParameterSpace::new(params)?, metadata))
}

fn parse_record(key: &str, record: &Json) -> Result<Entry, FitnessError> {
    let bad = |msg: &str| FitnessError::Format(format!("entry `{key}`: {msg}"));
    let times = match record.get("times") {
        None | Some(Json::Null) => None,
        Some(Json::Array(items)) => Some(
            items
                .iter()
                .map(|t| t.as_f64().ok_or_else(|| bad("non-numeric sample in `times`")))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        Some(_) => return Err(bad("`times` must be a list or null")),
    };
    let time = match record.get("time") {
        None | Some(Json::Null) => None,
        Some(Json::Number(n)) => n.as_f64(),
        // error strings such as "CompilationFailedConfig"
        Some(Json::String(_)) => None,
        Some(_) => return Err(bad("`time` must be a number, string or null")),
    };
    let failed = |t: f64| !t.is_finite() || t >= FAIL_FITNESS;
    match (time, times) {
        (None, _) => Ok(Entry::failed()),
        (Some(t), _) if failed(t) => Ok(Entry::failed()),
        (Some(t), None) => Ok(Entry::from_times(vec![t])),
        (Some(t), Some(ts)) if ts.is_empty() => Ok(Entry::from_times(vec![t])),
        (Some(t), Some(ts)) => {
            let e = Entry::from_times(ts);
            if (e.mean - t).abs() > 1e-9 * t.abs() {
                log::debug!("entry `{key}`: stored mean {t} replaced by sample average {}", e.mean);
            }
            Ok(e)
        }
    }
}
