//! Hyperparameter schemas: JSON maps validated into typed configurations.

use std::collections::BTreeSet;

use serde_json::{Map, Value as Json};

use super::climb::{ClimbSettings, ClimberKind};
use super::continuous::{
    BasinHopping, DeStrategy, DifferentialEvolution, DualAnnealing, LocalMinimizer, ParticleSwarm,
};
use super::discrete::{IteratedLocalSearch, MultiStartLocalSearch, RandomSampling, SimulatedAnnealing, TabuSearch};
use super::population::{GeneticAlgorithm, GeneticLocalSearch};
use super::{Algorithm, OptimError, Optimizer};
use crate::space::NeighbourhoodKind;

/// Raw hyperparameters as they appear in JSON (`name → value`).
pub type Hyperparameters = Map<String, Json>;

/// A validated algorithm configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum AlgorithmConfig {
    RandomSampling(RandomSampling),
    Mls(MultiStartLocalSearch),
    Ils(IteratedLocalSearch),
    Tabu(TabuSearch),
    SimulatedAnnealing(SimulatedAnnealing),
    Gls(GeneticLocalSearch),
    Ga(GeneticAlgorithm),
    BasinHopping(BasinHopping),
    DualAnnealing(DualAnnealing),
    Pso(ParticleSwarm),
    DifferentialEvolution(DifferentialEvolution),
}

struct Reader<'a> {
    algorithm: Algorithm,
    map: &'a Hyperparameters,
    seen: BTreeSet<&'static str>,
}

impl<'a> Reader<'a> {
    fn new(algorithm: Algorithm, map: &'a Hyperparameters) -> Self {
        Reader { algorithm, map, seen: BTreeSet::new() }
    }

    fn err(&self, message: impl Into<String>) -> OptimError {
        OptimError::Config { algorithm: self.algorithm, message: message.into() }
    }

    fn get(&mut self, key: &'static str) -> Option<&'a Json> {
        self.seen.insert(key);
        self.map.get(key).filter(|v| !v.is_null())
    }

    fn f64(&mut self, key: &'static str, default: f64) -> Result<f64, OptimError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.as_f64().ok_or_else(|| self.err(format!("`{key}` must be a number"))),
        }
    }

    fn fraction(&mut self, key: &'static str, default: f64, allow_zero: bool) -> Result<f64, OptimError> {
        let v = self.f64(key, default)?;
        let ok = if allow_zero { (0.0..=1.0).contains(&v) } else { v > 0.0 && v <= 1.0 };
        if ok {
            Ok(v)
        } else {
            let range = if allow_zero { "[0, 1]" } else { "(0, 1]" };
            Err(self.err(format!("`{key}` must lie in {range}, got {v}")))
        }
    }

    fn positive(&mut self, key: &'static str, default: usize) -> Result<usize, OptimError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => match v.as_u64() {
                Some(n) if n >= 1 => Ok(n as usize),
                _ => Err(self.err(format!("`{key}` must be a positive integer"))),
            },
        }
    }

    fn bool(&mut self, key: &'static str, default: bool) -> Result<bool, OptimError> {
        match self.get(key) {
            None => Ok(default),
            Some(Json::Bool(b)) => Ok(*b),
            Some(Json::String(s)) if s.eq_ignore_ascii_case("true") => Ok(true),
            Some(Json::String(s)) if s.eq_ignore_ascii_case("false") => Ok(false),
            Some(_) => Err(self.err(format!("`{key}` must be a boolean"))),
        }
    }

    fn text(&mut self, key: &'static str, default: &str) -> Result<String, OptimError> {
        match self.get(key) {
            None => Ok(default.to_string()),
            Some(Json::String(s)) => Ok(s.clone()),
            Some(_) => Err(self.err(format!("`{key}` must be a string"))),
        }
    }

    fn neighbourhood(&mut self) -> Result<NeighbourhoodKind, OptimError> {
        let s = self.text("neighbourhood", "hamming")?;
        s.parse().map_err(|e: String| self.err(e))
    }

    fn climber(&mut self, default: ClimberKind) -> Result<ClimberKind, OptimError> {
        let s = self.text("hill_climber", default.name())?;
        s.parse().map_err(|e: String| self.err(e))
    }

    fn finish(self) -> Result<(), OptimError> {
        let unknown: Vec<&String> = self.map.keys().filter(|k| !self.seen.contains(k.as_str())).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(self.err(format!("unknown hyperparameter(s) {unknown:?}")))
        }
    }
}

impl AlgorithmConfig {
    /// Validates `hyperparameters` against the algorithm's schema. Missing
    /// keys take documented defaults; unknown keys are rejected.
    pub fn parse(algorithm: Algorithm, hyperparameters: &Hyperparameters) -> Result<Self, OptimError> {
        let mut r = Reader::new(algorithm, hyperparameters);
        let config = match algorithm {
            Algorithm::RandomSampling => AlgorithmConfig::RandomSampling(RandomSampling),
            Algorithm::FirstMls => AlgorithmConfig::Mls(MultiStartLocalSearch {
                climber: ClimbSettings {
                    kind: ClimberKind::RandomFirst,
                    neighbourhood: r.neighbourhood()?,
                    restart: r.bool("restart", true)?,
                },
            }),
            Algorithm::BestMls => AlgorithmConfig::Mls(MultiStartLocalSearch {
                climber: ClimbSettings::best(r.neighbourhood()?),
            }),
            Algorithm::FirstIls | Algorithm::BestIls => {
                let neighbourhood = r.neighbourhood()?;
                let climber = if algorithm == Algorithm::FirstIls {
                    ClimbSettings { kind: ClimberKind::RandomFirst, neighbourhood, restart: r.bool("restart", false)? }
                } else {
                    ClimbSettings::best(neighbourhood)
                };
                AlgorithmConfig::Ils(IteratedLocalSearch {
                    climber,
                    perturbation: r.fraction("perturbation", 1.0, false)?,
                    exit_after_no_improve: r.positive("exit", 25)?,
                })
            }
            Algorithm::FirstTabu | Algorithm::BestTabu => AlgorithmConfig::Tabu(TabuSearch {
                first_improvement: algorithm == Algorithm::FirstTabu,
                tabu_size: r.positive("tabu_size", 2000)?,
                neighbourhood: r.neighbourhood()?,
            }),
            Algorithm::SimulatedAnnealing => {
                let kind = r.climber(ClimberKind::RandomFirst)?;
                let sa = SimulatedAnnealing {
                    explore: r.fraction("explore", 1.0, false)?,
                    climber: ClimbSettings { kind, neighbourhood: r.neighbourhood()?, restart: r.bool("restart", true)? },
                    t0: r.f64("t0", 1.0)?,
                    alpha: r.f64("alpha", 0.95)?,
                };
                if !(sa.t0 > 0.0) || !(sa.alpha > 0.0 && sa.alpha <= 1.0) {
                    return Err(r.err("need t0 > 0 and alpha in (0, 1]"));
                }
                AlgorithmConfig::SimulatedAnnealing(sa)
            }
            Algorithm::Gls => {
                let kind = r.climber(ClimberKind::RandomFirst)?;
                let climber = ClimbSettings { kind, neighbourhood: r.neighbourhood()?, restart: r.bool("restart", true)? };
                AlgorithmConfig::Gls(GeneticLocalSearch {
                    climber,
                    pop_size: r.positive("pop_size", 16)?,
                    reproduction: parse_with(&mut r, "reproductor", "uniform")?,
                    selection: parse_with(&mut r, "selector", "RTS")?,
                })
            }
            Algorithm::Ga => AlgorithmConfig::Ga(GeneticAlgorithm {
                mutation: r.fraction("mutation", 0.02, true)?,
                pop_size: r.positive("pop_size", 40)?,
                reproduction: parse_with(&mut r, "reproductor", "1point")?,
                selection: parse_with(&mut r, "selector", "tour8")?,
            }),
            Algorithm::BasinHopping => {
                let bh = BasinHopping {
                    minimizer: LocalMinimizer::from_method_name(&r.text("method", "Powell")?),
                    temperature: r.f64("temperature", 0.1)?,
                    step: r.f64("step", 0.1)?,
                };
                if bh.temperature < 0.0 || !(bh.step > 0.0) {
                    return Err(r.err("temperature must be >= 0 and step > 0"));
                }
                AlgorithmConfig::BasinHopping(bh)
            }
            Algorithm::DualAnnealing => {
                let mut da = DualAnnealing::new(LocalMinimizer::from_method_name(&r.text("method", "Powell")?));
                da.visit = r.f64("visit", da.visit)?;
                da.accept = r.f64("accept", da.accept)?;
                da.initial_temp = r.f64("initial_temp", da.initial_temp)?;
                if !(da.visit > 1.0 && da.visit < 3.0) || !(da.initial_temp > 0.0) {
                    return Err(r.err("need 1 < visit < 3 and initial_temp > 0"));
                }
                AlgorithmConfig::DualAnnealing(da)
            }
            Algorithm::Pso => {
                let particles = r.positive("particles", 20)?;
                AlgorithmConfig::Pso(ParticleSwarm::new(particles, r.positive("neighbours", 10)?))
            }
            Algorithm::DifferentialEvolution => {
                let pop_size = r.positive("pop_size", 4)?;
                let strategy: DeStrategy = parse_with(&mut r, "method", "best1bin")?;
                let recombination = r.fraction("recombination", 0.7, true)?;
                let mutation = match r.get("mutation") {
                    None => (0.2, 0.7),
                    Some(Json::Number(n)) => {
                        let f = n.as_f64().unwrap_or(0.5);
                        (f, f)
                    }
                    Some(Json::Array(a)) if a.len() == 2 && a.iter().all(Json::is_number) => {
                        (a[0].as_f64().unwrap(), a[1].as_f64().unwrap())
                    }
                    Some(_) => return Err(r.err("`mutation` must be a number or a [low, high] pair")),
                };
                if !(0.0..=2.0).contains(&mutation.0) || mutation.1 < mutation.0 || mutation.1 > 2.0 {
                    return Err(r.err("`mutation` range must satisfy 0 <= low <= high <= 2"));
                }
                AlgorithmConfig::DifferentialEvolution(DifferentialEvolution { pop_size, strategy, recombination, mutation })
            }
            Algorithm::Smac | Algorithm::Irace => return Err(OptimError::External(algorithm)),
        };
        r.finish()?;
        Ok(config)
    }

    pub fn build(&self) -> &dyn Optimizer {
        match self {
            AlgorithmConfig::RandomSampling(a) => a,
            AlgorithmConfig::Mls(a) => a,
            AlgorithmConfig::Ils(a) => a,
            AlgorithmConfig::Tabu(a) => a,
            AlgorithmConfig::SimulatedAnnealing(a) => a,
            AlgorithmConfig::Gls(a) => a,
            AlgorithmConfig::Ga(a) => a,
            AlgorithmConfig::BasinHopping(a) => a,
            AlgorithmConfig::DualAnnealing(a) => a,
            AlgorithmConfig::Pso(a) => a,
            AlgorithmConfig::DifferentialEvolution(a) => a,
        }
    }
}

fn parse_with<T: std::str::FromStr<Err = String>>(r: &mut Reader<'_>, key: &'static str, default: &str) -> Result<T, OptimError> {
    let s = r.text(key, default)?;
    s.parse().map_err(|e: String| r.err(format!("`{key}`: {e}")))
}
