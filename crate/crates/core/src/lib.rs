//! Black-box auto-tuning over finite discrete search spaces.
//!
//! * [`space`]: parameter spaces, configurations, neighbourhoods.
//! * [`fitness`]: search-space caches, budgeted evaluation, synthetic caches.
//! * [`optim`]: the discrete and continuous optimizers behind one contract.
//! * [`landscape`]: minima census, fitness flow graphs, PageRank and the
//!   proportion-of-centrality difficulty metric.
//! * [`bench`]: experiment runner, t-test competitions and hyperparameter
//!   selection.

pub mod bench;
pub mod fitness;
pub mod fixtures;
pub mod landscape;
pub mod optim;
pub mod space;

pub use fitness::{Evaluator, FitnessMode, OptimizerRun, SearchSpaceCache, FAIL_FITNESS};
pub use space::{Configuration, NeighbourhoodKind, ParameterSpace};
