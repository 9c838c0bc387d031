//! Bundled search-space definitions for the convolution, GEMM and
//! point-in-polygon kernels, and the per-budget default hyperparameters.

use crate::space::ParameterSpace;

/// (name, space JSON, typical fraction of failing configurations)
const SPACES: &[(&str, &str, f64)] = &[
    ("convolution", include_str!("../fixtures/convolution.json"), 12656.0 / 18432.0),
    ("convolution_mi50", include_str!("../fixtures/convolution_mi50.json"), 450.0 / 864.0),
    ("gemm", include_str!("../fixtures/gemm.json"), 64988.0 / 82944.0),
    ("pnpoly", include_str!("../fixtures/pnpoly.json"), 335.0 / 8184.0),
];

/// Default hyperparameters keyed by algorithm name, then budget.
pub const DEFAULTS_JSON: &str = include_str!("../fixtures/defaults.json");

pub fn names() -> impl Iterator<Item = &'static str> {
    SPACES.iter().map(|(n, _, _)| *n)
}

pub fn space(name: &str) -> Option<ParameterSpace> {
    SPACES
        .iter()
        .find(|(n, _, _)| *n == name)
        .map(|(_, json, _)| ParameterSpace::from_json(json).expect("bundled fixture parses"))
}

/// Average share of failing configurations reported for the fixture's kernel.
pub fn typical_fail_fraction(name: &str) -> Option<f64> {
    SPACES.iter().find(|(n, _, _)| *n == name).map(|(_, _, f)| *f)
}
