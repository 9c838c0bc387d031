//! Finite Cartesian search spaces.
//!
//! A [`ParameterSpace`] is an ordered list of named parameters, each with an
//! ordered list of admissible values. A point in the space is a
//! [`Configuration`]: one index per parameter into its value list. Points are
//! also addressable by a *linear index* (mixed radix, last parameter varying
//! fastest), which is the order [`ParameterSpace::enumerate`] yields and the
//! order every cache stores its entries in.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("search space has no parameters")]
    NoParameters,
    #[error("parameter `{0}` has an empty value list")]
    EmptyValues(String),
    #[error("parameter `{name}` lists value {value} more than once")]
    DuplicateValue { name: String, value: String },
    #[error("parameter name `{0}` is used more than once")]
    DuplicateName(String),
    #[error("parameter `{0}` contains a non-finite number")]
    NonFinite(String),
    #[error("search space size overflows usize")]
    TooLarge,
    #[error("configuration has {got} indices but the space has {expected} parameters")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("index {index} out of range for parameter `{name}` with {len} values")]
    IndexOutOfRange { name: String, index: usize, len: usize },
    #[error("linear index {index} out of range for a space of {size} points")]
    LinearOutOfRange { index: usize, size: usize },
    #[error("value `{value}` is not allowed for parameter `{name}`")]
    UnknownValue { name: String, value: String },
    #[error("bitstring has {got} bits, expected {expected}")]
    BitLength { expected: usize, got: usize },
    #[error("segment {segment} has {set_bits} set bits")]
    MalformedSegment { segment: usize, set_bits: usize },
}

/// A scalar parameter value as it appears in space and cache files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Value::Int(v) => Some(v as f64),
            Value::Float(v) => Some(v),
            _ => None,
        }
    }

    fn is_numeric(&self) -> bool {
        matches!(self, Value::Int(_) | Value::Float(_))
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Text(a), Value::Text(b)) => a == b,
            (a, b) => match (a.as_f64(), b.as_f64()) {
                (Some(x), Some(y)) => x == y,
                _ => false,
            },
        }
    }
}

/// Formats values the way cache keys spell them (Python `str` conventions,
/// so keys written by Kernel Tuner match).
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(true) => f.write_str("True"),
            Value::Bool(false) => f.write_str("False"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Float(v) => write!(f, "{v:?}"),
            Value::Text(s) => f.write_str(s),
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub values: Vec<Value>,
}

impl Parameter {
    pub fn new(name: impl Into<String>, values: impl IntoIterator<Item = impl Into<Value>>) -> Self {
        Parameter { name: name.into(), values: values.into_iter().map(Into::into).collect() }
    }
}

/// Which points count as neighbours of a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeighbourhoodKind {
    /// Every point that differs in exactly one parameter.
    Hamming,
    /// Hamming neighbours whose differing value sits next to the current one
    /// in that parameter's ordered list.
    Adjacent,
}

impl fmt::Display for NeighbourhoodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NeighbourhoodKind::Hamming => "hamming",
            NeighbourhoodKind::Adjacent => "adjacent",
        })
    }
}

impl FromStr for NeighbourhoodKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hamming" => Ok(NeighbourhoodKind::Hamming),
            "adjacent" => Ok(NeighbourhoodKind::Adjacent),
            other => Err(format!("unknown neighbourhood `{other}` (expected hamming or adjacent)")),
        }
    }
}

/// One point of a [`ParameterSpace`], stored as indices into the value lists.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration(Vec<usize>);

impl Configuration {
    pub fn new(indices: Vec<usize>) -> Self {
        Configuration(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn indices_mut(&mut self) -> &mut [usize] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of parameters in which the two configurations differ.
    pub fn hamming_distance(&self, other: &Configuration) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }
}

impl From<Vec<usize>> for Configuration {
    fn from(v: Vec<usize>) -> Self {
        Configuration(v)
    }
}

/// The Cartesian product of finite, ordered value lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceFile", into = "SpaceFile")]
pub struct ParameterSpace {
    params: Vec<Parameter>,
    strides: Vec<usize>,
    size: usize,
}

#[derive(Serialize, Deserialize)]
struct SpaceFile {
    parameters: Vec<Parameter>,
}

impl TryFrom<SpaceFile> for ParameterSpace {
    type Error = SpaceError;

    fn try_from(file: SpaceFile) -> Result<Self, Self::Error> {
        ParameterSpace::new(file.parameters)
    }
}

impl From<ParameterSpace> for SpaceFile {
    fn from(space: ParameterSpace) -> Self {
        SpaceFile { parameters: space.params }
    }
}

impl ParameterSpace {
    /// Validates the parameter list. Lists that are entirely numeric are
    /// sorted ascending; categorical lists keep their given order.
    pub fn new(mut params: Vec<Parameter>) -> Result<Self, SpaceError> {
        if params.is_empty() {
            return Err(SpaceError::NoParameters);
        }
        let mut names = std::collections::HashSet::new();
        for p in &mut params {
            if !names.insert(p.name.clone()) {
                return Err(SpaceError::DuplicateName(p.name.clone()));
            }
            if p.values.is_empty() {
                return Err(SpaceError::EmptyValues(p.name.clone()));
            }
            if p.values.iter().any(|v| matches!(v.as_f64(), Some(x) if !x.is_finite())) {
                return Err(SpaceError::NonFinite(p.name.clone()));
            }
            if p.values.iter().all(Value::is_numeric) {
                p.values.sort_by(|a, b| a.as_f64().unwrap().total_cmp(&b.as_f64().unwrap()));
            }
            for (i, v) in p.values.iter().enumerate() {
                if p.values[..i].contains(v) {
                    return Err(SpaceError::DuplicateValue { name: p.name.clone(), value: v.to_string() });
                }
            }
        }
        let mut strides = vec![0; params.len()];
        let mut size: usize = 1;
        for (i, p) in params.iter().enumerate().rev() {
            strides[i] = size;
            size = size.checked_mul(p.values.len()).ok_or(SpaceError::TooLarge)?;
        }
        Ok(ParameterSpace { params, strides, size })
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn params(&self) -> &[Parameter] {
        &self.params
    }

    /// Number of parameters.
    pub fn dims(&self) -> usize {
        self.params.len()
    }

    /// Number of values of parameter `dim`.
    pub fn radix(&self, dim: usize) -> usize {
        self.params[dim].values.len()
    }

    pub fn radices(&self) -> Vec<usize> {
        self.params.iter().map(|p| p.values.len()).collect()
    }

    /// Total number of configurations.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn validate(&self, x: &Configuration) -> Result<(), SpaceError> {
        if x.len() != self.dims() {
            return Err(SpaceError::DimensionMismatch { expected: self.dims(), got: x.len() });
        }
        for (p, &i) in self.params.iter().zip(x.indices()) {
            if i >= p.values.len() {
                return Err(SpaceError::IndexOutOfRange { name: p.name.clone(), index: i, len: p.values.len() });
            }
        }
        Ok(())
    }

    /// Linear index of a configuration. Panics in debug builds on invalid input.
    pub fn linear_index(&self, x: &Configuration) -> usize {
        debug_assert!(self.validate(x).is_ok());
        x.indices().iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn try_linear_index(&self, x: &Configuration) -> Result<usize, SpaceError> {
        self.validate(x)?;
        Ok(self.linear_index(x))
    }

    pub fn configuration(&self, linear: usize) -> Configuration {
        debug_assert!(linear < self.size);
        let indices = self
            .params
            .iter()
            .zip(&self.strides)
            .map(|(p, s)| (linear / s) % p.values.len())
            .collect();
        Configuration(indices)
    }

    pub fn try_configuration(&self, linear: usize) -> Result<Configuration, SpaceError> {
        if linear >= self.size {
            return Err(SpaceError::LinearOutOfRange { index: linear, size: self.size });
        }
        Ok(self.configuration(linear))
    }

    /// Every configuration exactly once, in lexicographic index order.
    pub fn enumerate(&self) -> impl Iterator<Item = Configuration> + '_ {
        (0..self.size).map(move |i| self.configuration(i))
    }

    pub fn to_values(&self, x: &Configuration) -> Vec<Value> {
        self.params.iter().zip(x.indices()).map(|(p, &i)| p.values[i].clone()).collect()
    }

    pub fn from_values(&self, values: &[Value]) -> Result<Configuration, SpaceError> {
        if values.len() != self.dims() {
            return Err(SpaceError::DimensionMismatch { expected: self.dims(), got: values.len() });
        }
        self.params
            .iter()
            .zip(values)
            .map(|(p, v)| {
                p.values
                    .iter()
                    .position(|w| w == v)
                    .ok_or_else(|| SpaceError::UnknownValue { name: p.name.clone(), value: v.to_string() })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Configuration)
    }

    /// Comma-joined value string used as a cache key, e.g. `"16,2,1"`.
    pub fn key(&self, x: &Configuration) -> String {
        let mut out = String::new();
        for (d, (p, &i)) in self.params.iter().zip(x.indices()).enumerate() {
            if d > 0 {
                out.push(',');
            }
            out.push_str(&p.values[i].to_string());
        }
        out
    }

    /// Builds a parser for cache keys.
    pub fn key_parser(&self) -> KeyParser<'_> {
        let lookup = self
            .params
            .iter()
            .map(|p| p.values.iter().enumerate().map(|(i, v)| (v.to_string(), i)).collect())
            .collect();
        KeyParser { space: self, lookup }
    }

    /// Human-readable `name=value` listing.
    pub fn describe(&self, x: &Configuration) -> String {
        self.params
            .iter()
            .zip(x.indices())
            .map(|(p, &i)| format!("{}={}", p.name, p.values[i]))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn random_configuration<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        Configuration(self.params.iter().map(|p| rng.random_range(0..p.values.len())).collect())
    }

    /// Neighbours of `x`, ordered by ascending dimension then ascending index.
    pub fn neighbours(&self, x: &Configuration, kind: NeighbourhoodKind) -> Result<Vec<Configuration>, SpaceError> {
        self.validate(x)?;
        let mut out = Vec::new();
        self.for_each_neighbour(x, kind, |dim, idx| {
            let mut y = x.clone();
            y.0[dim] = idx;
            out.push(y);
        });
        Ok(out)
    }

    /// Calls `f(dim, new_index)` for every neighbour of `x` in canonical order.
    pub fn for_each_neighbour(&self, x: &Configuration, kind: NeighbourhoodKind, mut f: impl FnMut(usize, usize)) {
        for (dim, (p, &cur)) in self.params.iter().zip(x.indices()).enumerate() {
            let m = p.values.len();
            match kind {
                NeighbourhoodKind::Hamming => {
                    for idx in (0..m).filter(|&i| i != cur) {
                        f(dim, idx);
                    }
                }
                NeighbourhoodKind::Adjacent => {
                    if cur > 0 {
                        f(dim, cur - 1);
                    }
                    if cur + 1 < m {
                        f(dim, cur + 1);
                    }
                }
            }
        }
    }

    /// Linear indices of the neighbours of the point with linear index `linear`.
    pub fn neighbour_indices(&self, linear: usize, kind: NeighbourhoodKind) -> Vec<usize> {
        let x = self.configuration(linear);
        let mut out = Vec::new();
        self.for_each_neighbour(&x, kind, |dim, idx| {
            let stride = self.strides[dim];
            out.push(linear - x.0[dim] * stride + idx * stride);
        });
        out
    }

    /// Neighbour count of `x`; constant `Σ(|Sᵢ|−1)` for Hamming.
    pub fn neighbour_count(&self, x: &Configuration, kind: NeighbourhoodKind) -> usize {
        let mut n = 0;
        self.for_each_neighbour(x, kind, |_, _| n += 1);
        n
    }

    /// Total bit length of the one-hot encoding.
    pub fn bit_length(&self) -> usize {
        self.params.iter().map(|p| p.values.len()).sum()
    }

    /// One-hot encoding: one segment of `|Sᵢ|` bits per parameter.
    pub fn bitstring_encode(&self, x: &Configuration) -> Result<Vec<bool>, SpaceError> {
        self.validate(x)?;
        let mut bits = Vec::with_capacity(self.bit_length());
        for (p, &i) in self.params.iter().zip(x.indices()) {
            bits.extend((0..p.values.len()).map(|b| b == i));
        }
        Ok(bits)
    }

    pub fn bitstring_decode(&self, bits: &[bool]) -> Result<Configuration, SpaceError> {
        if bits.len() != self.bit_length() {
            return Err(SpaceError::BitLength { expected: self.bit_length(), got: bits.len() });
        }
        let mut indices = Vec::with_capacity(self.dims());
        let mut offset = 0;
        for (segment, p) in self.params.iter().enumerate() {
            let seg = &bits[offset..offset + p.values.len()];
            let set_bits = seg.iter().filter(|&&b| b).count();
            if set_bits != 1 {
                return Err(SpaceError::MalformedSegment { segment, set_bits });
            }
            indices.push(seg.iter().position(|&b| b).unwrap());
            offset += p.values.len();
        }
        Ok(Configuration(indices))
    }

    /// Renders a bitstring with `|` between segments, e.g. `01|100`.
    pub fn format_bits(&self, bits: &[bool]) -> String {
        let mut out = String::new();
        let mut offset = 0;
        for (d, p) in self.params.iter().enumerate() {
            if d > 0 {
                out.push('|');
            }
            for &b in bits.iter().skip(offset).take(p.values.len()) {
                out.push(if b { '1' } else { '0' });
            }
            offset += p.values.len();
        }
        out
    }

    /// Parses `01|100`-style text (separators optional).
    pub fn parse_bits(text: &str) -> Vec<bool> {
        text.chars().filter_map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        }).collect()
    }
}

/// Maps comma-joined value keys back to configurations.
pub struct KeyParser<'a> {
    space: &'a ParameterSpace,
    lookup: Vec<HashMap<String, usize>>,
}

impl KeyParser<'_> {
    pub fn parse(&self, key: &str) -> Result<Configuration, SpaceError> {
        let parts: Vec<&str> = key.split(',').map(str::trim).collect();
        if parts.len() != self.space.dims() {
            return Err(SpaceError::DimensionMismatch { expected: self.space.dims(), got: parts.len() });
        }
        let mut indices = Vec::with_capacity(parts.len());
        for ((part, map), p) in parts.iter().zip(&self.lookup).zip(self.space.params()) {
            let idx = match map.get(*part) {
                Some(&i) => Some(i),
                // "32" vs "32.0" and similar spellings
                None => part
                    .parse::<f64>()
                    .ok()
                    .and_then(|x| p.values.iter().position(|v| v.as_f64() == Some(x))),
            };
            indices.push(idx.ok_or_else(|| SpaceError::UnknownValue { name: p.name.clone(), value: part.to_string() })?);
        }
        Ok(Configuration(indices))
    }
}
