//! Logical scenarios (parameter ranges with step sizes) and their expansion
//! into concrete scenarios.
//!
//! Grids are inclusive at both ends and values are generated as
//! `min + i * step`, never by repeated addition. Enumeration runs with the
//! last-declared parameter varying fastest, so a concrete scenario's index is
//! stable across runs and machines.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance on `(max − min) / step` being an integer.
const STEP_MULTIPLE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterRange {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub step: f64,
    #[serde(default)]
    pub unit: String,
}

impl ParameterRange {
    pub fn new(name: impl Into<String>, min: f64, max: f64, step: f64, unit: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            min,
            max,
            step,
            unit: unit.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |message: String| Error::InvalidRange {
            name: self.name.clone(),
            message,
        };
        if self.name.is_empty() {
            return Err(invalid("empty name".into()));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.step.is_finite()) {
            return Err(invalid("bounds and step must be finite".into()));
        }
        if !(self.step > 0.0) {
            return Err(invalid(format!("step {} must be positive", self.step)));
        }
        if self.min > self.max {
            return Err(invalid(format!("min {} exceeds max {}", self.min, self.max)));
        }
        let ratio = (self.max - self.min) / self.step;
        if (ratio - ratio.round()).abs() > STEP_MULTIPLE_TOLERANCE * ratio.max(1.0) {
            return Err(invalid(format!(
                "range {}..{} is not a multiple of step {}",
                self.min, self.max, self.step
            )));
        }
        Ok(())
    }

    /// Number of grid values, endpoints included.
    pub fn count(&self) -> usize {
        ((self.max - self.min) / self.step).round() as usize + 1
    }

    pub fn value(&self, i: usize) -> f64 {
        self.min + i as f64 * self.step
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count()).map(|i| self.value(i))
    }

    fn snap_tolerance(&self) -> f64 {
        1e-9 * self.max.abs().max(1.0)
    }

    /// Grid index of `v`, if `v` lies on the grid within the snap tolerance.
    pub fn grid_index(&self, v: f64) -> Option<usize> {
        let tol = self.snap_tolerance();
        if !(v >= self.min - tol && v <= self.max + tol) {
            return None;
        }
        let k = ((v - self.min) / self.step).round();
        if k < 0.0 {
            return None;
        }
        let k = k as usize;
        (k < self.count() && (self.value(k) - v).abs() <= tol).then_some(k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogicalScenario {
    pub scenario_id: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub parameters: Vec<ParameterRange>,
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
}

impl LogicalScenario {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let s: Self = serde_json::from_slice(bytes)?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&bytes)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenario_id.is_empty() {
            return Err(Error::InvalidScenario("scenario_id is empty".into()));
        }
        let mut seen = BTreeSet::new();
        for p in &self.parameters {
            p.validate()?;
            if !seen.insert(p.name.as_str()) {
                return Err(Error::InvalidScenario(format!(
                    "parameter `{}` declared twice",
                    p.name
                )));
            }
            if self.fixed.contains_key(&p.name) {
                return Err(Error::InvalidScenario(format!(
                    "`{}` is both a parameter and a fixed value",
                    p.name
                )));
            }
        }
        Ok(())
    }

    pub fn parameter(&self, name: &str) -> Option<&ParameterRange> {
        self.parameters.iter().find(|p| p.name == name)
    }

    /// Bindings of the grid point at `index`.
    pub(crate) fn bindings_at(&self, mut index: usize) -> BTreeMap<String, f64> {
        let mut bindings = self.fixed.clone();
        for p in self.parameters.iter().rev() {
            let n = p.count();
            bindings.insert(p.name.clone(), p.value(index % n));
            index /= n;
        }
        bindings
    }

    /// Enumeration index of the grid point given per-parameter indices.
    pub fn flat_index(&self, per_parameter: &[usize]) -> usize {
        self.parameters
            .iter()
            .zip(per_parameter)
            .fold(0, |acc, (p, &i)| acc * p.count() + i)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcreteScenario {
    pub scenario_id: String,
    pub logical_id: String,
    pub bindings: BTreeMap<String, f64>,
    pub index: usize,
}

impl ConcreteScenario {
    pub fn get(&self, name: &str) -> Result<f64> {
        self.bindings
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingBinding(name.to_owned()))
    }
}

/// Number of concrete scenarios `concretize` yields, without materializing them.
pub fn grid_size(logical: &LogicalScenario) -> Result<usize> {
    logical.validate()?;
    Ok(logical.parameters.iter().map(ParameterRange::count).product())
}

/// Cartesian product of all parameter grids, last parameter fastest.
/// A scenario without parameters yields one concrete scenario holding only
/// the fixed bindings.
pub fn concretize(logical: &LogicalScenario) -> Result<Vec<ConcreteScenario>> {
    let n = grid_size(logical)?;
    Ok((0..n)
        .map(|index| ConcreteScenario {
            scenario_id: format!("{}#{index}", logical.scenario_id),
            logical_id: logical.scenario_id.clone(),
            bindings: logical.bindings_at(index),
            index,
        })
        .collect())
}

/// Writes one JSON object per line: `{scenario_id, logical_id, index, bindings}`.
pub fn write_concrete_jsonl(mut sink: impl std::io::Write, scenarios: &[ConcreteScenario]) -> Result<()> {
    for s in scenarios {
        serde_json::to_writer(&mut sink, s)?;
        sink.write_all(b"\n").map_err(|e| Error::io("<jsonl sink>", e))?;
    }
    Ok(())
}
