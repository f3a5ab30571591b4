//! Quality metrics at three resolutions: per time step ([`nano`]), per
//! scenario ([`micro`]) and per scenario set ([`macroscopic`]).

pub mod dtw;
pub mod macroscopic;
pub mod micro;
pub mod nano;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "m")]
    Meter,
    #[serde(rename = "s")]
    Second,
    #[serde(rename = "m/s")]
    MeterPerSecond,
    #[serde(rename = "m/s^2")]
    MeterPerSecondSquared,
    #[serde(rename = "1/m^2")]
    PerSquareMeter,
    #[serde(rename = "rad")]
    Radian,
    #[serde(rename = "1")]
    Dimensionless,
}

impl Unit {
    pub fn as_str(self) -> &'static str {
        match self {
            Unit::Meter => "m",
            Unit::Second => "s",
            Unit::MeterPerSecond => "m/s",
            Unit::MeterPerSecondSquared => "m/s^2",
            Unit::PerSquareMeter => "1/m^2",
            Unit::Radian => "rad",
            Unit::Dimensionless => "1",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Unit {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "m" => Unit::Meter,
            "s" => Unit::Second,
            "m/s" => Unit::MeterPerSecond,
            "m/s^2" | "m/s2" => Unit::MeterPerSecondSquared,
            "1/m^2" | "1/m2" | "actors/m^2" => Unit::PerSquareMeter,
            "rad" => Unit::Radian,
            "1" | "" => Unit::Dimensionless,
            _ => return Err(format!("unknown unit `{s}`")),
        })
    }
}

/// One metric value at one instant. Undefined results carry `defined = false`
/// and a value of zero; they are never consumed by criteria.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub time: f64,
    pub value: f64,
    pub unit: Unit,
    pub defined: bool,
}

impl MetricResult {
    pub fn defined(time: f64, value: f64, unit: Unit) -> Self {
        Self {
            time,
            value,
            unit,
            defined: true,
        }
    }

    pub fn undefined(time: f64, unit: Unit) -> Self {
        Self {
            time,
            value: 0.0,
            unit,
            defined: false,
        }
    }

    pub fn value(&self) -> Option<f64> {
        self.defined.then_some(self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub metric_name: String,
    pub unit: Unit,
    pub actor_ids: Vec<String>,
    pub results: Vec<MetricResult>,
}

impl MetricSeries {
    pub fn new(metric_name: impl Into<String>, unit: Unit, actor_ids: &[&str]) -> Self {
        Self {
            metric_name: metric_name.into(),
            unit,
            actor_ids: actor_ids.iter().map(|s| (*s).to_owned()).collect(),
            results: Vec::new(),
        }
    }

    /// Appends a result; `None` records an undefined sample.
    pub fn push(&mut self, time: f64, value: Option<f64>) {
        self.results.push(match value {
            Some(v) => MetricResult::defined(time, v, self.unit),
            None => MetricResult::undefined(time, self.unit),
        });
    }

    pub fn defined(&self) -> impl Iterator<Item = &MetricResult> {
        self.results.iter().filter(|r| r.defined)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.results.iter().map(|r| r.time)
    }

    /// Maximal `[first, last]` sample-time spans of consecutive defined results.
    pub fn defined_spans(&self) -> Vec<(f64, f64)> {
        let mut spans = Vec::new();
        let mut open: Option<(f64, f64)> = None;
        for r in &self.results {
            match (r.defined, open.as_mut()) {
                (true, Some(span)) => span.1 = r.time,
                (true, None) => open = Some((r.time, r.time)),
                (false, Some(_)) => spans.extend(open.take()),
                (false, None) => {}
            }
        }
        spans.extend(open);
        spans
    }

    /// Writes `time_s,value,defined`; undefined rows carry an empty value.
    pub fn write_csv(&self, mut sink: impl Write) -> Result<()> {
        let io = |e| Error::io("<series sink>", e);
        writeln!(sink, "time_s,value,defined").map_err(io)?;
        for r in &self.results {
            if r.defined {
                writeln!(sink, "{},{},true", r.time, r.value).map_err(io)?;
            } else {
                writeln!(sink, "{},,false", r.time).map_err(io)?;
            }
        }
        Ok(())
    }

    /// JSON header sidecar of the CSV series.
    pub fn header(&self, parameters: &BTreeMap<String, f64>) -> SeriesHeader {
        SeriesHeader {
            metric_name: self.metric_name.clone(),
            unit: self.unit,
            actor_ids: self.actor_ids.clone(),
            parameters: parameters.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesHeader {
    pub metric_name: String,
    pub unit: Unit,
    pub actor_ids: Vec<String>,
    pub parameters: BTreeMap<String, f64>,
}

/// A metric result without a timestamp: one value per scenario or per set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarResult {
    #[serde(default)]
    pub scenario_id: String,
    pub metric_name: String,
    pub value: f64,
    pub unit: Unit,
    pub defined: bool,
    #[serde(default)]
    pub context: BTreeMap<String, String>,
}

impl ScalarResult {
    pub fn defined(metric_name: impl Into<String>, value: f64, unit: Unit) -> Self {
        Self {
            scenario_id: String::new(),
            metric_name: metric_name.into(),
            value,
            unit,
            defined: true,
            context: BTreeMap::new(),
        }
    }

    pub fn undefined(metric_name: impl Into<String>, unit: Unit) -> Self {
        Self {
            defined: false,
            value: 0.0,
            ..Self::defined(metric_name, 0.0, unit)
        }
    }

    pub fn value(&self) -> Option<f64> {
        self.defined.then_some(self.value)
    }

    pub fn with_context(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.context.insert(key.into(), value.into());
        self
    }

    pub fn with_scenario(mut self, scenario_id: impl Into<String>) -> Self {
        self.scenario_id = scenario_id.into();
        self
    }
}

/// Writes one scalar result per line.
pub fn write_scalars_jsonl(mut sink: impl Write, results: &[ScalarResult]) -> Result<()> {
    for r in results {
        serde_json::to_writer(&mut sink, r)?;
        sink.write_all(b"\n").map_err(|e| Error::io("<jsonl sink>", e))?;
    }
    Ok(())
}
