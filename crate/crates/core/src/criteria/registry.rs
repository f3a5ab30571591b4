//! Name → metric lookup used by criteria and the CLI.
//!
//! Nanoscopic metrics produce a series per trace, microscopic ones a scalar
//! per trace and macroscopic ones scalars per trace set. Any nanoscopic
//! metric can be reduced to a microscopic one with a `min_`, `max_` or
//! `mean_` prefix, e.g. `min_euclidean_distance`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::dtw::dtw;
use crate::metrics::macroscopic::collision_probability;
use crate::metrics::micro::{aggregate, build_encroachment_zone, et, pet, AggregateOp};
use crate::metrics::nano::{self, default_a_max, locate_conflict};
use crate::metrics::{MetricSeries, ScalarResult, Unit};
use crate::trace::Trace;

pub const DEFAULT_DENSITY_RADIUS: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Nanoscopic,
    Microscopic,
    Macroscopic,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Nanoscopic => "nanoscopic",
            Level::Microscopic => "microscopic",
            Level::Macroscopic => "macroscopic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perspective {
    Simulation,
    Sut,
    Scenario,
}

impl fmt::Display for Perspective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Perspective::Simulation => "simulation",
            Perspective::Sut => "sut",
            Perspective::Scenario => "scenario",
        })
    }
}

/// Which end of a metric's range is critical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Worse {
    Lower,
    Higher,
}

impl Worse {
    /// True when `a` is more critical than `b`.
    pub fn is_worse(self, a: f64, b: f64) -> bool {
        match self {
            Worse::Lower => a < b,
            Worse::Higher => a > b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec {
    pub name: String,
    pub unit: Unit,
    pub level: Level,
    pub worse: Worse,
    pub perspective: Perspective,
    /// Number of actors the metric is computed for.
    pub arity: usize,
    pub parameters: &'static [&'static str],
}

struct Entry {
    name: &'static str,
    unit: Unit,
    level: Level,
    worse: Worse,
    perspective: Perspective,
    arity: usize,
    parameters: &'static [&'static str],
}

const fn entry(
    name: &'static str,
    unit: Unit,
    level: Level,
    worse: Worse,
    perspective: Perspective,
    arity: usize,
    parameters: &'static [&'static str],
) -> Entry {
    Entry {
        name,
        unit,
        level,
        worse,
        perspective,
        arity,
        parameters,
    }
}

use Level::*;
use Perspective::*;

const ENTRIES: &[Entry] = &[
    entry("euclidean_distance", Unit::Meter, Nanoscopic, Worse::Lower, Scenario, 2, &[]),
    entry("headway", Unit::Meter, Nanoscopic, Worse::Lower, Sut, 2, &[]),
    entry("ttc", Unit::Second, Nanoscopic, Worse::Lower, Sut, 2, &[]),
    entry("wttc", Unit::Second, Nanoscopic, Worse::Lower, Scenario, 2, &["a_max_ego", "a_max_target"]),
    entry("gap_time", Unit::Second, Nanoscopic, Worse::Lower, Sut, 2, &[]),
    entry("braking_time", Unit::Second, Nanoscopic, Worse::Higher, Sut, 1, &[]),
    entry("braking_distance", Unit::Meter, Nanoscopic, Worse::Higher, Sut, 1, &[]),
    entry("traffic_density", Unit::PerSquareMeter, Nanoscopic, Worse::Higher, Scenario, 1, &["radius"]),
    entry("pet", Unit::Second, Microscopic, Worse::Lower, Sut, 2, &["inflation"]),
    entry("et", Unit::Second, Microscopic, Worse::Higher, Sut, 2, &["inflation"]),
    entry("dtw_repeatability", Unit::Meter, Macroscopic, Worse::Higher, Simulation, 1, &[]),
    entry("collision_probability", Unit::Dimensionless, Macroscopic, Worse::Higher, Sut, 0, &[]),
];

fn spec_of(e: &Entry) -> MetricSpec {
    MetricSpec {
        name: e.name.to_owned(),
        unit: e.unit,
        level: e.level,
        worse: e.worse,
        perspective: e.perspective,
        arity: e.arity,
        parameters: e.parameters,
    }
}

fn split_aggregate(name: &str) -> Option<(AggregateOp, &str)> {
    let (op, base) = name.split_once('_')?;
    let op = op.parse().ok()?;
    ENTRIES
        .iter()
        .any(|e| e.name == base && e.level == Nanoscopic)
        .then_some((op, base))
}

pub fn lookup(name: &str) -> Result<MetricSpec> {
    if let Some(e) = ENTRIES.iter().find(|e| e.name == name) {
        return Ok(spec_of(e));
    }
    let (_, base) = split_aggregate(name).ok_or_else(|| Error::UnknownMetric(name.to_owned()))?;
    let base = lookup(base)?;
    Ok(MetricSpec {
        name: name.to_owned(),
        level: Microscopic,
        ..base
    })
}

/// Every registered base metric name; aggregates are not listed.
pub fn names() -> impl Iterator<Item = &'static str> {
    ENTRIES.iter().map(|e| e.name)
}

/// Picks `arity` actors when none are given: `ego` first if present, then
/// the remaining actors in id order. Fails unless that choice is unambiguous.
pub fn default_actors<'a>(ids: &[&'a str], arity: usize) -> Result<Vec<&'a str>> {
    let mut ordered: Vec<&str> = ids.iter().copied().filter(|id| *id == "ego").collect();
    ordered.extend(ids.iter().copied().filter(|id| *id != "ego"));
    let unambiguous = ordered.len() == arity || (arity == 1 && ordered.first() == Some(&"ego"));
    if !unambiguous {
        return Err(Error::MetricArgs {
            metric: String::new(),
            message: format!("cannot choose {arity} actor(s) among {ids:?}; list them explicitly"),
        });
    }
    ordered.truncate(arity);
    Ok(ordered)
}

fn resolve_actors<'a>(spec: &MetricSpec, trace: &'a Trace, given: &'a [&'a str]) -> Result<Vec<&'a str>> {
    if given.is_empty() {
        let ids: Vec<&str> = trace.actor_ids().collect();
        return default_actors(&ids, spec.arity).map_err(|e| match e {
            Error::MetricArgs { message, .. } => Error::MetricArgs {
                metric: spec.name.clone(),
                message,
            },
            other => other,
        });
    }
    if given.len() != spec.arity {
        return Err(Error::MetricArgs {
            metric: spec.name.clone(),
            message: format!("expects {} actor(s), got {}", spec.arity, given.len()),
        });
    }
    Ok(given.to_vec())
}

fn check_parameters(spec: &MetricSpec, params: &BTreeMap<String, f64>) -> Result<()> {
    match params.keys().find(|k| !spec.parameters.contains(&k.as_str())) {
        Some(k) => Err(Error::MetricArgs {
            metric: spec.name.clone(),
            message: format!("unknown parameter `{k}`"),
        }),
        None => Ok(()),
    }
}

/// Nanoscopic series of `name` on `trace`.
pub fn compute_series(
    name: &str,
    trace: &Trace,
    actors: &[&str],
    params: &BTreeMap<String, f64>,
) -> Result<MetricSeries> {
    let spec = lookup(name)?;
    if spec.level != Nanoscopic {
        return Err(Error::LevelMismatch {
            metric: name.to_owned(),
            expected: Nanoscopic.to_string(),
            actual: spec.level.to_string(),
        });
    }
    check_parameters(&spec, params)?;
    let actors = resolve_actors(&spec, trace, actors)?;
    let class = |id: &str| trace.track(id).map(|t| t.class());
    match name {
        "euclidean_distance" => nano::euclidean_distance(trace, actors[0], actors[1]),
        "headway" => nano::headway(trace, actors[0], actors[1]),
        "ttc" => nano::ttc(trace, actors[0], actors[1]),
        "wttc" => {
            let a_ego = params.get("a_max_ego").copied().map_or_else(|| class(actors[0]).map(default_a_max), Ok)?;
            let a_target = params
                .get("a_max_target")
                .copied()
                .map_or_else(|| class(actors[1]).map(default_a_max), Ok)?;
            nano::wttc(trace, actors[0], actors[1], a_ego, a_target)
        }
        "gap_time" => match locate_conflict(trace, actors[0], actors[1]) {
            Ok(conflict) => nano::gap_time(trace, actors[0], actors[1], &conflict),
            // the paths never meet, so there is no arrival to predict
            Err(Error::NoCrossing(..)) => {
                let (samples, _) = nano::pair_samples(trace, actors[0], actors[1])?;
                let mut series = MetricSeries::new("gap_time", Unit::Second, &[actors[0], actors[1]]);
                for s in &samples {
                    series.push(s.time, None);
                }
                Ok(series)
            }
            Err(e) => Err(e),
        },
        "braking_time" => nano::braking_time(trace, actors[0]),
        "braking_distance" => nano::braking_distance(trace, actors[0]),
        "traffic_density" => nano::traffic_density(
            trace,
            actors[0],
            params.get("radius").copied().unwrap_or(DEFAULT_DENSITY_RADIUS),
        ),
        other => Err(Error::UnknownMetric(other.to_owned())),
    }
}

/// Microscopic scalar of `name` on one trace. Aggregates are restricted to
/// `period` when given.
pub fn compute_trace_scalar(
    name: &str,
    trace: &Trace,
    actors: &[&str],
    params: &BTreeMap<String, f64>,
    period: Option<&[(f64, f64)]>,
) -> Result<ScalarResult> {
    let spec = lookup(name)?;
    if spec.level != Microscopic {
        return Err(Error::LevelMismatch {
            metric: name.to_owned(),
            expected: Microscopic.to_string(),
            actual: spec.level.to_string(),
        });
    }
    let result = if let Some((op, base)) = split_aggregate(name) {
        let series = compute_series(base, trace, actors, params)?;
        aggregate(&series, op, period)?
    } else {
        check_parameters(&spec, params)?;
        let actors = resolve_actors(&spec, trace, actors)?;
        let inflation = params.get("inflation").copied().unwrap_or(0.0);
        match build_encroachment_zone(trace, actors[0], actors[1], inflation) {
            Ok(zone) if name == "pet" => pet(trace, actors[0], actors[1], &zone)?,
            Ok(zone) => et(trace, actors[0], &zone)?,
            Err(Error::NoCrossing(..)) => {
                ScalarResult::undefined(name, spec.unit).with_context("reason", "no_crossing")
            }
            Err(e) => return Err(e),
        }
    };
    Ok(result.with_scenario(trace.scenario_id()))
}

/// Macroscopic scalars of `name` over a trace set. `dtw_repeatability` uses
/// the first trace as reference and yields one result per (run, actor).
pub fn compute_set(
    name: &str,
    traces: &[Trace],
    actors: &[&str],
    params: &BTreeMap<String, f64>,
) -> Result<Vec<ScalarResult>> {
    let spec = lookup(name)?;
    if spec.level != Macroscopic {
        return Err(Error::LevelMismatch {
            metric: name.to_owned(),
            expected: Macroscopic.to_string(),
            actual: spec.level.to_string(),
        });
    }
    check_parameters(&spec, params)?;
    let first = traces
        .first()
        .ok_or_else(|| Error::Empty(format!("`{name}` needs at least one trace")))?;
    match name {
        "collision_probability" => {
            let p = collision_probability(traces)?;
            Ok(vec![ScalarResult::defined(name, p, spec.unit)
                .with_context("traces", traces.len().to_string())
                .with_scenario(first.scenario_id())])
        }
        "dtw_repeatability" => {
            let ids: Vec<&str> = if actors.is_empty() {
                first.actor_ids().collect()
            } else {
                actors.to_vec()
            };
            let mut out = Vec::new();
            for (i, run) in traces.iter().enumerate().skip(1) {
                for actor in &ids {
                    let d = dtw(first.track(actor)?, run.track(actor)?)?;
                    out.push(
                        ScalarResult::defined(name, d, spec.unit)
                            .with_scenario(run.scenario_id())
                            .with_context("run", i.to_string())
                            .with_context("actor", *actor),
                    );
                }
            }
            Ok(out)
        }
        other => Err(Error::UnknownMetric(other.to_owned())),
    }
}
