//! Scenario-set metrics: repeatability of executions, collision probability,
//! parameter coverage and result-gap detection over sweeps.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{ConcreteScenario, LogicalScenario};
use crate::sim::SimOutcome;
use crate::trace::{Trace, RUN_INDEX_KEY};

use super::dtw::dtw;
use super::nano::pair_samples;
use super::ScalarResult;

pub const DEFAULT_DTW_THRESHOLD: f64 = 10.0;
pub const DEFAULT_GAP_FACTOR: f64 = 5.0;
pub const DEFAULT_MISSING_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatabilityEntry {
    pub run_id: String,
    pub actor_id: String,
    pub dtw_distance: f64,
    /// `dtw_distance` divided by the reference track's state count.
    pub per_step: f64,
    pub within_threshold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatabilityReport {
    pub reference_id: String,
    pub entries: Vec<RepeatabilityEntry>,
    pub threshold: f64,
}

impl RepeatabilityReport {
    pub fn all_within(&self) -> bool {
        self.entries.iter().all(|e| e.within_threshold)
    }

    pub fn max_per_step(&self) -> f64 {
        self.entries.iter().map(|e| e.per_step).fold(0.0, f64::max)
    }
}

fn run_label(trace: &Trace, position: usize) -> String {
    match trace.metadata().get(RUN_INDEX_KEY) {
        Some(run) => format!("{}@{run}", trace.scenario_id()),
        None => format!("{}@{position}", trace.scenario_id()),
    }
}

/// DTW of every listed actor in every run against the same actor in the
/// reference execution.
pub fn repeatability_report(
    reference: &Trace,
    runs: &[Trace],
    actor_ids: &[&str],
    threshold: f64,
) -> Result<RepeatabilityReport> {
    for trace in std::iter::once(reference).chain(runs) {
        for actor in actor_ids {
            trace.track(actor)?;
        }
    }
    let pairs: Vec<(usize, &str)> = (0..runs.len())
        .flat_map(|r| actor_ids.iter().map(move |a| (r, *a)))
        .collect();
    let entries = pairs
        .par_iter()
        .map(|&(r, actor)| {
            let reference_track = reference.track(actor)?;
            let distance = dtw(reference_track, runs[r].track(actor)?)?;
            Ok(RepeatabilityEntry {
                run_id: run_label(&runs[r], r + 1),
                actor_id: actor.to_owned(),
                dtw_distance: distance,
                per_step: distance / reference_track.states().len() as f64,
                within_threshold: distance <= threshold,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RepeatabilityReport {
        reference_id: run_label(reference, 0),
        entries,
        threshold,
    })
}

/// Anything that can tell whether two actors' bounding circles touched.
pub trait ContactOutcome {
    fn had_contact(&self) -> Result<bool>;
}

impl ContactOutcome for SimOutcome {
    fn had_contact(&self) -> Result<bool> {
        Ok(self.collided)
    }
}

impl ContactOutcome for Trace {
    /// True when any actor pair gets within the sum of its radii at a common
    /// sample time.
    fn had_contact(&self) -> Result<bool> {
        let ids: Vec<&str> = self.actor_ids().collect();
        for (i, a) in ids.iter().enumerate() {
            for b in &ids[i + 1..] {
                let (samples, radii) = match pair_samples(self, a, b) {
                    Ok(s) => s,
                    Err(Error::EmptyOverlap(..)) => continue,
                    Err(e) => return Err(e),
                };
                if samples
                    .iter()
                    .any(|s| s.a.position().distance(s.b.position()) <= radii)
                {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }
}

impl<T: ContactOutcome> ContactOutcome for &T {
    fn had_contact(&self) -> Result<bool> {
        (**self).had_contact()
    }
}

/// Fraction of outcomes with bounding-circle contact.
pub fn collision_probability<T: ContactOutcome>(outcomes: &[T]) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(Error::Empty("collision probability of an empty set".into()));
    }
    let mut hits = 0usize;
    for o in outcomes {
        hits += usize::from(o.had_contact()?);
    }
    Ok(hits as f64 / outcomes.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub overall: f64,
    pub per_parameter: BTreeMap<String, f64>,
    /// Unexecuted grid points in enumeration order, at most the requested cap.
    pub missing: Vec<BTreeMap<String, f64>>,
}

/// Share of the logical grid (and of each parameter's values) hit by the
/// executed scenarios. Duplicates count once.
pub fn parameter_coverage(
    logical: &LogicalScenario,
    executed: &[ConcreteScenario],
    missing_cap: usize,
) -> Result<CoverageResult> {
    logical.validate()?;
    let mut hit_points = BTreeSet::new();
    let mut hit_values: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); logical.parameters.len()];
    for scenario in executed {
        let mut indices = Vec::with_capacity(logical.parameters.len());
        for p in &logical.parameters {
            let v = scenario.get(&p.name)?;
            let k = p.grid_index(v).ok_or_else(|| Error::OffGrid {
                name: p.name.clone(),
                value: v,
            })?;
            indices.push(k);
        }
        for (set, &k) in hit_values.iter_mut().zip(&indices) {
            set.insert(k);
        }
        hit_points.insert(logical.flat_index(&indices));
    }
    let total: usize = logical.parameters.iter().map(|p| p.count()).product();
    let per_parameter = logical
        .parameters
        .iter()
        .zip(&hit_values)
        .map(|(p, hit)| (p.name.clone(), hit.len() as f64 / p.count() as f64))
        .collect();
    let missing = (0..total)
        .filter(|i| !hit_points.contains(i))
        .take(missing_cap)
        .map(|i| logical.bindings_at(i))
        .collect();
    Ok(CoverageResult {
        overall: hit_points.len() as f64 / total as f64,
        per_parameter,
        missing,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapFinding {
    pub parameter: String,
    pub left_value: f64,
    pub right_value: f64,
    /// Absent when one side of the pair is undefined.
    pub metric_jump: Option<f64>,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Flags adjacent sweep points whose metric jump exceeds `gap_factor` times
/// the median adjacent jump. A change between defined and undefined is always
/// flagged.
pub fn detect_result_gaps(
    parameter: &str,
    sweep: &[(f64, ScalarResult)],
    gap_factor: f64,
) -> Result<Vec<GapFinding>> {
    if !(gap_factor > 1.0) {
        return Err(Error::MetricArgs {
            metric: "detect_result_gaps".into(),
            message: format!("gap_factor {gap_factor} must exceed 1"),
        });
    }
    if sweep.windows(2).any(|w| !(w[0].0 < w[1].0)) {
        return Err(Error::UnsortedSweep);
    }
    let defined = sweep.iter().filter(|(_, r)| r.defined).count();
    if defined < 3 {
        return Err(Error::TooFewDefined(defined));
    }
    let mut jumps: Vec<f64> = sweep
        .windows(2)
        .filter(|w| w[0].1.defined && w[1].1.defined)
        .map(|w| (w[1].1.value - w[0].1.value).abs())
        .collect();
    let limit = gap_factor * median(&mut jumps);
    Ok(sweep
        .windows(2)
        .filter_map(|w| {
            let (l, r) = (&w[0], &w[1]);
            let metric_jump = match (l.1.defined, r.1.defined) {
                (true, true) => {
                    let jump = r.1.value - l.1.value;
                    if jump.abs() <= limit {
                        return None;
                    }
                    Some(jump)
                }
                (false, false) => return None,
                _ => None,
            };
            Some(GapFinding {
                parameter: parameter.to_owned(),
                left_value: l.0,
                right_value: r.0,
                metric_jump,
            })
        })
        .collect())
}
