use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::ScalarResult;
use crate::trace::Trace;

use super::registry::{self, Level, Perspective};
use super::{active_intervals, evaluate_criterion, MetricData, Outcome, QualityCriterion, Verdict};

/// Inputs of a report run. Timestamps live in the run manifest only, so
/// identical inputs give identical report bytes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub command: String,
    pub inputs: Vec<String>,
    pub config_hash: String,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixCell {
    pub perspective: Perspective,
    pub level: Level,
    pub verdicts: Vec<Verdict>,
    pub passes: usize,
    pub fails: usize,
    pub scores: usize,
    pub not_applicable: usize,
    /// `passes / (passes + fails)`; absent when nothing passed or failed.
    pub pass_rate: Option<f64>,
}

impl MatrixCell {
    fn new(perspective: Perspective, level: Level, verdicts: Vec<Verdict>) -> Self {
        let count = |f: fn(&Outcome) -> bool| verdicts.iter().filter(|v| f(&v.outcome)).count();
        let passes = count(|o| matches!(o, Outcome::Pass));
        let fails = count(|o| matches!(o, Outcome::Fail));
        Self {
            perspective,
            level,
            passes,
            fails,
            scores: count(|o| matches!(o, Outcome::Score { .. })),
            not_applicable: count(|o| matches!(o, Outcome::NotApplicable)),
            pass_rate: (passes + fails > 0).then(|| passes as f64 / (passes + fails) as f64),
            verdicts,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// Non-empty cells of the perspective × level matrix, in matrix order.
    pub matrix_cells: Vec<MatrixCell>,
    pub scalars: Vec<ScalarResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl EvaluationReport {
    pub fn cell(&self, perspective: Perspective, level: Level) -> Option<&MatrixCell> {
        self.matrix_cells
            .iter()
            .find(|c| c.perspective == perspective && c.level == level)
    }

    pub fn verdicts(&self) -> impl Iterator<Item = &Verdict> {
        self.matrix_cells.iter().flat_map(|c| &c.verdicts)
    }

    pub fn has_failures(&self) -> bool {
        self.matrix_cells.iter().any(|c| c.fails > 0)
    }

    fn from_parts(parts: Vec<(Perspective, Level, Verdict)>, scalars: Vec<ScalarResult>) -> Self {
        let mut cells: BTreeMap<(Perspective, Level), Vec<Verdict>> = BTreeMap::new();
        for (p, l, v) in parts {
            cells.entry((p, l)).or_default().push(v);
        }
        Self {
            matrix_cells: cells
                .into_iter()
                .map(|((p, l), mut verdicts)| {
                    verdicts.sort_by(|a, b| a.criterion_id.cmp(&b.criterion_id));
                    MatrixCell::new(p, l, verdicts)
                })
                .collect(),
            scalars,
            provenance: None,
        }
    }

    fn merge(mut self, other: EvaluationReport) -> Self {
        let mut parts: Vec<(Perspective, Level, Verdict)> = Vec::new();
        for cell in self.matrix_cells.drain(..).chain(other.matrix_cells) {
            parts.extend(cell.verdicts.into_iter().map(|v| (cell.perspective, cell.level, v)));
        }
        self.scalars.extend(other.scalars);
        Self::from_parts(parts, self.scalars)
    }
}

fn set_subject(scalar: &ScalarResult) -> String {
    match (scalar.context.get("run"), scalar.context.get("actor")) {
        (Some(run), Some(actor)) => format!("{}@run{run}/{actor}", scalar.scenario_id),
        _ => scalar.scenario_id.clone(),
    }
}

fn evaluate_on_trace(c: &QualityCriterion, trace: &Trace, level: Level) -> Result<(Verdict, Option<ScalarResult>)> {
    let actors: Vec<&str> = c.actors.iter().map(String::as_str).collect();
    match level {
        Level::Nanoscopic => {
            let series = registry::compute_series(&c.metric_name, trace, &actors, &c.parameters)?;
            Ok((evaluate_criterion(c, MetricData::Series(&series), Some(trace))?, None))
        }
        _ => {
            let intervals = active_intervals(&c.application_period, trace)?;
            let scalar =
                registry::compute_trace_scalar(&c.metric_name, trace, &actors, &c.parameters, Some(&intervals))?;
            let verdict = evaluate_criterion(c, MetricData::Scalar(&scalar), Some(trace))?;
            Ok((verdict, Some(scalar)))
        }
    }
}

/// Evaluates every criterion of `suite` at one resolution level. Nanoscopic
/// and microscopic criteria give one verdict per trace, macroscopic ones one
/// verdict per set-level result. Verdicts land in the cell of the
/// criterion's perspective, else `perspective`, else the metric's default.
pub fn evaluate_suite(
    suite: &[QualityCriterion],
    traces: &[Trace],
    perspective: Option<Perspective>,
    level: Level,
) -> Result<EvaluationReport> {
    let mut parts = Vec::new();
    let mut scalars = Vec::new();
    for c in suite {
        c.validate()?;
        let spec = registry::lookup(&c.metric_name)?;
        if spec.level != level {
            return Err(Error::LevelMismatch {
                metric: c.metric_name.clone(),
                expected: level.to_string(),
                actual: spec.level.to_string(),
            });
        }
        let cell = c.perspective.or(perspective).unwrap_or(spec.perspective);
        if level == Level::Macroscopic {
            let actors: Vec<&str> = c.actors.iter().map(String::as_str).collect();
            for scalar in registry::compute_set(&c.metric_name, traces, &actors, &c.parameters)? {
                let mut verdict = evaluate_criterion(c, MetricData::Scalar(&scalar), None)?;
                verdict.subject = set_subject(&scalar);
                parts.push((cell, level, verdict));
                scalars.push(scalar);
            }
            continue;
        }
        let results = traces
            .par_iter()
            .enumerate()
            .map(|(i, t)| evaluate_on_trace(c, t, level).map_err(|e| e.in_scenario(i)))
            .collect::<Result<Vec<_>>>()?;
        for (verdict, scalar) in results {
            parts.push((cell, level, verdict));
            scalars.extend(scalar);
        }
    }
    Ok(EvaluationReport::from_parts(parts, scalars))
}

/// Evaluates a mixed suite, each criterion at its metric's own level.
pub fn evaluate_all(suite: &[QualityCriterion], traces: &[Trace]) -> Result<EvaluationReport> {
    let mut report = EvaluationReport::default();
    for level in [Level::Nanoscopic, Level::Microscopic, Level::Macroscopic] {
        let mut part = Vec::new();
        for c in suite {
            if registry::lookup(&c.metric_name)?.level == level {
                part.push(c.clone());
            }
        }
        if !part.is_empty() {
            report = report.merge(evaluate_suite(&part, traces, None, level)?);
        }
    }
    Ok(report)
}
