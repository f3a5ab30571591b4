//! Quality criteria: a metric reference, a threshold or an evaluation scale,
//! and an application period gating when the criterion applies.

pub mod condition;
pub mod registry;
mod report;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{MetricSeries, ScalarResult, Unit};
use crate::trace::Trace;

pub use condition::{
    active_intervals, ApplicationPeriod, BoolOp, Comparator, Condition, ConditionNode, EventKind, Signal, StopRule,
};
pub use registry::{Level, Perspective, Worse};
pub use report::{evaluate_all, evaluate_suite, EvaluationReport, MatrixCell, Provenance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evaluation {
    Threshold {
        comparator: Comparator,
        value: f64,
        unit: Unit,
    },
    /// Piecewise-constant score: a result scores the entry with the largest
    /// bound not above it, and the first entry when below every bound.
    Scale {
        breakpoints: Vec<(f64, f64)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        unit: Option<Unit>,
    },
}

impl Evaluation {
    pub fn threshold(comparator: Comparator, value: f64, unit: Unit) -> Self {
        Evaluation::Threshold {
            comparator,
            value,
            unit,
        }
    }

    fn unit(&self) -> Option<Unit> {
        match self {
            Evaluation::Threshold { unit, .. } => Some(*unit),
            Evaluation::Scale { unit, .. } => *unit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityCriterion {
    pub criterion_id: String,
    #[serde(alias = "metric")]
    pub metric_name: String,
    pub evaluation: Evaluation,
    #[serde(default)]
    pub application_period: ApplicationPeriod,
    /// Actors the metric is computed for; chosen automatically when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub actors: Vec<String>,
    /// Metric arguments such as `inflation` or `a_max_ego`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, f64>,
    /// Matrix column; defaults to the metric's own perspective.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perspective: Option<Perspective>,
}

impl QualityCriterion {
    pub fn new(id: impl Into<String>, metric: impl Into<String>, evaluation: Evaluation) -> Self {
        Self {
            criterion_id: id.into(),
            metric_name: metric.into(),
            evaluation,
            application_period: ApplicationPeriod::always(),
            actors: Vec::new(),
            parameters: BTreeMap::new(),
            perspective: None,
        }
    }

    pub fn with_period(mut self, period: ApplicationPeriod) -> Self {
        self.application_period = period;
        self
    }

    pub fn with_actors(mut self, actors: &[&str]) -> Self {
        self.actors = actors.iter().map(|s| (*s).to_owned()).collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |message: String| Error::InvalidCriterion {
            id: self.criterion_id.clone(),
            message,
        };
        if self.criterion_id.is_empty() {
            return Err(invalid("empty criterion id".into()));
        }
        let spec = registry::lookup(&self.metric_name)?;
        match &self.evaluation {
            Evaluation::Threshold { value, .. } if !value.is_finite() => {
                return Err(invalid("threshold must be finite".into()));
            }
            Evaluation::Scale { breakpoints, .. } => {
                if breakpoints.is_empty() {
                    return Err(invalid("scale needs at least one breakpoint".into()));
                }
                if breakpoints.windows(2).any(|w| !(w[0].0 < w[1].0)) {
                    return Err(invalid("scale breakpoints must be strictly increasing".into()));
                }
            }
            _ => {}
        }
        if let Some(unit) = self.evaluation.unit() {
            if unit != spec.unit {
                return Err(Error::UnitMismatch {
                    metric: spec.unit.to_string(),
                    criterion: unit.to_string(),
                });
            }
        }
        self.application_period.validate().map_err(|e| match e {
            Error::InvalidCriterion { message, .. } => invalid(message),
            other => other,
        })
    }

    pub fn perspective(&self) -> Result<Perspective> {
        Ok(match self.perspective {
            Some(p) => p,
            None => registry::lookup(&self.metric_name)?.perspective,
        })
    }
}

/// Reads a criterion suite: a JSON list of criteria.
pub fn load_suite(path: impl AsRef<Path>) -> Result<Vec<QualityCriterion>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_suite(&bytes)
}

pub fn parse_suite(bytes: &[u8]) -> Result<Vec<QualityCriterion>> {
    let suite: Vec<QualityCriterion> = serde_json::from_slice(bytes)?;
    suite.iter().try_for_each(QualityCriterion::validate)?;
    Ok(suite)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    Score { value: f64 },
    NotApplicable,
}

/// The result a verdict hinges on: the violating or most nearly violating
/// one for thresholds, the most critical one for scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstResult {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    pub value: f64,
    pub unit: Unit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion_id: String,
    /// What was judged: a scenario id, or a run and actor for set metrics.
    pub subject: String,
    pub outcome: Outcome,
    pub evaluated_intervals: Vec<(f64, f64)>,
    pub worst_result: Option<WorstResult>,
}

/// Metric results handed to [`evaluate_criterion`].
#[derive(Debug, Clone, Copy)]
pub enum MetricData<'a> {
    Series(&'a MetricSeries),
    Scalar(&'a ScalarResult),
}

impl MetricData<'_> {
    fn unit(&self) -> Unit {
        match self {
            MetricData::Series(s) => s.unit,
            MetricData::Scalar(s) => s.unit,
        }
    }
}

fn scale_score(breakpoints: &[(f64, f64)], value: f64) -> f64 {
    let k = breakpoints.partition_point(|&(bound, _)| bound <= value);
    breakpoints[k.saturating_sub(1)].1
}

/// Judges one metric result set. Series results count only inside the active
/// intervals of the application period; scalar results are judged once when
/// the period is active at all. Without a trace the period must be always-on
/// and then covers the whole series.
pub fn evaluate_criterion(criterion: &QualityCriterion, data: MetricData<'_>, trace: Option<&Trace>) -> Result<Verdict> {
    criterion.validate()?;
    if let Some(unit) = criterion.evaluation.unit() {
        if unit != data.unit() {
            return Err(Error::UnitMismatch {
                metric: data.unit().to_string(),
                criterion: unit.to_string(),
            });
        }
    }
    let period = &criterion.application_period;
    let intervals = match trace {
        Some(t) => active_intervals(period, t)?,
        None if period.start_condition.is_none() => match data {
            MetricData::Series(s) if !s.results.is_empty() => {
                vec![(s.results[0].time, s.results[s.results.len() - 1].time)]
            }
            _ => Vec::new(),
        },
        None => {
            return Err(Error::InvalidCriterion {
                id: criterion.criterion_id.clone(),
                message: "application period needs a trace".into(),
            })
        }
    };
    let period_active = trace.is_none() || !intervals.is_empty();

    let candidates: Vec<WorstResult> = match data {
        MetricData::Series(series) => series
            .defined()
            .filter(|r| condition::inside(&intervals, r.time))
            .map(|r| WorstResult {
                time: Some(r.time),
                value: r.value,
                unit: r.unit,
            })
            .collect(),
        MetricData::Scalar(s) => s
            .value()
            .filter(|_| period_active)
            .map(|v| WorstResult {
                time: None,
                value: v,
                unit: s.unit,
            })
            .into_iter()
            .collect(),
    };
    let subject = match data {
        MetricData::Scalar(s) if !s.scenario_id.is_empty() => s.scenario_id.clone(),
        _ => trace.map(|t| t.scenario_id().to_owned()).unwrap_or_default(),
    };
    let verdict = |outcome, worst_result| Verdict {
        criterion_id: criterion.criterion_id.clone(),
        subject: subject.clone(),
        outcome,
        evaluated_intervals: intervals.clone(),
        worst_result,
    };
    if candidates.is_empty() {
        return Ok(verdict(Outcome::NotApplicable, None));
    }

    Ok(match &criterion.evaluation {
        Evaluation::Threshold { comparator, value, .. } => {
            let worst = candidates
                .iter()
                .copied()
                .min_by(|a, b| comparator.margin(a.value, *value).total_cmp(&comparator.margin(b.value, *value)))
                .expect("non-empty");
            let pass = candidates.iter().all(|r| comparator.holds(r.value, *value));
            verdict(if pass { Outcome::Pass } else { Outcome::Fail }, Some(worst))
        }
        Evaluation::Scale { breakpoints, .. } => {
            let worse = registry::lookup(&criterion.metric_name)?.worse;
            let worst = candidates
                .iter()
                .copied()
                .reduce(|a, b| if worse.is_worse(b.value, a.value) { b } else { a })
                .expect("non-empty");
            verdict(
                Outcome::Score {
                    value: scale_score(breakpoints, worst.value),
                },
                Some(worst),
            )
        }
    })
}
