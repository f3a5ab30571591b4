//! Condition trees and the application periods they gate.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::nano::{locate_conflict, pair_samples, TraveledPath};
use crate::metrics::{MetricSeries, Unit};
use crate::trace::{state_at, Trace};

use super::registry;

/// Relative tolerance of the `=` comparator.
pub const EQ_TOLERANCE: f64 = 1e-9;
/// Slack when testing whether a sample time lies inside an interval.
pub(crate) const TIME_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=", alias = "≤")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=", alias = "≥")]
    Ge,
    #[serde(rename = "=", alias = "==")]
    Eq,
}

impl Comparator {
    pub fn holds(self, value: f64, bound: f64) -> bool {
        match self {
            Comparator::Lt => value < bound,
            Comparator::Le => value <= bound,
            Comparator::Gt => value > bound,
            Comparator::Ge => value >= bound,
            Comparator::Eq => (value - bound).abs() <= EQ_TOLERANCE * value.abs().max(bound.abs()),
        }
    }

    /// Signed distance from violating the comparison: positive when it holds
    /// with room to spare, negative when it is violated.
    pub fn margin(self, value: f64, bound: f64) -> f64 {
        match self {
            Comparator::Lt | Comparator::Le => bound - value,
            Comparator::Gt | Comparator::Ge => value - bound,
            Comparator::Eq => EQ_TOLERANCE * value.abs().max(bound.abs()) - (value - bound).abs(),
        }
    }

    pub fn negated(self) -> Self {
        match self {
            Comparator::Lt => Comparator::Ge,
            Comparator::Le => Comparator::Gt,
            Comparator::Gt => Comparator::Le,
            Comparator::Ge => Comparator::Lt,
            Comparator::Eq => Comparator::Eq,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
            Comparator::Eq => "=",
        }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signal {
    Speed,
    Acceleration,
    /// Center-to-center distance of two actors.
    DistanceBetween,
    Time,
    MetricValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub signal: Signal,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub actors: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<String>,
    pub comparator: Comparator,
    pub bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<Unit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BoolOp {
    And,
    Or,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConditionNode {
    Branch { op: BoolOp, children: Vec<ConditionNode> },
    Leaf(Condition),
}

impl ConditionNode {
    pub fn leaf(signal: Signal, actors: &[&str], comparator: Comparator, bound: f64) -> Self {
        ConditionNode::Leaf(Condition {
            signal,
            actors: actors.iter().map(|s| (*s).to_owned()).collect(),
            metric: None,
            comparator,
            bound,
            unit: None,
        })
    }

    pub fn all(children: Vec<ConditionNode>) -> Self {
        ConditionNode::Branch {
            op: BoolOp::And,
            children,
        }
    }

    pub fn any(children: Vec<ConditionNode>) -> Self {
        ConditionNode::Branch {
            op: BoolOp::Or,
            children,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ConditionNode::Branch { children, .. } => {
                if children.len() < 2 {
                    return Err(Error::InvalidCriterion {
                        id: String::new(),
                        message: "AND/OR nodes need at least two children".into(),
                    });
                }
                children.iter().try_for_each(ConditionNode::validate)
            }
            ConditionNode::Leaf(c) => c.validate(),
        }
    }

    /// Truth value and robustness margin at every grid time.
    fn evaluate(&self, trace: &Trace, grid: &[f64]) -> Result<Vec<(bool, f64)>> {
        match self {
            ConditionNode::Leaf(c) => c.evaluate(trace, grid),
            ConditionNode::Branch { op, children } => {
                let mut acc: Option<Vec<(bool, f64)>> = None;
                for child in children {
                    let values = child.evaluate(trace, grid)?;
                    acc = Some(match acc {
                        None => values,
                        Some(prev) => prev
                            .into_iter()
                            .zip(values)
                            .map(|((t0, m0), (t1, m1))| match op {
                                BoolOp::And => (t0 && t1, m0.min(m1)),
                                BoolOp::Or => (t0 || t1, m0.max(m1)),
                            })
                            .collect(),
                    });
                }
                Ok(acc.unwrap_or_else(|| vec![(false, f64::NEG_INFINITY); grid.len()]))
            }
        }
    }
}

impl Condition {
    fn natural_unit(&self) -> Result<Unit> {
        Ok(match self.signal {
            Signal::Speed => Unit::MeterPerSecond,
            Signal::Acceleration => Unit::MeterPerSecondSquared,
            Signal::DistanceBetween => Unit::Meter,
            Signal::Time => Unit::Second,
            Signal::MetricValue => {
                let name = self.metric.as_deref().ok_or_else(|| Error::InvalidCriterion {
                    id: String::new(),
                    message: "metric_value condition names no metric".into(),
                })?;
                registry::lookup(name)?.unit
            }
        })
    }

    fn validate(&self) -> Result<()> {
        let unit = self.natural_unit()?;
        if let Some(u) = self.unit {
            if u != unit {
                return Err(Error::UnitMismatch {
                    metric: unit.to_string(),
                    criterion: u.to_string(),
                });
            }
        }
        let needed = match self.signal {
            Signal::Speed | Signal::Acceleration => 1,
            Signal::DistanceBetween => 2,
            Signal::Time | Signal::MetricValue => 0,
        };
        if self.actors.len() != needed && needed > 0 {
            return Err(Error::InvalidCriterion {
                id: String::new(),
                message: format!("{:?} condition needs {needed} actor(s)", self.signal),
            });
        }
        if !self.bound.is_finite() {
            return Err(Error::InvalidCriterion {
                id: String::new(),
                message: "condition bound must be finite".into(),
            });
        }
        Ok(())
    }

    fn values(&self, trace: &Trace, grid: &[f64]) -> Result<Vec<Option<f64>>> {
        match self.signal {
            Signal::Time => Ok(grid.iter().map(|&t| Some(t)).collect()),
            Signal::Speed | Signal::Acceleration => {
                let track = trace.track(&self.actors[0])?;
                grid.iter()
                    .map(|&t| {
                        let s = state_at(track, t)?;
                        Ok(Some(if self.signal == Signal::Speed { s.speed } else { s.accel }))
                    })
                    .collect()
            }
            Signal::DistanceBetween => {
                let (a, b) = (trace.track(&self.actors[0])?, trace.track(&self.actors[1])?);
                grid.iter()
                    .map(|&t| Ok(Some(state_at(a, t)?.position().distance(state_at(b, t)?.position()))))
                    .collect()
            }
            Signal::MetricValue => {
                let name = self.metric.as_deref().unwrap_or_default();
                let actors: Vec<&str> = self.actors.iter().map(String::as_str).collect();
                let series = registry::compute_series(name, trace, &actors, &Default::default())?;
                Ok(grid.iter().map(|&t| series_value_at(&series, t)).collect())
            }
        }
    }

    fn evaluate(&self, trace: &Trace, grid: &[f64]) -> Result<Vec<(bool, f64)>> {
        Ok(self
            .values(trace, grid)?
            .into_iter()
            .map(|v| match v {
                Some(v) => (self.comparator.holds(v, self.bound), self.comparator.margin(v, self.bound)),
                None => (false, f64::NEG_INFINITY),
            })
            .collect())
    }
}

/// Value of `series` at `t`: the sample itself, or the linear blend of two
/// defined neighbours. Undefined otherwise.
fn series_value_at(series: &MetricSeries, t: f64) -> Option<f64> {
    let r = &series.results;
    let k = r.partition_point(|x| x.time < t - TIME_SLACK);
    let at = r.get(k)?;
    if (at.time - t).abs() <= TIME_SLACK {
        return at.value();
    }
    let before = r.get(k.checked_sub(1)?)?;
    let (v0, v1) = (before.value()?, at.value()?);
    Some(v0 + (v1 - v0) * (t - before.time) / (at.time - before.time))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// The first of two actors reaches the crossing of their paths.
    ActorPassedConflict,
    /// First contact of two actors' bounding circles.
    Collision,
    ScenarioEnd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StopRule {
    ConditionNoLongerFulfilled,
    Elapsed {
        duration: f64,
    },
    Event {
        name: EventKind,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        actors: Vec<String>,
    },
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule::ConditionNoLongerFulfilled
    }
}

/// When a criterion applies. Without a start condition the period spans the
/// whole trace.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ApplicationPeriod {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_condition: Option<ConditionNode>,
    #[serde(default)]
    pub stop: StopRule,
}

impl ApplicationPeriod {
    pub fn always() -> Self {
        Self::default()
    }

    pub fn when(condition: ConditionNode, stop: StopRule) -> Self {
        Self {
            start_condition: Some(condition),
            stop,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(c) = &self.start_condition {
            c.validate()?;
        }
        if let StopRule::Elapsed { duration } = self.stop {
            if !(duration > 0.0) {
                return Err(Error::InvalidCriterion {
                    id: String::new(),
                    message: format!("elapsed duration {duration} must be positive"),
                });
            }
        }
        Ok(())
    }
}

/// Edge time between two samples, from the zero crossing of the margin.
/// Falls back to the sample on the true side when the margins do not bracket
/// zero.
fn edge_time(t0: f64, m0: f64, t1: f64, m1: f64, rising: bool) -> f64 {
    if m0.is_finite() && m1.is_finite() && m0 != m1 {
        let f = m0 / (m0 - m1);
        if (0.0..=1.0).contains(&f) {
            return t0 + (t1 - t0) * f;
        }
    }
    if rising {
        t1
    } else {
        t0
    }
}

/// Maximal intervals where the condition holds on `grid`.
fn holding_intervals(grid: &[f64], truth: &[(bool, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut open: Option<f64> = None;
    for i in 0..grid.len() {
        let (now, m1) = truth[i];
        match (open, now) {
            (None, true) => {
                open = Some(if i == 0 {
                    grid[0]
                } else {
                    edge_time(grid[i - 1], truth[i - 1].1, grid[i], m1, true)
                });
            }
            (Some(start), false) => {
                out.push((start, edge_time(grid[i - 1], truth[i - 1].1, grid[i], m1, false)));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(start) = open {
        out.push((start, grid[grid.len() - 1]));
    }
    out
}

fn default_pair(trace: &Trace, actors: &[String]) -> Result<(String, String)> {
    match actors {
        [a, b] => Ok((a.clone(), b.clone())),
        [] => {
            let ids: Vec<&str> = trace.actor_ids().collect();
            registry::default_actors(&ids, 2).map(|v| (v[0].to_owned(), v[1].to_owned()))
        }
        _ => Err(Error::InvalidCriterion {
            id: String::new(),
            message: "event needs exactly two actors".into(),
        }),
    }
}

/// Time at which `actor` has traveled `arc` meters along its path.
fn time_reaching(trace: &Trace, actor: &str, arc: f64) -> Result<Option<f64>> {
    let track = trace.track(actor)?;
    let path = TraveledPath::of(track);
    let times: Vec<f64> = track.states().iter().map(|s| s.time).collect();
    let k = times.partition_point(|&t| path.arc_at(t) < arc);
    Ok(match k {
        k if k >= times.len() => None,
        0 => Some(times[0]),
        k => {
            let (a0, a1) = (path.arc_at(times[k - 1]), path.arc_at(times[k]));
            Some(times[k - 1] + (times[k] - times[k - 1]) * (arc - a0) / (a1 - a0))
        }
    })
}

fn event_times(trace: &Trace, name: EventKind, actors: &[String]) -> Result<Vec<f64>> {
    let end = trace.overlap_all().1;
    Ok(match name {
        EventKind::ScenarioEnd => vec![end],
        EventKind::ActorPassedConflict => {
            let (a, b) = default_pair(trace, actors)?;
            let conflict = match locate_conflict(trace, &a, &b) {
                Ok(c) => c,
                Err(Error::NoCrossing(..)) => return Ok(Vec::new()),
                Err(e) => return Err(e),
            };
            let ta = time_reaching(trace, &a, conflict.ego_arc_length)?;
            let tb = time_reaching(trace, &b, conflict.other_arc_length)?;
            ta.into_iter().chain(tb).reduce(f64::min).into_iter().collect()
        }
        EventKind::Collision => {
            let (a, b) = default_pair(trace, actors)?;
            let (samples, radii) = pair_samples(trace, &a, &b)?;
            let grid: Vec<f64> = samples.iter().map(|s| s.time).collect();
            let truth: Vec<(bool, f64)> = samples
                .iter()
                .map(|s| {
                    let clearance = s.a.position().distance(s.b.position()) - radii;
                    (clearance <= 0.0, -clearance)
                })
                .collect();
            holding_intervals(&grid, &truth).into_iter().map(|(s, _)| s).collect()
        }
    })
}

/// Disjoint, sorted intervals during which the period is active.
pub fn active_intervals(period: &ApplicationPeriod, trace: &Trace) -> Result<Vec<(f64, f64)>> {
    period.validate()?;
    let grid = trace.grid();
    let (start, end) = (grid[0], grid[grid.len() - 1]);
    let holding = match &period.start_condition {
        None => vec![(start, end)],
        Some(c) => holding_intervals(&grid, &c.evaluate(trace, &grid)?),
    };
    Ok(match &period.stop {
        StopRule::ConditionNoLongerFulfilled => holding,
        StopRule::Elapsed { duration } => {
            let mut out: Vec<(f64, f64)> = Vec::new();
            let mut window_end = f64::NEG_INFINITY;
            for (s, _) in holding {
                if s >= window_end {
                    window_end = s + duration;
                    out.push((s, window_end.min(end)));
                }
            }
            out
        }
        StopRule::Event { name, actors } => {
            let events = event_times(trace, *name, actors)?;
            let mut out: Vec<(f64, f64)> = Vec::new();
            let mut last_end = f64::NEG_INFINITY;
            for (s, _) in holding {
                if s < last_end {
                    continue;
                }
                let stop = match name {
                    EventKind::ActorPassedConflict => match events.first() {
                        Some(&e) if e <= s => continue,
                        Some(&e) => e,
                        None => end,
                    },
                    _ => events.iter().copied().find(|&e| e > s).unwrap_or(end),
                };
                out.push((s, stop));
                last_end = stop;
            }
            out
        }
    })
}

pub(crate) fn inside(intervals: &[(f64, f64)], t: f64) -> bool {
    intervals
        .iter()
        .any(|&(a, b)| t >= a - TIME_SLACK && t <= b + TIME_SLACK)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::geometry::Vec2;
    use crate::trace::{ActorClass, ActorState, ActorTrack};

    /// Ego driving along +x with a prescribed acceleration profile.
    fn trace_with_accel(accel: impl Fn(f64) -> f64) -> Trace {
        let dt = 0.1;
        let mut v: f64 = 10.0;
        let mut x = 0.0;
        let states: Vec<ActorState> = (0..100)
            .map(|k| {
                let t = k as f64 * dt;
                let a = accel(t);
                let s = ActorState { time: t, x, y: 0.0, heading: 0.0, speed: v, accel: a };
                x += v * dt;
                v = (v + a * dt).max(0.0);
                s
            })
            .collect();
        let ego = ActorTrack::new("ego", ActorClass::Vehicle, 1.0, states).unwrap();
        let other = crate::trace::test_support::straight(
            "ped", ActorClass::Pedestrian, Vec2::new(50.0, 10.0), Vec2::new(0.0, -1.0), 0.0, dt, 100,
        );
        Trace::new("t", dt, [ego, other], BTreeMap::new()).unwrap()
    }

    #[test]
    fn braking_phases_become_intervals() {
        let t = trace_with_accel(|t| if (2.0..4.0).contains(&t) || (6.0..7.0).contains(&t) { -2.0 } else { 0.5 });
        let p = ApplicationPeriod::when(
            ConditionNode::leaf(Signal::Acceleration, &["ego"], Comparator::Lt, 0.0),
            StopRule::ConditionNoLongerFulfilled,
        );
        let iv = active_intervals(&p, &t).unwrap();
        assert_eq!(iv.len(), 2);
        for ((a, b), (ea, eb)) in iv.iter().zip([(2.0, 4.0), (6.0, 7.0)]) {
            assert!((a - ea).abs() <= 0.1 && (b - eb).abs() <= 0.1, "{a} {b}");
        }
    }

    #[test]
    fn never_true_is_empty() {
        let t = trace_with_accel(|_| 0.0);
        let p = ApplicationPeriod::when(
            ConditionNode::leaf(Signal::Speed, &["ego"], Comparator::Gt, 100.0),
            StopRule::ConditionNoLongerFulfilled,
        );
        assert!(active_intervals(&p, &t).unwrap().is_empty());
    }

    #[test]
    fn elapsed_window_from_start() {
        let t = trace_with_accel(|_| 0.0);
        let p = ApplicationPeriod::when(
            ConditionNode::leaf(Signal::Time, &[], Comparator::Ge, 0.0),
            StopRule::Elapsed { duration: 2.0 },
        );
        assert_eq!(active_intervals(&p, &t).unwrap(), vec![(0.0, 2.0)]);
    }

    #[test]
    fn edges_are_interpolated_on_the_margin() {
        let t = trace_with_accel(|_| 0.0);
        let p = ApplicationPeriod::when(
            ConditionNode::all(vec![
                ConditionNode::leaf(Signal::Time, &[], Comparator::Gt, 1.234),
                ConditionNode::leaf(Signal::Time, &[], Comparator::Lt, 5.678),
            ]),
            StopRule::ConditionNoLongerFulfilled,
        );
        let iv = active_intervals(&p, &t).unwrap();
        assert_eq!(iv.len(), 1);
        assert!((iv[0].0 - 1.234).abs() < 1e-9 && (iv[0].1 - 5.678).abs() < 1e-9);
    }

    #[test]
    fn or_joins_and_scenario_end_closes() {
        let t = trace_with_accel(|_| 0.0);
        let p = ApplicationPeriod::when(
            ConditionNode::any(vec![
                ConditionNode::leaf(Signal::Time, &[], Comparator::Lt, 1.0),
                ConditionNode::leaf(Signal::Time, &[], Comparator::Gt, 3.0),
            ]),
            StopRule::Event { name: EventKind::ScenarioEnd, actors: vec![] },
        );
        let iv = active_intervals(&p, &t).unwrap();
        assert_eq!(iv, vec![(0.0, 9.9)]);
    }

    #[test]
    fn single_child_branch_is_rejected() {
        let p = ApplicationPeriod::when(
            ConditionNode::all(vec![ConditionNode::leaf(Signal::Time, &[], Comparator::Gt, 0.0)]),
            StopRule::ConditionNoLongerFulfilled,
        );
        assert!(p.validate().is_err());
        let p = ApplicationPeriod::when(
            ConditionNode::leaf(Signal::Time, &[], Comparator::Gt, 0.0),
            StopRule::Elapsed { duration: 0.0 },
        );
        assert!(p.validate().is_err());
    }

    #[test]
    fn conditions_round_trip_through_json() {
        let json = r#"{"start_condition":{"op":"AND","children":[
            {"signal":"acceleration","actors":["ego"],"comparator":"<","bound":0},
            {"signal":"distance_between","actors":["ego","ped"],"comparator":"<=","bound":30,"unit":"m"}]},
            "stop":{"type":"event","name":"actor_passed_conflict"}}"#;
        let p: ApplicationPeriod = serde_json::from_str(json).unwrap();
        p.validate().unwrap();
        let back: ApplicationPeriod = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn comparators() {
        assert!(!Comparator::Gt.holds(1.5, 1.5));
        assert!(Comparator::Ge.holds(1.5, 1.5));
        assert!(Comparator::Eq.holds(1.0 + 1e-12, 1.0));
        assert!(!Comparator::Eq.holds(1.0 + 1e-6, 1.0));
        for c in [Comparator::Lt, Comparator::Le, Comparator::Gt, Comparator::Ge] {
            assert_eq!(c.holds(1.0, 2.0), !c.negated().holds(1.0, 2.0));
            assert_eq!(c.holds(1.0, 2.0), c.margin(1.0, 2.0) > 0.0);
        }
    }
}
