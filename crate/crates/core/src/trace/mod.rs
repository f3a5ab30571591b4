//! Multi-actor trajectory traces: the substrate every metric consumes.
//!
//! A [`Trace`] holds one [`ActorTrack`] per actor. Tracks are immutable once
//! constructed and their invariants (strictly increasing times, at least two
//! states, positive radius) are checked by the constructors, so downstream
//! code can index states without re-validating.

mod interp;
mod io;
mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, Vec2};

pub use interp::{resample, state_at};
pub use io::{
    load_trace, load_trace_file, read_trace, write_meta, write_trace, write_trace_files,
    TraceFormat, TraceMeta, ACCEL_SOURCE_KEY, PARAM_PREFIX, RUN_INDEX_KEY,
};
pub use validate::{
    validate_trace, Issue, Severity, ValidationReport, CODE_AVAILABILITY, CODE_COLLISION, CODE_NON_UNIFORM,
    CODE_SYNCHRONIZATION,
};

/// Nominal bounding-circle radius of a vehicle.
pub const VEHICLE_RADIUS: f64 = 1.0;
/// Nominal bounding-circle radius of a pedestrian.
pub const PEDESTRIAN_RADIUS: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActorClass {
    Vehicle,
    Pedestrian,
    Other,
}

impl ActorClass {
    pub fn default_radius(self) -> f64 {
        match self {
            ActorClass::Vehicle | ActorClass::Other => VEHICLE_RADIUS,
            ActorClass::Pedestrian => PEDESTRIAN_RADIUS,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ActorClass::Vehicle => "vehicle",
            ActorClass::Pedestrian => "pedestrian",
            ActorClass::Other => "other",
        }
    }
}

impl fmt::Display for ActorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ActorClass {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "vehicle" => Ok(ActorClass::Vehicle),
            "pedestrian" => Ok(ActorClass::Pedestrian),
            "other" => Ok(ActorClass::Other),
            _ => Err(format!("unknown actor class `{s}`")),
        }
    }
}

/// Kinematic state of one actor at one instant, in the map frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActorState {
    pub time: f64,
    pub x: f64,
    pub y: f64,
    /// Radians, counter-clockwise from +x, normalized to (−π, π].
    pub heading: f64,
    /// Non-negative speed along `heading`.
    pub speed: f64,
    /// Signed longitudinal acceleration.
    pub accel: f64,
}

impl ActorState {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::from_polar(self.speed, self.heading)
    }

    fn check(&self) -> std::result::Result<(), String> {
        if !self.time.is_finite() {
            return Err("time is not finite".into());
        }
        if !self.x.is_finite() || !self.y.is_finite() {
            return Err("position is not finite".into());
        }
        if !self.heading.is_finite() || !self.accel.is_finite() {
            return Err("heading/acceleration is not finite".into());
        }
        if !(self.speed >= 0.0) || !self.speed.is_finite() {
            return Err(format!("speed {} is negative or not finite", self.speed));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorTrack {
    id: String,
    class: ActorClass,
    radius: f64,
    states: Vec<ActorState>,
}

impl ActorTrack {
    /// Builds a track, normalizing headings into (−π, π].
    pub fn new(
        id: impl Into<String>,
        class: ActorClass,
        radius: f64,
        mut states: Vec<ActorState>,
    ) -> Result<Self> {
        let id = id.into();
        let invalid = |message: String| Error::InvalidTrack {
            actor: id.clone(),
            message,
        };
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(invalid(format!("radius {radius} must be positive")));
        }
        if states.len() < 2 {
            return Err(Error::TooFewStates {
                actor: id,
                count: states.len(),
            });
        }
        for (i, s) in states.iter_mut().enumerate() {
            s.check()
                .map_err(|m| invalid(format!("state {i}: {m}")))?;
            s.heading = normalize_angle(s.heading);
        }
        if let Some(w) = states.windows(2).find(|w| !(w[1].time > w[0].time)) {
            return Err(invalid(format!(
                "times not strictly increasing at t = {} s",
                w[1].time
            )));
        }
        Ok(Self {
            id,
            class,
            radius,
            states,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn class(&self) -> ActorClass {
        self.class
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn states(&self) -> &[ActorState] {
        &self.states
    }

    pub fn first_time(&self) -> f64 {
        self.states[0].time
    }

    pub fn last_time(&self) -> f64 {
        self.states[self.states.len() - 1].time
    }

    pub fn positions(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.states.iter().map(ActorState::position)
    }

    pub fn with_radius(mut self, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidTrack {
                actor: self.id,
                message: format!("radius {radius} must be positive"),
            });
        }
        self.radius = radius;
        Ok(self)
    }

    /// Shifts every position sideways by `offset` meters (left of the heading
    /// for positive values). Used to fabricate diverging executions.
    pub fn with_lateral_offset(&self, offset: f64) -> Self {
        let states = self
            .states
            .iter()
            .map(|s| {
                let left = Vec2::from_polar(1.0, s.heading).perp() * offset;
                ActorState {
                    x: s.x + left.x,
                    y: s.y + left.y,
                    ..*s
                }
            })
            .collect();
        Self {
            states,
            ..self.clone()
        }
    }
}

/// Timestamped multi-actor record of one scenario execution.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    scenario_id: String,
    time_step: f64,
    tracks: BTreeMap<String, ActorTrack>,
    metadata: BTreeMap<String, String>,
}

impl Trace {
    pub fn new(
        scenario_id: impl Into<String>,
        time_step: f64,
        tracks: impl IntoIterator<Item = ActorTrack>,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self> {
        let scenario_id = scenario_id.into();
        if scenario_id.is_empty() {
            return Err(Error::InvalidTrace("scenario_id is empty".into()));
        }
        if !(time_step > 0.0) || !time_step.is_finite() {
            return Err(Error::InvalidTrace(format!(
                "nominal time step {time_step} must be positive"
            )));
        }
        let mut map = BTreeMap::new();
        for t in tracks {
            let id = t.id().to_owned();
            if map.insert(id.clone(), t).is_some() {
                return Err(Error::InvalidTrace(format!("actor `{id}` appears twice")));
            }
        }
        if map.is_empty() {
            return Err(Error::InvalidTrace("trace has no tracks".into()));
        }
        let trace = Self {
            scenario_id,
            time_step,
            tracks: map,
            metadata,
        };
        let (start, end) = trace.overlap_all();
        if !(end > start) {
            return Err(Error::InvalidTrace(format!(
                "tracks share no overlap interval (latest start {start} s, earliest end {end} s)"
            )));
        }
        Ok(trace)
    }

    pub fn scenario_id(&self) -> &str {
        &self.scenario_id
    }

    pub fn time_step(&self) -> f64 {
        self.time_step
    }

    pub fn tracks(&self) -> impl Iterator<Item = &ActorTrack> {
        self.tracks.values()
    }

    pub fn actor_ids(&self) -> impl Iterator<Item = &str> {
        self.tracks.keys().map(String::as_str)
    }

    pub fn track(&self, actor_id: &str) -> Result<&ActorTrack> {
        self.tracks
            .get(actor_id)
            .ok_or_else(|| Error::UnknownActor(actor_id.to_owned()))
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn with_metadata(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.metadata.insert(key.into(), value.into());
        self
    }

    pub fn with_scenario_id(mut self, scenario_id: impl Into<String>) -> Self {
        let id = scenario_id.into();
        if !id.is_empty() {
            self.scenario_id = id;
        }
        self
    }

    /// Replaces the track with the same id.
    pub fn with_track(mut self, track: ActorTrack) -> Result<Self> {
        if !self.tracks.contains_key(track.id()) {
            return Err(Error::UnknownActor(track.id().to_owned()));
        }
        self.tracks.insert(track.id().to_owned(), track);
        let (start, end) = self.overlap_all();
        if !(end > start) {
            return Err(Error::InvalidTrace("tracks share no overlap interval".into()));
        }
        Ok(self)
    }

    /// Interval shared by every track.
    pub fn overlap_all(&self) -> (f64, f64) {
        self.tracks.values().fold(
            (f64::NEG_INFINITY, f64::INFINITY),
            |(s, e), t| (s.max(t.first_time()), e.min(t.last_time())),
        )
    }

    /// Interval shared by two actors.
    pub fn overlap(&self, a: &str, b: &str) -> Result<(f64, f64)> {
        let (ta, tb) = (self.track(a)?, self.track(b)?);
        let start = ta.first_time().max(tb.first_time());
        let end = ta.last_time().min(tb.last_time());
        if end >= start {
            Ok((start, end))
        } else {
            Err(Error::EmptyOverlap(a.to_owned(), b.to_owned()))
        }
    }

    /// Sorted union of both actors' sample times inside their overlap.
    /// Times closer than 1e-9 s are merged.
    pub fn common_times(&self, a: &str, b: &str) -> Result<Vec<f64>> {
        let (start, end) = self.overlap(a, b)?;
        let within = |t: &ActorTrack| {
            t.states()
                .iter()
                .map(|s| s.time)
                .filter(|&x| x >= start && x <= end)
                .collect::<Vec<_>>()
        };
        Ok(merge_times(&within(self.track(a)?), &within(self.track(b)?)))
    }

    /// Sorted union of every track's sample times inside the shared overlap.
    pub fn grid(&self) -> Vec<f64> {
        let (start, end) = self.overlap_all();
        self.tracks.values().fold(Vec::new(), |acc, t| {
            let times: Vec<f64> = t
                .states()
                .iter()
                .map(|s| s.time)
                .filter(|&x| x >= start && x <= end)
                .collect();
            merge_times(&acc, &times)
        })
    }
}

pub(crate) fn merge_times(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len().max(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if (x - y).abs() <= 1e-9 => {
                i += 1;
                j += 1;
                x
            }
            (Some(&x), Some(&y)) if x < y => {
                i += 1;
                x
            }
            (Some(_), Some(&y)) => {
                j += 1;
                y
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        if out.last().map_or(true, |&l: &f64| next - l > 1e-9) {
            out.push(next);
        }
    }
    out
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    /// Straight constant-velocity track sampled every `dt` from `t0`.
    pub fn straight(
        id: &str,
        class: ActorClass,
        start: Vec2,
        velocity: Vec2,
        t0: f64,
        dt: f64,
        n: usize,
    ) -> ActorTrack {
        let heading = if velocity.norm() > 0.0 { velocity.angle() } else { 0.0 };
        let states = (0..n)
            .map(|i| {
                let t = t0 + i as f64 * dt;
                let p = start + velocity * (t - t0);
                ActorState {
                    time: t,
                    x: p.x,
                    y: p.y,
                    heading,
                    speed: velocity.norm(),
                    accel: 0.0,
                }
            })
            .collect();
        ActorTrack::new(id, class, class.default_radius(), states).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::straight;
    use super::*;

    fn state(t: f64) -> ActorState {
        ActorState {
            time: t,
            x: 0.0,
            y: 0.0,
            heading: 0.0,
            speed: 0.0,
            accel: 0.0,
        }
    }

    #[test]
    fn track_rejects_single_state() {
        let err = ActorTrack::new("a", ActorClass::Vehicle, 1.0, vec![state(0.0)]).unwrap_err();
        assert!(matches!(err, Error::TooFewStates { count: 1, .. }));
    }

    #[test]
    fn track_rejects_non_increasing_times() {
        let err = ActorTrack::new(
            "a",
            ActorClass::Vehicle,
            1.0,
            vec![state(0.0), state(1.0), state(1.0)],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidTrack { .. }));
    }

    #[test]
    fn track_rejects_negative_speed_and_radius() {
        let mut s = state(1.0);
        s.speed = -0.1;
        assert!(ActorTrack::new("a", ActorClass::Vehicle, 1.0, vec![state(0.0), s]).is_err());
        assert!(
            ActorTrack::new("a", ActorClass::Vehicle, 0.0, vec![state(0.0), state(1.0)]).is_err()
        );
    }

    #[test]
    fn trace_requires_overlap() {
        let a = straight("a", ActorClass::Vehicle, Vec2::default(), Vec2::default(), 0.0, 1.0, 3);
        let b = straight("b", ActorClass::Vehicle, Vec2::default(), Vec2::default(), 5.0, 1.0, 3);
        assert!(Trace::new("s", 1.0, [a.clone(), b], BTreeMap::new()).is_err());
        assert!(Trace::new("", 1.0, [a], BTreeMap::new()).is_err());
    }

    #[test]
    fn merge_times_dedups_within_tolerance() {
        let m = merge_times(&[0.0, 1.0, 2.0], &[1.0 + 1e-12, 1.5, 3.0]);
        assert_eq!(m, vec![0.0, 1.0, 1.5, 2.0, 3.0]);
    }

    #[test]
    fn lateral_offset_moves_left_of_heading() {
        let t = straight(
            "a",
            ActorClass::Vehicle,
            Vec2::default(),
            Vec2::new(1.0, 0.0),
            0.0,
            1.0,
            3,
        );
        let shifted = t.with_lateral_offset(0.5);
        for s in shifted.states() {
            assert!((s.y - 0.5).abs() < 1e-15);
        }
    }
}
