//! Deterministic kinematic simulator for the urban-intersection scenario
//! family: the ego vehicle turns right into the exit arm while a pedestrian
//! crosses that arm.
//!
//! The ego follows its route polyline at `v_max`. When the pedestrian is on
//! the crossing and the predicted arrival-time gap at the conflict point drops
//! below `trigger_gap_time`, the ego yields: it brakes at `comfort_decel`, or
//! at `max_decel` when a comfortable stop would end inside the conflict zone,
//! and holds until the pedestrian has cleared the zone. It then accelerates at
//! `resume_accel` back to `v_max`. The pedestrian waits at the curb until the
//! ego is within `d_start` and then crosses at `street_width / t_cross`.
//!
//! Integration is explicit Euler at a fixed step; every run is a pure function
//! of its inputs, so repeated runs are bit-identical.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Polyline, Vec2};
use crate::scenario::{concretize, ConcreteScenario, LogicalScenario};
use crate::trace::{ActorClass, ActorState, ActorTrack, Trace, PEDESTRIAN_RADIUS, VEHICLE_RADIUS};

pub const EGO_ID: &str = "ego";
pub const PEDESTRIAN_ID: &str = "ped";
pub const SIMULATOR_NAME: &str = "scenq-kinematic";

/// Ego target speed, km/h.
pub const PARAM_V_MAX: &str = "v_max";
/// Pedestrian crossing duration, s.
pub const PARAM_T_CROSS: &str = "t_cross";
/// Ego–pedestrian distance that starts the crossing, m.
pub const PARAM_D_START: &str = "d_start";
/// Ego start position along the approach axis, measured back from the
/// intersection center, m.
pub const PARAM_EGO_START_X: &str = "ego_start_x";

/// Metadata key: time the pedestrian left the curb (absent if never).
pub const META_PED_START: &str = "ped_start_time";
/// Metadata key: whether the ego entered its yielding mode.
pub const META_EGO_YIELDED: &str = "ego_yielded";

const SPEED_FLOOR: f64 = 1e-3;
const KMH_PER_MPS: f64 = 3.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub time_step: f64,
    pub max_duration: f64,
    pub street_width: f64,
    pub ego_route: Vec<Vec2>,
    pub ped_crossing: [Vec2; 2],
    pub comfort_decel: f64,
    pub max_decel: f64,
    pub trigger_gap_time: f64,
    pub resume_accel: f64,
    pub ego_radius: f64,
    pub ped_radius: f64,
}

impl Default for SimConfig {
    /// Right-hand traffic, intersection center at the origin, 7 m streets.
    /// The ego drives north in the lane at x = 1.75, turns right on a 5 m
    /// radius into the east-bound lane at y = −1.75 and leaves at x = 100.
    /// The pedestrian crosses the exit arm at x = 12 from the north curb.
    fn default() -> Self {
        let lane = 1.75;
        let turn_radius = 5.0;
        let corner = lane + turn_radius;
        let center = Vec2::new(corner, -corner);
        let arc_segments = 16;
        let mut route = vec![Vec2::new(lane, -60.0)];
        for i in 0..=arc_segments {
            let angle = std::f64::consts::PI - FRAC_PI_2 * i as f64 / arc_segments as f64;
            route.push(center + Vec2::from_polar(turn_radius, angle));
        }
        // pin the arc endpoints to exact lane coordinates
        route[1] = Vec2::new(lane, -corner);
        route[arc_segments + 1] = Vec2::new(corner, -lane);
        route.push(Vec2::new(100.0, -lane));
        Self {
            time_step: 0.01,
            max_duration: 40.0,
            street_width: 7.0,
            ego_route: route,
            ped_crossing: [Vec2::new(12.0, 3.5), Vec2::new(12.0, -3.5)],
            comfort_decel: 3.0,
            max_decel: 8.0,
            trigger_gap_time: 2.0,
            resume_accel: 2.0,
            ego_radius: VEHICLE_RADIUS,
            ped_radius: PEDESTRIAN_RADIUS,
        }
    }
}

impl SimConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let c: Self = serde_json::from_slice(bytes)?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&bytes)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let positive = [
            ("time_step", self.time_step),
            ("street_width", self.street_width),
            ("comfort_decel", self.comfort_decel),
            ("max_decel", self.max_decel),
            ("resume_accel", self.resume_accel),
            ("ego_radius", self.ego_radius),
            ("ped_radius", self.ped_radius),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} = {v} must be positive"));
            }
        }
        if !(self.max_duration >= 1.0) || !self.max_duration.is_finite() {
            return bad(format!("max_duration = {} must be at least 1 s", self.max_duration));
        }
        if !(self.trigger_gap_time >= 0.0) {
            return bad("trigger_gap_time must be non-negative".into());
        }
        if self.comfort_decel > self.max_decel {
            return bad("comfort_decel exceeds max_decel".into());
        }
        if !(Polyline::new(self.ego_route.iter().copied()).length() > 0.0) {
            return bad("ego_route is degenerate".into());
        }
        let crossing = self.ped_crossing[0].distance(self.ped_crossing[1]);
        if !(crossing > 0.0) {
            return bad("ped_crossing is degenerate".into());
        }
        if (crossing - self.street_width).abs() > 1e-6 {
            return bad(format!(
                "ped_crossing length {crossing} m differs from street_width {} m",
                self.street_width
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub trace: Trace,
    pub collided: bool,
    /// Minimum center-to-center distance between ego and pedestrian.
    pub min_distance: f64,
    /// Ego reached the end of its route.
    pub completed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Pedestrian {
    Waiting,
    /// Walking along the crossing direction; past the far curb the
    /// pedestrian keeps walking away from the road.
    Walking { start_step: usize },
}

fn route_for(config: &SimConfig, start_x: Option<f64>) -> Result<Polyline> {
    let mut points = config.ego_route.clone();
    if let Some(start) = start_x {
        if points.len() < 2 {
            return Err(Error::InvalidConfig("ego_route needs two points".into()));
        }
        let p1 = points[1];
        let dir = (p1 - points[0])
            .normalized()
            .ok_or_else(|| Error::InvalidConfig("first route segment is degenerate".into()))?;
        let along = -start - p1.dot(dir);
        if !(along < 0.0) {
            return Err(Error::InvalidConfig(format!(
                "{PARAM_EGO_START_X} = {start} m does not lie before the end of the approach arm"
            )));
        }
        points[0] = p1 + dir * along;
    }
    Ok(Polyline::new(points))
}

/// Runs one concrete scenario.
pub fn simulate(concrete: &ConcreteScenario, config: &SimConfig) -> Result<SimOutcome> {
    config.validate()?;
    let v_max_kmh = concrete.get(PARAM_V_MAX)?;
    let t_cross = concrete.get(PARAM_T_CROSS)?;
    let d_start = concrete.get(PARAM_D_START)?;
    if !(v_max_kmh > 0.0) || !v_max_kmh.is_finite() {
        return Err(Error::InvalidConfig(format!("{PARAM_V_MAX} = {v_max_kmh} must be positive")));
    }
    if !(t_cross > 0.0) || !t_cross.is_finite() {
        return Err(Error::InvalidConfig(format!("{PARAM_T_CROSS} = {t_cross} must be positive")));
    }
    if !(d_start >= 0.0) {
        return Err(Error::InvalidConfig(format!("{PARAM_D_START} = {d_start} must be non-negative")));
    }
    let v_max = v_max_kmh / KMH_PER_MPS;
    let route = route_for(config, concrete.bindings.get(PARAM_EGO_START_X).copied())?;
    let crossing = Polyline::new(config.ped_crossing);
    let conflict = route.first_crossing(&crossing).ok_or_else(|| {
        Error::InvalidConfig("ego route does not cross the pedestrian crossing".into())
    })?;

    let dt = config.time_step;
    let ped_speed = config.street_width / t_cross;
    let ped_heading = crossing.heading_at(0.0);
    let crossing_len = crossing.length();
    let crossing_dir = Vec2::from_polar(1.0, ped_heading);
    let contact = config.ego_radius + config.ped_radius;
    // conflict zone half-length along either path
    let zone = contact;
    let zone_entry = conflict.arc_self - zone;
    let route_len = route.length();
    let last_step = (config.max_duration / dt + 1e-9).floor() as usize;

    let mut ego_states = Vec::with_capacity(last_step + 1);
    let mut ped_states = Vec::with_capacity(last_step + 1);
    let (mut s, mut v) = (0.0_f64, v_max);
    let mut ped = Pedestrian::Waiting;
    let mut ped_arc = 0.0_f64;
    let mut yielding = false;
    let mut ever_yielded = false;
    let mut ped_start_time = None;
    let mut min_distance = f64::INFINITY;
    let (mut collided, mut completed) = (false, false);

    for k in 0..=last_step {
        let t = k as f64 * dt;
        let ego_pos = route.point_at(s);
        let ped_pos = crossing.point_at(ped_arc) + crossing_dir * (ped_arc - crossing_len).max(0.0);
        let distance = ego_pos.distance(ped_pos);

        if ped == Pedestrian::Waiting && distance <= d_start {
            ped = Pedestrian::Walking { start_step: k };
            ped_start_time = Some(t);
        }
        let walking = matches!(ped, Pedestrian::Walking { .. });

        // yielding decision
        let threat = walking && ped_arc <= conflict.arc_other + zone;
        if yielding && !threat {
            yielding = false;
        }
        if !yielding && threat && s < zone_entry {
            let t_ego = (conflict.arc_self - s) / v.max(SPEED_FLOOR);
            let t_ped = (conflict.arc_other - ped_arc).max(0.0) / ped_speed;
            if (t_ego - t_ped).abs() < config.trigger_gap_time {
                yielding = true;
                ever_yielded = true;
            }
        }
        let command = if yielding {
            if v <= 0.0 {
                0.0
            } else if s + v * v / (2.0 * config.comfort_decel) <= zone_entry {
                -config.comfort_decel
            } else {
                -config.max_decel
            }
        } else if v < v_max {
            config.resume_accel
        } else {
            0.0
        };
        let (accel, v_next) = apply_speed_limits(v, command, v_max, dt, config);

        ego_states.push(ActorState {
            time: t,
            x: ego_pos.x,
            y: ego_pos.y,
            heading: route.heading_at(s),
            speed: v,
            accel,
        });
        ped_states.push(ActorState {
            time: t,
            x: ped_pos.x,
            y: ped_pos.y,
            heading: ped_heading,
            speed: if walking { ped_speed } else { 0.0 },
            accel: 0.0,
        });
        min_distance = min_distance.min(distance);

        if distance <= contact {
            collided = true;
            break;
        }
        if s >= route_len {
            completed = true;
            break;
        }
        if k == last_step {
            break;
        }

        s = (s + v * dt).min(route_len);
        v = v_next;
        if let Pedestrian::Walking { start_step } = ped {
            ped_arc = (k + 1 - start_step) as f64 * dt * ped_speed;
        }
    }

    let mut metadata: BTreeMap<String, String> = concrete
        .bindings
        .iter()
        .map(|(k, v)| (format!("param.{k}"), v.to_string()))
        .collect();
    metadata.insert("logical_id".into(), concrete.logical_id.clone());
    metadata.insert("index".into(), concrete.index.to_string());
    metadata.insert("simulator".into(), SIMULATOR_NAME.into());
    metadata.insert(META_EGO_YIELDED.into(), ever_yielded.to_string());
    if let Some(t) = ped_start_time {
        metadata.insert(META_PED_START.into(), t.to_string());
    }

    let ego = ActorTrack::new(EGO_ID, ActorClass::Vehicle, config.ego_radius, ego_states)?;
    let pedestrian = ActorTrack::new(PEDESTRIAN_ID, ActorClass::Pedestrian, config.ped_radius, ped_states)?;
    let trace = Trace::new(concrete.scenario_id.clone(), dt, [ego, pedestrian], metadata)?;
    Ok(SimOutcome {
        trace,
        collided,
        min_distance,
        completed,
    })
}

/// Clamps a commanded acceleration so speed stays in [0, v_max]; returns the
/// effective acceleration and the next speed.
fn apply_speed_limits(v: f64, command: f64, v_max: f64, dt: f64, config: &SimConfig) -> (f64, f64) {
    let next = v + command * dt;
    if next >= v_max {
        let a = ((v_max - v) / dt).clamp(0.0, config.resume_accel);
        (a, v_max)
    } else if next <= 0.0 {
        let a = (-v / dt).clamp(-config.max_decel, 0.0);
        (a, 0.0)
    } else {
        (command, next)
    }
}

/// Runs every concrete scenario of `logical`, in grid order.
pub fn simulate_batch(logical: &LogicalScenario, config: &SimConfig) -> Result<Vec<SimOutcome>> {
    simulate_batch_map(logical, config, |_, outcome| Ok(outcome))
}

/// Like [`simulate_batch`] but reduces each outcome with `f` as soon as it is
/// produced, so large batches need not hold every trace in memory.
pub fn simulate_batch_map<T, F>(logical: &LogicalScenario, config: &SimConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&ConcreteScenario, SimOutcome) -> Result<T> + Sync,
{
    config.validate()?;
    let scenarios = concretize(logical)?;
    scenarios
        .par_iter()
        .map(|c| {
            simulate(c, config)
                .and_then(|o| f(c, o))
                .map_err(|e| e.in_scenario(c.index))
        })
        .collect()
}
