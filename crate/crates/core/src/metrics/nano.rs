//! Per-time-step metrics.
//!
//! Pairwise series are sampled on the union of both actors' sample times
//! inside their overlap, so `f(a, b)` and `f(b, a)` share a time grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Polyline, Vec2};
use crate::trace::{state_at, ActorClass, ActorState, ActorTrack, Trace};

use super::{MetricSeries, Unit};

/// Closing speeds at or below this are treated as not closing.
const MIN_CLOSING_SPEED: f64 = 1e-6;
/// Accelerations at or above this are not braking.
const BRAKING_THRESHOLD: f64 = -1e-6;
/// Arrival-time speed floor for a momentarily stopped actor.
const GAP_TIME_SPEED_FLOOR: f64 = 1e-3;
/// Remaining arc lengths at or below this count as passed.
const PASSED_EPSILON: f64 = 1e-9;
/// Forward projections at or below this count as abeam or behind.
const AHEAD_EPSILON: f64 = 1e-9;

pub const WTTC_SCAN_STEP: f64 = 0.01;
pub const WTTC_HORIZON: f64 = 20.0;
pub const WTTC_RESOLUTION: f64 = 1e-4;

/// Worst-case acceleration assumed for a vehicle.
pub const DEFAULT_A_MAX_VEHICLE: f64 = 8.0;
/// Worst-case acceleration assumed for a pedestrian.
pub const DEFAULT_A_MAX_PEDESTRIAN: f64 = 2.0;

pub fn default_a_max(class: ActorClass) -> f64 {
    match class {
        ActorClass::Pedestrian => DEFAULT_A_MAX_PEDESTRIAN,
        ActorClass::Vehicle | ActorClass::Other => DEFAULT_A_MAX_VEHICLE,
    }
}

pub(crate) struct PairSample {
    pub time: f64,
    pub a: ActorState,
    pub b: ActorState,
}

pub(crate) fn pair_samples(trace: &Trace, a: &str, b: &str) -> Result<(Vec<PairSample>, f64)> {
    let (ta, tb) = (trace.track(a)?, trace.track(b)?);
    let times = trace.common_times(a, b)?;
    if times.is_empty() {
        return Err(Error::EmptyOverlap(a.to_owned(), b.to_owned()));
    }
    let samples = times
        .into_iter()
        .map(|t| {
            Ok(PairSample {
                time: t,
                a: state_at(ta, t)?,
                b: state_at(tb, t)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((samples, ta.radius() + tb.radius()))
}

/// Center-to-center distance.
pub fn euclidean_distance(trace: &Trace, actor_a: &str, actor_b: &str) -> Result<MetricSeries> {
    let (samples, _) = pair_samples(trace, actor_a, actor_b)?;
    let mut series = MetricSeries::new("euclidean_distance", Unit::Meter, &[actor_a, actor_b]);
    for s in samples {
        series.push(s.time, Some(s.a.position().distance(s.b.position())));
    }
    Ok(series)
}

/// Longitudinal distance from ego to target along the ego heading, minus the
/// sum of radii; defined only while the target is ahead.
pub fn headway(trace: &Trace, ego: &str, target: &str) -> Result<MetricSeries> {
    let (samples, radii) = pair_samples(trace, ego, target)?;
    let mut series = MetricSeries::new("headway", Unit::Meter, &[ego, target]);
    for s in samples {
        let forward = Vec2::from_polar(1.0, s.a.heading);
        let projection = (s.b.position() - s.a.position()).dot(forward);
        series.push(s.time, (projection > AHEAD_EPSILON).then(|| projection - radii));
    }
    Ok(series)
}

/// Range-rate time-to-collision: clearance over closing speed.
pub fn time_to_collision(dp: Vec2, dv: Vec2, radii: f64) -> Option<f64> {
    let distance = dp.norm();
    if distance == 0.0 {
        return None;
    }
    let closing = -dp.dot(dv) / distance;
    let gap = distance - radii;
    (closing > MIN_CLOSING_SPEED && gap > 0.0).then(|| gap / closing)
}

pub fn ttc(trace: &Trace, ego: &str, target: &str) -> Result<MetricSeries> {
    let (samples, radii) = pair_samples(trace, ego, target)?;
    let mut series = MetricSeries::new("ttc", Unit::Second, &[ego, target]);
    for s in samples {
        let dp = s.b.position() - s.a.position();
        let dv = s.b.velocity() - s.a.velocity();
        series.push(s.time, time_to_collision(dp, dv, radii));
    }
    Ok(series)
}

/// Earliest `t ≥ 0` at which the worst-case reachable discs of two actors may
/// touch: `‖dp + dv·t‖ ≤ radii + ½·a_sum·t²`. Scans at [`WTTC_SCAN_STEP`] up
/// to [`WTTC_HORIZON`] and bisects the first bracket to [`WTTC_RESOLUTION`].
pub fn worst_time_to_collision(dp: Vec2, dv: Vec2, radii: f64, a_sum: f64) -> Option<f64> {
    let clearance = |t: f64| (dp + dv * t).norm() - radii - 0.5 * a_sum * t * t;
    if clearance(0.0) <= 0.0 {
        return Some(0.0);
    }
    let steps = (WTTC_HORIZON / WTTC_SCAN_STEP).round() as usize;
    let mut lo = 0.0;
    for k in 1..=steps {
        let hi = k as f64 * WTTC_SCAN_STEP;
        if clearance(hi) <= 0.0 {
            let (mut lo, mut hi) = (lo, hi);
            while hi - lo > WTTC_RESOLUTION {
                let mid = 0.5 * (lo + hi);
                if clearance(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(hi);
        }
        lo = hi;
    }
    None
}

pub fn wttc(
    trace: &Trace,
    ego: &str,
    target: &str,
    a_max_ego: f64,
    a_max_target: f64,
) -> Result<MetricSeries> {
    for (who, a) in [(ego, a_max_ego), (target, a_max_target)] {
        if !(a >= 0.0) {
            return Err(Error::MetricArgs {
                metric: "wttc".into(),
                message: format!("a_max for `{who}` must be non-negative, got {a}"),
            });
        }
    }
    let (samples, radii) = pair_samples(trace, ego, target)?;
    let mut series = MetricSeries::new("wttc", Unit::Second, &[ego, target]);
    for s in samples {
        let dp = s.b.position() - s.a.position();
        let dv = s.b.velocity() - s.a.velocity();
        series.push(s.time, worst_time_to_collision(dp, dv, radii, a_max_ego + a_max_target));
    }
    Ok(series)
}

/// Crossing of two actors' traveled paths, with arc lengths measured from
/// each track's first sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConflictPoint {
    pub position: Vec2,
    pub ego_arc_length: f64,
    pub other_arc_length: f64,
}

/// Traveled path of a track and the cumulative arc length at every sample.
pub(crate) struct TraveledPath {
    pub polyline: Polyline,
    arc: Vec<f64>,
    times: Vec<f64>,
}

impl TraveledPath {
    pub fn of(track: &ActorTrack) -> Self {
        let mut arc = Vec::with_capacity(track.states().len());
        let mut acc = 0.0;
        let mut prev: Option<Vec2> = None;
        for p in track.positions() {
            if let Some(q) = prev {
                acc += p.distance(q);
            }
            arc.push(acc);
            prev = Some(p);
        }
        Self {
            polyline: Polyline::new(track.positions()),
            arc,
            times: track.states().iter().map(|s| s.time).collect(),
        }
    }

    /// Arc length reached at time `t` (linear between samples).
    pub fn arc_at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&x| x < t);
        if k == 0 {
            return self.arc[0];
        }
        if k >= self.times.len() {
            return self.arc[self.arc.len() - 1];
        }
        if self.times[k] == t {
            return self.arc[k];
        }
        let f = (t - self.times[k - 1]) / (self.times[k] - self.times[k - 1]);
        self.arc[k - 1] + (self.arc[k] - self.arc[k - 1]) * f
    }
}

/// First crossing of the ego's traveled path with the other actor's.
pub fn locate_conflict(trace: &Trace, ego: &str, other: &str) -> Result<ConflictPoint> {
    let pe = TraveledPath::of(trace.track(ego)?);
    let po = TraveledPath::of(trace.track(other)?);
    let c = pe
        .polyline
        .first_crossing(&po.polyline)
        .ok_or_else(|| Error::NoCrossing(ego.to_owned(), other.to_owned()))?;
    Ok(ConflictPoint {
        position: c.point,
        ego_arc_length: c.arc_self,
        other_arc_length: c.arc_other,
    })
}

/// Difference of predicted arrival times at the conflict point. Defined while
/// neither actor has passed it; the series is cut for good once either does.
pub fn gap_time(trace: &Trace, ego: &str, target: &str, conflict: &ConflictPoint) -> Result<MetricSeries> {
    if !(conflict.ego_arc_length >= 0.0 && conflict.other_arc_length >= 0.0) {
        return Err(Error::MetricArgs {
            metric: "gap_time".into(),
            message: "conflict arc lengths must be non-negative".into(),
        });
    }
    let paths = [
        (ego, TraveledPath::of(trace.track(ego)?), conflict.ego_arc_length),
        (target, TraveledPath::of(trace.track(target)?), conflict.other_arc_length),
    ];
    for (id, path, arc) in &paths {
        if path.polyline.offset_at(*arc, conflict.position) > 1e-6 {
            return Err(Error::ConflictNotOnPath((*id).to_owned()));
        }
    }
    let (samples, _) = pair_samples(trace, ego, target)?;
    let start = samples[0].time;
    for (id, path, arc) in &paths {
        if path.arc_at(start) >= *arc {
            return Err(Error::ConflictNotAhead((*id).to_owned()));
        }
    }
    let mut series = MetricSeries::new("gap_time", Unit::Second, &[ego, target]);
    let mut cut = false;
    for s in &samples {
        let remaining_ego = paths[0].2 - paths[0].1.arc_at(s.time);
        let remaining_target = paths[1].2 - paths[1].1.arc_at(s.time);
        cut |= remaining_ego <= PASSED_EPSILON || remaining_target <= PASSED_EPSILON;
        let value = (!cut).then(|| {
            let t_ego = remaining_ego / s.a.speed.max(GAP_TIME_SPEED_FLOOR);
            let t_target = remaining_target / s.b.speed.max(GAP_TIME_SPEED_FLOOR);
            (t_ego - t_target).abs()
        });
        series.push(s.time, value);
    }
    Ok(series)
}

fn braking_series(
    trace: &Trace,
    actor: &str,
    name: &str,
    unit: Unit,
    f: impl Fn(f64, f64) -> f64,
) -> Result<MetricSeries> {
    let track = trace.track(actor)?;
    let mut series = MetricSeries::new(name, unit, &[actor]);
    for s in track.states() {
        let value = (s.accel < BRAKING_THRESHOLD).then(|| f(s.speed, s.accel.abs()));
        series.push(s.time, value);
    }
    Ok(series)
}

/// Time to standstill at the current deceleration; defined only while braking.
pub fn braking_time(trace: &Trace, actor: &str) -> Result<MetricSeries> {
    braking_series(trace, actor, "braking_time", Unit::Second, |v, a| v / a)
}

/// Distance to standstill at the current deceleration; defined only while braking.
pub fn braking_distance(trace: &Trace, actor: &str) -> Result<MetricSeries> {
    braking_series(trace, actor, "braking_distance", Unit::Meter, |v, a| {
        v * v / (2.0 * a)
    })
}

/// Other actors within `radius` of the center actor per unit area.
pub fn traffic_density(trace: &Trace, center: &str, radius: f64) -> Result<MetricSeries> {
    if !(radius > 0.0) {
        return Err(Error::MetricArgs {
            metric: "traffic_density".into(),
            message: format!("radius must be positive, got {radius}"),
        });
    }
    let center_track = trace.track(center)?;
    let others: Vec<_> = trace.tracks().filter(|t| t.id() != center).collect();
    let area = std::f64::consts::PI * radius * radius;
    let mut series = MetricSeries::new("traffic_density", Unit::PerSquareMeter, &[center]);
    for s in center_track.states() {
        let count = others
            .iter()
            .filter_map(|o| state_at(o, s.time).ok())
            .filter(|o| o.position().distance(s.position()) <= radius)
            .count();
        series.push(s.time, Some(count as f64 / area));
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::trace::test_support::straight;

    fn pair(a: ActorTrack, b: ActorTrack) -> Trace {
        Trace::new("t", 0.1, [a, b], BTreeMap::new()).unwrap()
    }

    fn still(id: &str, class: ActorClass, p: Vec2) -> ActorTrack {
        straight(id, class, p, Vec2::default(), 0.0, 0.1, 3)
    }

    #[test]
    fn distance_basics() {
        let t = pair(
            still("a", ActorClass::Vehicle, Vec2::new(0.0, 0.0)),
            still("b", ActorClass::Vehicle, Vec2::new(3.0, 4.0)),
        );
        let d = euclidean_distance(&t, "a", "b").unwrap();
        assert!(d.results.iter().all(|r| r.defined && r.value == 5.0));
        let t = pair(
            still("a", ActorClass::Vehicle, Vec2::new(1.0, 1.0)),
            still("b", ActorClass::Vehicle, Vec2::new(1.0, 1.0)),
        );
        assert_eq!(euclidean_distance(&t, "a", "b").unwrap().results[0].value, 0.0);
    }

    #[test]
    fn unknown_actor_is_an_error() {
        let t = pair(
            still("a", ActorClass::Vehicle, Vec2::default()),
            still("b", ActorClass::Vehicle, Vec2::default()),
        );
        assert!(matches!(euclidean_distance(&t, "a", "zz"), Err(Error::UnknownActor(_))));
    }

    #[test]
    fn headway_ahead_behind_abeam() {
        let ego = straight("ego", ActorClass::Vehicle, Vec2::default(), Vec2::new(0.0, 1.0), 0.0, 0.1, 2);
        let ahead = still("p", ActorClass::Pedestrian, Vec2::new(0.0, 10.0));
        let h = headway(&pair(ego.clone(), ahead), "ego", "p").unwrap();
        assert!((h.results[0].value - 8.7).abs() < 1e-12);
        let behind = still("p", ActorClass::Pedestrian, Vec2::new(0.0, -10.0));
        assert!(!headway(&pair(ego.clone(), behind), "ego", "p").unwrap().results[0].defined);
        let abeam = still("p", ActorClass::Pedestrian, Vec2::new(10.0, 0.0));
        assert!(!headway(&pair(ego, abeam), "ego", "p").unwrap().results[0].defined);
    }

    #[test]
    fn ttc_basics() {
        assert_eq!(
            time_to_collision(Vec2::new(21.3, 0.0), Vec2::new(-5.0, 0.0), 1.3),
            Some(4.0)
        );
        assert_eq!(time_to_collision(Vec2::new(21.3, 0.0), Vec2::new(5.0, 0.0), 1.3), None);
        assert_eq!(time_to_collision(Vec2::new(1.0, 0.0), Vec2::new(-5.0, 0.0), 1.3), None);
    }

    #[test]
    fn ttc_drops_by_one_step_per_step_on_head_on_approach() {
        // Closed form: clearance(t) = 100 − 1.3 − 8 t, closing 8 m/s.
        let a = straight("a", ActorClass::Vehicle, Vec2::new(0.0, 0.0), Vec2::new(5.0, 0.0), 0.0, 0.1, 50);
        let b = straight("b", ActorClass::Pedestrian, Vec2::new(100.0, 0.0), Vec2::new(-3.0, 0.0), 0.0, 0.1, 50);
        let s = ttc(&pair(a, b), "a", "b").unwrap();
        for (i, r) in s.results.iter().enumerate() {
            let oracle = (100.0 - 1.3 - 8.0 * 0.1 * i as f64) / 8.0;
            assert!((r.value - oracle).abs() < 1e-9);
        }
        for w in s.results.windows(2) {
            assert!(((w[0].value - w[1].value) - 0.1).abs() < 1e-9);
        }
    }

    #[test]
    fn wttc_static_case_matches_closed_form() {
        let t = worst_time_to_collision(Vec2::new(10.0, 0.0), Vec2::default(), 1.3, 4.0).unwrap();
        assert!((t - 4.35f64.sqrt()).abs() < 1e-3, "{t}");
    }

    #[test]
    fn wttc_overlap_and_receding() {
        assert_eq!(worst_time_to_collision(Vec2::new(1.0, 0.0), Vec2::default(), 1.3, 4.0), Some(0.0));
        assert_eq!(worst_time_to_collision(Vec2::new(10.0, 0.0), Vec2::new(1.0, 0.0), 1.3, 0.0), None);
        assert!(wttc(&pair(
            still("a", ActorClass::Vehicle, Vec2::default()),
            still("b", ActorClass::Vehicle, Vec2::new(5.0, 0.0))
        ), "a", "b", -1.0, 2.0).is_err());
    }

    #[test]
    fn gap_time_from_arrival_predictions() {
        // ego 40 m out at 10 m/s (4 s), target 6 m out at 1 m/s (6 s)
        let ego = straight("ego", ActorClass::Vehicle, Vec2::new(0.0, -40.0), Vec2::new(0.0, 10.0), 0.0, 0.1, 80);
        let ped = straight("ped", ActorClass::Pedestrian, Vec2::new(-6.0, 0.0), Vec2::new(1.0, 0.0), 0.0, 0.1, 80);
        let t = pair(ego, ped);
        let c = locate_conflict(&t, "ego", "ped").unwrap();
        assert!(c.position.distance(Vec2::default()) < 1e-9);
        let g = gap_time(&t, "ego", "ped", &c).unwrap();
        assert!((g.results[0].value - 2.0).abs() < 1e-9);
        // ego passes the conflict at t = 4 s: everything from then on is undefined
        let first_undefined = g.results.iter().position(|r| !r.defined).unwrap();
        assert!((g.results[first_undefined].time - 4.0).abs() < 1e-9);
        assert!(g.results[first_undefined..].iter().all(|r| !r.defined));
    }

    #[test]
    fn gap_time_rejects_off_path_conflict() {
        let ego = straight("ego", ActorClass::Vehicle, Vec2::new(0.0, -40.0), Vec2::new(0.0, 10.0), 0.0, 0.1, 80);
        let ped = straight("ped", ActorClass::Pedestrian, Vec2::new(-6.0, 0.0), Vec2::new(1.0, 0.0), 0.0, 0.1, 80);
        let t = pair(ego, ped);
        let mut c = locate_conflict(&t, "ego", "ped").unwrap();
        c.position = Vec2::new(3.0, 3.0);
        assert!(matches!(gap_time(&t, "ego", "ped", &c), Err(Error::ConflictNotOnPath(_))));
    }

    fn braking_track(speed: f64, accel: f64) -> Trace {
        let s = |t: f64| ActorState { time: t, x: 0.0, y: 0.0, heading: 0.0, speed, accel };
        let a = ActorTrack::new("a", ActorClass::Vehicle, 1.0, vec![s(0.0), s(0.1)]).unwrap();
        Trace::new("t", 0.1, [a], BTreeMap::new()).unwrap()
    }

    #[test]
    fn braking_kinematics() {
        let t = braking_track(10.0, -2.0);
        assert_eq!(braking_time(&t, "a").unwrap().results[0].value, 5.0);
        assert_eq!(braking_distance(&t, "a").unwrap().results[0].value, 25.0);
        let t = braking_track(10.0, 1.0);
        assert!(!braking_time(&t, "a").unwrap().results[0].defined);
        let t = braking_track(0.0, -3.0);
        assert_eq!(braking_time(&t, "a").unwrap().results[0].value, 0.0);
        assert_eq!(braking_distance(&t, "a").unwrap().results[0].value, 0.0);
    }

    #[test]
    fn density_counts_others_within_radius() {
        let lone = braking_track(0.0, 0.0);
        assert_eq!(traffic_density(&lone, "a", 50.0).unwrap().results[0].value, 0.0);
        let t = pair(
            still("a", ActorClass::Vehicle, Vec2::default()),
            still("b", ActorClass::Vehicle, Vec2::new(30.0, 0.0)),
        );
        let d = traffic_density(&t, "a", 50.0).unwrap().results[0].value;
        assert!((d - 1.0 / (std::f64::consts::PI * 2500.0)).abs() < 1e-18);
        assert!((d - 1.27e-4).abs() < 1e-6);
    }
}
