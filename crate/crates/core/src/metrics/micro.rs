//! Per-scenario metrics: encroachment zones, post-encroachment time,
//! encroachment time, and aggregation of per-step series.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{polygon_area, polygon_centroid, signed_distance_convex, Vec2};
use crate::trace::Trace;

use super::nano::TraveledPath;
use super::{MetricSeries, ScalarResult, Unit};

/// Conflict area where two traveled paths cross: the intersection of the two
/// path strips, each of half-width `radius + inflation`. Vertices are CCW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncroachmentZone {
    pub polygon: Vec<Vec2>,
    pub derived_from: (String, String),
}

impl EncroachmentZone {
    pub fn new(polygon: Vec<Vec2>, derived_from: (String, String)) -> Result<Self> {
        if polygon.len() < 3 {
            return Err(Error::InvalidZone("fewer than 3 vertices".into()));
        }
        let n = polygon.len();
        let convex_ccw = (0..n).all(|i| {
            let (a, b, c) = (polygon[i], polygon[(i + 1) % n], polygon[(i + 2) % n]);
            (b - a).cross(c - b) > 0.0
        });
        if !convex_ccw || !(polygon_area(&polygon) > 0.0) {
            return Err(Error::InvalidZone(
                "polygon must be convex, counter-clockwise and of positive area".into(),
            ));
        }
        Ok(Self {
            polygon,
            derived_from,
        })
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.polygon)
    }

    pub fn center(&self) -> Vec2 {
        polygon_centroid(&self.polygon)
    }

    /// Signed distance from `p` to the zone boundary, negative inside.
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        signed_distance_convex(&self.polygon, p)
    }
}

pub fn build_encroachment_zone(
    trace: &Trace,
    actor_a: &str,
    actor_b: &str,
    inflation: f64,
) -> Result<EncroachmentZone> {
    if !(inflation >= 0.0) {
        return Err(Error::InvalidZone(format!("inflation {inflation} must be non-negative")));
    }
    let (ta, tb) = (trace.track(actor_a)?, trace.track(actor_b)?);
    let (pa, pb) = (TraveledPath::of(ta), TraveledPath::of(tb));
    let crossing = pa
        .polyline
        .first_crossing(&pb.polyline)
        .ok_or_else(|| Error::NoCrossing(actor_a.to_owned(), actor_b.to_owned()))?;
    let (ua, ub) = (crossing.dir_self, crossing.dir_other);
    let sin = ua.cross(ub);
    if sin.abs() < 1e-6 {
        return Err(Error::NoCrossing(actor_a.to_owned(), actor_b.to_owned()));
    }
    let half_a = ta.radius() + inflation;
    let half_b = tb.radius() + inflation;
    // p = c + α·ua + β·ub lies in strip a iff |β·sin| ≤ half_a, in strip b iff |α·sin| ≤ half_b
    let ea = ua * (half_b / sin.abs());
    let eb = ub * (half_a / sin.abs());
    let c = crossing.point;
    let mut polygon = vec![c - ea - eb, c + ea - eb, c + ea + eb, c - ea + eb];
    if polygon_area(&polygon) < 0.0 {
        polygon.reverse();
    }
    // deterministic start: lowest y, then lowest x
    let start = (0..4)
        .min_by(|&i, &j| {
            polygon[i]
                .y
                .total_cmp(&polygon[j].y)
                .then(polygon[i].x.total_cmp(&polygon[j].x))
        })
        .unwrap_or(0);
    polygon.rotate_left(start);
    EncroachmentZone::new(polygon, (actor_a.to_owned(), actor_b.to_owned()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyInterval {
    pub actor_id: String,
    pub entry_time: f64,
    pub exit_time: f64,
    /// False when the interval was cut by the start or end of the track, so
    /// one of its edges was not observed.
    pub complete: bool,
}

impl OccupancyInterval {
    pub fn duration(&self) -> f64 {
        self.exit_time - self.entry_time
    }
}

/// Maximal intervals during which the actor's bounding circle intersects the
/// zone. Edges are refined by linear interpolation of the clearance between
/// the straddling samples.
pub fn occupancy(trace: &Trace, actor: &str, zone: &EncroachmentZone) -> Result<Vec<OccupancyInterval>> {
    let track = trace.track(actor)?;
    let r = track.radius();
    let samples: Vec<(f64, f64)> = track
        .states()
        .iter()
        .map(|s| (s.time, zone.signed_distance(s.position()) - r))
        .collect();
    let crossing_time = |(t0, c0): (f64, f64), (t1, c1): (f64, f64)| t0 + (t1 - t0) * c0 / (c0 - c1);

    let mut intervals = Vec::new();
    let mut entry: Option<(f64, bool)> = None;
    for (i, &cur) in samples.iter().enumerate() {
        let inside = cur.1 <= 0.0;
        match (inside, entry) {
            (true, None) => {
                entry = Some(if i == 0 {
                    (cur.0, false)
                } else {
                    (crossing_time(samples[i - 1], cur), true)
                });
            }
            (false, Some((entry_time, observed))) => {
                let exit_time = crossing_time(samples[i - 1], cur);
                if exit_time > entry_time {
                    intervals.push(OccupancyInterval {
                        actor_id: actor.to_owned(),
                        entry_time,
                        exit_time,
                        complete: observed,
                    });
                }
                entry = None;
            }
            _ => {}
        }
    }
    if let Some((entry_time, _)) = entry {
        let end = samples[samples.len() - 1].0;
        if end > entry_time {
            intervals.push(OccupancyInterval {
                actor_id: actor.to_owned(),
                entry_time,
                exit_time: end,
                complete: false,
            });
        }
    }
    Ok(intervals)
}

/// Post-encroachment time `t2 − t1`: `t1` is when the first actor to enter the
/// zone leaves it, `t2` when the other actor enters. Overlapping occupancy is
/// a conflict, reported as undefined with `conflict=overlap`.
pub fn pet(trace: &Trace, actor_1: &str, actor_2: &str, zone: &EncroachmentZone) -> Result<ScalarResult> {
    let undefined = ScalarResult::undefined("pet", Unit::Second)
        .with_context("actors", format!("{actor_1},{actor_2}"));
    let first_a = occupancy(trace, actor_1, zone)?.into_iter().next();
    let first_b = occupancy(trace, actor_2, zone)?.into_iter().next();
    let (Some(a), Some(b)) = (first_a, first_b) else {
        return Ok(undefined.with_context("reason", "no_occupancy"));
    };
    let (first, second) = if b.entry_time < a.entry_time { (b, a) } else { (a, b) };
    let result = if second.entry_time < first.exit_time {
        undefined.with_context("conflict", "overlap")
    } else if !first.complete {
        undefined.with_context("reason", "incomplete_occupancy")
    } else {
        ScalarResult::defined("pet", second.entry_time - first.exit_time, Unit::Second)
            .with_context("actors", format!("{actor_1},{actor_2}"))
    };
    Ok(result
        .with_context("first", first.actor_id)
        .with_context("second", second.actor_id))
}

/// Encroachment time: duration of the actor's first occupancy of the zone.
pub fn et(trace: &Trace, actor: &str, zone: &EncroachmentZone) -> Result<ScalarResult> {
    let first = occupancy(trace, actor, zone)?.into_iter().next();
    Ok(match first {
        Some(i) if i.complete => ScalarResult::defined("et", i.duration(), Unit::Second),
        Some(_) => ScalarResult::undefined("et", Unit::Second).with_context("reason", "incomplete_occupancy"),
        None => ScalarResult::undefined("et", Unit::Second).with_context("reason", "no_occupancy"),
    }
    .with_context("actor", actor))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregateOp {
    Min,
    Max,
    Mean,
}

impl AggregateOp {
    pub fn as_str(self) -> &'static str {
        match self {
            AggregateOp::Min => "min",
            AggregateOp::Max => "max",
            AggregateOp::Mean => "mean",
        }
    }
}

impl fmt::Display for AggregateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AggregateOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(AggregateOp::Min),
            "max" => Ok(AggregateOp::Max),
            "mean" => Ok(AggregateOp::Mean),
            other => Err(Error::UnknownAggregation(other.to_owned())),
        }
    }
}

/// Aggregates the defined results of `series` that fall inside any of the
/// closed `period` intervals (the whole series when `period` is `None`).
pub fn aggregate(series: &MetricSeries, op: AggregateOp, period: Option<&[(f64, f64)]>) -> Result<ScalarResult> {
    if series.results.is_empty() {
        return Err(Error::Empty(format!("series `{}` has no results", series.metric_name)));
    }
    let name = format!("{op}_{}", series.metric_name);
    let inside = |t: f64| period.map_or(true, |p| p.iter().any(|&(a, b)| t >= a - 1e-9 && t <= b + 1e-9));
    let values = series.defined().filter(|r| inside(r.time)).map(|r| r.value);
    let (count, acc) = values.fold((0usize, None::<f64>), |(n, acc), v| {
        let next = match (op, acc) {
            (_, None) => v,
            (AggregateOp::Min, Some(a)) => a.min(v),
            (AggregateOp::Max, Some(a)) => a.max(v),
            (AggregateOp::Mean, Some(a)) => a + v,
        };
        (n + 1, Some(next))
    });
    let result = match acc {
        None => ScalarResult::undefined(name, series.unit),
        Some(v) if op == AggregateOp::Mean => ScalarResult::defined(name, v / count as f64, series.unit),
        Some(v) => ScalarResult::defined(name, v, series.unit),
    };
    Ok(result.with_context("actors", series.actor_ids.join(",")))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::trace::test_support::straight;
    use crate::trace::{ActorClass, Trace};

    fn crossing_trace(dt: f64, n: usize) -> Trace {
        // vehicle east along y = 0 from x = −20 at 5 m/s, pedestrian north along x = 0
        let car = straight("car", ActorClass::Vehicle, Vec2::new(-20.0, 0.0), Vec2::new(5.0, 0.0), 0.0, dt, n);
        let ped = straight("ped", ActorClass::Pedestrian, Vec2::new(0.0, -10.0), Vec2::new(0.0, 1.0), 0.0, dt, n);
        Trace::new("x", dt, [car, ped], BTreeMap::new()).unwrap()
    }

    #[test]
    fn perpendicular_paths_give_width_by_width_rectangle() {
        let z = build_encroachment_zone(&crossing_trace(0.1, 200), "car", "ped", 0.0).unwrap();
        let xs: Vec<f64> = z.polygon.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = z.polygon.iter().map(|p| p.y).collect();
        let span = |v: &[f64]| v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
        // along the car's path the zone is as wide as the pedestrian strip, and vice versa
        assert!((span(&xs) - 0.6).abs() < 1e-12);
        assert!((span(&ys) - 2.0).abs() < 1e-12);
        assert!((z.area() - 1.2).abs() < 1e-12);
    }

    #[test]
    fn parallel_paths_do_not_cross() {
        let a = straight("a", ActorClass::Vehicle, Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), 0.0, 0.1, 20);
        let b = straight("b", ActorClass::Vehicle, Vec2::new(0.0, 5.0), Vec2::new(1.0, 0.0), 0.0, 0.1, 20);
        let t = Trace::new("p", 0.1, [a, b], BTreeMap::new()).unwrap();
        assert!(matches!(build_encroachment_zone(&t, "a", "b", 0.0), Err(Error::NoCrossing(..))));
    }

    #[test]
    fn occupancy_edges_are_interpolated() {
        let t = crossing_trace(0.1, 200);
        let z = build_encroachment_zone(&t, "car", "ped", 0.0).unwrap();
        // pedestrian circle touches y ∈ [−1.3, 1.3] → t ∈ [8.7, 11.3]
        let occ = occupancy(&t, "ped", &z).unwrap();
        assert_eq!(occ.len(), 1);
        assert!((occ[0].entry_time - 8.7).abs() < 1e-9);
        assert!((occ[0].exit_time - 11.3).abs() < 1e-9);
        // car circle touches x ∈ [−1.3, 1.3] → t ∈ [3.74, 4.26]
        let occ = occupancy(&t, "car", &z).unwrap();
        assert!((occ[0].entry_time - 3.74).abs() < 1e-9);
        let et = et(&t, "car", &z).unwrap();
        assert!((et.value - 0.52).abs() < 1e-9);
    }

    #[test]
    fn pet_orders_actors_by_entry() {
        let t = crossing_trace(0.1, 200);
        let z = build_encroachment_zone(&t, "car", "ped", 0.0).unwrap();
        for (a, b) in [("car", "ped"), ("ped", "car")] {
            let p = pet(&t, a, b, &z).unwrap();
            assert!(p.defined);
            assert!((p.value - (8.7 - 4.26)).abs() < 1e-9);
            assert_eq!(p.context["first"], "car");
        }
    }

    #[test]
    fn never_occupying_is_undefined() {
        let t = crossing_trace(0.1, 30); // both stop short of the zone
        let z = EncroachmentZone::new(
            vec![Vec2::new(-0.3, -1.0), Vec2::new(0.3, -1.0), Vec2::new(0.3, 1.0), Vec2::new(-0.3, 1.0)],
            ("car".into(), "ped".into()),
        )
        .unwrap();
        assert!(occupancy(&t, "ped", &z).unwrap().is_empty());
        assert!(!et(&t, "ped", &z).unwrap().defined);
        assert!(!pet(&t, "car", "ped", &z).unwrap().defined);
    }

    #[test]
    fn simultaneous_occupancy_is_an_overlap_conflict() {
        // both arrive at the origin at t = 4 s
        let car = straight("car", ActorClass::Vehicle, Vec2::new(-20.0, 0.0), Vec2::new(5.0, 0.0), 0.0, 0.1, 100);
        let ped = straight("ped", ActorClass::Pedestrian, Vec2::new(0.0, -4.0), Vec2::new(0.0, 1.0), 0.0, 0.1, 100);
        let t = Trace::new("c", 0.1, [car, ped], BTreeMap::new()).unwrap();
        let z = build_encroachment_zone(&t, "car", "ped", 0.0).unwrap();
        let p = pet(&t, "car", "ped", &z).unwrap();
        assert!(!p.defined);
        assert_eq!(p.context["conflict"], "overlap");
    }

    #[test]
    fn zone_rejects_bad_polygons() {
        let cw = vec![Vec2::new(0.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(1.0, 1.0), Vec2::new(1.0, 0.0)];
        assert!(EncroachmentZone::new(cw, ("a".into(), "b".into())).is_err());
        assert!(EncroachmentZone::new(vec![Vec2::default(); 2], ("a".into(), "b".into())).is_err());
    }

    fn series(values: &[Option<f64>]) -> MetricSeries {
        let mut s = MetricSeries::new("ttc", Unit::Second, &["a", "b"]);
        for (i, v) in values.iter().enumerate() {
            s.push(i as f64, *v);
        }
        s
    }

    #[test]
    fn aggregate_basics() {
        let s = series(&[Some(5.0), Some(5.0), Some(5.0)]);
        let m = aggregate(&s, AggregateOp::Min, None).unwrap();
        assert_eq!((m.value, m.defined, m.metric_name.as_str()), (5.0, true, "min_ttc"));
        let s = series(&[None, None]);
        assert!(!aggregate(&s, AggregateOp::Min, None).unwrap().defined);
        let s = series(&[Some(1.0), Some(4.0), None, Some(7.0)]);
        assert_eq!(aggregate(&s, AggregateOp::Mean, None).unwrap().value, 4.0);
        assert_eq!(aggregate(&s, AggregateOp::Max, Some(&[(0.0, 2.0)])).unwrap().value, 4.0);
        assert!(!aggregate(&s, AggregateOp::Max, Some(&[(2.0, 2.5)])).unwrap().defined);
        assert!(aggregate(&series(&[]), AggregateOp::Min, None).is_err());
        assert!(matches!("median".parse::<AggregateOp>(), Err(Error::UnknownAggregation(_))));
    }
}
