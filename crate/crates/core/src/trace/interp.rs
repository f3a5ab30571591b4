use crate::error::{Error, Result};
use crate::geometry::{angle_diff, normalize_angle};

use super::{ActorState, ActorTrack, Trace};

/// State of `track` at time `t`, linearly interpolated between samples.
///
/// Heading follows the shortest arc. A sample is returned verbatim when `t`
/// equals its time.
pub fn state_at(track: &ActorTrack, t: f64) -> Result<ActorState> {
    let states = track.states();
    let (start, end) = (track.first_time(), track.last_time());
    if !(t >= start && t <= end) {
        return Err(Error::TimeOutOfRange { time: t, start, end });
    }
    let k = states.partition_point(|s| s.time < t);
    let hi = states[k];
    if hi.time == t {
        return Ok(hi);
    }
    let lo = states[k - 1];
    let f = (t - lo.time) / (hi.time - lo.time);
    let lerp = |a: f64, b: f64| a + (b - a) * f;
    Ok(ActorState {
        time: t,
        x: lerp(lo.x, hi.x),
        y: lerp(lo.y, hi.y),
        heading: normalize_angle(lo.heading + angle_diff(lo.heading, hi.heading) * f),
        speed: lerp(lo.speed, hi.speed).max(0.0),
        accel: lerp(lo.accel, hi.accel),
    })
}

/// Resamples every track onto the shared overlap interval at step `dt`.
pub fn resample(trace: &Trace, dt: f64) -> Result<Trace> {
    let (start, end) = trace.overlap_all();
    let length = end - start;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidTrace(format!("resample step {dt} must be positive")));
    }
    if dt > length {
        return Err(Error::StepTooLarge { dt, overlap: length });
    }
    // grid by index multiplication; the tolerance absorbs float error in length / dt
    let steps = (length / dt + 1e-9).floor() as usize;
    let times: Vec<f64> = (0..=steps)
        .map(|i| (start + i as f64 * dt).min(end))
        .collect();
    let tracks = trace
        .tracks()
        .map(|track| {
            let states = times
                .iter()
                .map(|&t| state_at(track, t))
                .collect::<Result<Vec<_>>>()?;
            ActorTrack::new(track.id(), track.class(), track.radius(), states)
        })
        .collect::<Result<Vec<_>>>()?;
    Trace::new(trace.scenario_id(), dt, tracks, trace.metadata().clone())
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;
    use std::f64::consts::PI;

    use super::*;
    use crate::geometry::Vec2;
    use crate::trace::test_support::straight;
    use crate::trace::ActorClass;

    fn two_point(h0: f64, h1: f64) -> ActorTrack {
        let s = |t: f64, x: f64, h: f64| ActorState {
            time: t,
            x,
            y: 0.0,
            heading: h,
            speed: 1.0,
            accel: 0.0,
        };
        ActorTrack::new("a", ActorClass::Vehicle, 1.0, vec![s(0.0, 0.0, h0), s(1.0, 1.0, h1)])
            .unwrap()
    }

    #[test]
    fn exact_sample_is_returned_verbatim() {
        let t = two_point(0.1, 0.2);
        assert_eq!(state_at(&t, 1.0).unwrap(), t.states()[1]);
        assert_eq!(state_at(&t, 0.0).unwrap(), t.states()[0]);
    }

    #[test]
    fn midpoint_is_linear() {
        let s = state_at(&two_point(0.0, 0.0), 0.5).unwrap();
        assert_eq!((s.x, s.y), (0.5, 0.0));
    }

    #[test]
    fn out_of_range_is_an_error() {
        assert!(matches!(
            state_at(&two_point(0.0, 0.0), 1.5),
            Err(Error::TimeOutOfRange { .. })
        ));
    }

    /// Oracle: scan a dense set of candidate headings and pick the one whose
    /// angular distance to both endpoints is equal and minimal.
    fn shortest_arc_midpoint_oracle(h0: f64, h1: f64) -> f64 {
        let n = 200_000;
        let dist = |a: f64, b: f64| {
            let d = (a - b).rem_euclid(2.0 * PI);
            d.min(2.0 * PI - d)
        };
        (0..n)
            .map(|i| -PI + 2.0 * PI * i as f64 / n as f64)
            .min_by(|&a, &b| {
                let ca = dist(a, h0).max(dist(a, h1));
                let cb = dist(b, h0).max(dist(b, h1));
                ca.total_cmp(&cb)
            })
            .unwrap()
    }

    #[test]
    fn heading_wraps_through_pi() {
        let s = state_at(&two_point(3.0, -3.0), 0.5).unwrap();
        let oracle = shortest_arc_midpoint_oracle(3.0, -3.0);
        let wrapped = |a: f64, b: f64| {
            let d = (a - b).rem_euclid(2.0 * PI);
            d.min(2.0 * PI - d)
        };
        assert!(wrapped(s.heading, oracle) < 1e-4, "{} vs {oracle}", s.heading);
        assert!(wrapped(s.heading, PI) < 1e-12);
    }

    fn uniform_trace(n: usize, dt: f64) -> Trace {
        let a = straight("a", ActorClass::Vehicle, Vec2::default(), Vec2::new(2.0, 1.0), 0.0, dt, n);
        let b = straight("b", ActorClass::Pedestrian, Vec2::new(5.0, 5.0), Vec2::new(0.0, -1.0), 0.0, dt, n);
        Trace::new("t", dt, [a, b], BTreeMap::from([("k".into(), "v".into())])).unwrap()
    }

    #[test]
    fn resample_at_own_step_is_identity() {
        let tr = uniform_trace(101, 0.1);
        let r = resample(&tr, 0.1).unwrap();
        for (orig, res) in tr.tracks().zip(r.tracks()) {
            assert_eq!(orig.states().len(), res.states().len());
            for (a, b) in orig.states().iter().zip(res.states()) {
                assert!((a.x - b.x).abs() < 1e-12 && (a.y - b.y).abs() < 1e-12);
            }
        }
        assert_eq!(r.metadata(), tr.metadata());
    }

    #[test]
    fn halving_step_gives_2n_minus_1_states() {
        for n in [2usize, 3, 10, 101, 2000] {
            let tr = uniform_trace(n, 0.01);
            let r = resample(&tr, 0.005).unwrap();
            // enumerate the expected grid directly
            let expected = (0..).take_while(|i| *i as f64 * 0.005 <= (n - 1) as f64 * 0.01 + 1e-12).count();
            assert_eq!(expected, 2 * (n - 1) + 1);
            for t in r.tracks() {
                assert_eq!(t.states().len(), expected, "n = {n}");
            }
            assert_eq!(r.time_step(), 0.005);
        }
    }

    #[test]
    fn resample_step_larger_than_overlap_fails() {
        let tr = uniform_trace(11, 0.1);
        assert!(matches!(resample(&tr, 1.5), Err(Error::StepTooLarge { .. })));
    }
}
