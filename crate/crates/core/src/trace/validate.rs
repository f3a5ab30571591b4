//! Trace-level consistency checks: sampling regularity, actor availability,
//! synchronization between actors, and bounding-circle contact events.

use serde::{Deserialize, Serialize};

use super::{state_at, Trace};

/// Relative deviation from the nominal step that counts as non-uniform.
const NON_UNIFORM_TOLERANCE: f64 = 0.10;
/// A spacing of this many nominal steps or more means samples are missing.
const GAP_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub severity: Severity,
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actor_id: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn with_code<'a>(&'a self, code: &'a str) -> impl Iterator<Item = &'a Issue> + 'a {
        self.issues.iter().filter(move |i| i.code == code)
    }
}

pub const CODE_NON_UNIFORM: &str = "non_uniform_sampling";
pub const CODE_AVAILABILITY: &str = "actor_availability";
pub const CODE_SYNCHRONIZATION: &str = "actor_synchronization";
pub const CODE_COLLISION: &str = "collision";

pub fn validate_trace(trace: &Trace) -> ValidationReport {
    let mut issues = Vec::new();
    let dt = trace.time_step();

    for track in trace.tracks() {
        let mut non_uniform_reported = false;
        for w in track.states().windows(2) {
            let step = w[1].time - w[0].time;
            if step >= GAP_FACTOR * dt {
                issues.push(Issue {
                    severity: Severity::Error,
                    code: CODE_AVAILABILITY.into(),
                    message: format!(
                        "actor availability: no samples for {:.6} s after t = {} s",
                        step - dt,
                        w[0].time
                    ),
                    time: Some(w[0].time),
                    actor_id: Some(track.id().to_owned()),
                });
            } else if !non_uniform_reported
                && (step - dt).abs() > NON_UNIFORM_TOLERANCE * dt
            {
                non_uniform_reported = true;
                issues.push(Issue {
                    severity: Severity::Warning,
                    code: CODE_NON_UNIFORM.into(),
                    message: format!(
                        "sampling step {step} s deviates from nominal {dt} s by more than 10%"
                    ),
                    time: Some(w[0].time),
                    actor_id: Some(track.id().to_owned()),
                });
            }
        }
    }

    check_synchronization(trace, &mut issues);
    check_contacts(trace, &mut issues);
    ValidationReport { issues }
}

fn check_synchronization(trace: &Trace, issues: &mut Vec<Issue>) {
    let (start, end) = trace.overlap_all();
    let mut reference: Option<(&str, Vec<f64>)> = None;
    for track in trace.tracks() {
        let times: Vec<f64> = track
            .states()
            .iter()
            .map(|s| s.time)
            .filter(|&t| t >= start && t <= end)
            .collect();
        match &reference {
            None => reference = Some((track.id(), times)),
            Some((ref_id, ref_times)) => {
                let mismatch = ref_times.len() != times.len()
                    || ref_times
                        .iter()
                        .zip(&times)
                        .any(|(a, b)| (a - b).abs() > 1e-9);
                if mismatch {
                    issues.push(Issue {
                        severity: Severity::Warning,
                        code: CODE_SYNCHRONIZATION.into(),
                        message: format!(
                            "sample times of `{}` are not aligned with `{ref_id}`",
                            track.id()
                        ),
                        time: None,
                        actor_id: Some(track.id().to_owned()),
                    });
                }
            }
        }
    }
}

/// Reports the onset of every contact episode (center distance ≤ sum of
/// radii) per actor pair; onset time is refined by linear interpolation of
/// the clearance between the straddling samples.
fn check_contacts(trace: &Trace, issues: &mut Vec<Issue>) {
    let tracks: Vec<_> = trace.tracks().collect();
    for i in 0..tracks.len() {
        for j in i + 1..tracks.len() {
            let (a, b) = (tracks[i], tracks[j]);
            let Ok(times) = trace.common_times(a.id(), b.id()) else {
                continue;
            };
            let radii = a.radius() + b.radius();
            let mut prev: Option<(f64, f64)> = None;
            for &t in &times {
                let (Ok(sa), Ok(sb)) = (state_at(a, t), state_at(b, t)) else {
                    continue;
                };
                let clearance = sa.position().distance(sb.position()) - radii;
                let in_contact = clearance <= 0.0;
                let was_in_contact = prev.is_some_and(|(_, c)| c <= 0.0);
                if in_contact && !was_in_contact {
                    let onset = match prev {
                        Some((t0, c0)) => t0 + (t - t0) * c0 / (c0 - clearance),
                        None => t,
                    };
                    issues.push(Issue {
                        severity: Severity::Warning,
                        code: CODE_COLLISION.into(),
                        message: format!(
                            "bounding circles of `{}` and `{}` overlap",
                            a.id(),
                            b.id()
                        ),
                        time: Some(onset),
                        actor_id: Some(format!("{}+{}", a.id(), b.id())),
                    });
                }
                prev = Some((t, clearance));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::geometry::Vec2;
    use crate::trace::test_support::straight;
    use crate::trace::{ActorClass, ActorState, ActorTrack};

    #[test]
    fn uniform_two_actor_trace_is_clean() {
        let a = straight("a", ActorClass::Vehicle, Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), 0.0, 0.1, 50);
        let b = straight("b", ActorClass::Pedestrian, Vec2::new(0.0, 20.0), Vec2::new(1.0, 0.0), 0.0, 0.1, 50);
        let t = Trace::new("s", 0.1, [a, b], BTreeMap::new()).unwrap();
        assert!(validate_trace(&t).is_clean());
    }

    #[test]
    fn missing_half_second_is_an_availability_error() {
        let a = straight("a", ActorClass::Vehicle, Vec2::default(), Vec2::new(1.0, 0.0), 0.0, 0.01, 1000);
        let states: Vec<ActorState> = a
            .states()
            .iter()
            .copied()
            .filter(|s| !(s.time > 4.0 && s.time < 4.5))
            .collect();
        let holed = ActorTrack::new("b", ActorClass::Vehicle, 1.0, states)
            .unwrap()
            .with_lateral_offset(30.0);
        let t = Trace::new("s", 0.01, [a, holed], BTreeMap::new()).unwrap();
        let report = validate_trace(&t);
        let errs: Vec<_> = report.errors().collect();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].code, CODE_AVAILABILITY);
        assert_eq!(errs[0].actor_id.as_deref(), Some("b"));
        assert!(errs[0].message.contains("actor availability"));
    }

    #[test]
    fn converging_tracks_report_collision_at_closed_form_time() {
        // Head-on along x: a from 0 at +5 m/s, b from 200 at −5 m/s.
        // Clearance 200 − 10 t − 1.3 reaches zero at t = 19.87 s; shift the
        // start so that contact begins at 12.3 s.
        let contact = 12.3;
        let gap0 = 10.0 * contact + 1.3;
        let a = straight("a", ActorClass::Vehicle, Vec2::new(0.0, 0.0), Vec2::new(5.0, 0.0), 0.0, 0.01, 1500);
        let b = straight("b", ActorClass::Pedestrian, Vec2::new(gap0, 0.0), Vec2::new(-5.0, 0.0), 0.0, 0.01, 1500);
        let t = Trace::new("s", 0.01, [a, b], BTreeMap::new()).unwrap();
        let report = validate_trace(&t);
        let hits: Vec<_> = report.with_code(CODE_COLLISION).collect();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].severity, Severity::Warning);
        assert!((hits[0].time.unwrap() - contact).abs() < 1e-9);
    }

    #[test]
    fn jittered_sampling_is_a_warning() {
        let mut states: Vec<ActorState> = straight("a", ActorClass::Vehicle, Vec2::default(), Vec2::new(1.0, 0.0), 0.0, 0.1, 20)
            .states()
            .to_vec();
        states[5].time += 0.03;
        let a = ActorTrack::new("a", ActorClass::Vehicle, 1.0, states).unwrap();
        let t = Trace::new("s", 0.1, [a], BTreeMap::new()).unwrap();
        let report = validate_trace(&t);
        assert_eq!(report.with_code(CODE_NON_UNIFORM).count(), 1);
        assert_eq!(report.errors().count(), 0);
    }
}
