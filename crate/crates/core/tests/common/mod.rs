#![allow(dead_code)]

use std::collections::BTreeMap;

use scenq::geometry::Vec2;
use scenq::trace::{ActorClass, ActorState, ActorTrack, Trace};

/// Constant-velocity track sampled every `dt` from `t0`.
pub fn straight(id: &str, class: ActorClass, start: Vec2, velocity: Vec2, t0: f64, dt: f64, n: usize) -> ActorTrack {
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

pub fn trace_of(id: &str, dt: f64, tracks: Vec<ActorTrack>) -> Trace {
    Trace::new(id, dt, tracks, BTreeMap::new()).unwrap()
}

/// Ranks with ties averaged, 1-based.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    pearson(&ranks(a), &ranks(b))
}

/// Cost of every warp path, enumerated recursively from the first pair.
pub fn brute_force_dtw(a: &[Vec2], b: &[Vec2]) -> f64 {
    fn walk(a: &[Vec2], b: &[Vec2], i: usize, j: usize, acc: f64, best: &mut f64) {
        let acc = acc + a[i].distance(b[j]);
        if i + 1 == a.len() && j + 1 == b.len() {
            *best = best.min(acc);
            return;
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            walk(a, b, i + 1, j + 1, acc, best);
        }
        if i + 1 < a.len() {
            walk(a, b, i + 1, j, acc, best);
        }
        if j + 1 < b.len() {
            walk(a, b, i, j + 1, acc, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(a, b, 0, 0, 0.0, &mut best);
    best
}

/// Rotates every position by `angle` about the origin, then shifts by `shift`.
pub fn rigid(trace: &Trace, angle: f64, shift: Vec2) -> Trace {
    let (sin, cos) = angle.sin_cos();
    let tracks: Vec<ActorTrack> = trace
        .tracks()
        .map(|t| {
            let states = t
                .states()
                .iter()
                .map(|s| ActorState {
                    x: cos * s.x - sin * s.y + shift.x,
                    y: sin * s.x + cos * s.y + shift.y,
                    heading: s.heading + angle,
                    ..*s
                })
                .collect();
            ActorTrack::new(t.id(), t.class(), t.radius(), states).unwrap()
        })
        .collect();
    Trace::new(trace.scenario_id(), trace.time_step(), tracks, trace.metadata().clone()).unwrap()
}

/// Two straight tracks whose paths cross at the origin: `a` along +x,
/// `b` along the direction `angle`, reaching the origin at `ta` and `tb`.
pub fn crossing(speed_a: f64, speed_b: f64, angle: f64, ta: f64, tb: f64, dt: f64, n: usize) -> Trace {
    let va = Vec2::new(speed_a, 0.0);
    let vb = Vec2::from_polar(speed_b, angle);
    let a = straight("a", ActorClass::Vehicle, va * -ta, va, 0.0, dt, n);
    let b = straight("b", ActorClass::Pedestrian, vb * -tb, vb, 0.0, dt, n);
    trace_of("crossing", dt, vec![a, b])
}
