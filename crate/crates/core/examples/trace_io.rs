// Build a two-actor trace, write it as CSV and JSON Lines, read it back,
// validate it and query interpolated states.

use std::collections::BTreeMap;

use scenq::geometry::Vec2;
use scenq::trace::{
    load_trace, resample, state_at, validate_trace, write_trace, ActorClass, ActorState, ActorTrack, Trace,
    TraceFormat,
};

fn line(id: &str, class: ActorClass, start: Vec2, velocity: Vec2) -> scenq::Result<ActorTrack> {
    let states = (0..=50)
        .map(|i| {
            let t = i as f64 * 0.1;
            let p = start + velocity * t;
            ActorState {
                time: t,
                x: p.x,
                y: p.y,
                heading: velocity.angle(),
                speed: velocity.norm(),
                accel: 0.0,
            }
        })
        .collect();
    ActorTrack::new(id, class, class.default_radius(), states)
}

pub fn run_example() -> scenq::Result<()> {
    let ego = line("ego", ActorClass::Vehicle, Vec2::new(-20.0, 0.0), Vec2::new(8.0, 0.0))?;
    let ped = line("ped", ActorClass::Pedestrian, Vec2::new(5.0, 4.0), Vec2::new(0.0, -1.4))?;
    let trace = Trace::new("demo", 0.1, [ego, ped], BTreeMap::new())?;

    for format in [TraceFormat::Csv, TraceFormat::Jsonl] {
        let mut bytes = Vec::new();
        write_trace(&mut bytes, &trace, format)?;
        let back = load_trace(bytes.as_slice(), format)?;
        println!("{format:?}: {} bytes, {} actors read back", bytes.len(), back.actor_ids().count());
    }

    let report = validate_trace(&trace);
    println!("validation issues: {}", report.issues.len());

    let s = state_at(trace.track("ego")?, 1.25)?;
    println!("ego at 1.25 s: ({:.2}, {:.2}) m, {:.1} m/s", s.x, s.y, s.speed);
    let fine = resample(&trace, 0.05)?;
    println!("resampled to 0.05 s: {} ego states", fine.track("ego")?.states().len());
    Ok(())
}

#[allow(dead_code)]
fn main() -> scenq::Result<()> {
    run_example()
}
