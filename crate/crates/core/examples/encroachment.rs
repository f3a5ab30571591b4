// Encroachment zone, post-encroachment time and encroachment time.

use std::collections::BTreeMap;

use scenq::geometry::Vec2;
use scenq::metrics::micro::{build_encroachment_zone, et, occupancy, pet};
use scenq::trace::{ActorClass, ActorState, ActorTrack, Trace};

fn straight(id: &str, class: ActorClass, start: Vec2, velocity: Vec2) -> scenq::Result<ActorTrack> {
    let states = (0..=4000)
        .map(|i| {
            let t = i as f64 * 0.01;
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
    // the vehicle clears the zone at 26 s, the pedestrian reaches it at 29 s
    let car = straight("car", ActorClass::Vehicle, Vec2::new(-24.7, 0.0), Vec2::new(1.0, 0.0))?;
    let ped = straight("ped", ActorClass::Pedestrian, Vec2::new(0.0, -30.3), Vec2::new(0.0, 1.0))?;
    let trace = Trace::new("pet-demo", 0.01, [car, ped], BTreeMap::new())?;

    let zone = build_encroachment_zone(&trace, "car", "ped", 0.0)?;
    println!("zone area {:.2} m², center {:?}", zone.area(), zone.center());
    for actor in ["car", "ped"] {
        for i in occupancy(&trace, actor, &zone)? {
            println!("{actor}: in zone {:.2} to {:.2} s", i.entry_time, i.exit_time);
        }
        println!("{actor}: ET {:?} s", et(&trace, actor, &zone)?.value());
    }
    let p = pet(&trace, "car", "ped", &zone)?;
    println!("PET {:.3} s {:?}", p.value, p.context);
    Ok(())
}

#[allow(dead_code)]
fn main() -> scenq::Result<()> {
    run_example()
}
