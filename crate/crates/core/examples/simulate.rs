// Run the kinematic simulator on one concrete scenario.

use std::collections::BTreeMap;

use scenq::presets;
use scenq::scenario::ConcreteScenario;
use scenq::sim::{simulate, EGO_ID, META_EGO_YIELDED, META_PED_START};

pub fn run_example() -> scenq::Result<()> {
    let scenario = ConcreteScenario {
        scenario_id: "demo#0".into(),
        logical_id: "demo".into(),
        bindings: BTreeMap::from([
            ("v_max".to_owned(), 32.0),
            ("t_cross".to_owned(), 5.0),
            ("d_start".to_owned(), 16.0),
        ]),
        index: 0,
    };
    let outcome = simulate(&scenario, &presets::sim_config()?)?;
    let meta = outcome.trace.metadata();
    println!("pedestrian starts at {:?} s", meta.get(META_PED_START));
    println!("ego yielded: {:?}", meta.get(META_EGO_YIELDED));
    println!(
        "collided: {}, completed: {}, closest approach {:.2} m",
        outcome.collided, outcome.completed, outcome.min_distance
    );
    let ego = outcome.trace.track(EGO_ID)?;
    let slowest = ego.states().iter().map(|s| s.speed).fold(f64::INFINITY, f64::min);
    println!("{} ego states, slowest {:.2} m/s", ego.states().len(), slowest);
    Ok(())
}

#[allow(dead_code)]
fn main() -> scenq::Result<()> {
    run_example()
}
