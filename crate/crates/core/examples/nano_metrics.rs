// Time series metrics between ego and pedestrian on a simulated run.

use std::collections::BTreeMap;

use scenq::metrics::micro::{aggregate, AggregateOp};
use scenq::metrics::nano::{
    braking_distance, euclidean_distance, gap_time, locate_conflict, ttc, wttc, DEFAULT_A_MAX_PEDESTRIAN,
    DEFAULT_A_MAX_VEHICLE,
};
use scenq::presets;
use scenq::scenario::ConcreteScenario;
use scenq::sim::{simulate, EGO_ID, PEDESTRIAN_ID};

pub fn run_example() -> scenq::Result<()> {
    let scenario = ConcreteScenario {
        scenario_id: "nano#0".into(),
        logical_id: "nano".into(),
        bindings: BTreeMap::from([
            ("v_max".to_owned(), 50.0),
            ("t_cross".to_owned(), 6.0),
            ("d_start".to_owned(), 24.0),
        ]),
        index: 0,
    };
    let trace = simulate(&scenario, &presets::sim_config()?)?.trace;
    let (ego, ped) = (EGO_ID, PEDESTRIAN_ID);

    let series = [
        euclidean_distance(&trace, ego, ped)?,
        ttc(&trace, ego, ped)?,
        wttc(&trace, ego, ped, DEFAULT_A_MAX_VEHICLE, DEFAULT_A_MAX_PEDESTRIAN)?,
        gap_time(&trace, ego, ped, &locate_conflict(&trace, ego, ped)?)?,
        braking_distance(&trace, ego)?,
    ];
    for s in &series {
        let min = aggregate(s, AggregateOp::Min, None)?;
        println!(
            "{:<20} {:>5} samples, {:>5} defined, min {}",
            s.metric_name,
            s.results.len(),
            s.defined().count(),
            min.value().map_or("undefined".into(), |v| format!("{v:.3} {}", s.unit))
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> scenq::Result<()> {
    run_example()
}
