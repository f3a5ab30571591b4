use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use scenq::presets;
use scenq::scenario::{concretize, grid_size, ConcreteScenario, LogicalScenario, ParameterRange};
use scenq::sim::{
    simulate, SimOutcome, EGO_ID, META_PED_START, PARAM_D_START, PARAM_T_CROSS, PARAM_V_MAX, PEDESTRIAN_ID,
};
use scenq::trace::write_trace;

fn arb_logical() -> impl Strategy<Value = LogicalScenario> {
    prop::collection::vec((-100.0..100.0f64, 0.05..10.0f64, 0usize..6), 0..4).prop_map(|ranges| LogicalScenario {
        scenario_id: "arb".into(),
        description: String::new(),
        parameters: ranges
            .into_iter()
            .enumerate()
            .map(|(i, (min, step, k))| ParameterRange::new(format!("p{i}"), min, min + step * k as f64, step, ""))
            .collect(),
        fixed: BTreeMap::from([("weather".to_owned(), 1.0)]),
    })
}

proptest! {
    #[test]
    fn concretize_enumerates_the_grid(logical in arb_logical()) {
        let all = concretize(&logical).unwrap();
        prop_assert_eq!(all.len(), grid_size(&logical).unwrap());
        let distinct: BTreeSet<Vec<u64>> = all
            .iter()
            .map(|c| c.bindings.values().map(|v| v.to_bits()).collect())
            .collect();
        prop_assert_eq!(distinct.len(), all.len());
        prop_assert_eq!(&concretize(&logical).unwrap(), &all);
        for c in &all {
            prop_assert_eq!(c.bindings["weather"], 1.0);
            for p in &logical.parameters {
                let v = c.get(&p.name).unwrap();
                prop_assert!(v >= p.min - 1e-9 && v <= p.max + 1e-9);
                let k = (v - p.min) / p.step;
                prop_assert!((k - k.round()).abs() < 1e-9);
            }
        }
    }
}

fn scenario(v_max: f64, t_cross: f64, d_start: f64) -> ConcreteScenario {
    ConcreteScenario {
        scenario_id: "prop#0".into(),
        logical_id: "prop".into(),
        bindings: BTreeMap::from([
            (PARAM_V_MAX.to_owned(), v_max),
            (PARAM_T_CROSS.to_owned(), t_cross),
            (PARAM_D_START.to_owned(), d_start),
        ]),
        index: 0,
    }
}

fn run(v_max: f64, t_cross: f64, d_start: f64) -> SimOutcome {
    simulate(&scenario(v_max, t_cross, d_start), &presets::sim_config().unwrap()).unwrap()
}

fn ped_start(o: &SimOutcome) -> Option<f64> {
    o.trace.metadata().get(META_PED_START).and_then(|v| v.parse().ok())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simulation_is_byte_deterministic(v in 20.0..60.0f64, t in 3.0..10.0f64, d in 5.0..40.0f64) {
        let bytes = |o: SimOutcome| {
            let mut b = Vec::new();
            write_trace(&mut b, &o.trace, scenq::trace::TraceFormat::Csv).unwrap();
            b
        };
        prop_assert_eq!(bytes(run(v, t, d)), bytes(run(v, t, d)));
    }

    #[test]
    fn crossing_takes_t_cross(v in 20.0..60.0f64, t in 3.0..10.0f64, d in 5.0..40.0f64) {
        let config = presets::sim_config().unwrap();
        let o = run(v, t, d);
        let far_curb = config.ped_crossing[1].y;
        if let Some(start) = ped_start(&o) {
            let ped = o.trace.track(PEDESTRIAN_ID).unwrap();
            if let Some(arrive) = ped.states().iter().find(|s| s.y <= far_curb + 1e-9) {
                prop_assert!((arrive.time - start - t).abs() <= config.time_step + 1e-9,
                    "start {start}, arrival {}, t_cross {t}", arrive.time);
            }
        }
    }

    #[test]
    fn ego_respects_speed_and_acceleration_limits(v in 20.0..60.0f64, t in 3.0..10.0f64, d in 5.0..40.0f64) {
        let config = presets::sim_config().unwrap();
        let o = run(v, t, d);
        for s in o.trace.track(EGO_ID).unwrap().states() {
            prop_assert!(s.speed <= v / 3.6 + 1e-9);
            prop_assert!(s.accel >= -config.max_decel - 1e-9 && s.accel <= config.resume_accel + 1e-9);
        }
    }

    #[test]
    fn larger_trigger_distance_never_delays_the_pedestrian(v in 20.0..60.0f64, t in 3.0..10.0f64, d in 5.0..40.0f64, extra in 0.0..20.0f64) {
        let near = ped_start(&run(v, t, d)).unwrap_or(f64::INFINITY);
        let far = ped_start(&run(v, t, d + extra)).unwrap_or(f64::INFINITY);
        prop_assert!(far <= near);
    }
}

#[test]
fn missing_binding_is_named() {
    let mut c = scenario(30.0, 5.0, 16.0);
    c.bindings.remove(PARAM_T_CROSS);
    let err = simulate(&c, &presets::sim_config().unwrap()).unwrap_err();
    assert!(err.to_string().contains(PARAM_T_CROSS), "{err}");
}
