// Repeatability by DTW, collision probability and parameter coverage.

use scenq::metrics::macroscopic::{collision_probability, parameter_coverage, repeatability_report};
use scenq::presets;
use scenq::scenario::concretize;
use scenq::sim::{simulate, simulate_batch, EGO_ID, PEDESTRIAN_ID};
use scenq::trace::Trace;

pub fn run_example() -> scenq::Result<()> {
    let config = presets::sim_config()?;
    let logical = presets::intersection()?;
    let grid = concretize(&logical)?;

    let reference = simulate(&grid[0], &config)?.trace;
    let repeat = simulate(&grid[0], &config)?.trace;
    let drifted = Trace::new(
        "drifted",
        reference.time_step(),
        reference
            .tracks()
            .map(|t| if t.id() == EGO_ID { t.with_lateral_offset(0.02) } else { t.clone() }),
        reference.metadata().clone(),
    )?;
    let report = repeatability_report(&reference, &[repeat, drifted], &[EGO_ID, PEDESTRIAN_ID], 10.0)?;
    for e in &report.entries {
        println!(
            "{} {}: DTW {:.3} m ({:.2e} m/step) within: {}",
            e.run_id, e.actor_id, e.dtw_distance, e.per_step, e.within_threshold
        );
    }

    let mut fast = logical.clone();
    fast.parameters.retain(|p| p.name != "v_max");
    fast.fixed.insert("v_max".into(), 58.0);
    let outcomes = simulate_batch(&fast, &config)?;
    println!("collision probability at 58 km/h: {:.3}", collision_probability(&outcomes)?);

    let every_other: Vec<_> = grid.iter().step_by(2).cloned().collect();
    let coverage = parameter_coverage(&logical, &every_other, 3)?;
    println!("coverage {:.3}, per parameter {:?}", coverage.overall, coverage.per_parameter);
    println!("first missing points: {:?}", coverage.missing);
    Ok(())
}

#[allow(dead_code)]
fn main() -> scenq::Result<()> {
    run_example()
}
