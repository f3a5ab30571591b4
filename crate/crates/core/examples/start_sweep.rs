// Sweep the ego start position and look for result gaps.

use scenq::cli::sweep::run_sweep;
use scenq::presets;

pub fn run_example() -> scenq::Result<()> {
    let result = run_sweep(&presets::ego_start_sweep()?, &presets::sim_config()?, 5.0)?;
    println!("{:>6} {:>10} {:>9} {:>9}", result.parameter, "min dist", "min wttc", "ped start");
    for r in result.rows.iter().step_by(4) {
        println!(
            "{:>6} {:>10.3} {:>9.3} {:>9.2}",
            r.param_value,
            r.min_distance.unwrap_or(f64::NAN),
            r.min_wttc.unwrap_or(f64::NAN),
            r.ped_start_time.unwrap_or(f64::NAN)
        );
    }
    for (column, found) in &result.gaps {
        for g in found {
            println!("{column}: gap between {} and {} ({:?})", g.left_value, g.right_value, g.metric_jump);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> scenq::Result<()> {
    run_example()
}
