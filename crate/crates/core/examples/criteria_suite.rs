// Evaluate the bundled criterion suite on a few simulated runs.

use scenq::cli::report::render_markdown;
use scenq::criteria::evaluate_all;
use scenq::presets;
use scenq::sim::simulate_batch;

pub fn run_example() -> scenq::Result<()> {
    let suite = presets::sut_criteria()?;
    for c in &suite {
        println!("{}: {} {:?}", c.criterion_id, c.metric_name, c.evaluation);
    }
    let mut logical = presets::intersection()?;
    for p in &mut logical.parameters {
        p.max = p.min + p.step;
    }
    let traces: Vec<_> = simulate_batch(&logical, &presets::sim_config()?)?
        .into_iter()
        .map(|o| o.trace)
        .collect();
    let report = evaluate_all(&suite, &traces)?;
    print!("{}", render_markdown("bundled suite", &report));
    Ok(())
}

#[allow(dead_code)]
fn main() -> scenq::Result<()> {
    run_example()
}
