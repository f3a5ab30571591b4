// Expand the bundled intersection scenario into its concrete grid.

use scenq::presets;
use scenq::scenario::{concretize, grid_size};

pub fn run_example() -> scenq::Result<()> {
    let logical = presets::intersection()?;
    for p in &logical.parameters {
        println!("{}: {} to {} step {} {} ({} values)", p.name, p.min, p.max, p.step, p.unit, p.count());
    }
    println!("grid size: {}", grid_size(&logical)?);
    let scenarios = concretize(&logical)?;
    for c in scenarios.iter().take(3) {
        println!("{} {:?}", c.scenario_id, c.bindings);
    }
    let last = scenarios.last().expect("grid is not empty");
    println!("... {} {:?}", last.scenario_id, last.bindings);
    Ok(())
}

#[allow(dead_code)]
fn main() -> scenq::Result<()> {
    run_example()
}
