use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::presets;
use crate::scenario::LogicalScenario;
use crate::sim::{simulate_batch_map, SimConfig};
use crate::trace::{write_trace_files, RUN_INDEX_KEY};

use super::{file_stem, Session, SimulateArgs, EXIT_PASS};

/// One line of `outcomes.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub scenario_id: String,
    pub run: usize,
    pub trace_file: String,
    pub collided: bool,
    pub min_distance: f64,
    pub completed: bool,
}

pub(crate) fn load_inputs(
    session: &mut Session,
    logical: Option<&std::path::Path>,
    logical_builtin: (&str, &str),
    config: Option<&std::path::Path>,
) -> Result<(LogicalScenario, SimConfig)> {
    let bytes = session.config(logical, logical_builtin.0, logical_builtin.1)?;
    let logical = LogicalScenario::from_json(&bytes)?;
    let bytes = session.config(config, "sim_config.json", presets::SIM_CONFIG_JSON)?;
    let config = SimConfig::from_json(&bytes)?;
    Ok((logical, config))
}

pub(crate) fn run(args: &SimulateArgs, session: &mut Session) -> Result<u8> {
    if args.repeat == 0 {
        return Err(Error::InvalidConfig("--repeat must be at least 1".into()));
    }
    let (logical, config) = load_inputs(
        session,
        args.logical.as_deref(),
        ("intersection.json", presets::INTERSECTION_JSON),
        args.config.as_deref(),
    )?;
    let stem = file_stem(&logical.scenario_id);
    let format = session.format();
    let dir = session.out().to_owned();
    let mut rows = Vec::new();
    for run in 0..args.repeat {
        let batch = simulate_batch_map(&logical, &config, |c, outcome| {
            let mut name = format!("{stem}_{:04}", c.index);
            let mut trace = outcome.trace;
            if args.repeat > 1 {
                name.push_str(&format!("_run{run:02}"));
                trace = trace.with_metadata(RUN_INDEX_KEY, run.to_string());
            }
            if outcome.collided {
                log::warn!("{}: ego and pedestrian collided", c.scenario_id);
            }
            let (path, meta) = write_trace_files(&dir, &name, &trace, format)?;
            Ok((
                OutcomeRow {
                    scenario_id: c.scenario_id.clone(),
                    run,
                    trace_file: path.display().to_string(),
                    collided: outcome.collided,
                    min_distance: outcome.min_distance,
                    completed: outcome.completed,
                },
                meta,
            ))
        })?;
        for (row, meta) in batch {
            session.output(std::path::Path::new(&row.trace_file));
            session.output(&meta);
            rows.push(row);
        }
    }
    log::info!("wrote {} traces to {}", rows.len(), dir.display());
    session.write_json("outcomes.json", &rows)?;
    Ok(EXIT_PASS)
}
