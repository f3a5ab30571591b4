//! One-dimensional parameter sweeps over the kinematic simulator.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};

use serde::{Deserialize, Serialize};

use crate::criteria::registry::compute_trace_scalar;
use crate::error::{Error, Result};
use crate::metrics::macroscopic::{detect_result_gaps, GapFinding};
use crate::metrics::ScalarResult;
use crate::presets;
use crate::scenario::{LogicalScenario, ParameterRange};
use crate::sim::{simulate_batch_map, SimConfig, EGO_ID, META_PED_START, PEDESTRIAN_ID};
use crate::trace::TraceFormat;

use super::plot::write_plot_csv;
use super::simulate::load_inputs;
use super::{Session, SweepArgs, EXIT_PASS};

/// Swept metrics: table column and registry name.
pub const SWEEP_METRICS: [(&str, &str); 2] = [("min_distance", "min_euclidean_distance"), ("min_wttc", "min_wttc")];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param_value: f64,
    pub scenario_id: String,
    pub min_distance: Option<f64>,
    pub min_wttc: Option<f64>,
    pub collided: bool,
    /// When the pedestrian started walking; absent if it never did.
    pub ped_start_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub parameter: String,
    pub gap_factor: f64,
    pub rows: Vec<SweepRow>,
    /// Findings per table column.
    pub gaps: BTreeMap<String, Vec<GapFinding>>,
}

impl SweepResult {
    /// `(param_value, metric)` pairs for a table column.
    pub fn series(&self, column: &str) -> Vec<(f64, Option<f64>)> {
        self.rows
            .iter()
            .map(|r| {
                let v = match column {
                    "min_distance" => r.min_distance,
                    "min_wttc" => r.min_wttc,
                    _ => None,
                };
                (r.param_value, v)
            })
            .collect()
    }
}

/// Simulates every point of a one-parameter scenario and runs result-gap
/// detection on minimum distance and minimum WTTC between ego and pedestrian.
pub fn run_sweep(logical: &LogicalScenario, config: &SimConfig, gap_factor: f64) -> Result<SweepResult> {
    logical.validate()?;
    let [param] = logical.parameters.as_slice() else {
        return Err(Error::InvalidScenario(format!(
            "a sweep needs exactly one parameter, `{}` has {}",
            logical.scenario_id,
            logical.parameters.len()
        )));
    };
    let actors = [EGO_ID, PEDESTRIAN_ID];
    let no_args = BTreeMap::new();
    let measured = simulate_batch_map(logical, config, |c, outcome| {
        let x = c.get(&param.name)?;
        let scalars = SWEEP_METRICS
            .iter()
            .map(|(_, name)| compute_trace_scalar(name, &outcome.trace, &actors, &no_args, None))
            .collect::<Result<Vec<_>>>()?;
        let ped_start_time = outcome
            .trace
            .metadata()
            .get(META_PED_START)
            .and_then(|v| v.parse().ok());
        Ok((x, c.scenario_id.clone(), scalars, outcome.collided, ped_start_time))
    })?;

    let mut rows = Vec::with_capacity(measured.len());
    let mut series: Vec<Vec<(f64, ScalarResult)>> = vec![Vec::new(); SWEEP_METRICS.len()];
    for (x, scenario_id, scalars, collided, ped_start_time) in measured {
        rows.push(SweepRow {
            param_value: x,
            scenario_id,
            min_distance: scalars[0].value(),
            min_wttc: scalars[1].value(),
            collided,
            ped_start_time,
        });
        for (s, r) in series.iter_mut().zip(scalars) {
            s.push((x, r));
        }
    }
    let mut gaps = BTreeMap::new();
    for ((column, _), s) in SWEEP_METRICS.iter().zip(&series) {
        let found = match detect_result_gaps(&param.name, s, gap_factor) {
            Ok(f) => f,
            Err(Error::TooFewDefined(n)) => {
                log::warn!("{column}: only {n} defined results, gap detection skipped");
                Vec::new()
            }
            Err(e) => return Err(e),
        };
        gaps.insert((*column).to_owned(), found);
    }
    Ok(SweepResult {
        parameter: param.name.clone(),
        gap_factor,
        rows,
        gaps,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_table(sink: impl Write, rows: &[SweepRow], format: TraceFormat) -> Result<()> {
    match format {
        TraceFormat::Csv => {
            let mut w = csv::Writer::from_writer(sink);
            w.write_record(["param_value", "scenario_id", "min_distance", "min_wttc", "collided", "ped_start_time"])?;
            for r in rows {
                w.write_record([
                    r.param_value.to_string(),
                    r.scenario_id.clone(),
                    opt(r.min_distance),
                    opt(r.min_wttc),
                    r.collided.to_string(),
                    opt(r.ped_start_time),
                ])?;
            }
            w.flush().map_err(csv::Error::from)?;
        }
        TraceFormat::Jsonl => {
            let mut sink = sink;
            for r in rows {
                serde_json::to_writer(&mut sink, r)?;
                sink.write_all(b"\n").map_err(|e| Error::io("<sweep table>", e))?;
            }
            sink.flush().map_err(|e| Error::io("<sweep table>", e))?;
        }
    }
    Ok(())
}

/// Applies `--param/--min/--max/--step/--set` to the loaded scenario.
fn apply_overrides(mut logical: LogicalScenario, args: &SweepArgs) -> Result<LogicalScenario> {
    let overriding = args.param.is_some() || args.min.is_some() || args.max.is_some() || args.step.is_some();
    if overriding {
        let base = match logical.parameters.as_slice() {
            [p] => Some(p.clone()),
            _ => None,
        };
        let pick = |given: Option<f64>, from: Option<f64>, what: &str| {
            given.or(from).ok_or_else(|| Error::InvalidScenario(format!("--{what} is required")))
        };
        let name = match (&args.param, &base) {
            (Some(n), _) => n.clone(),
            (None, Some(b)) => b.name.clone(),
            (None, None) => return Err(Error::InvalidScenario("--param is required".into())),
        };
        let same = base.as_ref().filter(|b| b.name == name);
        let range = ParameterRange::new(
            name.clone(),
            pick(args.min, same.map(|b| b.min), "min")?,
            pick(args.max, same.map(|b| b.max), "max")?,
            pick(args.step, same.map(|b| b.step), "step")?,
            same.map(|b| b.unit.clone()).unwrap_or_default(),
        );
        logical.fixed.remove(&name);
        logical.parameters = vec![range];
    }
    for (name, value) in &args.set {
        if logical.parameters.iter().any(|p| &p.name == name) {
            return Err(Error::InvalidScenario(format!("`{name}` is the swept parameter")));
        }
        logical.fixed.insert(name.clone(), *value);
    }
    logical.validate()?;
    Ok(logical)
}

pub(crate) fn run(args: &SweepArgs, session: &mut Session) -> Result<u8> {
    let (logical, config) = load_inputs(
        session,
        args.logical.as_deref(),
        ("ego_start_sweep.json", presets::EGO_START_SWEEP_JSON),
        args.config.as_deref(),
    )?;
    let logical = apply_overrides(logical, args)?;
    let result = run_sweep(&logical, &config, args.gap_factor)?;
    for (column, found) in &result.gaps {
        for g in found {
            log::info!("{column}: gap between {} = {} and {}", g.parameter, g.left_value, g.right_value);
        }
    }

    let format = session.format();
    let path = session.out().join(format!("sweep.{}", format.extension()));
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    write_table(BufWriter::new(file), &result.rows, format)?;
    session.output(&path);
    session.write_json("gaps.json", &result)?;
    let dir = session.subdir("plots")?;
    for (column, _) in SWEEP_METRICS {
        let path = dir.join(format!("{column}_vs_{}.csv", result.parameter));
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        write_plot_csv(BufWriter::new(file), &result.series(column))?;
        session.output(&path);
    }
    Ok(EXIT_PASS)
}
