use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;

use rayon::prelude::*;

use crate::criteria::{evaluate_all, parse_suite, EvaluationReport, Outcome, QualityCriterion};
use crate::error::{Error, Result};
use crate::presets;
use crate::trace::{load_trace_file, Trace};

use super::plot::{sweep_series, write_plot_csv};
use super::{collect_trace_paths, EvaluateArgs, Session, EXIT_FAIL, EXIT_PASS};

pub(crate) fn load_traces(session: &mut Session, paths: &[std::path::PathBuf]) -> Result<Vec<Trace>> {
    let files = collect_trace_paths(paths)?;
    if files.is_empty() {
        return Err(Error::Empty(format!(
            "no .csv or .jsonl traces in {}",
            paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", ")
        )));
    }
    for f in &files {
        session.input(f);
    }
    files.par_iter().map(load_trace_file).collect()
}

fn outcome_label(o: &Outcome) -> String {
    match o {
        Outcome::Pass => "pass".into(),
        Outcome::Fail => "fail".into(),
        Outcome::Score { value } => format!("score {value}"),
        Outcome::NotApplicable => "not_applicable".into(),
    }
}

/// One CSV per metric with a row per verdict.
fn write_metric_tables(session: &mut Session, suite: &[QualityCriterion], report: &EvaluationReport) -> Result<()> {
    let metric_of: BTreeMap<&str, &str> = suite
        .iter()
        .map(|c| (c.criterion_id.as_str(), c.metric_name.as_str()))
        .collect();
    let mut by_metric: BTreeMap<&str, Vec<_>> = BTreeMap::new();
    for v in report.verdicts() {
        if let Some(m) = metric_of.get(v.criterion_id.as_str()) {
            by_metric.entry(m).or_default().push(v);
        }
    }
    let dir = session.subdir("metrics")?;
    for (metric, verdicts) in by_metric {
        let path = dir.join(format!("{metric}.csv"));
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        w.write_record(["criterion_id", "subject", "outcome", "worst_time", "worst_value", "unit"])?;
        for v in verdicts {
            let (time, value, unit) = match &v.worst_result {
                Some(r) => (
                    r.time.map(|t| t.to_string()).unwrap_or_default(),
                    r.value.to_string(),
                    r.unit.to_string(),
                ),
                None => Default::default(),
            };
            w.write_record([
                v.criterion_id.as_str(),
                &v.subject,
                &outcome_label(&v.outcome),
                &time,
                &value,
                &unit,
            ])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        session.output(&path);
    }
    Ok(())
}

pub(crate) fn run(args: &EvaluateArgs, session: &mut Session) -> Result<u8> {
    let bytes = session.config(args.criteria.as_deref(), "sut_criteria.json", presets::SUT_CRITERIA_JSON)?;
    let suite = parse_suite(&bytes)?;
    let traces = load_traces(session, &args.traces)?;
    log::info!("evaluating {} criteria on {} traces", suite.len(), traces.len());
    let mut report = evaluate_all(&suite, &traces)?;
    report.provenance = Some(session.provenance("evaluate"));
    session.write_json("report.json", &report)?;
    write_metric_tables(session, &suite, &report)?;
    if args.emit_plot_data {
        let dir = session.subdir("plots")?;
        for ((metric, param), points) in sweep_series(&traces, &report.scalars) {
            let path = dir.join(format!("{metric}_vs_{param}.csv"));
            let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
            write_plot_csv(BufWriter::new(file), &points)?;
            session.output(&path);
        }
    }
    for cell in &report.matrix_cells {
        log::info!(
            "{} / {}: {} pass, {} fail, {} scored, {} not applicable",
            cell.perspective,
            cell.level,
            cell.passes,
            cell.fails,
            cell.scores,
            cell.not_applicable
        );
    }
    Ok(if report.has_failures() { EXIT_FAIL } else { EXIT_PASS })
}
