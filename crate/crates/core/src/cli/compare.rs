use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::metrics::macroscopic::repeatability_report;
use crate::trace::{load_trace_file, Trace};

use super::{collect_trace_paths, CompareArgs, Session, EXIT_FAIL, EXIT_PASS};

fn actor_set(t: &Trace) -> BTreeSet<&str> {
    t.actor_ids().collect()
}

pub(crate) fn run(args: &CompareArgs, session: &mut Session) -> Result<u8> {
    if !(args.threshold > 0.0) {
        return Err(Error::InvalidConfig(format!("threshold {} must be positive", args.threshold)));
    }
    session.input(&args.reference);
    let reference = load_trace_file(&args.reference)?;
    let ref_canon = std::fs::canonicalize(&args.reference).map_err(|e| Error::io(&args.reference, e))?;
    let mut runs = Vec::new();
    for path in collect_trace_paths(&args.runs)? {
        if std::fs::canonicalize(&path).is_ok_and(|p| p == ref_canon) {
            continue;
        }
        session.input(&path);
        let run = load_trace_file(&path)?;
        if actor_set(&run) != actor_set(&reference) {
            return Err(Error::InvalidTrace(format!(
                "{} has actors {:?}, the reference has {:?}",
                path.display(),
                actor_set(&run),
                actor_set(&reference)
            )));
        }
        runs.push(run);
    }
    if runs.is_empty() {
        return Err(Error::Empty("no runs to compare".into()));
    }
    let actors: Vec<&str> = if args.actors.is_empty() {
        reference.actor_ids().collect()
    } else {
        args.actors.iter().map(String::as_str).collect()
    };
    let report = repeatability_report(&reference, &runs, &actors, args.threshold)?;
    for e in report.entries.iter().filter(|e| !e.within_threshold) {
        log::warn!("{} / {}: DTW {:.3} m exceeds {} m", e.run_id, e.actor_id, e.dtw_distance, args.threshold);
    }
    session.write_json("repeatability.json", &report)?;
    Ok(if report.all_within() { EXIT_PASS } else { EXIT_FAIL })
}
