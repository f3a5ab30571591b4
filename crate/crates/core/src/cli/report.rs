use std::fmt::Write as _;

use crate::criteria::{EvaluationReport, Outcome};
use crate::error::{Error, Result};

use super::{ReportArgs, Session, EXIT_FAIL, EXIT_PASS};

fn rate(r: Option<f64>) -> String {
    r.map(|r| format!("{:.1} %", 100.0 * r)).unwrap_or_else(|| "n/a".into())
}

/// Markdown summary: the perspective × level matrix, then every failure.
pub fn render_markdown(title: &str, report: &EvaluationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "## {title}\n");
    if let Some(p) = &report.provenance {
        let _ = writeln!(s, "{} · config {} · {} input(s)\n", p.tool_version, p.config_hash, p.inputs.len());
    }
    s.push_str("| perspective | level | pass | fail | scored | n/a | pass rate |\n");
    s.push_str("|---|---|---:|---:|---:|---:|---:|\n");
    for c in &report.matrix_cells {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} | {} |",
            c.perspective,
            c.level,
            c.passes,
            c.fails,
            c.scores,
            c.not_applicable,
            rate(c.pass_rate)
        );
    }
    let failures: Vec<_> = report
        .verdicts()
        .filter(|v| matches!(v.outcome, Outcome::Fail))
        .collect();
    if !failures.is_empty() {
        let _ = writeln!(s, "\n### Failures ({})\n", failures.len());
        for v in failures {
            let worst = match &v.worst_result {
                Some(w) => match w.time {
                    Some(t) => format!("worst {} {} at {t} s", w.value, w.unit),
                    None => format!("worst {} {}", w.value, w.unit),
                },
                None => String::new(),
            };
            let _ = writeln!(s, "- `{}` on `{}` {worst}", v.criterion_id, v.subject);
        }
    }
    s
}

pub(crate) fn run(args: &ReportArgs, session: &mut Session) -> Result<u8> {
    let mut text = String::from("# Evaluation summary\n\n");
    let mut failed = false;
    for path in &args.reports {
        session.input(path);
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let report: EvaluationReport = serde_json::from_slice(&bytes)?;
        failed |= report.has_failures();
        text.push_str(&render_markdown(&path.display().to_string(), &report));
        text.push('\n');
    }
    print!("{text}");
    session.write_text("report.md", &text)?;
    Ok(if failed { EXIT_FAIL } else { EXIT_PASS })
}
