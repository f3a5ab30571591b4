use std::path::Path;

use clap::Parser;

use scenq::cli::{execute, run, Cli, RunManifest, EXIT_ERROR, EXIT_FAIL, EXIT_PASS};
use scenq::trace::{load_trace_file, write_trace_files, Trace, TraceFormat};

fn scenq(out: &Path, args: &[&str]) -> u8 {
    let out = out.to_str().unwrap();
    let mut argv = vec!["scenq", "--out", out];
    argv.extend_from_slice(args);
    run(argv)
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn traces_in(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv") && p.file_name().unwrap() != "outcomes.csv")
        .collect();
    v.sort();
    v
}

const SMALL_GRID: &str = r#"{
  "scenario_id": "small",
  "parameters": [
    { "name": "v_max", "min": 30, "max": 50, "step": 10, "unit": "km/h" },
    { "name": "d_start", "min": 10, "max": 20, "step": 10, "unit": "m" }
  ],
  "fixed": { "t_cross": 5 }
}"#;

#[test]
fn simulate_writes_the_whole_grid_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    assert_eq!(scenq(&out, &["simulate"]), EXIT_PASS);
    assert_eq!(traces_in(&out).len(), 600);
    let manifest = RunManifest::read(out.join("manifest.json")).unwrap();
    assert_eq!(manifest.command, "simulate");
    assert!(manifest.config_hash.starts_with("sha256:"));
    assert!(manifest.outputs.len() >= 600);
    assert!(manifest.tool_version.starts_with("scenq "));
}

#[test]
fn evaluate_is_reproducible_and_reports_failures() {
    let dir = tempfile::tempdir().unwrap();
    let logical = dir.path().join("small.json");
    write(&logical, SMALL_GRID);
    let sim = dir.path().join("sim");
    assert_eq!(scenq(&sim, &["simulate", "--logical", logical.to_str().unwrap()]), EXIT_PASS);
    assert_eq!(traces_in(&sim).len(), 6);

    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let first = scenq(&a, &["evaluate", sim.to_str().unwrap(), "--emit-plot-data"]);
    let second = scenq(&b, &["evaluate", sim.to_str().unwrap(), "--emit-plot-data"]);
    assert!(first == EXIT_PASS || first == EXIT_FAIL);
    assert_eq!(first, second);
    let report = std::fs::read(a.join("report.json")).unwrap();
    assert_eq!(report, std::fs::read(b.join("report.json")).unwrap());
    assert!(a.join("metrics").is_dir());
    assert!(a.join("plots").read_dir().unwrap().count() > 0);

    // a suite that cannot pass
    let strict = dir.path().join("strict.json");
    write(
        &strict,
        r#"[{ "criterion_id": "far", "metric": "euclidean_distance",
              "evaluation": { "threshold": { "comparator": ">", "value": 1000, "unit": "m" } } }]"#,
    );
    let c = dir.path().join("c");
    assert_eq!(scenq(&c, &["evaluate", sim.to_str().unwrap(), "--criteria", strict.to_str().unwrap()]), EXIT_FAIL);
    let r = dir.path().join("r");
    assert_eq!(scenq(&r, &["report", c.join("report.json").to_str().unwrap()]), EXIT_FAIL);
    let md = std::fs::read_to_string(r.join("report.md")).unwrap();
    assert!(md.contains("| scenario | nanoscopic | 0 | 6 |"), "{md}");
    assert!(md.contains("### Failures (6)"), "{md}");
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    assert_eq!(scenq(&dir.path().join("o1"), &["evaluate", empty.to_str().unwrap()]), EXIT_ERROR);
    assert_eq!(scenq(&dir.path().join("o2"), &["evaluate", "/nonexistent/traces"]), EXIT_ERROR);
    assert_eq!(scenq(&dir.path().join("o3"), &["simulate", "--repeat"]), EXIT_ERROR);
    assert_eq!(scenq(&dir.path().join("o4"), &["--jobs", "0", "sweep"]), EXIT_ERROR);

    let logical = dir.path().join("no_t_cross.json");
    write(&logical, &SMALL_GRID.replace(r#""fixed": { "t_cross": 5 }"#, r#""fixed": {}"#));
    let out = dir.path().join("o5");
    assert_eq!(scenq(&out, &["simulate", "--logical", logical.to_str().unwrap()]), EXIT_ERROR);
    let cli = Cli::try_parse_from(["scenq", "--out", out.to_str().unwrap(), "simulate", "--logical", logical.to_str().unwrap()]).unwrap();
    let err = execute(&cli).unwrap_err();
    assert!(err.to_string().contains("t_cross"), "{err}");
}

#[test]
fn compare_flags_a_drifting_run() {
    let dir = tempfile::tempdir().unwrap();
    let logical = dir.path().join("one.json");
    write(
        &logical,
        r#"{ "scenario_id": "one", "fixed": { "v_max": 32, "t_cross": 5, "d_start": 16 } }"#,
    );
    let sim = dir.path().join("sim");
    assert_eq!(scenq(&sim, &["simulate", "--logical", logical.to_str().unwrap(), "--repeat", "4"]), EXIT_PASS);
    let runs = traces_in(&sim);
    assert_eq!(runs.len(), 4);
    let reference = runs[0].to_str().unwrap();
    let same = dir.path().join("same");
    assert_eq!(scenq(&same, &["compare", "--reference", reference, sim.to_str().unwrap()]), EXIT_PASS);

    let drifted_dir = dir.path().join("drifted");
    std::fs::create_dir(&drifted_dir).unwrap();
    let base = load_trace_file(&runs[1]).unwrap();
    let drifted = Trace::new(
        base.scenario_id(),
        base.time_step(),
        base.tracks().map(|t| if t.id() == "ego" { t.with_lateral_offset(0.02) } else { t.clone() }),
        base.metadata().clone(),
    )
    .unwrap();
    write_trace_files(&drifted_dir, "drifted", &drifted, TraceFormat::Csv).unwrap();
    let flagged = dir.path().join("flagged");
    assert_eq!(
        scenq(&flagged, &["compare", "--reference", reference, "--threshold", "1", drifted_dir.to_str().unwrap()]),
        EXIT_FAIL
    );
    let report = std::fs::read_to_string(flagged.join("repeatability.json")).unwrap();
    assert!(report.contains("\"within_threshold\": false"), "{report}");
}

#[test]
fn sweep_finds_the_trigger_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    assert_eq!(scenq(&out, &["sweep"]), EXIT_PASS);
    let gaps: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("gaps.json")).unwrap()).unwrap();
    assert_eq!(gaps["rows"].as_array().unwrap().len(), 41);
    let wttc = gaps["gaps"]["min_wttc"].as_array().unwrap();
    assert!(wttc.iter().any(|g| g["left_value"] == 49.0 && g["right_value"] == 50.0), "{wttc:?}");
    assert!(out.join("plots/min_wttc_vs_ego_start_x.csv").exists());
    assert_eq!(scenq(&dir.path().join("bad"), &["sweep", "--step", "0"]), EXIT_ERROR);
}
