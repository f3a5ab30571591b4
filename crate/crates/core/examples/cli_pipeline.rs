// The command line end to end in a scratch directory:
// simulate, evaluate, repeat and compare, report.

use scenq::cli::{run, EXIT_ERROR};

pub fn run_example() -> scenq::Result<()> {
    let dir = tempfile::tempdir().map_err(|e| scenq::Error::io("<tempdir>", e))?;
    let root = dir.path();
    let logical = root.join("small.json");
    std::fs::write(
        &logical,
        r#"{ "scenario_id": "small",
             "parameters": [ { "name": "v_max", "min": 30, "max": 50, "step": 10, "unit": "km/h" } ],
             "fixed": { "t_cross": 5, "d_start": 16 } }"#,
    )
    .map_err(|e| scenq::Error::io(&logical, e))?;
    let single = root.join("single.json");
    std::fs::write(
        &single,
        r#"{ "scenario_id": "single", "fixed": { "v_max": 32, "t_cross": 5, "d_start": 16 } }"#,
    )
    .map_err(|e| scenq::Error::io(&single, e))?;
    let path = |p: &str| root.join(p).to_string_lossy().into_owned();
    let logical = logical.to_string_lossy().into_owned();
    let single = single.to_string_lossy().into_owned();

    let steps: [Vec<String>; 5] = [
        vec!["--out".into(), path("sim"), "simulate".into(), "--logical".into(), logical],
        vec!["--out".into(), path("eval"), "evaluate".into(), path("sim")],
        vec!["--out".into(), path("runs"), "simulate".into(), "--logical".into(), single, "--repeat".into(), "3".into()],
        vec![
            "--out".into(),
            path("cmp"),
            "compare".into(),
            "--reference".into(),
            path("runs/single_0000_run00.csv"),
            path("runs"),
        ],
        vec!["--out".into(), path("rep"), "report".into(), path("eval/report.json")],
    ];
    for args in steps {
        let code = run(std::iter::once("scenq".to_owned()).chain(args.iter().cloned()));
        println!("scenq {} -> exit {code}", args[2]);
        if code == EXIT_ERROR {
            return Err(scenq::Error::InvalidConfig(format!("scenq {} failed", args[2])));
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> scenq::Result<()> {
    run_example()
}
