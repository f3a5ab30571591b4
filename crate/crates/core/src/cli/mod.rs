//! The `scenq` command line.
//!
//! Exit codes: 0 when every criterion passed, 1 on criterion failures (or
//! runs outside the repeatability threshold), 2 on usage and input errors.

mod compare;
mod evaluate;
pub mod manifest;
pub mod plot;
pub mod report;
mod simulate;
pub mod sweep;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::trace::TraceFormat;

pub use manifest::{config_hash, RunManifest};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_ERROR: u8 = 2;

pub const TOOL_VERSION: &str = concat!("scenq ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Parser)]
#[command(name = "scenq", version, about = "Quality metrics and criteria for scenario-based simulation testing")]
pub struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = "scenq-out")]
    pub out: PathBuf,
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Format of written traces and tables.
    #[arg(long, global = true, value_enum, default_value_t = TraceFormat::Csv)]
    pub format: TraceFormat,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the kinematic simulator over a logical scenario.
    Simulate(SimulateArgs),
    /// Evaluate a criterion suite on traces.
    Evaluate(EvaluateArgs),
    /// Compare repeated executions against a reference by DTW.
    Compare(CompareArgs),
    /// One-dimensional parameter sweep with result-gap detection.
    Sweep(SweepArgs),
    /// Summarize evaluation reports as Markdown.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Logical scenario JSON; the bundled intersection grid when omitted.
    #[arg(long)]
    pub logical: Option<PathBuf>,
    /// Simulator configuration JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Executions per concrete scenario.
    #[arg(long, default_value_t = 1)]
    pub repeat: usize,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Trace files or directories holding them.
    #[arg(required = true)]
    pub traces: Vec<PathBuf>,
    /// Criterion suite JSON; the bundled SUT suite when omitted.
    #[arg(long)]
    pub criteria: Option<PathBuf>,
    /// Write `param_value,metric_value` CSVs for every swept parameter.
    #[arg(long)]
    pub emit_plot_data: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub reference: PathBuf,
    /// Run traces or directories; the reference file is skipped if listed.
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
    /// Actors to compare; all actors of the reference when omitted.
    #[arg(long, value_delimiter = ',')]
    pub actors: Vec<String>,
    /// DTW distance above which a run is flagged, in meters.
    #[arg(long, default_value_t = crate::metrics::macroscopic::DEFAULT_DTW_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// One-parameter logical scenario; the bundled ego start sweep when omitted.
    #[arg(long)]
    pub logical: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Swept parameter; replaces the scenario's range.
    #[arg(long)]
    pub param: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub max: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    /// Fixed binding `name=value`, repeatable.
    #[arg(long = "set", value_parser = parse_binding)]
    pub set: Vec<(String, f64)>,
    #[arg(long, default_value_t = crate::metrics::macroscopic::DEFAULT_GAP_FACTOR)]
    pub gap_factor: f64,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// `report.json` files written by `evaluate`.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
}

fn parse_binding(s: &str) -> std::result::Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let value: f64 = value.trim().parse().map_err(|e| format!("`{value}`: {e}"))?;
    Ok((name.trim().to_owned(), value))
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_PASS };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os()))
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("SCENQ_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Runs a parsed command line and returns its exit code.
pub fn execute(cli: &Cli) -> Result<u8> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(Error::InvalidConfig("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| {
        let mut session = Session::new(&cli.out, cli.format)?;
        let (name, code) = match &cli.command {
            Command::Simulate(a) => ("simulate", simulate::run(a, &mut session)?),
            Command::Evaluate(a) => ("evaluate", evaluate::run(a, &mut session)?),
            Command::Compare(a) => ("compare", compare::run(a, &mut session)?),
            Command::Sweep(a) => ("sweep", sweep::run(a, &mut session)?),
            Command::Report(a) => ("report", report::run(a, &mut session)?),
        };
        session.finish(name)?;
        Ok(code)
    })
}

/// Bookkeeping shared by all commands: what was read, what was written.
pub(crate) struct Session {
    out: PathBuf,
    format: TraceFormat,
    started: chrono::DateTime<chrono::Utc>,
    inputs: Vec<String>,
    config_parts: Vec<Vec<u8>>,
    outputs: Vec<String>,
}

impl Session {
    fn new(out: &Path, format: TraceFormat) -> Result<Self> {
        std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        Ok(Self {
            out: out.to_owned(),
            format,
            started: chrono::Utc::now(),
            inputs: Vec::new(),
            config_parts: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub(crate) fn format(&self) -> TraceFormat {
        self.format
    }

    pub(crate) fn out(&self) -> &Path {
        &self.out
    }

    /// Reads a configuration file, or takes the bundled bytes when `path`
    /// is absent. Either way the bytes enter the config hash.
    pub(crate) fn config(&mut self, path: Option<&Path>, builtin_name: &str, builtin: &str) -> Result<Vec<u8>> {
        let bytes = match path {
            Some(p) => {
                self.inputs.push(p.display().to_string());
                std::fs::read(p).map_err(|e| Error::io(p, e))?
            }
            None => {
                self.inputs.push(format!("builtin:{builtin_name}"));
                builtin.as_bytes().to_vec()
            }
        };
        self.config_parts.push(bytes.clone());
        Ok(bytes)
    }

    pub(crate) fn input(&mut self, path: &Path) {
        self.inputs.push(path.display().to_string());
    }

    pub(crate) fn config_hash(&self) -> String {
        config_hash(self.config_parts.iter().map(Vec::as_slice))
    }

    pub(crate) fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Creates `out/<rel>` as a directory.
    pub(crate) fn subdir(&self, rel: &str) -> Result<PathBuf> {
        let dir = self.out.join(rel);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(dir)
    }

    pub(crate) fn write_json(&mut self, rel: &str, value: &impl Serialize) -> Result<PathBuf> {
        let path = self.out.join(rel);
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.output(&path);
        Ok(path)
    }

    pub(crate) fn write_text(&mut self, rel: &str, text: &str) -> Result<PathBuf> {
        let path = self.out.join(rel);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        self.output(&path);
        Ok(path)
    }

    pub(crate) fn provenance(&self, command: &str) -> crate::criteria::Provenance {
        crate::criteria::Provenance {
            command: command.to_owned(),
            inputs: self.inputs.clone(),
            config_hash: self.config_hash(),
            tool_version: TOOL_VERSION.to_owned(),
        }
    }

    fn finish(mut self, command: &str) -> Result<()> {
        let manifest = RunManifest {
            command: command.to_owned(),
            inputs: std::mem::take(&mut self.inputs),
            config_hash: self.config_hash(),
            outputs: std::mem::take(&mut self.outputs),
            tool_version: TOOL_VERSION.to_owned(),
            started: self.started.to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            finished: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        };
        manifest.write(self.out.join(manifest::MANIFEST_FILE))
    }
}

/// Expands directories into the trace files they hold, sorted by name.
pub fn collect_trace_paths(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut files = Vec::new();
            for entry in std::fs::read_dir(p).map_err(|e| Error::io(p, e))? {
                let path = entry.map_err(|e| Error::io(p, e))?.path();
                if path.is_file() && TraceFormat::from_path(&path).is_some() {
                    files.push(path);
                }
            }
            files.sort();
            found.extend(files);
        } else if p.exists() {
            found.push(p.clone());
        } else {
            return Err(Error::io(p, std::io::Error::from(std::io::ErrorKind::NotFound)));
        }
    }
    Ok(found)
}

fn file_stem(logical_id: &str) -> String {
    logical_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}
