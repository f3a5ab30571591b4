//! CSV / JSONL trace ingestion and serialization.
//!
//! Both formats are long-form: one record per (time, actor) with the columns
//! `time_s,actor_id,actor_class,x_m,y_m,heading_rad,speed_mps,accel_mps2`.
//! The acceleration column may be omitted, in which case it is rebuilt from
//! central differences of speed and the trace metadata records that under
//! [`ACCEL_SOURCE_KEY`]. Scenario id, parameter values, radii and any other
//! metadata live in a `<stem>.meta.json` sidecar.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{ActorClass, ActorState, ActorTrack, Trace};

pub const ACCEL_SOURCE_KEY: &str = "accel_source";
pub const PARAM_PREFIX: &str = "param.";
pub const RUN_INDEX_KEY: &str = "run_index";
const DEFAULT_SCENARIO_ID: &str = "trace";

const HEADER: [&str; 8] = [
    "time_s",
    "actor_id",
    "actor_class",
    "x_m",
    "y_m",
    "heading_rad",
    "speed_mps",
    "accel_mps2",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TraceFormat {
    Csv,
    Jsonl,
}

impl TraceFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TraceFormat::Csv => "csv",
            TraceFormat::Jsonl => "jsonl",
        }
    }

    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "csv" => Some(TraceFormat::Csv),
            "jsonl" => Some(TraceFormat::Jsonl),
            _ => None,
        }
    }
}

/// Contents of the `<stem>.meta.json` sidecar.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub scenario_id: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_index: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_step: Option<f64>,
    #[serde(default)]
    pub radii: BTreeMap<String, f64>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl TraceMeta {
    pub fn from_trace(trace: &Trace) -> Self {
        let parameters = trace
            .metadata()
            .iter()
            .filter_map(|(k, v)| {
                let name = k.strip_prefix(PARAM_PREFIX)?;
                Some((name.to_owned(), v.parse().ok()?))
            })
            .collect();
        Self {
            scenario_id: trace.scenario_id().to_owned(),
            parameters,
            run_index: trace
                .metadata()
                .get(RUN_INDEX_KEY)
                .and_then(|v| v.parse().ok()),
            time_step: Some(trace.time_step()),
            radii: trace
                .tracks()
                .map(|t| (t.id().to_owned(), t.radius()))
                .collect(),
            metadata: trace.metadata().clone(),
        }
    }

    pub fn apply(&self, trace: Trace) -> Result<Trace> {
        let mut metadata = trace.metadata().clone();
        metadata.extend(self.metadata.clone());
        for (name, value) in &self.parameters {
            metadata
                .entry(format!("{PARAM_PREFIX}{name}"))
                .or_insert_with(|| value.to_string());
        }
        if let Some(run) = self.run_index {
            metadata
                .entry(RUN_INDEX_KEY.to_owned())
                .or_insert_with(|| run.to_string());
        }
        let tracks = trace
            .tracks()
            .map(|t| match self.radii.get(t.id()) {
                Some(&r) => t.clone().with_radius(r),
                None => Ok(t.clone()),
            })
            .collect::<Result<Vec<_>>>()?;
        let scenario_id = if self.scenario_id.is_empty() {
            trace.scenario_id().to_owned()
        } else {
            self.scenario_id.clone()
        };
        Trace::new(
            scenario_id,
            self.time_step.unwrap_or(trace.time_step()),
            tracks,
            metadata,
        )
    }
}

#[derive(Debug, Deserialize)]
struct Row {
    time_s: f64,
    actor_id: String,
    actor_class: String,
    x_m: f64,
    y_m: f64,
    heading_rad: f64,
    speed_mps: f64,
    #[serde(default)]
    accel_mps2: Option<f64>,
}

#[derive(Serialize)]
struct JsonRow<'a> {
    time_s: f64,
    actor_id: &'a str,
    actor_class: ActorClass,
    x_m: f64,
    y_m: f64,
    heading_rad: f64,
    speed_mps: f64,
    accel_mps2: f64,
}

#[derive(Default)]
struct Builder {
    order: Vec<String>,
    actors: BTreeMap<String, (ActorClass, Vec<ActorState>)>,
    missing_accel: bool,
}

impl Builder {
    fn push(&mut self, line: usize, row: Row) -> Result<()> {
        let malformed = |message: String| Error::MalformedRow { line, message };
        let class = ActorClass::from_str(&row.actor_class).map_err(malformed)?;
        if row.actor_id.is_empty() {
            return Err(malformed("empty actor_id".into()));
        }
        let state = ActorState {
            time: row.time_s,
            x: row.x_m,
            y: row.y_m,
            heading: row.heading_rad,
            speed: row.speed_mps,
            accel: row.accel_mps2.unwrap_or(f64::NAN),
        };
        if row.accel_mps2.is_none() {
            self.missing_accel = true;
        }
        for (name, v) in [
            ("time_s", state.time),
            ("x_m", state.x),
            ("y_m", state.y),
            ("heading_rad", state.heading),
            ("speed_mps", state.speed),
        ] {
            if !v.is_finite() {
                return Err(malformed(format!("{name} is not finite")));
            }
        }
        if state.speed < 0.0 {
            return Err(malformed(format!("negative speed {}", state.speed)));
        }
        if row.accel_mps2.is_some_and(|a| !a.is_finite()) {
            return Err(malformed("accel_mps2 is not finite".into()));
        }
        let entry = self.actors.entry(row.actor_id.clone()).or_insert_with(|| {
            self.order.push(row.actor_id.clone());
            (class, Vec::new())
        });
        if entry.0 != class {
            return Err(malformed(format!(
                "actor `{}` changes class from {} to {}",
                row.actor_id, entry.0, class
            )));
        }
        if let Some(last) = entry.1.last() {
            if state.time == last.time {
                return Err(Error::DuplicateSample {
                    line,
                    actor: row.actor_id,
                    time: state.time,
                });
            }
            if state.time < last.time {
                return Err(Error::NonMonotonicTime {
                    line,
                    actor: row.actor_id,
                    time: state.time,
                    previous: last.time,
                });
            }
        }
        entry.1.push(state);
        Ok(())
    }

    fn finish(self) -> Result<Trace> {
        let missing_accel = self.missing_accel;
        let mut tracks = Vec::with_capacity(self.actors.len());
        for (id, (class, mut states)) in self.actors {
            if states.len() < 2 {
                return Err(Error::TooFewStates {
                    actor: id,
                    count: states.len(),
                });
            }
            if states.iter().any(|s| s.accel.is_nan()) {
                fill_accel_by_central_differences(&mut states);
            }
            tracks.push(ActorTrack::new(id, class, class.default_radius(), states)?);
        }
        if tracks.is_empty() {
            return Err(Error::Empty("trace contains no rows".into()));
        }
        let time_step = nominal_step(&tracks[0]);
        let mut metadata = BTreeMap::new();
        if missing_accel {
            metadata.insert(ACCEL_SOURCE_KEY.to_owned(), "central_difference".to_owned());
        }
        Trace::new(DEFAULT_SCENARIO_ID, time_step, tracks, metadata)
    }
}

fn fill_accel_by_central_differences(states: &mut [ActorState]) {
    let n = states.len();
    let speeds: Vec<(f64, f64)> = states.iter().map(|s| (s.time, s.speed)).collect();
    for (i, s) in states.iter_mut().enumerate() {
        let (lo, hi) = match i {
            0 => (0, 1),
            _ if i == n - 1 => (n - 2, n - 1),
            _ => (i - 1, i + 1),
        };
        s.accel = (speeds[hi].1 - speeds[lo].1) / (speeds[hi].0 - speeds[lo].0);
    }
}

/// Median sample spacing of a track.
fn nominal_step(track: &ActorTrack) -> f64 {
    let mut d: Vec<f64> = track
        .states()
        .windows(2)
        .map(|w| w[1].time - w[0].time)
        .collect();
    d.sort_by(f64::total_cmp);
    d[d.len() / 2]
}

/// Parses a trace from `source`. The result carries a placeholder scenario id,
/// class-default radii and a nominal time step equal to the median sample
/// spacing; apply a [`TraceMeta`] to override them.
pub fn load_trace(source: impl Read, format: TraceFormat) -> Result<Trace> {
    let mut builder = Builder::default();
    match format {
        TraceFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(true)
                .trim(csv::Trim::All)
                .from_reader(source);
            let headers = reader.headers()?.clone();
            for required in &HEADER[..7] {
                if !headers.iter().any(|h| h == *required) {
                    return Err(Error::MalformedRow {
                        line: 1,
                        message: format!("header is missing column `{required}`"),
                    });
                }
            }
            for record in reader.records() {
                let record = record.map_err(|e| Error::MalformedRow {
                    line: e.position().map_or(0, |p| p.line() as usize),
                    message: e.to_string(),
                })?;
                let line = record.position().map_or(0, |p| p.line() as usize);
                let row: Row = record
                    .deserialize(Some(&headers))
                    .map_err(|e| Error::MalformedRow {
                        line,
                        message: e.to_string(),
                    })?;
                builder.push(line, row)?;
            }
        }
        TraceFormat::Jsonl => {
            for (i, line) in BufReader::new(source).lines().enumerate() {
                let line_no = i + 1;
                let text = line.map_err(|e| Error::MalformedRow {
                    line: line_no,
                    message: e.to_string(),
                })?;
                if text.trim().is_empty() {
                    continue;
                }
                let row: Row = serde_json::from_str(&text).map_err(|e| Error::MalformedRow {
                    line: line_no,
                    message: e.to_string(),
                })?;
                builder.push(line_no, row)?;
            }
        }
    }
    builder.finish()
}

/// Alias of [`load_trace`] for readers that are not files.
pub fn read_trace(source: impl Read, format: TraceFormat) -> Result<Trace> {
    load_trace(source, format)
}

fn rows(trace: &Trace) -> Vec<(&ActorTrack, &ActorState)> {
    let mut rows: Vec<_> = trace
        .tracks()
        .flat_map(|t| t.states().iter().map(move |s| (t, s)))
        .collect();
    // BTreeMap iteration already orders by actor id; stable sort keeps it within a time
    rows.sort_by(|a, b| a.1.time.total_cmp(&b.1.time));
    rows
}

/// Writes the long-form rows of `trace`. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_trace(mut sink: impl Write, trace: &Trace, format: TraceFormat) -> Result<()> {
    let io_err = |e| Error::io("<trace sink>", e);
    match format {
        TraceFormat::Csv => {
            writeln!(sink, "{}", HEADER.join(",")).map_err(io_err)?;
            for (t, s) in rows(trace) {
                writeln!(
                    sink,
                    "{},{},{},{},{},{},{},{}",
                    s.time,
                    csv_field(t.id()),
                    t.class(),
                    s.x,
                    s.y,
                    s.heading,
                    s.speed,
                    s.accel
                )
                .map_err(io_err)?;
            }
        }
        TraceFormat::Jsonl => {
            for (t, s) in rows(trace) {
                let row = JsonRow {
                    time_s: s.time,
                    actor_id: t.id(),
                    actor_class: t.class(),
                    x_m: s.x,
                    y_m: s.y,
                    heading_rad: s.heading,
                    speed_mps: s.speed,
                    accel_mps2: s.accel,
                };
                serde_json::to_writer(&mut sink, &row)?;
                sink.write_all(b"\n").map_err(io_err)?;
            }
        }
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

pub fn write_meta(sink: impl Write, trace: &Trace) -> Result<()> {
    serde_json::to_writer_pretty(sink, &TraceMeta::from_trace(trace))?;
    Ok(())
}

fn sidecar_path(trace_path: &Path) -> PathBuf {
    trace_path.with_extension("meta.json")
}

/// Loads a trace file (format from its extension) together with its sidecar
/// when one exists. Without a sidecar the file stem becomes the scenario id.
pub fn load_trace_file(path: impl AsRef<Path>) -> Result<Trace> {
    let path = path.as_ref();
    let format = TraceFormat::from_path(path).ok_or_else(|| Error::MalformedRow {
        line: 0,
        message: format!("{}: unknown trace extension", path.display()),
    })?;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let trace = load_trace(BufReader::new(file), format)?;
    let meta_path = sidecar_path(path);
    if meta_path.exists() {
        let bytes = std::fs::read(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: TraceMeta = serde_json::from_slice(&bytes)?;
        meta.apply(trace)
    } else {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or(DEFAULT_SCENARIO_ID);
        Ok(trace.with_scenario_id(stem))
    }
}

/// Writes `<dir>/<stem>.<ext>` and its sidecar; returns both paths.
pub fn write_trace_files(
    dir: impl AsRef<Path>,
    stem: &str,
    trace: &Trace,
    format: TraceFormat,
) -> Result<(PathBuf, PathBuf)> {
    let path = dir.as_ref().join(format!("{stem}.{}", format.extension()));
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(file);
    write_trace(&mut w, trace, format)?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    let meta_path = sidecar_path(&path);
    let file = File::create(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let mut w = BufWriter::new(file);
    write_meta(&mut w, trace)?;
    w.write_all(b"\n").map_err(|e| Error::io(&meta_path, e))?;
    w.flush().map_err(|e| Error::io(&meta_path, e))?;
    Ok((path, meta_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "\
time_s,actor_id,actor_class,x_m,y_m,heading_rad,speed_mps,accel_mps2
0,ego,vehicle,0,0,0,10,0
0,ped,pedestrian,5,5,-1.5707963267948966,1.4,0
0.01,ego,vehicle,0.1,0,0,10,0
0.01,ped,pedestrian,5,4.986,-1.5707963267948966,1.4,0
";

    #[test]
    fn parses_long_format() {
        let t = load_trace(CSV.as_bytes(), TraceFormat::Csv).unwrap();
        assert_eq!(t.tracks().count(), 2);
        assert_eq!(t.track("ped").unwrap().class(), ActorClass::Pedestrian);
        assert_eq!(t.track("ped").unwrap().radius(), 0.3);
        assert_eq!(t.time_step(), 0.01);
    }

    #[test]
    fn duplicate_sample_is_rejected() {
        let bad = format!("{CSV}0.01,ego,vehicle,0.1,0,0,10,0\n");
        let err = load_trace(bad.as_bytes(), TraceFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::DuplicateSample { line: 6, .. }), "{err}");
    }

    #[test]
    fn backwards_time_names_actor_and_line() {
        let bad = format!("{CSV}0.005,ped,pedestrian,5,4,0,1,0\n");
        match load_trace(bad.as_bytes(), TraceFormat::Csv).unwrap_err() {
            Error::NonMonotonicTime { line, actor, .. } => {
                assert_eq!((line, actor.as_str()), (6, "ped"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn malformed_row_reports_line() {
        let bad = CSV.replace("0.1,0,0,10,0", "abc,0,0,10,0");
        let err = load_trace(bad.as_bytes(), TraceFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::MalformedRow { line: 4, .. }), "{err}");
    }

    #[test]
    fn single_state_actor_is_rejected() {
        let bad = format!("{CSV}0.02,bike,other,0,0,0,1,0\n");
        assert!(matches!(
            load_trace(bad.as_bytes(), TraceFormat::Csv),
            Err(Error::TooFewStates { .. })
        ));
    }

    #[test]
    fn missing_accel_column_is_rebuilt_and_flagged() {
        let text = "\
time_s,actor_id,actor_class,x_m,y_m,heading_rad,speed_mps
0,a,vehicle,0,0,0,10
1,a,vehicle,9,0,0,8
2,a,vehicle,16,0,0,6
";
        let t = load_trace(text.as_bytes(), TraceFormat::Csv).unwrap();
        let accels: Vec<f64> = t.track("a").unwrap().states().iter().map(|s| s.accel).collect();
        assert_eq!(accels, vec![-2.0, -2.0, -2.0]);
        assert_eq!(t.metadata()[ACCEL_SOURCE_KEY], "central_difference");
    }

    #[test]
    fn unknown_class_is_malformed() {
        let bad = CSV.replace("0,ego,vehicle,0,0", "0,ego,truck,0,0");
        assert!(matches!(
            load_trace(bad.as_bytes(), TraceFormat::Csv),
            Err(Error::MalformedRow { line: 2, .. })
        ));
    }
}
