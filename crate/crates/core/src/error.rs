use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    MalformedRow { line: usize, message: String },

    #[error("line {line}: duplicate sample for actor `{actor}` at t = {time} s")]
    DuplicateSample { line: usize, actor: String, time: f64 },

    #[error("line {line}: time for actor `{actor}` goes backwards ({time} s after {previous} s)")]
    NonMonotonicTime {
        line: usize,
        actor: String,
        time: f64,
        previous: f64,
    },

    #[error("actor `{actor}` has {count} state(s), at least 2 are required")]
    TooFewStates { actor: String, count: usize },

    #[error("invalid track `{actor}`: {message}")]
    InvalidTrack { actor: String, message: String },

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("unknown actor `{0}`")]
    UnknownActor(String),

    #[error("actors `{0}` and `{1}` share no common time interval")]
    EmptyOverlap(String, String),

    #[error("t = {time} s is outside the track range [{start}, {end}] s")]
    TimeOutOfRange { time: f64, start: f64, end: f64 },

    #[error("resample step {dt} s exceeds the overlap length {overlap} s")]
    StepTooLarge { dt: f64, overlap: f64 },

    #[error("invalid parameter range `{name}`: {message}")]
    InvalidRange { name: String, message: String },

    #[error("invalid logical scenario: {0}")]
    InvalidScenario(String),

    #[error("binding {name} = {value} does not lie on the parameter grid")]
    OffGrid { name: String, value: f64 },

    #[error("required parameter `{0}` is not bound")]
    MissingBinding(String),

    #[error("invalid simulator configuration: {0}")]
    InvalidConfig(String),

    #[error("scenario #{index}: {source}")]
    Scenario {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("paths of `{0}` and `{1}` do not cross")]
    NoCrossing(String, String),

    #[error("conflict point is not on the path of `{0}`")]
    ConflictNotOnPath(String),

    #[error("conflict point is not ahead of `{0}` at series start")]
    ConflictNotAhead(String),

    #[error("invalid encroachment zone: {0}")]
    InvalidZone(String),

    #[error("unknown aggregation `{0}`")]
    UnknownAggregation(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("sweep is not sorted by parameter value")]
    UnsortedSweep,

    #[error("need at least 3 defined results, found {0}")]
    TooFewDefined(usize),

    #[error("unknown metric `{0}`")]
    UnknownMetric(String),

    #[error("metric `{metric}`: {message}")]
    MetricArgs { metric: String, message: String },

    #[error("unit mismatch: metric is in `{metric}`, criterion bound is in `{criterion}`")]
    UnitMismatch { metric: String, criterion: String },

    #[error("criterion `{id}`: {message}")]
    InvalidCriterion { id: String, message: String },

    #[error("metric `{metric}` is {actual}, suite level is {expected}")]
    LevelMismatch {
        metric: String,
        expected: String,
        actual: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_scenario(self, index: usize) -> Self {
        Error::Scenario {
            index,
            source: Box::new(self),
        }
    }
}
