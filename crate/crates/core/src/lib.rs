//! Quality metrics, quality criteria and scenario tooling for
//! simulation-based testing of automated driving functions.
//!
//! The crate covers the whole pipeline: logical scenarios are expanded into
//! concrete ones ([`scenario`]), executed by a deterministic kinematic
//! intersection simulator ([`sim`]) or imported as traces ([`trace`]),
//! measured at three resolutions ([`metrics`]) and judged by criteria with
//! application periods ([`criteria`]). The `scenq` binary is a thin wrapper
//! around [`cli`].

pub mod cli;
pub mod criteria;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod presets;
pub mod scenario;
pub mod sim;
pub mod trace;

pub use error::{Error, Result};
