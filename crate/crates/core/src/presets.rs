//! Bundled inputs for the urban-intersection study. The same files live in
//! `data/` so they can be copied and edited.

use crate::criteria::{parse_suite, QualityCriterion};
use crate::error::Result;
use crate::scenario::LogicalScenario;
use crate::sim::SimConfig;

pub const SIM_CONFIG_JSON: &str = include_str!("../data/sim_config.json");
/// 15 speeds × 5 crossing times × 8 trigger distances.
pub const INTERSECTION_JSON: &str = include_str!("../data/intersection.json");
/// Ego start position 38–78 m in 1 m steps.
pub const EGO_START_SWEEP_JSON: &str = include_str!("../data/ego_start_sweep.json");
pub const SUT_CRITERIA_JSON: &str = include_str!("../data/sut_criteria.json");

pub fn sim_config() -> Result<SimConfig> {
    SimConfig::from_json(SIM_CONFIG_JSON.as_bytes())
}

pub fn intersection() -> Result<LogicalScenario> {
    LogicalScenario::from_json(INTERSECTION_JSON.as_bytes())
}

pub fn ego_start_sweep() -> Result<LogicalScenario> {
    LogicalScenario::from_json(EGO_START_SWEEP_JSON.as_bytes())
}

pub fn sut_criteria() -> Result<Vec<QualityCriterion>> {
    parse_suite(SUT_CRITERIA_JSON.as_bytes())
}
