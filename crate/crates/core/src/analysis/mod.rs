//! File ingestion, scenario runs and the static/dynamic comparison metrics.

pub mod io;
pub mod metrics;
mod scenario;

pub use metrics::{
    historical_lme_series, normalized_abs_error, rms_deviation, rolling_mean, window_rms, RmsDeviation, WindowRms,
};
pub use scenario::{
    compare, load_inputs, run_scenario, run_scenario_with, DegeneracyInfo, EmissionsSummary, FdCheck, Metrics,
    ScenarioConfig, ScenarioReport, SolverStats,
};
