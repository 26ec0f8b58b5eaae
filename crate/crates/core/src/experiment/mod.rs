//! The formation-acquisition benchmark: scenario construction, interest
//! point streams, topology sweeps and the CSV files they produce.

pub mod config;
mod matrix;
mod scenario;

pub use matrix::{
    run_experiment_matrix, smooth_series, write_summary_csv, AgentDump, CellOptions, PreparedScenario, RunMetadata,
    RunRecord, SmoothMode, ORACLE_TOL,
};
pub use scenario::{
    build_formation_scenario, interest_stream, sample_interest_point, OutOfBox, ScenarioConfig, StreamParams,
    PINNED_RANDOM_GRAPH_SEED,
};
