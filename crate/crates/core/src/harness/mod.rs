//! Monte Carlo driver: per-drop pipeline, runs and sweeps, aggregation,
//! output files, and the grid-search oracle.

mod emit;
mod oracle;
mod pipeline;
mod run;

pub use emit::{
    emit, read_json, write_cdf_csv, write_json, write_results_csv, OutputFormat, CDF_CSV,
    RESULTS_CSV, RESULTS_JSON,
};
pub use oracle::{grid_search_downlink, oracle_config, run_oracle, OracleCase, OracleReport};
pub use pipeline::{drop_seed, evaluate_drop, Budgets, DropContext, DropFlags, DropRecord, LinkMetrics};
pub use run::{
    run, sweep, CdfSamples, Estimate, ExcludedDrop, RunResult, Summary, SweepParam, SweepPoint,
    VERSION,
};
