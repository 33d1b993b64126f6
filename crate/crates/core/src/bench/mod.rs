//! Seeded multi-method experiments: configuration, parallel execution,
//! aggregation and CSV/SVG output.

mod config;
mod output;
mod run;

pub use config::{
    default_methods, parse_config, BenchmarkConfig, ConfigOverrides, EdgeSource, Experiment, MethodName, DEFAULT_RATIOS,
};
pub use output::{emit_csv, emit_svg, CSV_HEADER};
pub use run::{aggregate, run_benchmark, sweep_ratios, AggregateRow, BenchmarkOutput, ResultRow, EG_GRID, THREADS_ENV};
