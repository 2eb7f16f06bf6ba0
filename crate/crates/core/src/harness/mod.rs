//! Experiment harness: configuration, training runs, evaluation, visit
//! diagnostics, aggregation across seeds and plotting.

pub mod config;
pub mod report;
pub mod run;
pub mod stats;
pub mod visits;

pub use config::{parse_seed_range, Algorithm, ExperimentConfig};
pub use report::{aggregate, aggregate_dirs, read_metrics, read_metrics_dir, write_metrics, AggregateRow, Metric, MetricsRow};
pub use run::{evaluate, evaluate_with, run_experiment, run_seed, SeedOutcome, SeedRun, TrainLogRow};
pub use stats::{paired_t_test_greater, summarize, Summary};
pub use visits::VisitTable;
