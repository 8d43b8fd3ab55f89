//! Benchmark harness: dataset ingestion, experiment runner, result files and
//! Monte Carlo audits.

pub mod audit;
pub mod data;
pub mod emit;
pub mod experiment;

pub use audit::{run_audit_campaign, AuditKind, AuditParams, AuditReport};
pub use data::{ingest_csv, CsvSchema, DataSource, SyntheticSpec};
pub use emit::{emit_results, read_results, summarize, Format, SummaryRow};
pub use experiment::{run_experiment, run_trial, ExperimentConfig, Method, ResultRecord};
