//! Experiment configs, the runner with its cross-checks, and report output.

mod config;
mod report;
mod run;
mod suite;

pub use config::{
    Budgets, ClassSpec, ExperimentConfig, Format, GeneratorSpec, OutputOptions, SampleSource, SignsTask, SuiteConfig,
    Task, SCHEMA_VERSION,
};
pub use report::{csv_rows, emit_report, render, to_json, verdict_text, write_csv, CSV_HEADER};
pub use run::{
    run_experiment, Check, ExperimentResult, GrowthOutput, Outcome, SignsOutput, TableSummary, TaskOutputs, Verdict,
};
pub use suite::{default_suite, first_error, run_suite, write_suite, SuiteOutcome};
