//! Experiment plumbing: operator recipes, JSON configs, report files,
//! sweeps and report comparison.

mod config;
mod diff;
mod recipe;

pub use config::{
    load_config, parse_config, run_experiment, run_pipeline, ExperimentConfig, ExperimentOutcome, OperatorSource,
    Pipeline, PipelineOutput, CONFIG_SCHEMA, DEFAULT_SEED,
};
pub use diff::{report_diff, FieldDiff, ReportDiff, DEFAULT_DIFF_TOLERANCE};
pub use recipe::{generate, generate_pair, laplacian_1d, laplacian_1d_eigenvalues, OperatorRecipe};
