//! Pipeline commands behind the `hodgeflow` binary: building complexes,
//! Hodge decomposition of signals, gradient checking, and training/eval
//! sweeps of the citation-imputation experiment.
//!
//! Commands work on plain config structs so the argument parser stays a thin
//! shell and tests can drive the pipeline directly.

pub mod commands;
pub mod config;

pub use commands::{cmd_build, cmd_decompose, cmd_eval, cmd_gradcheck, cmd_train};
pub use config::{
    BuildConfig, CellResult, DataSource, DecomposeConfig, EvalConfig, GradcheckConfig,
    ModelChoice, ModelShape, TrainCellConfig,
};
