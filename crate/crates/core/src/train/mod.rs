//! Training regimes, evaluation and experiment grids.

mod config;
mod eval;
mod grid;
mod loops;

pub use config::{ModelKind, Seeds, TrainConfig};
pub use eval::{evaluate, predict_view, Classifier, EvalReport, TrainedModel};
pub use grid::{mean_std, run_grid, worker_threads, GridCell, GridResults, GridRow, GridSpec, THREADS_ENV};
pub use loops::{
    split_validator, train, train_probe, train_adversarial_with, train_dirac, train_faraday, train_vanilla,
    train_vanilla_with, train_with, DomainSplits, ProbeScores, SelectOn, StepLosses, TrainData, TrainHistory,
    ValPoint, ValScores, Validator,
};
