//! Experiment configuration, dataset manifests and the command implementations
//! behind the `domainshift` binary.

mod commands;
mod config;
mod manifest;
mod timeline;

pub use commands::{
    cmd_eval, cmd_extract, cmd_infer_file, cmd_report, cmd_rq1, cmd_rq2, cmd_train, load_domains, rq1_synthetic,
    rq2_table, Context, DomainTransforms, Domains, EvalOutcome, ExtractSummary, FileStatus, FileSummary, Rq1Row,
    Rq1Table, TrainOutcome,
};
pub use config::{
    parse_synth_spec, render_synth_spec, DataConfig, ExperimentConfig, GridConfig, InferConfig, ParsedConfig,
    Rq1Config,
};
pub use manifest::{affine, fit_and_apply, load_cache, load_domain, Manifest, ManifestEntry};
pub use timeline::{accuracy, fnv1a64, merge_intervals, TimelinePrediction};
