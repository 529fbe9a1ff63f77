//! Labeled frames, seeded splits, batching and synthetic domain pairs.

mod batch;
mod data;
mod labels;
mod synth;

pub use batch::{batches, Batch, BatchStream, Batches};
pub use data::{
    split, split_counts, subsample, DatasetView, Domain, DomainDataset, LabeledSample, Origin,
    Split, DEFAULT_SPLIT_RATIOS,
};
pub use labels::{label_frames, normalize_intervals, Interval, IntervalLabelFile, LABEL_HEADER};
pub use synth::{synth_domains, SynthDomains, SynthSpec};
