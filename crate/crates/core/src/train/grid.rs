use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::DomainDataset;
use crate::train::{evaluate, train, ModelKind, Seeds, TrainConfig, TrainData, TrainHistory};
use crate::{Error, Result};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "DOMAINSHIFT_THREADS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub sizes_source: Vec<usize>,
    pub sizes_target: Vec<usize>,
    pub models: Vec<ModelKind>,
    pub repeats: usize,
    /// Repeat `r` runs with base seed `base_seed + r`.
    pub base_seed: u64,
    /// Template for every run; model, sizes and seeds are overridden per cell.
    pub train: TrainConfig,
}

impl GridSpec {
    pub fn cell_count(&self) -> usize {
        self.sizes_source.len() * self.sizes_target.len() * self.models.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.cell_count() == 0 || self.repeats == 0 {
            return Err(Error::Config("grid needs at least one size, model and repeat".into()));
        }
        self.train.validate()
    }
}

/// One run of one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub model: ModelKind,
    pub n_source: usize,
    pub n_target: usize,
    pub seed: u64,
    /// Split the accuracy column refers to.
    pub split: String,
    /// Target test accuracy.
    pub accuracy: Option<f64>,
    pub source_accuracy: Option<f64>,
    pub best_step: Option<usize>,
    pub best_target_val_acc: Option<f64>,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub model: ModelKind,
    pub n_source: usize,
    pub n_target: usize,
    pub runs: usize,
    pub mean: Option<f64>,
    /// Sample standard deviation (n − 1); 0 for a single run.
    pub std: Option<f64>,
    pub errors: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridResults {
    pub rows: Vec<GridRow>,
    pub cells: Vec<GridCell>,
    /// Histories of successful runs, aligned with the `ok` rows.
    pub histories: Vec<TrainHistory>,
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Some((mean, std))
}

#[derive(Clone, Copy)]
struct Job {
    model: ModelKind,
    n_source: usize,
    n_target: usize,
    seed: u64,
}

fn run_job(job: Job, spec: &GridSpec, source: &DomainDataset, target: &DomainDataset) -> (GridRow, Option<TrainHistory>) {
    let outcome = (|| -> Result<(f64, f64, TrainHistory)> {
        let cfg = TrainConfig {
            model: job.model,
            n_source: Some(job.n_source),
            n_target: Some(job.n_target),
            seeds: Seeds::from_base(job.seed),
            ..spec.train.clone()
        };
        let data = TrainData::prepare(source, target, &cfg)?;
        let (model, history) = train(&cfg, &data)?;
        let acc = evaluate(&model, &data.target.test)?.accuracy;
        let src = evaluate(&model, &data.source.test)?.accuracy;
        Ok((acc, src, history))
    })();
    let mut row = GridRow {
        model: job.model,
        n_source: job.n_source,
        n_target: job.n_target,
        seed: job.seed,
        split: "target_test".into(),
        accuracy: None,
        source_accuracy: None,
        best_step: None,
        best_target_val_acc: None,
        status: "ok".into(),
    };
    match outcome {
        Ok((acc, src, history)) => {
            row.accuracy = Some(acc);
            row.source_accuracy = Some(src);
            row.best_step = Some(history.best_step);
            row.best_target_val_acc = history.best_target_val_acc;
            (row, Some(history))
        }
        Err(e) => {
            row.status = format!("error: {e}");
            (row, None)
        }
    }
}

/// Worker count from [`THREADS_ENV`], or rayon's default.
pub fn worker_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

/// Trains and evaluates every `(n_source, n_target, model)` cell `repeats` times.
///
/// Per-run failures (for instance a cell larger than the available data) become
/// error rows; the results are identical for any worker count.
pub fn run_grid(spec: &GridSpec, source: &DomainDataset, target: &DomainDataset) -> Result<GridResults> {
    spec.validate()?;
    let mut jobs = Vec::new();
    for &n_source in &spec.sizes_source {
        for &n_target in &spec.sizes_target {
            for &model in &spec.models {
                for r in 0..spec.repeats as u64 {
                    jobs.push(Job {
                        model,
                        n_source,
                        n_target,
                        seed: spec.base_seed + r,
                    });
                }
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_threads())
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<(GridRow, Option<TrainHistory>)> =
        pool.install(|| jobs.par_iter().map(|&j| run_job(j, spec, source, target)).collect());

    let mut cells = Vec::with_capacity(spec.cell_count());
    for chunk in outcomes.chunks(spec.repeats) {
        let first = &chunk[0].0;
        let accs: Vec<f64> = chunk.iter().filter_map(|(r, _)| r.accuracy).collect();
        let stats = mean_std(&accs);
        cells.push(GridCell {
            model: first.model,
            n_source: first.n_source,
            n_target: first.n_target,
            runs: accs.len(),
            mean: stats.map(|s| s.0),
            std: stats.map(|s| s.1),
            errors: chunk
                .iter()
                .filter(|(r, _)| r.status != "ok")
                .map(|(r, _)| format!("seed {}: {}", r.seed, r.status))
                .collect(),
        });
    }
    let (rows, histories): (Vec<_>, Vec<_>) = outcomes.into_iter().unzip();
    Ok(GridResults {
        rows,
        cells,
        histories: histories.into_iter().flatten().collect(),
    })
}

impl GridResults {
    /// Per-run CSV; contains no timestamps, so equal inputs give equal bytes.
    pub fn rows_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).expect("rows serialize");
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
    }
}
