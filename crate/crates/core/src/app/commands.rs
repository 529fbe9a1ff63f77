//! The operations behind the `domainshift` subcommands.
//!
//! Every command reads an [`ExperimentConfig`], writes its data products under
//! `output.dir` and prints a human-readable summary to the supplied console. Data
//! files never contain timestamps; JSON summaries carry a `generated_at` field
//! (Unix seconds) outside their data arrays.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::app::config::ExperimentConfig;
use crate::app::manifest::{affine, fit_and_apply, load_cache, load_domain, Manifest, ManifestEntry};
use crate::app::timeline::{accuracy, fnv1a64, merge_intervals, TimelinePrediction};
use crate::dataset::{label_frames, split, synth_domains, Domain, DomainDataset, IntervalLabelFile, Split, SynthSpec};
use crate::features::{extract_file, write_cache, FeatureConfig, FittedTransform, TransformKind, TransformSpec};
use crate::nn::Checkpoint;
use crate::train::{
    evaluate, predict_view, run_grid, train, train_probe, worker_threads, EvalReport, GridResults, TrainData,
    TrainHistory, TrainedModel,
};
use crate::{Error, Result};

/// Shared state of one command invocation.
pub struct Context<'a> {
    pub config: ExperimentConfig,
    /// Overwrite existing outputs that would otherwise be skipped.
    pub force: bool,
    pub console: &'a mut dyn Write,
}

impl<'a> Context<'a> {
    pub fn new(config: ExperimentConfig, console: &'a mut dyn Write) -> Self {
        Context { config, force: false, console }
    }

    fn say(&mut self, line: impl AsRef<str>) {
        // Console output is advisory; a closed pipe must not fail the experiment.
        let _ = writeln!(self.console, "{}", line.as_ref());
    }

    fn out_path(&self, name: &str) -> PathBuf {
        self.config.output_dir.join(name)
    }
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    write_file(path, text)
}

fn read_json(path: &Path) -> Result<serde_json::Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn manifest(cfg: &ExperimentConfig) -> Result<Manifest> {
    let path = cfg
        .data
        .manifest
        .as_ref()
        .ok_or_else(|| Error::Config("no data source: set data.manifest or pass --synthetic".into()))?;
    Manifest::read(path)
}

fn pct(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileStatus {
    Extracted,
    Skipped,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileSummary {
    pub audio: PathBuf,
    pub cache: PathBuf,
    pub status: FileStatus,
    pub frames: usize,
    pub cut: usize,
    pub non_cut: usize,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractSummary {
    pub files: Vec<FileSummary>,
}

impl ExtractSummary {
    pub fn count(&self, status: FileStatus) -> usize {
        self.files.iter().filter(|f| f.status == status).count()
    }
}

fn extract_one(entry: &ManifestEntry, cache_dir: &Path, cfg: &FeatureConfig, force: bool) -> FileSummary {
    let cache = entry.cache_path(cache_dir);
    let skip = cache.exists() && !force;
    let run = || -> Result<(usize, usize)> {
        let set = if skip { load_cache(&cache, cfg)? } else { extract_file(&entry.audio, cfg)? };
        let labels = entry.frame_labels(&set)?;
        if !skip {
            if let Some(dir) = cache.parent() {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            write_cache(&cache, &set)?;
        }
        Ok((set.n_frames(), labels.iter().filter(|&&l| l == 1).count()))
    };
    let (status, frames, cut, error) = match run() {
        Ok((frames, cut)) => (if skip { FileStatus::Skipped } else { FileStatus::Extracted }, frames, cut, None),
        Err(e) => (FileStatus::Failed, 0, 0, Some(e.to_string())),
    };
    FileSummary {
        audio: entry.audio.clone(),
        cache,
        status,
        frames,
        cut,
        non_cut: frames - cut,
        error,
    }
}

/// Extracts one feature cache per manifest entry. Existing caches are skipped
/// unless `force` is set. Fails with a data error if any file failed.
pub fn cmd_extract(ctx: &mut Context<'_>) -> Result<ExtractSummary> {
    let cfg = ctx.config.clone();
    cfg.features.validate()?;
    let m = manifest(&cfg)?;
    let cache_dir = cfg.cache_dir();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_threads())
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let force = ctx.force;
    let files: Vec<FileSummary> =
        pool.install(|| m.entries.par_iter().map(|e| extract_one(e, &cache_dir, &cfg.features, force)).collect());
    for f in &files {
        match f.status {
            FileStatus::Failed => ctx.say(format!(
                "failed    {}: {}",
                f.audio.display(),
                f.error.as_deref().unwrap_or("")
            )),
            FileStatus::Skipped => ctx.say(format!(
                "skipped   {} (cache exists; use --force to rebuild): {} frames, {} cut / {} non-cut",
                f.audio.display(),
                f.frames,
                f.cut,
                f.non_cut
            )),
            FileStatus::Extracted => ctx.say(format!(
                "extracted {}: {} frames, {} cut / {} non-cut",
                f.audio.display(),
                f.frames,
                f.cut,
                f.non_cut
            )),
        }
    }
    let summary = ExtractSummary { files };
    let ok: Vec<&FileSummary> = summary.files.iter().filter(|f| f.status != FileStatus::Failed).collect();
    ctx.say(format!(
        "{} files: {} extracted, {} skipped, {} failed; {} frames ({} cut / {} non-cut)",
        summary.files.len(),
        summary.count(FileStatus::Extracted),
        summary.count(FileStatus::Skipped),
        summary.count(FileStatus::Failed),
        ok.iter().map(|f| f.frames).sum::<usize>(),
        ok.iter().map(|f| f.cut).sum::<usize>(),
        ok.iter().map(|f| f.non_cut).sum::<usize>(),
    ));
    let failed = summary.count(FileStatus::Failed);
    if failed > 0 {
        return Err(Error::Data(format!("{failed} of {} files failed to extract", summary.files.len())));
    }
    Ok(summary)
}

/// Split source and target domains ready for training.
#[derive(Clone, Debug)]
pub struct Domains {
    pub source: DomainDataset,
    pub target: DomainDataset,
    /// Transform statistics of audio features; `None` for synthetic data.
    pub transforms: Option<DomainTransforms>,
    pub synthetic: Option<SynthSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainTransforms {
    pub source: FittedTransform,
    pub target: FittedTransform,
}

impl DomainTransforms {
    pub fn get(&self, d: Domain) -> FittedTransform {
        match d {
            Domain::Source => self.source,
            Domain::Target => self.target,
        }
    }
}

/// Loads both domains, applies the feature transform and splits them with seeds
/// `seed` (source) and `seed + 1` (target).
///
/// Synthetic features are used as generated. Audio features are transformed with
/// `fixed` when given, otherwise with statistics fitted per domain.
pub fn load_domains(cfg: &ExperimentConfig, fixed: Option<DomainTransforms>) -> Result<Domains> {
    let ratios = cfg.data.split_ratios;
    let (source, target, transforms) = if let Some(spec) = &cfg.data.synthetic {
        let d = synth_domains(spec)?;
        (d.source, d.target, None)
    } else {
        let m = manifest(cfg)?;
        let dir = cfg.cache_dir();
        let src = load_domain(&m.select(Domain::Source, cfg.data.source_sensor.as_deref()), Domain::Source, &dir, &cfg.features)?;
        let tgt = load_domain(&m.select(Domain::Target, cfg.data.target_sensor.as_deref()), Domain::Target, &dir, &cfg.features)?;
        let (src, tgt, t) = match fixed {
            Some(t) => (
                src.with_features(t.source.apply(src.features())?)?,
                tgt.with_features(t.target.apply(tgt.features())?)?,
                t,
            ),
            None => {
                let (src, fs) = fit_and_apply(&src, cfg.transform)?;
                let (tgt, ft) = fit_and_apply(&tgt, cfg.transform)?;
                (src, tgt, DomainTransforms { source: fs, target: ft })
            }
        };
        (src, tgt, Some(t))
    };
    Ok(Domains {
        source: split(&source, ratios, cfg.seed)?,
        target: split(&target, ratios, cfg.seed.wrapping_add(1))?,
        transforms,
        synthetic: cfg.data.synthetic.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rq1Row {
    pub group: String,
    pub transform: TransformKind,
    pub train_acc: Option<f64>,
    pub val_acc: Option<f64>,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rq1Table {
    pub rows: Vec<Rq1Row>,
}

impl Rq1Table {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).expect("rows serialize");
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
    }

    pub fn get(&self, group: &str, kind: TransformKind) -> Option<&Rq1Row> {
        self.rows.iter().find(|r| r.group == group && r.transform == kind)
    }
}

/// The synthetic transform benchmark: source-domain features of `spec` under
/// `scale·x + offset`.
pub fn rq1_synthetic(spec: &SynthSpec, scale: f64, offset: f64) -> Result<DomainDataset> {
    let d = synth_domains(spec)?;
    d.source.with_features(affine(d.source.features(), scale, offset))
}

fn rq1_group(cfg: &ExperimentConfig, group: &str, ds: &DomainDataset) -> Result<Vec<Rq1Row>> {
    let ds = split(ds, cfg.data.split_ratios, cfg.seed)?;
    let tc = cfg.train_config();
    let mut rows = Vec::new();
    for kind in TransformKind::ALL {
        let spec = TransformSpec { kind, gamma: cfg.transform.gamma };
        let outcome = fit_and_apply(&ds, spec).and_then(|(x, _)| {
            let (_, s) = train_probe(&tc, &x.view(Split::Train), &x.view(Split::Val))?;
            Ok(s)
        });
        rows.push(match outcome {
            Ok(s) => Rq1Row {
                group: group.to_string(),
                transform: kind,
                train_acc: Some(s.train_acc),
                val_acc: Some(s.val_acc),
                status: "ok".into(),
            },
            Err(e) => Rq1Row {
                group: group.to_string(),
                transform: kind,
                train_acc: None,
                val_acc: None,
                status: format!("error: {e}"),
            },
        });
    }
    Ok(rows)
}

/// Trains the probe once per transform and per `(domain, sensor)` group.
pub fn cmd_rq1(ctx: &mut Context<'_>) -> Result<Rq1Table> {
    let cfg = ctx.config.clone();
    cfg.validate()?;
    let groups: Vec<(String, DomainDataset)> = match &cfg.data.synthetic {
        Some(spec) => vec![("synthetic".into(), rq1_synthetic(spec, cfg.rq1.synthetic_scale, cfg.rq1.synthetic_offset)?)],
        None => {
            let m = manifest(&cfg)?;
            let mut out = Vec::new();
            for (domain, sensor) in m.groups() {
                let ds = load_domain(&m.select(domain, Some(&sensor)), domain, &cfg.cache_dir(), &cfg.features)?;
                out.push((format!("{}/{}", domain.name(), sensor), ds));
            }
            out
        }
    };
    let mut table = Rq1Table { rows: Vec::new() };
    for (name, ds) in &groups {
        ctx.say(format!("rq1 {name}: {} frames", ds.len()));
        table.rows.extend(rq1_group(&cfg, name, ds)?);
    }
    let mut header = format!("{:<10}", "transform");
    for (name, _) in &groups {
        header.push_str(&format!(" | {:>22}", format!("{name} train/val")));
    }
    ctx.say(header);
    for kind in TransformKind::ALL {
        let mut line = format!("{:<10}", kind.name());
        for (name, _) in &groups {
            let r = table.get(name, kind).expect("every group has every transform");
            let cell = match (r.train_acc, r.val_acc) {
                (Some(t), Some(v)) => format!("{:.3} / {:.3}", t, v),
                _ => "error".into(),
            };
            line.push_str(&format!(" | {cell:>22}"));
        }
        ctx.say(line);
    }
    write_file(&ctx.out_path("rq1.csv"), table.to_csv())?;
    write_json(&ctx.out_path("rq1.json"), &json!({ "generated_at": unix_now(), "rows": table.rows }))?;
    Ok(table)
}

/// Runs the configured model comparison grid.
pub fn cmd_rq2(ctx: &mut Context<'_>) -> Result<GridResults> {
    let cfg = ctx.config.clone();
    cfg.validate()?;
    let d = load_domains(&cfg, None)?;
    let spec = cfg.grid_spec();
    ctx.say(format!(
        "rq2: {} cells x {} repeats on {} source / {} target samples",
        spec.cell_count(),
        spec.repeats,
        d.source.len(),
        d.target.len()
    ));
    let results = run_grid(&spec, &d.source, &d.target)?;
    for line in rq2_table(&results, &spec.models) {
        ctx.say(line);
    }
    for r in results.rows.iter().filter(|r| r.status != "ok") {
        ctx.say(format!("{} n_s={} n_t={} seed={}: {}", r.model.name(), r.n_source, r.n_target, r.seed, r.status));
    }
    write_file(&ctx.out_path("rq2_rows.csv"), results.rows_csv())?;
    write_json(
        &ctx.out_path("rq2.json"),
        &json!({ "generated_at": unix_now(), "config": cfg.render(), "cells": results.cells, "rows": results.rows }),
    )?;
    let mut jsonl = String::new();
    let ok_rows = results.rows.iter().filter(|r| r.status == "ok");
    for (row, hist) in ok_rows.zip(&results.histories) {
        for line in hist.to_jsonl().lines() {
            let mut v: serde_json::Value = serde_json::from_str(line).expect("history lines are JSON");
            v["n_source"] = json!(row.n_source);
            v["n_target"] = json!(row.n_target);
            v["seed"] = json!(row.seed);
            jsonl.push_str(&v.to_string());
            jsonl.push('\n');
        }
    }
    write_file(&ctx.out_path("rq2_histories.jsonl"), jsonl)?;
    Ok(results)
}

/// Mean ± std target-test accuracy (percent) per `(n_source, n_target)` row, with
/// the best model of each row marked `*`.
pub fn rq2_table(results: &GridResults, models: &[crate::train::ModelKind]) -> Vec<String> {
    let mut lines = Vec::new();
    let mut header = format!("{:>8} {:>8}", "n_source", "n_target");
    for m in models {
        header.push_str(&format!(" | {:>14}", m.name()));
    }
    lines.push(header);
    let mut keys: Vec<(usize, usize)> = Vec::new();
    for c in &results.cells {
        if !keys.contains(&(c.n_source, c.n_target)) {
            keys.push((c.n_source, c.n_target));
        }
    }
    for (ns, nt) in keys {
        let cells: Vec<_> = models
            .iter()
            .map(|m| results.cells.iter().find(|c| c.model == *m && c.n_source == ns && c.n_target == nt))
            .collect();
        let best = cells.iter().filter_map(|c| c.and_then(|c| c.mean)).fold(f64::NEG_INFINITY, f64::max);
        let mut line = format!("{ns:>8} {nt:>8}");
        for c in cells {
            let text = match c.and_then(|c| c.mean.zip(c.std)) {
                Some((m, s)) => format!("{}{}±{}", if m == best { "*" } else { "" }, pct(m), pct(s)),
                None => "error".into(),
            };
            line.push_str(&format!(" | {text:>14}"));
        }
        lines.push(line);
    }
    lines
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub checkpoint: PathBuf,
    pub history: TrainHistory,
    pub target_test: EvalReport,
    pub source_test: EvalReport,
}

fn checkpoint_metadata(cfg: &ExperimentConfig, d: &Domains, hist: &TrainHistory) -> serde_json::Value {
    json!({
        "seed": cfg.seed,
        "split_ratios": cfg.data.split_ratios,
        "features": cfg.features,
        "transforms": d.transforms,
        "synthetic": d.synthetic,
        "train": cfg.train_config(),
        "best_step": hist.best_step,
        "best_selection_acc": hist.best_selection_acc,
        "best_target_val_acc": hist.best_target_val_acc,
    })
}

/// Trains `train.model` once and stores the best checkpoint as `model.dsck`.
pub fn cmd_train(ctx: &mut Context<'_>) -> Result<TrainOutcome> {
    let cfg = ctx.config.clone();
    cfg.validate()?;
    let d = load_domains(&cfg, None)?;
    let tc = cfg.train_config();
    let data = TrainData::prepare(&d.source, &d.target, &tc)?;
    ctx.say(format!(
        "training {} on {} source / {} target samples",
        tc.model.name(),
        data.source.train.len(),
        data.target.train.len()
    ));
    let (model, history) = train(&tc, &data)?;
    let target_test = evaluate(&model, &data.target.test)?;
    let source_test = evaluate(&model, &data.source.test)?;
    let checkpoint = ctx.out_path("model.dsck");
    if let Some(dir) = checkpoint.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    model.to_checkpoint(checkpoint_metadata(&cfg, &d, &history)).write(&checkpoint)?;
    write_file(&ctx.out_path("history.jsonl"), history.to_jsonl())?;
    let outcome = TrainOutcome { checkpoint, history, target_test, source_test };
    write_json(
        &ctx.out_path("train_summary.json"),
        &json!({ "generated_at": unix_now(), "model": tc.model, "summary": outcome }),
    )?;
    ctx.say(format!(
        "best step {} of {} (selection accuracy {}%); target test {}%, source test {}%",
        outcome.history.best_step,
        outcome.history.total_steps,
        pct(outcome.history.best_selection_acc),
        pct(outcome.target_test.accuracy),
        pct(outcome.source_test.accuracy)
    ));
    ctx.say(format!("checkpoint written to {}", outcome.checkpoint.display()));
    Ok(outcome)
}

fn transforms_from(meta: &serde_json::Value) -> Result<Option<DomainTransforms>> {
    match meta.get("transforms") {
        None | Some(serde_json::Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v.clone())
            .map(Some)
            .map_err(|e| Error::Format(format!("checkpoint transform statistics: {e}"))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalOutcome {
    pub checkpoint_id: String,
    pub model: crate::train::ModelKind,
    pub target_test: EvalReport,
    pub source_test: EvalReport,
}

/// Scores a checkpoint on both test splits.
///
/// The split seed, and the synthetic spec when the configuration names no data
/// source, come from the checkpoint so the test split matches training.
pub fn cmd_eval(ctx: &mut Context<'_>, checkpoint: &Path) -> Result<EvalOutcome> {
    let bytes = std::fs::read(checkpoint).map_err(|e| Error::io(checkpoint, e))?;
    let ck = Checkpoint::decode(&bytes)?;
    let model = TrainedModel::from_checkpoint(&ck)?;
    let mut cfg = ctx.config.clone();
    if let Some(seed) = ck.metadata.get("seed").and_then(|s| s.as_u64()) {
        if seed != cfg.seed {
            log::info!("using split seed {seed} stored in the checkpoint");
        }
        cfg.seed = seed;
    }
    if let Some(r) = ck.metadata.get("split_ratios").filter(|v| !v.is_null()) {
        cfg.data.split_ratios =
            serde_json::from_value(r.clone()).map_err(|e| Error::Format(format!("checkpoint split ratios: {e}")))?;
    }
    if cfg.data.synthetic.is_none() && cfg.data.manifest.is_none() {
        if let Some(spec) = ck.metadata.get("synthetic").filter(|v| !v.is_null()) {
            cfg.data.synthetic =
                Some(serde_json::from_value(spec.clone()).map_err(|e| Error::Format(format!("checkpoint synthetic spec: {e}")))?);
        }
    }
    cfg.validate()?;
    let d = load_domains(&cfg, transforms_from(&ck.metadata)?)?;
    if d.source.dim() != model.input_dim() {
        return Err(Error::Data(format!(
            "checkpoint expects {} features, data has {}",
            model.input_dim(),
            d.source.dim()
        )));
    }
    let outcome = EvalOutcome {
        checkpoint_id: format!("{:016x}", fnv1a64(&bytes)),
        model: model.kind(),
        target_test: evaluate(&model, &d.target.view(Split::Test))?,
        source_test: evaluate(&model, &d.source.view(Split::Test))?,
    };
    for (name, r) in [("target test", &outcome.target_test), ("source test", &outcome.source_test)] {
        ctx.say(format!(
            "{name}: accuracy {}% ({}/{}), confusion [[{}, {}], [{}, {}]]",
            pct(r.accuracy),
            r.correct,
            r.total,
            r.confusion[0][0],
            r.confusion[0][1],
            r.confusion[1][0],
            r.confusion[1][1]
        ));
    }
    write_json(&ctx.out_path("eval.json"), &json!({ "generated_at": unix_now(), "eval": outcome }))?;
    Ok(outcome)
}

/// Whole-file timeline inference.
///
/// Features are extracted with the checkpoint's stored extraction settings and
/// transformed with its stored statistics for `infer.domain`.
pub fn cmd_infer_file(
    ctx: &mut Context<'_>,
    audio: &Path,
    labels: Option<&Path>,
    checkpoint: &Path,
    plot: Option<&Path>,
) -> Result<TimelinePrediction> {
    let cfg = ctx.config.clone();
    cfg.validate()?;
    let bytes = std::fs::read(checkpoint).map_err(|e| Error::io(checkpoint, e))?;
    let ck = Checkpoint::decode(&bytes)?;
    let transforms = transforms_from(&ck.metadata)?.ok_or_else(|| {
        Error::Data(format!(
            "{} carries no transform statistics; re-export it by running `domainshift train` on extracted audio features",
            checkpoint.display()
        ))
    })?;
    let features: FeatureConfig = match ck.metadata.get("features") {
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| Error::Format(format!("checkpoint feature settings: {e}")))?,
        None => cfg.features.clone(),
    };
    let model = TrainedModel::from_checkpoint(&ck)?;
    let domain = cfg.infer.domain;
    let set = extract_file(audio, &features)?;
    let x = transforms.get(domain).apply(&set.features)?;
    if x.cols() != model.input_dim() {
        return Err(Error::Data(format!("checkpoint expects {} features, file gives {}", model.input_dim(), x.cols())));
    }
    let n = x.rows();
    let ds = DomainDataset::single_domain(x, vec![0; n], domain, 0)?;
    let predictions = predict_view(&model, &ds.view_all())?;
    let intervals = merge_intervals(&predictions, |k| features.frame_time(k), cfg.infer.min_duration_s);
    let smoothed = label_frames(&set.frame_times, &intervals)?;
    let file_name = audio.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let truth = match labels {
        Some(p) => {
            let lf = IntervalLabelFile::read(p)?;
            if !lf.files.contains_key(&file_name) {
                return Err(Error::Data(format!("{} has no rows for file '{file_name}'", p.display())));
            }
            Some(label_frames(&set.frame_times, lf.intervals(&file_name))?)
        }
        None => None,
    };
    let timeline = TimelinePrediction {
        audio: audio.to_path_buf(),
        checkpoint_id: format!("{:016x}", fnv1a64(&bytes)),
        accuracy: truth.as_deref().map(|t| accuracy(t, &predictions)).transpose()?,
        smoothed_accuracy: truth.as_deref().map(|t| accuracy(t, &smoothed)).transpose()?,
        frame_times: set.frame_times,
        predictions,
        smoothed,
        intervals,
        truth,
    };
    ctx.say(format!(
        "{}: {} frames, {} predicted cut intervals",
        audio.display(),
        n,
        timeline.intervals.len()
    ));
    if let Some(acc) = timeline.accuracy {
        ctx.say(format!("frame accuracy {}%", pct(acc)));
    }
    write_file(&ctx.out_path("intervals.csv"), timeline.intervals_csv(&file_name))?;
    write_json(&ctx.out_path("timeline.json"), &timeline)?;
    if let Some(p) = plot {
        write_file(p, timeline.plot_csv())?;
    }
    Ok(timeline)
}

/// Collects the result files present in `output.dir` into `report.md`.
pub fn cmd_report(ctx: &mut Context<'_>) -> Result<String> {
    let dir = ctx.config.output_dir.clone();
    let mut md = String::from("# Experiment report\n");
    let mut found = 0;
    let rq1 = dir.join("rq1.json");
    if rq1.exists() {
        found += 1;
        let v = read_json(&rq1)?;
        let rows: Vec<Rq1Row> =
            serde_json::from_value(v["rows"].clone()).map_err(|e| Error::Format(format!("rq1.json: {e}")))?;
        md.push_str("\n## Feature transforms\n\n| group | transform | train acc | val acc |\n|---|---|---|---|\n");
        for r in rows {
            let f = |x: Option<f64>| x.map_or_else(|| r.status.clone(), |x| format!("{x:.3}"));
            md.push_str(&format!("| {} | {} | {} | {} |\n", r.group, r.transform.name(), f(r.train_acc), f(r.val_acc)));
        }
    }
    let rq2 = dir.join("rq2.json");
    if rq2.exists() {
        found += 1;
        let v = read_json(&rq2)?;
        let cells: Vec<crate::train::GridCell> =
            serde_json::from_value(v["cells"].clone()).map_err(|e| Error::Format(format!("rq2.json: {e}")))?;
        md.push_str("\n## Model comparison (target test accuracy, %)\n\n| model | n_source | n_target | runs | mean | std |\n|---|---|---|---|---|---|\n");
        for c in cells {
            let f = |x: Option<f64>| x.map_or_else(|| "n/a".into(), pct);
            md.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} |\n",
                c.model.name(),
                c.n_source,
                c.n_target,
                c.runs,
                f(c.mean),
                f(c.std)
            ));
        }
    }
    for (file, title, key) in [("train_summary.json", "Training run", "summary"), ("eval.json", "Evaluation", "eval")] {
        let p = dir.join(file);
        if p.exists() {
            found += 1;
            let v = read_json(&p)?;
            let s = &v[key];
            md.push_str(&format!(
                "\n## {title}\n\n- target test accuracy: {}\n- source test accuracy: {}\n",
                s["target_test"]["accuracy"], s["source_test"]["accuracy"]
            ));
        }
    }
    let tl = dir.join("timeline.json");
    if tl.exists() {
        found += 1;
        let t: TimelinePrediction =
            serde_json::from_value(read_json(&tl)?).map_err(|e| Error::Format(format!("timeline.json: {e}")))?;
        md.push_str(&format!(
            "\n## Timeline\n\n- file: {}\n- frames: {}\n- predicted intervals: {}\n",
            t.audio.display(),
            t.predictions.len(),
            t.intervals.len()
        ));
        if let Some(a) = t.accuracy {
            md.push_str(&format!("- frame accuracy: {a:.4}\n"));
        }
    }
    if found == 0 {
        return Err(Error::Data(format!("no result files found in {}", dir.display())));
    }
    write_file(&dir.join("report.md"), &md)?;
    ctx.say(md.trim_end());
    Ok(md)
}
