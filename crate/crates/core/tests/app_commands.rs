//! End-to-end runs of the command layer on small recordings and synthetic data.

use std::path::{Path, PathBuf};

use domainshift::app::*;
use domainshift::dataset::{label_frames, Interval, SynthSpec};
use domainshift::features::{frame_count, write_wav, SampleFormat, TransformKind};
use domainshift::numcore::RngState;
use domainshift::train::ModelKind;
use domainshift::Error;

const SR: u32 = 8000;

/// Low noise everywhere and a loud 1 kHz tone inside the cut intervals.
fn recording(seconds: f64, cuts: &[Interval], seed: u64) -> Vec<f64> {
    let mut rng = RngState::new(seed);
    let n = (seconds * SR as f64) as usize;
    (0..n)
        .map(|i| {
            let t = i as f64 / SR as f64;
            let tone = if cuts.iter().any(|c| c.start_s <= t && t < c.end_s) {
                0.5 * (2.0 * std::f64::consts::PI * 1000.0 * t).sin()
            } else {
                0.0
            };
            tone + 0.02 * rng.next_normal()
        })
        .collect()
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    manifest: PathBuf,
    cuts: Vec<Interval>,
}

fn fixture(entries: &[(&str, &str, &str)]) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let cuts = vec![Interval::new(0.5, 1.5), Interval::new(2.25, 3.0), Interval::new(3.5, 4.5)];
    let mut labels = String::from("file,start_s,end_s\n");
    let mut list = Vec::new();
    for (i, (name, domain, sensor)) in entries.iter().enumerate() {
        write_wav(root.join(name), &recording(5.0, &cuts, i as u64), 1, SR, SampleFormat::Pcm16).unwrap();
        for c in &cuts {
            labels.push_str(&format!("{name},{},{}\n", c.start_s, c.end_s));
        }
        list.push(format!(r#"{{"audio":"{name}","labels":"labels.csv","domain":"{domain}","sensor":"{sensor}"}}"#));
    }
    std::fs::write(root.join("labels.csv"), labels).unwrap();
    let manifest = root.join("manifest.json");
    std::fs::write(&manifest, format!(r#"{{"entries":[{}]}}"#, list.join(","))).unwrap();
    Fixture { _dir: dir, root, manifest, cuts }
}

fn audio_config(f: &Fixture) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    for kv in [
        "feature.sample_rate=8000",
        "feature.n_fft=256",
        "feature.hop=64",
        "train.epochs=4",
        "train.val_interval=10",
        "arch.private=16,8",
        "arch.shared=8",
        "arch.head_hidden=8",
    ] {
        c.apply_override(kv).unwrap();
    }
    c.data.manifest = Some(f.manifest.clone());
    c.output_dir = f.root.join("out");
    c
}

fn synthetic_config(out: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    for kv in [
        "data.synthetic=dim=24,latent_dim=4,n_source=400,n_target=200",
        "train.epochs=2",
        "train.val_interval=5",
        "arch.private=16,8",
        "arch.shared=8",
        "arch.head_hidden=8",
        "grid.sizes_source=200",
        "grid.sizes_target=20,1000",
        "grid.models=bsm,faraday,dirac",
        "grid.repeats=2",
    ] {
        c.apply_override(kv).unwrap();
    }
    c.output_dir = out.to_path_buf();
    c
}

fn run<T>(cfg: &ExperimentConfig, f: impl FnOnce(&mut Context<'_>) -> domainshift::Result<T>) -> (domainshift::Result<T>, String) {
    let mut console = Vec::new();
    let mut ctx = Context::new(cfg.clone(), &mut console);
    let out = f(&mut ctx);
    (out, String::from_utf8(console).unwrap())
}

#[test]
fn extract_counts_match_frame_labels_and_skips_existing() {
    let f = fixture(&[("a.wav", "source", "0"), ("b.wav", "target", "0")]);
    let cfg = audio_config(&f);
    let (summary, text) = run(&cfg, cmd_extract);
    let summary = summary.unwrap();
    assert_eq!(summary.count(FileStatus::Extracted), 2);
    let n_samples = 5 * SR as usize;
    let frames = frame_count(n_samples, &cfg.features);
    let times: Vec<f64> = (0..frames).map(|k| cfg.features.frame_time(k)).collect();
    let cut = label_frames(&times, &f.cuts).unwrap().iter().filter(|&&l| l == 1).count();
    for fs in &summary.files {
        assert_eq!((fs.frames, fs.cut, fs.non_cut), (frames, cut, frames - cut));
        assert!(fs.cache.exists());
    }
    assert!(text.contains(&format!("{} frames ({} cut / {} non-cut)", 2 * frames, 2 * cut, 2 * (frames - cut))));

    let (again, text) = run(&cfg, cmd_extract);
    assert_eq!(again.unwrap().count(FileStatus::Skipped), 2);
    assert!(text.contains("--force"));
    let mut forced = Vec::new();
    let mut ctx = Context::new(cfg.clone(), &mut forced);
    ctx.force = true;
    assert_eq!(cmd_extract(&mut ctx).unwrap().count(FileStatus::Extracted), 2);
}

#[test]
fn extract_reports_failures_and_exits_nonzero() {
    let f = fixture(&[("a.wav", "source", "0")]);
    let text = std::fs::read_to_string(&f.manifest).unwrap().replace(
        "]}",
        r#",{"audio":"missing.wav","labels":"labels.csv","domain":"target"}]}"#,
    );
    std::fs::write(&f.manifest, text).unwrap();
    let (res, console) = run(&audio_config(&f), cmd_extract);
    let err = res.unwrap_err();
    assert!(matches!(err, Error::Data(_)));
    assert_eq!(err.exit_code(), 3);
    assert!(console.contains("failed") && console.contains("missing.wav"));
    assert!(f.root.join("out/features/source-0-a.dsf").exists());
}

#[test]
fn extract_of_empty_manifest_succeeds() {
    let f = fixture(&[]);
    let (res, _) = run(&audio_config(&f), cmd_extract);
    assert!(res.unwrap().files.is_empty());
}

#[test]
fn long_file_frame_count() {
    // 130.27 s at 48 kHz; a short FFT keeps the cache small, the count depends on the hop only.
    let dir = tempfile::tempdir().unwrap();
    let n = 6_252_960;
    write_wav(dir.path().join("long.wav"), &vec![0.0; n], 1, 48_000, SampleFormat::Pcm16).unwrap();
    std::fs::write(dir.path().join("labels.csv"), "file,start_s,end_s\nlong.wav,10.0,20.0\n").unwrap();
    let m = dir.path().join("m.json");
    std::fs::write(&m, r#"{"entries":[{"audio":"long.wav","labels":"labels.csv","domain":"target"}]}"#).unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.features.n_fft = 256;
    cfg.data.manifest = Some(m);
    cfg.output_dir = dir.path().join("out");
    let (res, text) = run(&cfg, cmd_extract);
    assert_eq!(res.unwrap().files[0].frames, 12_213);
    assert!(text.contains("12213 frames"));
}

#[test]
fn rq1_on_manifest_groups() {
    let f = fixture(&[("a.wav", "source", "0"), ("b.wav", "source", "1"), ("c.wav", "target", "0")]);
    let mut cfg = audio_config(&f);
    cfg.train.epochs = 2;
    assert!(matches!(run(&cfg, cmd_rq1).0, Err(Error::Data(_))), "features must be extracted first");
    run(&cfg, cmd_extract).0.unwrap();
    let (table, text) = run(&cfg, cmd_rq1);
    let table = table.unwrap();
    assert_eq!(table.rows.len(), 5 * 3);
    assert!(table.rows.iter().all(|r| r.status == "ok"), "{:?}", table.rows);
    assert!(text.contains("source/1 train/val"));
    let csv = std::fs::read_to_string(cfg.output_dir.join("rq1.csv")).unwrap();
    assert_eq!(csv.lines().count(), 16);
    assert!(csv.starts_with("group,transform,train_acc,val_acc,status"));
}

#[test]
fn rq1_scale_pathology_favours_stanx_and_repeats() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.apply_override("data.synthetic=dim=64,n_source=600").unwrap();
    cfg.train.epochs = 5;
    cfg.output_dir = dir.path().to_path_buf();
    let a = run(&cfg, cmd_rq1).0.unwrap();
    let b = run(&cfg, cmd_rq1).0.unwrap();
    assert_eq!(a, b);
    assert_eq!(a.rows.len(), 5);
    let val = |k| a.get("synthetic", k).unwrap().val_acc.unwrap();
    assert!(val(TransformKind::Stanx) >= val(TransformKind::Idx), "{:?}", a.rows);
}

#[test]
fn rq2_grid_outputs_are_reproducible() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let (r1, text) = run(&synthetic_config(d1.path()), cmd_rq2);
    let (r2, _) = run(&synthetic_config(d2.path()), cmd_rq2);
    let (r1, r2) = (r1.unwrap(), r2.unwrap());
    assert_eq!(r1.cells.len(), 1 * 2 * 3);
    let csv1 = std::fs::read(d1.path().join("rq2_rows.csv")).unwrap();
    assert_eq!(csv1, std::fs::read(d2.path().join("rq2_rows.csv")).unwrap());
    assert_eq!(r1.rows, r2.rows);
    // 1000 target samples exceed the 140-sample target training split.
    assert_eq!(r1.rows.iter().filter(|r| r.status.starts_with("error")).count(), 6);
    assert!(text.contains('*'));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d1.path().join("rq2.json")).unwrap()).unwrap();
    assert!(json["generated_at"].as_u64().is_some());
    assert_eq!(json["rows"].as_array().unwrap().len(), 12);
    let hist = std::fs::read_to_string(d1.path().join("rq2_histories.jsonl")).unwrap();
    let expect: usize = r1
        .histories
        .iter()
        .map(|h| h.points.len() + h.pretrain.as_ref().map_or(0, |p| p.points.len()))
        .sum();
    assert_eq!(hist.lines().count(), expect);
    let first: serde_json::Value = serde_json::from_str(hist.lines().next().unwrap()).unwrap();
    assert_eq!(first["n_target"], 20);
}

#[test]
fn train_then_eval_agree() {
    let dir = tempfile::tempdir().unwrap();
    for model in [ModelKind::Bfm, ModelKind::Dirac] {
        let mut cfg = synthetic_config(dir.path());
        cfg.train.model = model;
        cfg.train.n_target = Some(20);
        cfg.seed = 3;
        let trained = run(&cfg, cmd_train).0.unwrap();
        assert!(trained.checkpoint.exists());
        // Eval recovers seed and synthetic spec from the checkpoint.
        let mut bare = ExperimentConfig::default();
        bare.output_dir = dir.path().to_path_buf();
        let eval = run(&bare, |ctx| cmd_eval(ctx, &trained.checkpoint)).0.unwrap();
        assert_eq!(eval.model, model);
        assert_eq!(eval.target_test, trained.target_test);
        assert_eq!(eval.source_test, trained.source_test);
    }
    let (report, _) = run(&synthetic_config(dir.path()), cmd_report);
    assert!(report.unwrap().contains("## Evaluation"));
}

#[test]
fn infer_file_roundtrips_intervals() {
    let f = fixture(&[("a.wav", "source", "0"), ("b.wav", "target", "0")]);
    let mut cfg = audio_config(&f);
    cfg.train.model = ModelKind::Bsm;
    cfg.train.epochs = 10;
    run(&cfg, cmd_extract).0.unwrap();
    let trained = run(&cfg, cmd_train).0.unwrap();
    let probe = f.root.join("probe.wav");
    write_wav(&probe, &recording(5.0, &f.cuts, 99), 1, SR, SampleFormat::Pcm16).unwrap();
    std::fs::write(
        f.root.join("probe.csv"),
        format!("file,start_s,end_s\n{}", f.cuts.iter().map(|c| format!("probe.wav,{},{}\n", c.start_s, c.end_s)).collect::<String>()),
    )
    .unwrap();
    let plot = f.root.join("plot.csv");
    let (tl, text) = run(&cfg, |ctx| {
        cmd_infer_file(ctx, &probe, Some(&f.root.join("probe.csv")), &trained.checkpoint, Some(&plot))
    });
    let tl = tl.unwrap();
    assert_eq!(label_frames(&tl.frame_times, &tl.intervals).unwrap(), tl.predictions);
    assert_eq!(tl.smoothed, tl.predictions);
    let acc = tl.accuracy.unwrap();
    assert!(acc > 0.9, "accuracy {acc}");
    assert!(text.contains("frame accuracy"));
    let plot_text = std::fs::read_to_string(&plot).unwrap();
    assert_eq!(plot_text.lines().next(), Some("frame_time,truth,prediction"));
    assert_eq!(plot_text.lines().count(), tl.frame_times.len() + 1);
    if acc == 1.0 {
        let truth = tl.truth.as_ref().unwrap();
        assert_eq!(&tl.predictions, truth);
    }

    // A minimum duration longer than any interval removes them all.
    let mut long = cfg.clone();
    long.infer.min_duration_s = 10.0;
    let tl = run(&long, |ctx| cmd_infer_file(ctx, &probe, None, &trained.checkpoint, None)).0.unwrap();
    assert!(tl.intervals.is_empty() && tl.smoothed.iter().all(|&p| p == 0));
    assert!(tl.accuracy.is_none());
}

#[test]
fn infer_file_refuses_checkpoints_without_statistics() {
    let f = fixture(&[("a.wav", "target", "0")]);
    let mut cfg = synthetic_config(&f.root.join("syn"));
    cfg.train.model = ModelKind::Bsm;
    cfg.data.synthetic = Some(SynthSpec { dim: 129, latent_dim: 4, n_source: 200, n_target: 100, ..SynthSpec::default() });
    let trained = run(&cfg, cmd_train).0.unwrap();
    let err = run(&audio_config(&f), |ctx| cmd_infer_file(ctx, &f.root.join("a.wav"), None, &trained.checkpoint, None))
        .0
        .unwrap_err();
    assert!(matches!(&err, Error::Data(m) if m.contains("re-export")), "{err}");
}

#[test]
fn report_needs_results() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.output_dir = dir.path().to_path_buf();
    assert!(matches!(run(&cfg, cmd_report).0, Err(Error::Data(_))));
}

#[test]
fn missing_data_source_is_config_error() {
    let cfg = ExperimentConfig::default();
    let err = run(&cfg, cmd_rq2).0.unwrap_err();
    assert_eq!(err.exit_code(), 2);
}
