//! Training loops.
//!
//! One epoch is `⌈n_source_train / batch_size⌉` steps. Adversarial runs pair every
//! source batch with a full batch from a cycling target stream. Validation fires
//! every `val_interval` steps and on the final step; the model with the best
//! selection accuracy is retained, earliest on ties.

use serde::{Deserialize, Serialize};

use crate::adversarial::{
    dirac_losses, discriminator_update, faraday_losses, forward_generators, forward_heads,
    forward_pair, route_gradients, AdaMode, AdversarialNet, PairLabels, Part,
};
use crate::dataset::{subsample, BatchStream, DatasetView, DomainDataset, Split};
use crate::nn::{adam_apply, backward, cross_entropy, forward, one_hot, AdamState, Mode, NetworkParams};
use crate::adversarial::{probe_architecture, vanilla_architecture};
use crate::numcore::{Matrix, RngState};
use crate::train::config::ShufflePlan;
use crate::train::{evaluate, Classifier, ModelKind, TrainConfig, TrainedModel};
use crate::{Error, Result};

/// Train/val/test views of one domain.
#[derive(Clone, Debug)]
pub struct DomainSplits<'a> {
    pub train: DatasetView<'a>,
    pub val: DatasetView<'a>,
    pub test: DatasetView<'a>,
}

impl<'a> DomainSplits<'a> {
    /// Uses the dataset's split assignment; `n_train` subsamples the training split.
    pub fn new(dataset: &'a DomainDataset, n_train: Option<usize>, seed: u64) -> Result<Self> {
        let train = match n_train {
            Some(n) => subsample(dataset, Split::Train, n, seed)?,
            None => dataset.view(Split::Train),
        };
        Ok(DomainSplits {
            train,
            val: dataset.view(Split::Val),
            test: dataset.view(Split::Test),
        })
    }
}

#[derive(Clone, Debug)]
pub struct TrainData<'a> {
    pub source: DomainSplits<'a>,
    pub target: DomainSplits<'a>,
}

impl<'a> TrainData<'a> {
    /// Subsamples both training splits to the sizes in `cfg`, seeded by `cfg.seeds.shuffle`.
    pub fn prepare(source: &'a DomainDataset, target: &'a DomainDataset, cfg: &TrainConfig) -> Result<Self> {
        if source.dim() != target.dim() {
            return Err(Error::Shape(format!(
                "source has {} features, target has {}",
                source.dim(),
                target.dim()
            )));
        }
        let plan = ShufflePlan::new(cfg.seeds.shuffle);
        Ok(TrainData {
            source: DomainSplits::new(source, cfg.n_source, plan.subsample_source)?,
            target: DomainSplits::new(target, cfg.n_target, plan.subsample_target)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.source.train.dataset().dim()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValScores {
    pub source: Option<f64>,
    pub target: Option<f64>,
}

/// Called at every validation point with the current model (in infer mode) and the
/// global step.
pub type Validator<'v> = dyn FnMut(&dyn Classifier, usize) -> Result<ValScores> + 'v;

/// Accuracy on the source and target validation splits, where non-empty.
pub fn split_validator<'v>(source_val: &'v DatasetView<'v>, target_val: &'v DatasetView<'v>) -> impl FnMut(&dyn Classifier, usize) -> Result<ValScores> + 'v {
    move |model, _step| {
        let acc = |v: &DatasetView<'_>| -> Result<Option<f64>> {
            if v.is_empty() {
                Ok(None)
            } else {
                Ok(Some(evaluate(model, v)?.accuracy))
            }
        };
        Ok(ValScores {
            source: acc(source_val)?,
            target: acc(target_val)?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectOn {
    SourceVal,
    TargetVal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepLosses {
    pub l_c: f64,
    pub l_d: Option<f64>,
    pub l_g: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValPoint {
    pub step: usize,
    pub epoch: usize,
    pub source_val_acc: Option<f64>,
    pub target_val_acc: Option<f64>,
    /// Training losses of the step that triggered this validation.
    pub losses: StepLosses,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub model: ModelKind,
    pub select_on: SelectOn,
    pub total_steps: usize,
    pub points: Vec<ValPoint>,
    pub best_step: usize,
    pub best_selection_acc: f64,
    /// Maximum recorded target validation accuracy.
    pub best_target_val_acc: Option<f64>,
    /// The source-only phase of a fine-tuned run.
    pub pretrain: Option<Box<TrainHistory>>,
}

#[derive(Serialize)]
struct HistoryLine<'a> {
    model: &'a str,
    phase: &'a str,
    #[serde(flatten)]
    point: &'a ValPoint,
    best: bool,
}

impl TrainHistory {
    /// One JSON object per validation point, oldest first.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut emit = |h: &TrainHistory, phase: &str| {
            for p in &h.points {
                let line = HistoryLine {
                    model: h.model.name(),
                    phase,
                    point: p,
                    best: p.step == h.best_step,
                };
                out.push_str(&serde_json::to_string(&line).expect("history serializes"));
                out.push('\n');
            }
        };
        if let Some(pre) = &self.pretrain {
            emit(pre, "pretrain");
        }
        emit(self, "main");
        out
    }

    /// Number of validation events for `total_steps` at `interval`.
    pub fn expected_points(total_steps: usize, interval: usize) -> usize {
        total_steps / interval + usize::from(total_steps % interval != 0)
    }
}

struct Tracker<M> {
    select_on: SelectOn,
    points: Vec<ValPoint>,
    best: Option<(usize, f64, M)>,
    best_target: Option<f64>,
}

impl<M> Tracker<M> {
    fn new(select_on: SelectOn) -> Self {
        Tracker {
            select_on,
            points: Vec::new(),
            best: None,
            best_target: None,
        }
    }

    fn record(&mut self, step: usize, epoch: usize, scores: ValScores, losses: StepLosses, snapshot: impl FnOnce() -> M) -> Result<()> {
        let selection = match self.select_on {
            SelectOn::SourceVal => scores.source,
            SelectOn::TargetVal => scores.target,
        }
        .ok_or_else(|| Error::Data(format!("no {:?} score at step {step}", self.select_on)))?;
        if self.best.as_ref().is_none_or(|(_, b, _)| selection > *b) {
            self.best = Some((step, selection, snapshot()));
        }
        if let Some(t) = scores.target {
            self.best_target = Some(self.best_target.map_or(t, |b: f64| b.max(t)));
        }
        self.points.push(ValPoint {
            step,
            epoch,
            source_val_acc: scores.source,
            target_val_acc: scores.target,
            losses,
        });
        Ok(())
    }

    fn finish(self, model: ModelKind, total_steps: usize) -> (M, TrainHistory) {
        let (best_step, best_selection_acc, best) = self.best.expect("the final step always validates");
        (
            best,
            TrainHistory {
                model,
                select_on: self.select_on,
                total_steps,
                points: self.points,
                best_step,
                best_selection_acc,
                best_target_val_acc: self.best_target,
                pretrain: None,
            },
        )
    }
}

fn gather(view: &DatasetView<'_>, positions: &[usize]) -> (Matrix, Vec<u8>) {
    let data = view.dataset();
    let rows: Vec<usize> = positions.iter().map(|&p| view.indices()[p]).collect();
    let labels = rows.iter().map(|&i| data.labels()[i]).collect();
    (data.features().select_rows(&rows), labels)
}

fn require(view: &DatasetView<'_>, what: &str) -> Result<()> {
    if view.is_empty() {
        Err(Error::Data(format!("{what} split is empty")))
    } else {
        Ok(())
    }
}

struct VanillaPhase<'p> {
    kind: ModelKind,
    select_on: SelectOn,
    batch_seed: u64,
    cfg: &'p TrainConfig,
}

/// Minibatch cross-entropy training of one network with periodic validation.
fn fit_vanilla(
    mut net: NetworkParams,
    mut optim: AdamState,
    train: &DatasetView<'_>,
    phase: VanillaPhase<'_>,
    dropout_rng: &mut RngState,
    validator: &mut Validator<'_>,
) -> Result<(NetworkParams, TrainHistory)> {
    let cfg = phase.cfg;
    let n = train.len();
    let mut stream = BatchStream::new((0..n).collect(), cfg.batch_size, phase.batch_seed, false)?;
    let total = cfg.epochs * n.div_ceil(cfg.batch_size);
    let mut tracker = Tracker::new(phase.select_on);
    let mut step = 0;
    net.set_mode(Mode::Train);
    for epoch in 0..cfg.epochs {
        stream.start_epoch(epoch as u64);
        while let Some(pos) = stream.next_indices() {
            let (x, y) = gather(train, &pos);
            let (probs, cache) = forward(&net, &x, dropout_rng)?;
            let (loss, dlogits) = cross_entropy(&probs, &one_hot(&y, 2), 1.0)?;
            let bp = backward(&net, &cache, &dlogits, false)?;
            adam_apply(&mut net, &bp.grads, &mut optim)?;
            step += 1;
            if step % cfg.val_interval == 0 || step == total {
                net.set_mode(Mode::Infer);
                let scores = validator(&net, step)?;
                let losses = StepLosses { l_c: loss, l_d: None, l_g: None };
                tracker.record(step, epoch, scores, losses, || net.clone())?;
                net.set_mode(Mode::Train);
            }
        }
    }
    if !loss_is_finite(&tracker.points) {
        return Err(Error::Numeric(format!("{} training diverged", phase.kind.name())));
    }
    Ok(tracker.finish(phase.kind, total))
}

fn loss_is_finite(points: &[ValPoint]) -> bool {
    points.iter().all(|p| p.losses.l_c.is_finite())
}

/// Accuracies of a probe trained for a fixed number of epochs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeScores {
    pub train_acc: f64,
    pub val_acc: f64,
}

/// Trains the single-hidden-layer probe on `train` for `cfg.epochs` epochs and scores
/// the final network. No checkpoint selection takes place.
pub fn train_probe(cfg: &TrainConfig, train: &DatasetView<'_>, val: &DatasetView<'_>) -> Result<(NetworkParams, ProbeScores)> {
    cfg.validate()?;
    require(train, "probe train")?;
    require(val, "probe validation")?;
    let plan = ShufflePlan::new(cfg.seeds.shuffle);
    let init = NetworkParams::init(&probe_architecture(train.dataset().dim()), &mut RngState::new(cfg.seeds.init))?;
    let optim = AdamState::new(&init, cfg.vanilla_optimizer());
    let total = cfg.epochs * train.len().div_ceil(cfg.batch_size);
    // Validating only at the final step makes the retained network the last one.
    let final_only = TrainConfig { val_interval: total, ..cfg.clone() };
    let phase = VanillaPhase {
        kind: ModelKind::Bsm,
        select_on: SelectOn::SourceVal,
        batch_seed: plan.batches_source,
        cfg: &final_only,
    };
    let mut v = |m: &dyn Classifier, _| Ok(ValScores { source: Some(evaluate(m, val)?.accuracy), target: None });
    let (net, hist) = fit_vanilla(init, optim, train, phase, &mut RngState::new(cfg.seeds.dropout), &mut v)
        .map_err(|e| match e {
            Error::Numeric(_) => Error::Numeric("probe training diverged".into()),
            other => other,
        })?;
    let train_acc = evaluate(&net, train)?.accuracy;
    Ok((net, ProbeScores { train_acc, val_acc: hist.best_selection_acc }))
}

/// BSM, BMM or BFM with the default validator.
pub fn train_vanilla(cfg: &TrainConfig, data: &TrainData<'_>) -> Result<(NetworkParams, TrainHistory)> {
    let mut v = split_validator(&data.source.val, &data.target.val);
    train_vanilla_with(cfg, data, &mut v)
}

pub fn train_vanilla_with(cfg: &TrainConfig, data: &TrainData<'_>, validator: &mut Validator<'_>) -> Result<(NetworkParams, TrainHistory)> {
    cfg.validate()?;
    let plan = ShufflePlan::new(cfg.seeds.shuffle);
    let init = NetworkParams::init(&vanilla_architecture(data.dim()), &mut RngState::new(cfg.seeds.init))?;
    let mut dropout = RngState::new(cfg.seeds.dropout);
    let source_phase = |kind| VanillaPhase {
        kind,
        select_on: SelectOn::SourceVal,
        batch_seed: plan.batches_source,
        cfg,
    };
    match cfg.model {
        ModelKind::Bsm => {
            require(&data.source.train, "source train")?;
            require(&data.source.val, "source validation")?;
            let optim = AdamState::new(&init, cfg.vanilla_optimizer());
            fit_vanilla(init, optim, &data.source.train, source_phase(ModelKind::Bsm), &mut dropout, validator)
        }
        ModelKind::Bmm => {
            require(&data.target.val, "target validation")?;
            let mixed = DomainDataset::concat(&[&data.source.train.materialize(), &data.target.train.materialize()])?;
            let view = mixed.view_all();
            require(&view, "mixed train")?;
            let optim = AdamState::new(&init, cfg.vanilla_optimizer());
            let phase = VanillaPhase {
                kind: ModelKind::Bmm,
                select_on: SelectOn::TargetVal,
                batch_seed: plan.batches_source,
                cfg,
            };
            fit_vanilla(init, optim, &view, phase, &mut dropout, validator)
        }
        ModelKind::Bfm => {
            require(&data.source.train, "source train")?;
            require(&data.source.val, "source validation")?;
            require(&data.target.train, "target train")?;
            require(&data.target.val, "target validation")?;
            let optim = AdamState::new(&init, cfg.vanilla_optimizer());
            let (pre, pre_hist) =
                fit_vanilla(init, optim, &data.source.train, source_phase(ModelKind::Bfm), &mut dropout, validator)?;
            let mut optim = AdamState::new(&pre, cfg.vanilla_optimizer());
            optim.freeze(0);
            let phase = VanillaPhase {
                kind: ModelKind::Bfm,
                select_on: SelectOn::TargetVal,
                batch_seed: plan.batches_target,
                cfg,
            };
            let (net, mut hist) = fit_vanilla(pre, optim, &data.target.train, phase, &mut dropout, validator)?;
            hist.pretrain = Some(Box::new(pre_hist));
            Ok((net, hist))
        }
        other => Err(Error::Config(format!("{} is not a vanilla model", other.name()))),
    }
}

/// FARADAy with the default validator.
pub fn train_faraday(cfg: &TrainConfig, data: &TrainData<'_>) -> Result<(AdversarialNet, TrainHistory)> {
    expect_model(cfg, ModelKind::Faraday)?;
    let mut v = split_validator(&data.source.val, &data.target.val);
    train_adversarial_with(cfg, data, &mut v)
}

/// DIRAC with the default validator.
pub fn train_dirac(cfg: &TrainConfig, data: &TrainData<'_>) -> Result<(AdversarialNet, TrainHistory)> {
    expect_model(cfg, ModelKind::Dirac)?;
    let mut v = split_validator(&data.source.val, &data.target.val);
    train_adversarial_with(cfg, data, &mut v)
}

fn expect_model(cfg: &TrainConfig, kind: ModelKind) -> Result<()> {
    if cfg.model == kind {
        Ok(())
    } else {
        Err(Error::Config(format!("expected model {}, config says {}", kind.name(), cfg.model.name())))
    }
}

pub fn train_adversarial_with(cfg: &TrainConfig, data: &TrainData<'_>, validator: &mut Validator<'_>) -> Result<(AdversarialNet, TrainHistory)> {
    cfg.validate()?;
    let mode = cfg
        .model
        .adversarial_mode()
        .ok_or_else(|| Error::Config(format!("{} is not an adversarial model", cfg.model.name())))?;
    require(&data.source.train, "source train")?;
    require(&data.target.train, "target train")?;
    require(&data.target.val, "target validation")?;

    let mut arch = cfg.arch.clone();
    arch.input_dim = data.dim();
    let mut net = AdversarialNet::init(&arch, &mut RngState::new(cfg.seeds.init))?
        .with_optimizer(cfg.adversarial_optimizer());
    let plan = ShufflePlan::new(cfg.seeds.shuffle);
    let ns = data.source.train.len();
    let mut src = BatchStream::new((0..ns).collect(), cfg.batch_size, plan.batches_source, false)?;
    let mut tgt = BatchStream::new((0..data.target.train.len()).collect(), cfg.batch_size, plan.batches_target, true)?;
    let mut rng = RngState::new(cfg.seeds.dropout);
    let w = cfg.weights;
    let total = cfg.epochs * ns.div_ceil(cfg.batch_size);
    let mut tracker = Tracker::new(SelectOn::TargetVal);
    let mut step = 0;
    net.set_mode(Mode::Train);
    for epoch in 0..cfg.epochs {
        src.start_epoch(epoch as u64);
        while let Some(ps) = src.next_indices() {
            let pt = tgt.next_indices().expect("a cycling stream never ends");
            let (xs, ys) = gather(&data.source.train, &ps);
            let (xt, yt) = gather(&data.target.train, &pt);
            let labels = PairLabels { y_s: &ys, y_t: &yt };
            let l = match mode {
                AdaMode::Faraday => {
                    let cap = forward_pair(&net, &xs, &xt, &mut rng)?;
                    let l = faraday_losses(&cap, labels, &w)?;
                    let g = route_gradients(&net, &cap, &l, &w, mode)?;
                    net.apply(&g, &Part::ALL)?;
                    l
                }
                AdaMode::Dirac => {
                    // Generators are untouched by discriminator passes, so their outputs
                    // are computed once and reused.
                    let gen = forward_generators(&net, &xs, &xt, &mut rng)?;
                    for _ in 0..cfg.disc_steps {
                        discriminator_update(&mut net, &gen.x_gs, &gen.x_gt, &w, &mut rng)?;
                    }
                    let cap = forward_heads(&net, gen, &mut rng)?;
                    let l = dirac_losses(&cap, labels, &w)?;
                    let g = route_gradients(&net, &cap, &l, &w, mode)?;
                    net.apply(&g, &[Part::GenSource, Part::GenTarget, Part::Shared, Part::Clf])?;
                    l
                }
            };
            if !(l.l_c.is_finite() && l.l_d.is_finite() && l.l_g.is_finite()) {
                return Err(Error::Numeric(format!("{} losses diverged at step {}", mode.name(), step + 1)));
            }
            step += 1;
            if step % cfg.val_interval == 0 || step == total {
                net.set_mode(Mode::Infer);
                let scores = validator(&net, step)?;
                let losses = StepLosses { l_c: l.l_c, l_d: Some(l.l_d), l_g: Some(l.l_g) };
                tracker.record(step, epoch, scores, losses, || net.snapshot())?;
                net.set_mode(Mode::Train);
            }
        }
    }
    Ok(tracker.finish(cfg.model, total))
}

/// Dispatches on `cfg.model` with the default validator.
pub fn train(cfg: &TrainConfig, data: &TrainData<'_>) -> Result<(TrainedModel, TrainHistory)> {
    let mut v = split_validator(&data.source.val, &data.target.val);
    train_with(cfg, data, &mut v)
}

pub fn train_with(cfg: &TrainConfig, data: &TrainData<'_>, validator: &mut Validator<'_>) -> Result<(TrainedModel, TrainHistory)> {
    match cfg.model.adversarial_mode() {
        Some(mode) => {
            let (net, h) = train_adversarial_with(cfg, data, validator)?;
            Ok((TrainedModel::Adversarial { mode, net }, h))
        }
        None => {
            let (net, h) = train_vanilla_with(cfg, data, validator)?;
            Ok((TrainedModel::Vanilla { kind: cfg.model, net }, h))
        }
    }
}
