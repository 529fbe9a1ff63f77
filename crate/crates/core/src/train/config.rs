use serde::{Deserialize, Serialize};

use crate::adversarial::{AdaMode, AdversarialArch, LossWeights};
use crate::nn::AdamConfig;
use crate::numcore::RngState;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Vanilla, source only.
    Bsm,
    /// Vanilla on the union of source and target.
    Bmm,
    /// Vanilla on source, then fine-tuned on target with the first layer frozen.
    Bfm,
    Faraday,
    Dirac,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Bsm,
        ModelKind::Bmm,
        ModelKind::Bfm,
        ModelKind::Faraday,
        ModelKind::Dirac,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Bsm => "bsm",
            ModelKind::Bmm => "bmm",
            ModelKind::Bfm => "bfm",
            ModelKind::Faraday => "faraday",
            ModelKind::Dirac => "dirac",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown model '{s}' (expected bsm, bmm, bfm, faraday or dirac)")))
    }

    pub fn adversarial_mode(self) -> Option<AdaMode> {
        match self {
            ModelKind::Faraday => Some(AdaMode::Faraday),
            ModelKind::Dirac => Some(AdaMode::Dirac),
            _ => None,
        }
    }
}

/// Seeds for the independent random streams of one run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    /// Parameter initialization.
    pub init: u64,
    /// Subsampling and batch order.
    pub shuffle: u64,
    /// Dropout masks.
    pub dropout: u64,
}

impl Seeds {
    /// Three decorrelated seeds derived from one base seed.
    pub fn from_base(base: u64) -> Self {
        let mut r = RngState::new(base);
        Seeds {
            init: r.next_u64(),
            shuffle: r.next_u64(),
            dropout: r.next_u64(),
        }
    }
}

/// Streams derived from [`Seeds::shuffle`].
#[derive(Clone, Copy, Debug)]
pub(crate) struct ShufflePlan {
    pub subsample_source: u64,
    pub subsample_target: u64,
    pub batches_source: u64,
    pub batches_target: u64,
}

impl ShufflePlan {
    pub fn new(seed: u64) -> Self {
        let mut r = RngState::new(seed);
        ShufflePlan {
            subsample_source: r.next_u64(),
            subsample_target: r.next_u64(),
            batches_source: r.next_u64(),
            batches_target: r.next_u64(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model: ModelKind,
    pub epochs: usize,
    pub batch_size: usize,
    pub val_interval: usize,
    pub lr_vanilla: f64,
    pub beta1_vanilla: f64,
    pub lr_adversarial: f64,
    pub beta1_adversarial: f64,
    pub weights: LossWeights,
    /// Discriminator-only passes per DIRAC step.
    pub disc_steps: usize,
    pub seeds: Seeds,
    /// Source training samples to draw; `None` uses the whole training split.
    pub n_source: Option<usize>,
    pub n_target: Option<usize>,
    /// Adversarial widths; `input_dim` is taken from the data.
    pub arch: AdversarialArch,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            model: ModelKind::Faraday,
            epochs: 20,
            batch_size: 128,
            val_interval: 40,
            lr_vanilla: 1e-3,
            beta1_vanilla: 0.9,
            lr_adversarial: 2e-4,
            beta1_adversarial: 0.5,
            weights: LossWeights::default(),
            disc_steps: 1,
            seeds: Seeds::from_base(0),
            n_source: None,
            n_target: None,
            arch: AdversarialArch::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.val_interval == 0 || self.disc_steps == 0 {
            return Err(Error::Config(
                "epochs, batch_size, val_interval and disc_steps must all be >= 1".into(),
            ));
        }
        for (name, lr) in [("lr_vanilla", self.lr_vanilla), ("lr_adversarial", self.lr_adversarial)] {
            if !(lr.is_finite() && lr > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {lr}")));
            }
        }
        for b in [self.beta1_vanilla, self.beta1_adversarial] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Config(format!("beta1 must be in [0, 1), got {b}")));
            }
        }
        self.weights.validate()
    }

    pub fn vanilla_optimizer(&self) -> AdamConfig {
        AdamConfig::new(self.lr_vanilla, self.beta1_vanilla)
    }

    pub fn adversarial_optimizer(&self) -> AdamConfig {
        AdamConfig::new(self.lr_adversarial, self.beta1_adversarial)
    }
}
