//! Plain-text experiment configuration.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! # comment (whole line)
//! key = value
//! ```
//!
//! Keys are dotted names from [`ExperimentConfig::KEYS`]. Values are trimmed and
//! run to the end of the line, so they may contain `=` and `#`. Lists are
//! comma-separated. Blank lines are ignored. Unknown or repeated keys are rejected;
//! missing keys take their defaults and are reported with a logged notice.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::adversarial::{AdversarialArch, LossWeights};
use crate::dataset::{Domain, SynthSpec, DEFAULT_SPLIT_RATIOS};
use crate::features::{DbReference, FeatureConfig, TransformKind, TransformSpec};
use crate::numcore::Window;
use crate::train::{GridSpec, ModelKind, Seeds, TrainConfig};
use crate::{Error, Result};

/// Which `(n_source, n_target, model)` cells an RQ2 grid visits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub sizes_source: Vec<usize>,
    pub sizes_target: Vec<usize>,
    pub models: Vec<ModelKind>,
    pub repeats: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            sizes_source: vec![2000],
            sizes_target: vec![50],
            models: vec![ModelKind::Bsm, ModelKind::Faraday, ModelKind::Dirac],
            repeats: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    pub manifest: Option<PathBuf>,
    /// Feature cache directory; `None` means `<output.dir>/features`.
    pub cache_dir: Option<PathBuf>,
    pub synthetic: Option<SynthSpec>,
    pub split_ratios: [f64; 3],
    /// Restrict the source domain to one sensor.
    pub source_sensor: Option<String>,
    pub target_sensor: Option<String>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            manifest: None,
            cache_dir: None,
            synthetic: None,
            split_ratios: DEFAULT_SPLIT_RATIOS,
            source_sensor: None,
            target_sensor: None,
        }
    }
}

/// Synthetic transform benchmark: source-domain features mapped by `scale·x + offset`.
///
/// The default offset dwarfs the signal, so raw features saturate the sigmoid probe
/// from initialization while min-max scaling removes the offset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rq1Config {
    pub synthetic_scale: f64,
    pub synthetic_offset: f64,
}

impl Default for Rq1Config {
    fn default() -> Self {
        Rq1Config {
            synthetic_scale: 10.0,
            synthetic_offset: 10_000.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InferConfig {
    /// Predicted intervals shorter than this are dropped.
    pub min_duration_s: f64,
    /// Which domain's transform statistics and head to use.
    pub domain: Domain,
}

impl Default for InferConfig {
    fn default() -> Self {
        InferConfig {
            min_duration_s: 0.0,
            domain: Domain::Target,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Base seed: data splits use `seed` (source) and `seed + 1` (target); training
    /// seeds derive from it via [`Seeds::from_base`].
    pub seed: u64,
    pub output_dir: PathBuf,
    pub data: DataConfig,
    pub features: FeatureConfig,
    pub transform: TransformSpec,
    /// Training template. Its `seeds` field is ignored; see [`ExperimentConfig::train_config`].
    pub train: TrainConfig,
    pub grid: GridConfig,
    pub rq1: Rq1Config,
    pub infer: InferConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            output_dir: PathBuf::from("out"),
            data: DataConfig::default(),
            features: FeatureConfig::default(),
            transform: TransformSpec::default(),
            train: TrainConfig::default(),
            grid: GridConfig::default(),
            rq1: Rq1Config::default(),
            infer: InferConfig::default(),
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
}

fn list<T>(key: &str, v: &str, f: impl Fn(&str, &str) -> Result<T>) -> Result<Vec<T>> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|item| f(key, item.trim())).collect()
}

fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(",")
}

fn opt_text(v: &str) -> Option<String> {
    (!v.is_empty()).then(|| v.to_string())
}

fn f64_text(v: f64) -> String {
    // Debug formatting is the shortest representation that parses back exactly.
    format!("{v:?}")
}

/// Parses `k=v,k=v` over `base`. An empty string or `default` returns `base`.
pub fn parse_synth_spec(text: &str, base: &SynthSpec) -> Result<SynthSpec> {
    let mut spec = base.clone();
    let text = text.trim();
    if text.is_empty() || text == "default" {
        return Ok(spec);
    }
    for part in text.split(',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("synthetic spec entry '{part}' is not key=value")))?;
        let (k, v) = (k.trim(), v.trim());
        match k {
            "dim" => spec.dim = num(k, v)?,
            "latent_dim" => spec.latent_dim = num(k, v)?,
            "n_source" => spec.n_source = num(k, v)?,
            "n_target" => spec.n_target = num(k, v)?,
            "class_sep" => spec.class_sep = num(k, v)?,
            "domain_shift" => spec.domain_shift = num(k, v)?,
            "domain_scale" => spec.domain_scale = num(k, v)?,
            "shared_embedding" => spec.shared_embedding = num(k, v)?,
            "seed" => spec.seed = num(k, v)?,
            other => return Err(Error::Config(format!("unknown synthetic spec key '{other}'"))),
        }
    }
    spec.validate()?;
    Ok(spec)
}

/// Every field of `spec` in `k=v` form; [`parse_synth_spec`] inverts it.
pub fn render_synth_spec(spec: &SynthSpec) -> String {
    format!(
        "dim={},latent_dim={},n_source={},n_target={},class_sep={},domain_shift={},domain_scale={},shared_embedding={},seed={}",
        spec.dim,
        spec.latent_dim,
        spec.n_source,
        spec.n_target,
        f64_text(spec.class_sep),
        f64_text(spec.domain_shift),
        f64_text(spec.domain_scale),
        spec.shared_embedding,
        spec.seed
    )
}

/// Result of parsing a configuration file.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedConfig {
    pub config: ExperimentConfig,
    /// Keys that were absent and took their defaults, in [`ExperimentConfig::KEYS`] order.
    pub defaulted: Vec<&'static str>,
}

impl ExperimentConfig {
    pub const KEYS: [&'static str; 41] = [
        "seed",
        "output.dir",
        "data.manifest",
        "data.cache_dir",
        "data.synthetic",
        "data.split_ratios",
        "data.source_sensor",
        "data.target_sensor",
        "feature.sample_rate",
        "feature.n_fft",
        "feature.hop",
        "feature.window",
        "feature.db_floor",
        "feature.db_ref",
        "transform.kind",
        "transform.gamma",
        "train.model",
        "train.epochs",
        "train.batch_size",
        "train.val_interval",
        "train.lr_vanilla",
        "train.beta1_vanilla",
        "train.lr_adversarial",
        "train.beta1_adversarial",
        "train.lambda",
        "train.beta",
        "train.gamma",
        "train.disc_steps",
        "train.n_source",
        "train.n_target",
        "arch.private",
        "arch.shared",
        "arch.head_hidden",
        "grid.sizes_source",
        "grid.sizes_target",
        "grid.models",
        "grid.repeats",
        "rq1.synthetic_scale",
        "rq1.synthetic_offset",
        "infer.min_duration_s",
        "infer.domain",
    ];

    /// Assigns one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let t = &mut self.train;
        match key {
            "seed" => self.seed = num(key, v)?,
            "output.dir" => {
                if v.is_empty() {
                    return Err(Error::Config("output.dir must not be empty".into()));
                }
                self.output_dir = PathBuf::from(v)
            }
            "data.manifest" => self.data.manifest = opt_text(v).map(PathBuf::from),
            "data.cache_dir" => self.data.cache_dir = opt_text(v).map(PathBuf::from),
            "data.synthetic" => {
                self.data.synthetic = match v {
                    "" | "none" => None,
                    spec => Some(parse_synth_spec(spec, &SynthSpec::default())?),
                }
            }
            "data.split_ratios" => {
                let r: Vec<f64> = list(key, v, num)?;
                self.data.split_ratios = r
                    .try_into()
                    .map_err(|_| Error::Config("data.split_ratios needs three values".into()))?;
            }
            "data.source_sensor" => self.data.source_sensor = opt_text(v),
            "data.target_sensor" => self.data.target_sensor = opt_text(v),
            "feature.sample_rate" => self.features.sample_rate = num(key, v)?,
            "feature.n_fft" => self.features.n_fft = num(key, v)?,
            "feature.hop" => self.features.hop = num(key, v)?,
            "feature.window" => self.features.window = Window::parse(v)?,
            "feature.db_floor" => self.features.db_floor = num(key, v)?,
            "feature.db_ref" => self.features.db_ref = DbReference::parse(v)?,
            "transform.kind" => self.transform.kind = TransformKind::parse(v)?,
            "transform.gamma" => self.transform.gamma = num(key, v)?,
            "train.model" => t.model = ModelKind::parse(v)?,
            "train.epochs" => t.epochs = num(key, v)?,
            "train.batch_size" => t.batch_size = num(key, v)?,
            "train.val_interval" => t.val_interval = num(key, v)?,
            "train.lr_vanilla" => t.lr_vanilla = num(key, v)?,
            "train.beta1_vanilla" => t.beta1_vanilla = num(key, v)?,
            "train.lr_adversarial" => t.lr_adversarial = num(key, v)?,
            "train.beta1_adversarial" => t.beta1_adversarial = num(key, v)?,
            "train.lambda" => t.weights.lambda = num(key, v)?,
            "train.beta" => t.weights.beta = num(key, v)?,
            "train.gamma" => t.weights.gamma_w = num(key, v)?,
            "train.disc_steps" => t.disc_steps = num(key, v)?,
            "train.n_source" => t.n_source = if v == "all" { None } else { Some(num(key, v)?) },
            "train.n_target" => t.n_target = if v == "all" { None } else { Some(num(key, v)?) },
            "arch.private" => t.arch.private = list(key, v, num)?,
            "arch.shared" => t.arch.shared = num(key, v)?,
            "arch.head_hidden" => t.arch.head_hidden = num(key, v)?,
            "grid.sizes_source" => self.grid.sizes_source = list(key, v, num)?,
            "grid.sizes_target" => self.grid.sizes_target = list(key, v, num)?,
            "grid.models" => self.grid.models = list(key, v, |_, m| ModelKind::parse(m))?,
            "grid.repeats" => self.grid.repeats = num(key, v)?,
            "rq1.synthetic_scale" => self.rq1.synthetic_scale = num(key, v)?,
            "rq1.synthetic_offset" => self.rq1.synthetic_offset = num(key, v)?,
            "infer.min_duration_s" => self.infer.min_duration_s = num(key, v)?,
            "infer.domain" => self.infer.domain = Domain::parse(v)?,
            other => return Err(Error::Config(format!("unknown configuration key '{other}'"))),
        }
        Ok(())
    }

    /// Textual value of one key, in the form [`ExperimentConfig::set`] accepts.
    pub fn get(&self, key: &str) -> Result<String> {
        let t = &self.train;
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let size = |n: Option<usize>| n.map_or_else(|| "all".to_string(), |n| n.to_string());
        Ok(match key {
            "seed" => self.seed.to_string(),
            "output.dir" => self.output_dir.display().to_string(),
            "data.manifest" => path(&self.data.manifest),
            "data.cache_dir" => path(&self.data.cache_dir),
            "data.synthetic" => self.data.synthetic.as_ref().map_or_else(|| "none".into(), render_synth_spec),
            "data.split_ratios" => join(&self.data.split_ratios, |r| f64_text(*r)),
            "data.source_sensor" => self.data.source_sensor.clone().unwrap_or_default(),
            "data.target_sensor" => self.data.target_sensor.clone().unwrap_or_default(),
            "feature.sample_rate" => self.features.sample_rate.to_string(),
            "feature.n_fft" => self.features.n_fft.to_string(),
            "feature.hop" => self.features.hop.to_string(),
            "feature.window" => self.features.window.name().into(),
            "feature.db_floor" => f64_text(self.features.db_floor),
            "feature.db_ref" => self.features.db_ref.name().into(),
            "transform.kind" => self.transform.kind.name().into(),
            "transform.gamma" => f64_text(self.transform.gamma),
            "train.model" => t.model.name().into(),
            "train.epochs" => t.epochs.to_string(),
            "train.batch_size" => t.batch_size.to_string(),
            "train.val_interval" => t.val_interval.to_string(),
            "train.lr_vanilla" => f64_text(t.lr_vanilla),
            "train.beta1_vanilla" => f64_text(t.beta1_vanilla),
            "train.lr_adversarial" => f64_text(t.lr_adversarial),
            "train.beta1_adversarial" => f64_text(t.beta1_adversarial),
            "train.lambda" => f64_text(t.weights.lambda),
            "train.beta" => f64_text(t.weights.beta),
            "train.gamma" => f64_text(t.weights.gamma_w),
            "train.disc_steps" => t.disc_steps.to_string(),
            "train.n_source" => size(t.n_source),
            "train.n_target" => size(t.n_target),
            "arch.private" => join(&t.arch.private, usize::to_string),
            "arch.shared" => t.arch.shared.to_string(),
            "arch.head_hidden" => t.arch.head_hidden.to_string(),
            "grid.sizes_source" => join(&self.grid.sizes_source, usize::to_string),
            "grid.sizes_target" => join(&self.grid.sizes_target, usize::to_string),
            "grid.models" => join(&self.grid.models, |m| m.name().to_string()),
            "grid.repeats" => self.grid.repeats.to_string(),
            "rq1.synthetic_scale" => f64_text(self.rq1.synthetic_scale),
            "rq1.synthetic_offset" => f64_text(self.rq1.synthetic_offset),
            "infer.min_duration_s" => f64_text(self.infer.min_duration_s),
            "infer.domain" => self.infer.domain.name().into(),
            other => return Err(Error::Config(format!("unknown configuration key '{other}'"))),
        })
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{assignment}' is not key=value")))?;
        self.set(k.trim(), v)
    }

    pub fn parse(text: &str) -> Result<ParsedConfig> {
        let mut config = ExperimentConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", i + 1)))?;
            let k = k.trim();
            config
                .set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {}", i + 1, strip_prefix(&e))))?;
            if !seen.insert(k.to_string()) {
                return Err(Error::Config(format!("line {}: key '{k}' given twice", i + 1)));
            }
        }
        config.validate()?;
        let defaulted: Vec<&'static str> = Self::KEYS.into_iter().filter(|k| !seen.contains(*k)).collect();
        if !defaulted.is_empty() {
            log::info!("configuration keys using defaults: {}", defaulted.join(", "));
        }
        Ok(ParsedConfig { config, defaulted })
    }

    pub fn read(path: impl AsRef<std::path::Path>) -> Result<ParsedConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Every key with its current value, one `key = value` line each.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for k in Self::KEYS {
            out.push_str(&format!("{k} = {}\n", self.get(k).expect("listed keys render")));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.features.validate()?;
        self.transform.validate()?;
        self.train.validate()?;
        if let Some(s) = &self.data.synthetic {
            s.validate()?;
        }
        let sum: f64 = self.data.split_ratios.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.data.split_ratios.iter().any(|r| *r < 0.0) {
            return Err(Error::Config(format!("data.split_ratios must be non-negative and sum to 1, got {sum}")));
        }
        if self.train.arch.private.is_empty() || self.train.arch.shared == 0 || self.train.arch.head_hidden == 0 {
            return Err(Error::Config("arch.private, arch.shared and arch.head_hidden must be non-empty".into()));
        }
        if !(self.infer.min_duration_s >= 0.0) {
            return Err(Error::Config("infer.min_duration_s must be >= 0".into()));
        }
        if !self.rq1.synthetic_scale.is_finite() || self.rq1.synthetic_scale == 0.0 || !self.rq1.synthetic_offset.is_finite() {
            return Err(Error::Config("rq1.synthetic_scale must be finite and non-zero, rq1.synthetic_offset finite".into()));
        }
        Ok(())
    }

    /// Training template with seeds derived from `seed`.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seeds: Seeds::from_base(self.seed),
            ..self.train.clone()
        }
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            sizes_source: self.grid.sizes_source.clone(),
            sizes_target: self.grid.sizes_target.clone(),
            models: self.grid.models.clone(),
            repeats: self.grid.repeats,
            base_seed: self.seed,
            train: self.train_config(),
        }
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.data
            .cache_dir
            .clone()
            .unwrap_or_else(|| self.output_dir.join("features"))
    }

    /// Architecture template without its input dimension.
    pub fn arch(&self) -> &AdversarialArch {
        &self.train.arch
    }

    pub fn loss_weights(&self) -> LossWeights {
        self.train.weights
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn keys_are_unique_and_all_render() {
        let mut keys = ExperimentConfig::KEYS.to_vec();
        keys.sort_unstable();
        keys.dedup();
        assert_eq!(keys.len(), ExperimentConfig::KEYS.len());
        let text = ExperimentConfig::default().render();
        assert_eq!(text.lines().count(), ExperimentConfig::KEYS.len());
    }

    #[test]
    fn empty_file_defaults_everything() {
        let p = ExperimentConfig::parse("# nothing\n\n").unwrap();
        assert_eq!(p.config, ExperimentConfig::default());
        assert_eq!(p.defaulted, ExperimentConfig::KEYS.to_vec());
    }

    #[test]
    fn parses_values_and_tracks_defaults() {
        let text = "seed = 7\ntrain.model = dirac\n  grid.models = bsm, faraday\ntrain.n_target = 50\n\
                    data.synthetic = dim=64,class_sep=3\ntrain.lr_adversarial = 2e-4\n";
        let p = ExperimentConfig::parse(text).unwrap();
        let c = &p.config;
        assert_eq!(c.seed, 7);
        assert_eq!(c.train.model, ModelKind::Dirac);
        assert_eq!(c.grid.models, vec![ModelKind::Bsm, ModelKind::Faraday]);
        assert_eq!(c.train.n_target, Some(50));
        assert_eq!(c.train.lr_adversarial, 0.0002);
        let s = c.data.synthetic.as_ref().unwrap();
        assert_eq!((s.dim, s.class_sep, s.n_source), (64, 3.0, 3000));
        assert!(!p.defaulted.contains(&"seed"));
        assert!(p.defaulted.contains(&"feature.hop"));
        assert_eq!(p.defaulted.len(), ExperimentConfig::KEYS.len() - 6);
        assert_eq!(c.train_config().seeds, Seeds::from_base(7));
    }

    #[test]
    fn rejects_unknown_repeated_and_malformed() {
        let err = |t: &str| ExperimentConfig::parse(t).unwrap_err();
        assert!(matches!(err("train.epoch = 3"), Error::Config(m) if m.contains("unknown") && m.contains("line 1")));
        assert!(matches!(err("seed = 1\nseed = 2"), Error::Config(m) if m.contains("twice")));
        assert!(matches!(err("seed"), Error::Config(_)));
        assert!(matches!(err("train.epochs = three"), Error::Config(_)));
        assert!(matches!(err("data.split_ratios = 0.5,0.5,0.5"), Error::Config(_)));
        assert!(matches!(err("data.synthetic = dim=3,bogus=1"), Error::Config(_)));
        assert!(matches!(err("transform.kind = sqrtx"), Error::Config(_)));
    }

    #[test]
    fn default_render_roundtrips() {
        let c = ExperimentConfig::default();
        let p = ExperimentConfig::parse(&c.render()).unwrap();
        assert_eq!(p.config, c);
        assert!(p.defaulted.is_empty());
    }

    #[test]
    fn synth_spec_roundtrip() {
        let spec = SynthSpec { dim: 33, class_sep: 0.1 + 0.2, shared_embedding: true, seed: 9, ..SynthSpec::default() };
        assert_eq!(parse_synth_spec(&render_synth_spec(&spec), &SynthSpec::default()).unwrap(), spec);
        assert_eq!(parse_synth_spec("default", &spec).unwrap(), spec);
    }

    fn config_strategy() -> impl Strategy<Value = ExperimentConfig> {
        (
            any::<u64>(),
            proptest::option::of(1usize..5000),
            proptest::collection::vec(1usize..1000, 0..4),
            proptest::sample::subsequence(ModelKind::ALL.to_vec(), 1..=5),
            (1e-6f64..1.0, 0.0f64..0.99, 0.0f64..10.0),
            (proptest::sample::select(TransformKind::ALL.to_vec()), 0.01f64..10.0),
            proptest::option::of((2usize..2000, 1usize..2, -10.0f64..10.0, 0.1f64..5.0)),
            (proptest::collection::vec(1usize..900, 1..3), "[a-z0-9]{0,6}", 0.0f64..3.0),
        )
            .prop_map(|(seed, n_t, sizes, models, (lr, b1, lambda), (kind, gamma), synth, (private, sensor, md))| {
                let mut c = ExperimentConfig::default();
                c.seed = seed;
                c.train.n_target = n_t;
                c.grid.sizes_target = sizes;
                c.grid.models = models;
                c.train.lr_adversarial = lr;
                c.train.beta1_vanilla = b1;
                c.train.weights.lambda = lambda;
                c.transform = TransformSpec { kind, gamma };
                c.data.synthetic = synth.map(|(dim, latent, shift, scale)| SynthSpec {
                    dim,
                    latent_dim: latent,
                    domain_shift: shift,
                    domain_scale: scale,
                    ..SynthSpec::default()
                });
                c.train.arch.private = private;
                c.data.source_sensor = (!sensor.is_empty()).then_some(sensor);
                c.infer.min_duration_s = md;
                c
            })
    }

    proptest! {
        #[test]
        fn parse_inverts_render(c in config_strategy()) {
            let p = ExperimentConfig::parse(&c.render()).unwrap();
            prop_assert_eq!(p.config, c);
        }
    }
}
