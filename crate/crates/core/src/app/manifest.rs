//! Dataset manifest and feature-cache assembly.
//!
//! A manifest is a JSON file listing recordings:
//!
//! ```json
//! {
//!   "entries": [
//!     { "audio": "imi/s0.wav", "labels": "imi/labels.csv", "domain": "source", "sensor": "0" }
//!   ]
//! }
//! ```
//!
//! Relative paths resolve against the manifest's directory. Label CSVs use the
//! `file,start_s,end_s` header, and the `file` column holds the audio file name
//! (its last path component).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{label_frames, Domain, DomainDataset, IntervalLabelFile, Origin};
use crate::features::{read_cache, FeatureConfig, FittedTransform, FrameFeatureSet, TransformSpec};
use crate::numcore::Matrix;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub audio: PathBuf,
    pub labels: PathBuf,
    pub domain: Domain,
    #[serde(default = "default_sensor")]
    pub sensor: String,
}

fn default_sensor() -> String {
    "0".into()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut m: Manifest =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("manifest: {e}")))?;
        for e in &mut m.entries {
            e.audio = base_dir.join(&e.audio);
            e.labels = base_dir.join(&e.labels);
        }
        Ok(m)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new("")))
    }

    /// Entries of `domain`, optionally restricted to one sensor.
    pub fn select(&self, domain: Domain, sensor: Option<&str>) -> Vec<&ManifestEntry> {
        self.entries
            .iter()
            .filter(|e| e.domain == domain && sensor.is_none_or(|s| e.sensor == s))
            .collect()
    }

    /// Distinct `(domain, sensor)` groups in first-appearance order.
    pub fn groups(&self) -> Vec<(Domain, String)> {
        let mut out: Vec<(Domain, String)> = Vec::new();
        for e in &self.entries {
            let g = (e.domain, e.sensor.clone());
            if !out.contains(&g) {
                out.push(g);
            }
        }
        out
    }
}

impl ManifestEntry {
    pub fn file_name(&self) -> String {
        self.audio
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    }

    /// Cache location: `<dir>/<domain>-<sensor>-<audio stem>.dsf`.
    pub fn cache_path(&self, dir: &Path) -> PathBuf {
        let stem = self
            .audio
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        dir.join(format!("{}-{}-{}.dsf", self.domain.name(), self.sensor, stem))
    }

    /// Per-frame labels for an extracted feature set.
    pub fn frame_labels(&self, set: &FrameFeatureSet) -> Result<Vec<u8>> {
        let labels = IntervalLabelFile::read(&self.labels)?;
        label_frames(&set.frame_times, labels.intervals(&self.file_name()))
    }
}

/// Reads a cache and checks that it was produced with `cfg`'s framing.
pub fn load_cache(path: &Path, cfg: &FeatureConfig) -> Result<FrameFeatureSet> {
    if !path.exists() {
        return Err(Error::Data(format!(
            "missing feature cache {}; run `domainshift extract` first",
            path.display()
        )));
    }
    let set = read_cache(path, cfg)?;
    if set.features.cols() != cfg.bins() {
        return Err(Error::Data(format!(
            "{} has {} bins but n_fft {} gives {}; re-run extract with --force",
            path.display(),
            set.features.cols(),
            cfg.n_fft,
            cfg.bins()
        )));
    }
    Ok(set)
}

/// Concatenates the cached features of `entries` into one labeled dataset.
/// Origins carry the entry's position in `entries` as the file id.
pub fn load_domain(entries: &[&ManifestEntry], domain: Domain, cache_dir: &Path, cfg: &FeatureConfig) -> Result<DomainDataset> {
    if entries.is_empty() {
        return Err(Error::Data(format!("manifest has no {} entries", domain.name())));
    }
    let mut parts = Vec::with_capacity(entries.len());
    for (file, e) in entries.iter().enumerate() {
        let set = load_cache(&e.cache_path(cache_dir), cfg)?;
        let labels = e.frame_labels(&set)?;
        let n = labels.len();
        let origins = (0..n).map(|frame| Origin { file: file as u32, frame }).collect();
        parts.push(DomainDataset::new(set.features, labels, vec![domain; n], origins)?);
    }
    let refs: Vec<&DomainDataset> = parts.iter().collect();
    DomainDataset::concat(&refs)
}

/// Fits `spec` on the dataset's whole feature matrix and returns the transformed copy.
pub fn fit_and_apply(ds: &DomainDataset, spec: TransformSpec) -> Result<(DomainDataset, FittedTransform)> {
    let fitted = FittedTransform::fit(ds.features(), spec)?;
    Ok((ds.with_features(fitted.apply(ds.features())?)?, fitted))
}

/// `scale·x + offset` elementwise.
pub fn affine(x: &Matrix, scale: f64, offset: f64) -> Matrix {
    x.map(|v| scale * v + offset)
}
