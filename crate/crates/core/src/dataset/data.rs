use serde::{Deserialize, Serialize};

use crate::numcore::{Matrix, RngState};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Source,
    Target,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::Source => "source",
            Domain::Target => "target",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "source" => Ok(Domain::Source),
            "target" => Ok(Domain::Target),
            other => Err(Error::Config(format!("unknown domain '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// Provenance of a sample: which file it came from and at which frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Origin {
    pub file: u32,
    pub frame: usize,
}

/// Borrowed view of one sample.
#[derive(Clone, Copy, Debug)]
pub struct LabeledSample<'a> {
    pub features: &'a [f64],
    pub label: u8,
    pub domain: Domain,
    pub origin: Origin,
}

/// Labeled samples stored column-wise, with a split assignment per sample.
///
/// Freshly constructed datasets put every sample in [`Split::Train`]; call
/// [`split`] to assign train/val/test.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainDataset {
    features: Matrix,
    labels: Vec<u8>,
    domains: Vec<Domain>,
    origins: Vec<Origin>,
    splits: Vec<Split>,
}

impl DomainDataset {
    pub fn new(features: Matrix, labels: Vec<u8>, domains: Vec<Domain>, origins: Vec<Origin>) -> Result<Self> {
        let n = features.rows();
        if labels.len() != n || domains.len() != n || origins.len() != n {
            return Err(Error::Shape(format!(
                "{} feature rows, {} labels, {} domains, {} origins",
                n,
                labels.len(),
                domains.len(),
                origins.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Validation(format!("label {bad} is not 0 or 1")));
        }
        Ok(DomainDataset {
            features,
            labels,
            domains,
            origins,
            splits: vec![Split::Train; n],
        })
    }

    /// Dataset whose samples all belong to `domain`, with sequential frame origins in `file`.
    pub fn single_domain(features: Matrix, labels: Vec<u8>, domain: Domain, file: u32) -> Result<Self> {
        let n = features.rows();
        let origins = (0..n).map(|frame| Origin { file, frame }).collect();
        DomainDataset::new(features, labels, vec![domain; n], origins)
    }

    pub fn empty(dim: usize) -> Self {
        DomainDataset {
            features: Matrix::zeros(0, dim),
            labels: Vec::new(),
            domains: Vec::new(),
            origins: Vec::new(),
            splits: Vec::new(),
        }
    }

    /// Concatenates datasets, keeping split assignments.
    pub fn concat(parts: &[&DomainDataset]) -> Result<Self> {
        let features = Matrix::vstack(&parts.iter().map(|p| &p.features).collect::<Vec<_>>())?;
        Ok(DomainDataset {
            features,
            labels: parts.iter().flat_map(|p| p.labels.iter().copied()).collect(),
            domains: parts.iter().flat_map(|p| p.domains.iter().copied()).collect(),
            origins: parts.iter().flat_map(|p| p.origins.iter().copied()).collect(),
            splits: parts.iter().flat_map(|p| p.splits.iter().copied()).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn domains(&self) -> &[Domain] {
        &self.domains
    }

    pub fn splits(&self) -> &[Split] {
        &self.splits
    }

    pub fn sample(&self, i: usize) -> LabeledSample<'_> {
        LabeledSample {
            features: self.features.row(i),
            label: self.labels[i],
            domain: self.domains[i],
            origin: self.origins[i],
        }
    }

    /// Replaces the feature matrix (e.g. after a transform), keeping everything else.
    pub fn with_features(&self, features: Matrix) -> Result<Self> {
        if features.rows() != self.len() {
            return Err(Error::Shape(format!(
                "{} rows for a dataset of {} samples",
                features.rows(),
                self.len()
            )));
        }
        Ok(DomainDataset {
            features,
            ..self.clone()
        })
    }

    pub fn count(&self, domain: Domain, split: Split) -> usize {
        self.domains
            .iter()
            .zip(&self.splits)
            .filter(|&(&d, &s)| d == domain && s == split)
            .count()
    }

    /// Source training-set size `n_s`.
    pub fn n_source_train(&self) -> usize {
        self.count(Domain::Source, Split::Train)
    }

    /// Target training-set size `n_t`.
    pub fn n_target_train(&self) -> usize {
        self.count(Domain::Target, Split::Train)
    }

    /// Indices of the samples assigned to `split`, in dataset order.
    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.splits[i] == split).collect()
    }

    pub fn view(&self, split: Split) -> DatasetView<'_> {
        DatasetView {
            data: self,
            indices: self.indices(split),
        }
    }

    pub fn view_all(&self) -> DatasetView<'_> {
        DatasetView {
            data: self,
            indices: (0..self.len()).collect(),
        }
    }
}

/// An ordered selection of samples from a dataset.
#[derive(Clone, Debug)]
pub struct DatasetView<'a> {
    data: &'a DomainDataset,
    indices: Vec<usize>,
}

impl<'a> DatasetView<'a> {
    pub fn new(data: &'a DomainDataset, indices: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= data.len()) {
            return Err(Error::Shape(format!("index {bad} out of {} samples", data.len())));
        }
        Ok(DatasetView { data, indices })
    }

    pub fn dataset(&self) -> &'a DomainDataset {
        self.data
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn features(&self) -> Matrix {
        self.data.features.select_rows(&self.indices)
    }

    pub fn labels(&self) -> Vec<u8> {
        self.indices.iter().map(|&i| self.data.labels[i]).collect()
    }

    pub fn domains(&self) -> Vec<Domain> {
        self.indices.iter().map(|&i| self.data.domains[i]).collect()
    }

    /// `[non-cut, cut]` counts.
    pub fn class_counts(&self) -> [usize; 2] {
        let mut c = [0; 2];
        for &i in &self.indices {
            c[self.data.labels[i] as usize] += 1;
        }
        c
    }

    /// Copies the selected samples into a standalone dataset (splits preserved).
    pub fn materialize(&self) -> DomainDataset {
        let d = self.data;
        DomainDataset {
            features: d.features.select_rows(&self.indices),
            labels: self.labels(),
            domains: self.domains(),
            origins: self.indices.iter().map(|&i| d.origins[i]).collect(),
            splits: self.indices.iter().map(|&i| d.splits[i]).collect(),
        }
    }
}

/// Split sizes by largest-remainder rounding.
///
/// Each split gets `⌊rᵢ·n⌋`; the leftover samples go one each to the splits with
/// the largest fractional parts, earlier splits winning ties.
pub fn split_counts(n: usize, ratios: [f64; 3]) -> Result<[usize; 3]> {
    if ratios.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::Config(format!("split ratios must be non-negative: {ratios:?}")));
    }
    let total: f64 = ratios.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split ratios sum to {total}, expected 1")));
    }
    let quotas = ratios.map(|r| r * n as f64);
    // Absorb representation error such as 0.29·100 = 28.999999999999996.
    let mut counts = quotas.map(|q| (q + 1e-9).floor() as usize);
    let fractions = quotas
        .iter()
        .zip(&counts)
        .map(|(q, &c)| (q - c as f64).max(0.0))
        .collect::<Vec<_>>();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| fractions[b].total_cmp(&fractions[a]).then(a.cmp(&b)));
    let mut leftover = n.saturating_sub(counts.iter().sum());
    for &i in order.iter().cycle() {
        if leftover == 0 {
            break;
        }
        counts[i] += 1;
        leftover -= 1;
    }
    Ok(counts)
}

/// Assigns train/val/test by slicing a seeded uniform permutation into
/// contiguous blocks of [`split_counts`] sizes.
pub fn split(dataset: &DomainDataset, ratios: [f64; 3], seed: u64) -> Result<DomainDataset> {
    let counts = split_counts(dataset.len(), ratios)?;
    let perm = RngState::new(seed).permutation(dataset.len());
    let mut out = dataset.clone();
    for (pos, &i) in perm.iter().enumerate() {
        out.splits[i] = if pos < counts[0] {
            Split::Train
        } else if pos < counts[0] + counts[1] {
            Split::Val
        } else {
            Split::Test
        };
    }
    Ok(out)
}

pub const DEFAULT_SPLIT_RATIOS: [f64; 3] = [0.7, 0.1, 0.2];

/// First `n` samples of a seeded shuffle of `split`.
pub fn subsample(dataset: &DomainDataset, split: Split, n: usize, seed: u64) -> Result<DatasetView<'_>> {
    let mut indices = dataset.indices(split);
    if n > indices.len() {
        return Err(Error::Size {
            requested: n,
            available: indices.len(),
        });
    }
    RngState::new(seed).shuffle(&mut indices);
    indices.truncate(n);
    Ok(DatasetView {
        data: dataset,
        indices,
    })
}
