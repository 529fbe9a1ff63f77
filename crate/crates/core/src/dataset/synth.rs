//! Synthetic two-domain benchmark with a known Bayes rate.
//!
//! Latent samples are `z = ±(class_sep/2)·u + ε` with `u` a random unit vector and
//! `ε ~ N(0, I)` in `latent_dim` dimensions. Each domain embeds `z` into `dim`
//! dimensions with its own random orthonormal map `E` (rows orthonormal). The
//! target additionally applies `x ← domain_scale·x + domain_shift·v` for a random
//! unit vector `v`. Because the embeddings are isometries and the target map is
//! affine and invertible on the latent subspace, the Bayes accuracy in both
//! domains is `Φ(class_sep / 2)`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dataset::{Domain, DomainDataset, Origin};
use crate::numcore::{Matrix, RngState};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub dim: usize,
    pub latent_dim: usize,
    pub n_source: usize,
    pub n_target: usize,
    pub class_sep: f64,
    pub domain_shift: f64,
    pub domain_scale: f64,
    /// Use the source embedding for the target as well.
    pub shared_embedding: bool,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            dim: 1025,
            latent_dim: 8,
            n_source: 3000,
            n_target: 1000,
            class_sep: 4.0,
            domain_shift: 3.0,
            domain_scale: 1.0,
            shared_embedding: false,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::Config(format!("synthetic dim must be >= 2, got {}", self.dim)));
        }
        if self.latent_dim == 0 || self.latent_dim > self.dim {
            return Err(Error::Config(format!(
                "latent_dim must be in 1..={}, got {}",
                self.dim, self.latent_dim
            )));
        }
        if !self.class_sep.is_finite() || self.class_sep < 0.0 {
            return Err(Error::Config("class_sep must be finite and non-negative".into()));
        }
        if !self.domain_shift.is_finite() || !self.domain_scale.is_finite() || self.domain_scale == 0.0 {
            return Err(Error::Config("domain_shift must be finite and domain_scale finite, non-zero".into()));
        }
        Ok(())
    }

    /// `Φ(class_sep / 2)`.
    pub fn bayes_accuracy(&self) -> f64 {
        Normal::standard().cdf(self.class_sep / 2.0)
    }
}

#[derive(Clone, Debug)]
pub struct SynthDomains {
    pub source: DomainDataset,
    pub target: DomainDataset,
    pub bayes_accuracy: f64,
}

fn unit_vector(dim: usize, rng: &mut RngState) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.next_normal()).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// `rows × dim` matrix with orthonormal rows (Gram–Schmidt on Gaussian rows).
fn orthonormal_rows(rows: usize, dim: usize, rng: &mut RngState) -> Matrix {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(rows);
    while basis.len() < rows {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.next_normal()).collect();
        for _ in 0..2 {
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    Matrix::from_rows(&basis).expect("rows share a length")
}

fn balanced_labels(n: usize, rng: &mut RngState) -> Vec<u8> {
    let mut labels: Vec<u8> = (0..n).map(|i| (i >= n / 2) as u8).collect();
    rng.shuffle(&mut labels);
    labels
}

struct DomainMap<'a> {
    embedding: &'a Matrix,
    scale: f64,
    offset: Option<&'a [f64]>,
}

fn sample_domain(
    n: usize,
    direction: &[f64],
    half_sep: f64,
    map: DomainMap<'_>,
    domain: Domain,
    file: u32,
    rng: &mut RngState,
) -> Result<DomainDataset> {
    let latent_dim = direction.len();
    let labels = balanced_labels(n, rng);
    let mut z = Matrix::zeros(n, latent_dim);
    for (i, &label) in labels.iter().enumerate() {
        let sign = if label == 1 { 1.0 } else { -1.0 };
        for (j, slot) in z.row_mut(i).iter_mut().enumerate() {
            *slot = sign * half_sep * direction[j] + rng.next_normal();
        }
    }
    let mut x = z.matmul(map.embedding)?;
    if map.scale != 1.0 {
        x.map_inplace(|v| v * map.scale);
    }
    if let Some(offset) = map.offset {
        x.add_row_vector(offset)?;
    }
    let origins = (0..n).map(|frame| Origin { file, frame }).collect();
    DomainDataset::new(x, labels, vec![domain; n], origins)
}

pub fn synth_domains(spec: &SynthSpec) -> Result<SynthDomains> {
    spec.validate()?;
    let mut root = RngState::new(spec.seed);
    let mut dir_rng = root.split();
    let mut src_embed_rng = root.split();
    let mut tgt_embed_rng = root.split();
    let mut shift_rng = root.split();
    let mut src_rng = root.split();
    let mut tgt_rng = root.split();

    let direction = unit_vector(spec.latent_dim, &mut dir_rng);
    let source_embedding = orthonormal_rows(spec.latent_dim, spec.dim, &mut src_embed_rng);
    let target_embedding = if spec.shared_embedding {
        source_embedding.clone()
    } else {
        orthonormal_rows(spec.latent_dim, spec.dim, &mut tgt_embed_rng)
    };
    let shift: Vec<f64> = unit_vector(spec.dim, &mut shift_rng)
        .into_iter()
        .map(|v| v * spec.domain_shift)
        .collect();
    let half_sep = spec.class_sep / 2.0;

    let source = sample_domain(
        spec.n_source,
        &direction,
        half_sep,
        DomainMap {
            embedding: &source_embedding,
            scale: 1.0,
            offset: None,
        },
        Domain::Source,
        0,
        &mut src_rng,
    )?;
    let target = sample_domain(
        spec.n_target,
        &direction,
        half_sep,
        DomainMap {
            embedding: &target_embedding,
            scale: spec.domain_scale,
            offset: (spec.domain_shift != 0.0).then_some(shift.as_slice()),
        },
        Domain::Target,
        1,
        &mut tgt_rng,
    )?;
    Ok(SynthDomains {
        source,
        target,
        bayes_accuracy: spec.bayes_accuracy(),
    })
}
