//! Elementwise intensity transforms applied to dB feature matrices.
//!
//! | kind       | formula                                  |
//! |------------|------------------------------------------|
//! | `idx`      | `x`                                      |
//! | `stanx`    | `(x − min) / (max − min)`                |
//! | `logx`     | `255 · ln(81 + x) / ln(81 + max)`        |
//! | `sigmoidx` | `255 · e^(x+41) / (1 + e^(x+41))`        |
//! | `gammax`   | `255 · ((81 + x) / (81 + max))^γ`        |
//!
//! `min`/`max` are statistics of the matrix the transform was fitted on. A fitted
//! transform can be re-applied to other matrices (e.g. at inference time).

use serde::{Deserialize, Serialize};

use crate::numcore::{sigmoid, Matrix};
use crate::{Error, Result};

pub const DEFAULT_GAMMA: f64 = 4.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    Idx,
    Stanx,
    Logx,
    Sigmoidx,
    Gammax,
}

impl TransformKind {
    pub const ALL: [TransformKind; 5] = [
        TransformKind::Idx,
        TransformKind::Stanx,
        TransformKind::Logx,
        TransformKind::Sigmoidx,
        TransformKind::Gammax,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TransformKind::Idx => "idx",
            TransformKind::Stanx => "stanx",
            TransformKind::Logx => "logx",
            TransformKind::Sigmoidx => "sigmoidx",
            TransformKind::Gammax => "gammax",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        TransformKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown transform '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformSpec {
    pub kind: TransformKind,
    pub gamma: f64,
}

impl TransformSpec {
    pub fn new(kind: TransformKind) -> Self {
        TransformSpec {
            kind,
            gamma: DEFAULT_GAMMA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::Config(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

impl Default for TransformSpec {
    fn default() -> Self {
        TransformSpec::new(TransformKind::Gammax)
    }
}

/// A transform together with the matrix statistics it was fitted on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedTransform {
    pub spec: TransformSpec,
    pub min: f64,
    pub max: f64,
}

impl FittedTransform {
    pub fn fit(x: &Matrix, spec: TransformSpec) -> Result<Self> {
        spec.validate()?;
        if x.is_empty() {
            return Err(Error::Data("cannot fit a transform on an empty matrix".into()));
        }
        Ok(FittedTransform {
            spec,
            min: x.min(),
            max: x.max(),
        })
    }

    /// Scalar form of the transform under the fitted statistics.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let (min, max) = (self.min, self.max);
        match self.spec.kind {
            TransformKind::Idx => x,
            TransformKind::Stanx => {
                if max == min {
                    0.0
                } else {
                    (x - min) / (max - min)
                }
            }
            TransformKind::Logx => {
                let denom = (81.0 + max).ln();
                if denom == 0.0 {
                    0.0
                } else {
                    255.0 * (81.0 + x).ln() / denom
                }
            }
            TransformKind::Sigmoidx => 255.0 * sigmoid(x + 41.0),
            TransformKind::Gammax => 255.0 * ((81.0 + x) / (81.0 + max)).powf(self.spec.gamma),
        }
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if matches!(self.spec.kind, TransformKind::Idx) {
            return Ok(x.clone());
        }
        if matches!(self.spec.kind, TransformKind::Logx | TransformKind::Gammax) {
            let bad = x
                .as_slice()
                .iter()
                .chain(std::iter::once(&self.max))
                .find(|&&v| !(81.0 + v > 0.0));
            if let Some(v) = bad {
                return Err(Error::Domain(format!(
                    "{} requires 81 + x > 0, found x = {v}",
                    self.spec.kind.name()
                )));
            }
        }
        Ok(x.map(|v| self.eval(v)))
    }
}

/// Fits the transform on `x` and applies it to `x`.
pub fn apply_transform(x: &Matrix, spec: TransformSpec) -> Result<Matrix> {
    FittedTransform::fit(x, spec)?.apply(x)
}
