use serde::{Deserialize, Serialize};

use crate::adversarial::{AdaMode, AdversarialNet};
use crate::dataset::{DatasetView, Domain};
use crate::nn::{Checkpoint, NetworkParams};
use crate::numcore::Matrix;
use crate::train::ModelKind;
use crate::{Error, Result};

/// Anything that maps feature rows from a known domain to class probabilities.
pub trait Classifier {
    fn predict_proba(&self, x: &Matrix, domain: Domain) -> Result<Matrix>;
}

impl Classifier for NetworkParams {
    fn predict_proba(&self, x: &Matrix, _domain: Domain) -> Result<Matrix> {
        self.predict(x)
    }
}

impl Classifier for AdversarialNet {
    /// Source rows go through `G_S`, target rows through `G_T`.
    fn predict_proba(&self, x: &Matrix, domain: Domain) -> Result<Matrix> {
        self.predict(x, domain)
    }
}

/// A trained model of any kind.
#[derive(Clone, Debug)]
pub enum TrainedModel {
    Vanilla { kind: ModelKind, net: NetworkParams },
    Adversarial { mode: AdaMode, net: AdversarialNet },
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Vanilla { kind, .. } => *kind,
            TrainedModel::Adversarial { mode: AdaMode::Faraday, .. } => ModelKind::Faraday,
            TrainedModel::Adversarial { mode: AdaMode::Dirac, .. } => ModelKind::Dirac,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            TrainedModel::Vanilla { net, .. } => net.input_dim(),
            TrainedModel::Adversarial { net, .. } => net.gen_source.input_dim(),
        }
    }

    pub fn to_checkpoint(&self, metadata: serde_json::Value) -> Checkpoint {
        match self {
            TrainedModel::Vanilla { kind, net } => Checkpoint {
                kind: kind.name().to_string(),
                networks: vec![("net".to_string(), net.clone())],
                metadata,
            },
            TrainedModel::Adversarial { mode, net } => net.to_checkpoint(*mode, metadata),
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        match ck.kind.as_str() {
            "faraday" | "dirac" => {
                let (net, mode) = AdversarialNet::from_checkpoint(ck)?;
                Ok(TrainedModel::Adversarial { mode, net })
            }
            other => {
                let kind = ModelKind::parse(other)
                    .map_err(|_| Error::Format(format!("unrecognized checkpoint kind '{other}'")))?;
                Ok(TrainedModel::Vanilla {
                    kind,
                    net: ck.network("net")?.clone(),
                })
            }
        }
    }
}

impl Classifier for TrainedModel {
    fn predict_proba(&self, x: &Matrix, domain: Domain) -> Result<Matrix> {
        match self {
            TrainedModel::Vanilla { net, .. } => net.predict(x),
            TrainedModel::Adversarial { net, .. } => net.predict(x, domain),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// `confusion[truth][prediction]`.
    pub confusion: [[usize; 2]; 2],
    /// Recall per true class; `None` when the class is absent.
    pub recall: [Option<f64>; 2],
}

impl EvalReport {
    pub fn from_predictions(truth: &[u8], predicted: &[u8]) -> Result<Self> {
        if truth.is_empty() {
            return Err(Error::Data("cannot evaluate on an empty split".into()));
        }
        if truth.len() != predicted.len() {
            return Err(Error::Shape(format!("{} labels vs {} predictions", truth.len(), predicted.len())));
        }
        let mut confusion = [[0usize; 2]; 2];
        for (&t, &p) in truth.iter().zip(predicted) {
            confusion[t as usize][p as usize] += 1;
        }
        let correct = confusion[0][0] + confusion[1][1];
        let recall = [0, 1].map(|c| {
            let n = confusion[c][0] + confusion[c][1];
            (n > 0).then(|| confusion[c][c] as f64 / n as f64)
        });
        Ok(EvalReport {
            total: truth.len(),
            correct,
            accuracy: correct as f64 / truth.len() as f64,
            confusion,
            recall,
        })
    }
}

const EVAL_CHUNK: usize = 2048;

/// Hard predictions (argmax) for every sample of `view`, in view order.
pub fn predict_view(model: &dyn Classifier, view: &DatasetView<'_>) -> Result<Vec<u8>> {
    let data = view.dataset();
    let mut out = vec![0u8; view.len()];
    for domain in [Domain::Source, Domain::Target] {
        let positions: Vec<usize> = (0..view.len())
            .filter(|&p| data.domains()[view.indices()[p]] == domain)
            .collect();
        for chunk in positions.chunks(EVAL_CHUNK) {
            let rows: Vec<usize> = chunk.iter().map(|&p| view.indices()[p]).collect();
            let probs = model.predict_proba(&data.features().select_rows(&rows), domain)?;
            for (&p, pred) in chunk.iter().zip(probs.argmax_rows()) {
                out[p] = pred as u8;
            }
        }
    }
    Ok(out)
}

/// Accuracy, confusion matrix and recall of `model` on `view`.
pub fn evaluate(model: &dyn Classifier, view: &DatasetView<'_>) -> Result<EvalReport> {
    if view.is_empty() {
        return Err(Error::Data("cannot evaluate on an empty split".into()));
    }
    EvalReport::from_predictions(&view.labels(), &predict_view(model, view)?)
}
