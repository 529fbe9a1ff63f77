use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::dataset::Domain;
use crate::nn::{
    adam_apply, forward, Activation, AdamConfig, AdamState, Architecture, Checkpoint, ForwardCache,
    GradBundle, Mode, NetworkParams,
};
use crate::numcore::{Matrix, RngState};
use crate::{Error, Result};

/// Layer widths of the five sub-networks.
///
/// Private generators: `input_dim → private[0] → … → private[last]`, sigmoid.
/// Shared generator: `private[last] → shared`, ReLU.
/// Discriminator and classifier: `shared → head_hidden → 2`, ReLU then softmax.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversarialArch {
    pub input_dim: usize,
    pub private: Vec<usize>,
    pub shared: usize,
    pub head_hidden: usize,
}

impl Default for AdversarialArch {
    fn default() -> Self {
        AdversarialArch {
            input_dim: 1025,
            private: vec![768, 512],
            shared: 200,
            head_hidden: 100,
        }
    }
}

impl AdversarialArch {
    pub fn private_arch(&self) -> Architecture {
        self.private
            .iter()
            .fold(Architecture::new(self.input_dim), |a, &u| a.layer(u, Activation::Sigmoid, 0.0))
    }

    pub fn shared_arch(&self) -> Architecture {
        let from = *self.private.last().unwrap_or(&self.input_dim);
        Architecture::new(from).layer(self.shared, Activation::Relu, 0.0)
    }

    pub fn head_arch(&self) -> Architecture {
        Architecture::new(self.shared)
            .layer(self.head_hidden, Activation::Relu, 0.0)
            .layer(2, Activation::Softmax, 0.0)
    }
}

/// Training mode of an adversarial composition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdaMode {
    Faraday,
    Dirac,
}

impl AdaMode {
    pub fn name(self) -> &'static str {
        match self {
            AdaMode::Faraday => "faraday",
            AdaMode::Dirac => "dirac",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "faraday" => Ok(AdaMode::Faraday),
            "dirac" => Ok(AdaMode::Dirac),
            _ => Err(Error::Config(format!("unknown adversarial mode '{s}'"))),
        }
    }
}

/// Identifies one of the five sub-networks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Part {
    GenSource,
    GenTarget,
    Shared,
    Disc,
    Clf,
}

impl Part {
    pub const ALL: [Part; 5] = [Part::GenSource, Part::GenTarget, Part::Shared, Part::Disc, Part::Clf];

    pub fn name(self) -> &'static str {
        match self {
            Part::GenSource => "gen_source",
            Part::GenTarget => "gen_target",
            Part::Shared => "shared",
            Part::Disc => "disc",
            Part::Clf => "clf",
        }
    }
}

/// Private generators `G_S`, `G_T`, shared generator `G`, discriminator `D` and
/// classifier `C`, each with its own optimizer state.
#[derive(Clone, Debug)]
pub struct AdversarialNet {
    pub gen_source: NetworkParams,
    pub gen_target: NetworkParams,
    pub shared: NetworkParams,
    pub disc: NetworkParams,
    pub clf: NetworkParams,
    optim: Option<[AdamState; 5]>,
}

impl AdversarialNet {
    pub fn init(arch: &AdversarialArch, rng: &mut RngState) -> Result<Self> {
        let gen_source = NetworkParams::init(&arch.private_arch(), rng)?;
        let gen_target = NetworkParams::init(&arch.private_arch(), rng)?;
        let shared = NetworkParams::init(&arch.shared_arch(), rng)?;
        let disc = NetworkParams::init(&arch.head_arch(), rng)?;
        let clf = NetworkParams::init(&arch.head_arch(), rng)?;
        Ok(AdversarialNet {
            gen_source,
            gen_target,
            shared,
            disc,
            clf,
            optim: None,
        })
    }

    /// Attaches fresh Adam states sharing one configuration.
    pub fn with_optimizer(mut self, config: AdamConfig) -> Self {
        self.optim = Some([
            AdamState::new(&self.gen_source, config),
            AdamState::new(&self.gen_target, config),
            AdamState::new(&self.shared, config),
            AdamState::new(&self.disc, config),
            AdamState::new(&self.clf, config),
        ]);
        self
    }

    /// Parameters only, in infer mode, without optimizer state.
    pub fn snapshot(&self) -> Self {
        let mut out = AdversarialNet {
            gen_source: self.gen_source.clone(),
            gen_target: self.gen_target.clone(),
            shared: self.shared.clone(),
            disc: self.disc.clone(),
            clf: self.clf.clone(),
            optim: None,
        };
        out.set_mode(Mode::Infer);
        out
    }

    pub fn part(&self, p: Part) -> &NetworkParams {
        match p {
            Part::GenSource => &self.gen_source,
            Part::GenTarget => &self.gen_target,
            Part::Shared => &self.shared,
            Part::Disc => &self.disc,
            Part::Clf => &self.clf,
        }
    }

    pub fn part_mut(&mut self, p: Part) -> &mut NetworkParams {
        match p {
            Part::GenSource => &mut self.gen_source,
            Part::GenTarget => &mut self.gen_target,
            Part::Shared => &mut self.shared,
            Part::Disc => &mut self.disc,
            Part::Clf => &mut self.clf,
        }
    }

    fn part_index(p: Part) -> usize {
        Part::ALL.iter().position(|&q| q == p).unwrap()
    }

    pub fn optimizer(&self, p: Part) -> Option<&AdamState> {
        self.optim.as_ref().map(|o| &o[Self::part_index(p)])
    }

    pub fn set_mode(&mut self, mode: Mode) {
        for p in Part::ALL {
            self.part_mut(p).set_mode(mode);
        }
    }

    /// One Adam step on each listed sub-network.
    pub fn apply(&mut self, grads: &crate::adversarial::AdversarialGrads, parts: &[Part]) -> Result<()> {
        for &p in parts {
            self.apply_one(p, grads.get(p))?;
        }
        Ok(())
    }

    /// One Adam step on a single sub-network.
    pub fn apply_one(&mut self, part: Part, grads: &GradBundle) -> Result<()> {
        let optim = self
            .optim
            .as_mut()
            .ok_or_else(|| Error::Contract("adversarial net has no optimizer attached".into()))?;
        let state = &mut optim[Self::part_index(part)];
        let net = match part {
            Part::GenSource => &mut self.gen_source,
            Part::GenTarget => &mut self.gen_target,
            Part::Shared => &mut self.shared,
            Part::Disc => &mut self.disc,
            Part::Clf => &mut self.clf,
        };
        adam_apply(net, grads, state)
    }

    pub fn param_count(&self) -> usize {
        Part::ALL.iter().map(|&p| self.part(p).param_count()).sum()
    }

    /// Shared representation `G(G_dom(x))`.
    pub fn represent(&self, x: &Matrix, domain: Domain) -> Result<Matrix> {
        let private = match domain {
            Domain::Source => &self.gen_source,
            Domain::Target => &self.gen_target,
        };
        self.shared.predict(&private.predict(x)?)
    }

    /// Class probabilities `C(G(G_dom(x)))`.
    pub fn predict(&self, x: &Matrix, domain: Domain) -> Result<Matrix> {
        self.clf.predict(&self.represent(x, domain)?)
    }

    pub fn to_checkpoint(&self, mode: AdaMode, metadata: serde_json::Value) -> Checkpoint {
        Checkpoint {
            kind: mode.name().to_string(),
            networks: Part::ALL
                .iter()
                .map(|&p| (p.name().to_string(), self.part(p).clone()))
                .collect(),
            metadata,
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<(Self, AdaMode)> {
        let mode = AdaMode::parse(&ck.kind)
            .map_err(|_| Error::Format(format!("checkpoint kind '{}' is not adversarial", ck.kind)))?;
        let get = |p: Part| ck.network(p.name()).cloned();
        Ok((
            AdversarialNet {
                gen_source: get(Part::GenSource)?,
                gen_target: get(Part::GenTarget)?,
                shared: get(Part::Shared)?,
                disc: get(Part::Disc)?,
                clf: get(Part::Clf)?,
                optim: None,
            },
            mode,
        ))
    }
}

static CAPTURE_IDS: AtomicU64 = AtomicU64::new(1);

/// Everything a paired forward pass produces.
#[derive(Clone, Debug)]
pub struct ForwardCapture {
    pub(crate) id: u64,
    /// Shared representations of the source and target batches.
    pub x_gs: Matrix,
    pub x_gt: Matrix,
    /// Domain probability rows.
    pub d_hat_s: Matrix,
    pub d_hat_t: Matrix,
    /// Class probability rows.
    pub y_hat_s: Matrix,
    pub y_hat_t: Matrix,
    pub(crate) gen_source: ForwardCache,
    pub(crate) gen_target: ForwardCache,
    pub(crate) shared_s: ForwardCache,
    pub(crate) shared_t: ForwardCache,
    pub(crate) disc_s: ForwardCache,
    pub(crate) disc_t: ForwardCache,
    pub(crate) clf_s: ForwardCache,
    pub(crate) clf_t: ForwardCache,
}

/// Generator half of a paired forward pass.
#[derive(Clone, Debug)]
pub struct GeneratorPass {
    pub x_gs: Matrix,
    pub x_gt: Matrix,
    gen_source: ForwardCache,
    gen_target: ForwardCache,
    shared_s: ForwardCache,
    shared_t: ForwardCache,
}

pub fn forward_generators(
    net: &AdversarialNet,
    x_s: &Matrix,
    x_t: &Matrix,
    rng: &mut RngState,
) -> Result<GeneratorPass> {
    let (h_s, gen_source) = forward(&net.gen_source, x_s, rng)?;
    let (h_t, gen_target) = forward(&net.gen_target, x_t, rng)?;
    let (x_gs, shared_s) = forward(&net.shared, &h_s, rng)?;
    let (x_gt, shared_t) = forward(&net.shared, &h_t, rng)?;
    Ok(GeneratorPass {
        x_gs,
        x_gt,
        gen_source,
        gen_target,
        shared_s,
        shared_t,
    })
}

/// Runs `D` and `C` on a generator pass.
pub fn forward_heads(net: &AdversarialNet, gen: GeneratorPass, rng: &mut RngState) -> Result<ForwardCapture> {
    let (d_hat_s, disc_s) = forward(&net.disc, &gen.x_gs, rng)?;
    let (d_hat_t, disc_t) = forward(&net.disc, &gen.x_gt, rng)?;
    let (y_hat_s, clf_s) = forward(&net.clf, &gen.x_gs, rng)?;
    let (y_hat_t, clf_t) = forward(&net.clf, &gen.x_gt, rng)?;
    Ok(ForwardCapture {
        id: CAPTURE_IDS.fetch_add(1, Ordering::Relaxed),
        x_gs: gen.x_gs,
        x_gt: gen.x_gt,
        d_hat_s,
        d_hat_t,
        y_hat_s,
        y_hat_t,
        gen_source: gen.gen_source,
        gen_target: gen.gen_target,
        shared_s: gen.shared_s,
        shared_t: gen.shared_t,
        disc_s,
        disc_t,
        clf_s,
        clf_t,
    })
}

/// `x_gs = G(G_S(x_s))`, `x_gt = G(G_T(x_t))`, then `D` and `C` on both.
pub fn forward_pair(net: &AdversarialNet, x_s: &Matrix, x_t: &Matrix, rng: &mut RngState) -> Result<ForwardCapture> {
    let gen = forward_generators(net, x_s, x_t, rng)?;
    forward_heads(net, gen, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny_arch() -> AdversarialArch {
        AdversarialArch {
            input_dim: 6,
            private: vec![5, 4],
            shared: 3,
            head_hidden: 3,
        }
    }

    #[test]
    fn default_architecture_widths() {
        let net = AdversarialNet::init(&AdversarialArch::default(), &mut RngState::new(0)).unwrap();
        let dims = |n: &NetworkParams| {
            let a = n.architecture();
            std::iter::once(a.input_dim).chain(a.layers.iter().map(|l| l.units)).collect::<Vec<_>>()
        };
        assert_eq!(dims(&net.gen_source), vec![1025, 768, 512]);
        assert_eq!(dims(&net.gen_target), vec![1025, 768, 512]);
        assert_eq!(dims(&net.shared), vec![512, 200]);
        assert_eq!(dims(&net.disc), vec![200, 100, 2]);
        assert_eq!(dims(&net.clf), vec![200, 100, 2]);
    }

    #[test]
    fn identical_private_paths_give_identical_representations() {
        let mut net = AdversarialNet::init(&tiny_arch(), &mut RngState::new(1)).unwrap();
        net.gen_target = net.gen_source.clone();
        let mut rng = RngState::new(2);
        let x = Matrix::from_vec(4, 6, (0..24).map(|_| rng.next_normal()).collect()).unwrap();
        let cap = forward_pair(&net, &x, &x, &mut rng).unwrap();
        assert_eq!(cap.x_gs, cap.x_gt);
        assert_eq!(cap.d_hat_s, cap.d_hat_t);
    }

    #[test]
    fn probability_rows_normalized() {
        let net = AdversarialNet::init(&tiny_arch(), &mut RngState::new(3)).unwrap();
        let mut rng = RngState::new(4);
        let xs = Matrix::from_vec(5, 6, (0..30).map(|_| rng.next_normal()).collect()).unwrap();
        let xt = Matrix::from_vec(2, 6, (0..12).map(|_| rng.next_normal()).collect()).unwrap();
        let cap = forward_pair(&net, &xs, &xt, &mut rng).unwrap();
        for m in [&cap.y_hat_s, &cap.y_hat_t, &cap.d_hat_s, &cap.d_hat_t] {
            for r in 0..m.rows() {
                assert!((m.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(cap.y_hat_t.rows(), 2);
    }

    #[test]
    fn composition_oracle_single_sample() {
        let net = AdversarialNet::init(&tiny_arch(), &mut RngState::new(5)).unwrap();
        let mut rng = RngState::new(6);
        let xs = Matrix::from_vec(1, 6, (0..6).map(|_| rng.next_normal()).collect()).unwrap();
        let xt = Matrix::from_vec(1, 6, (0..6).map(|_| rng.next_normal()).collect()).unwrap();
        let cap = forward_pair(&net, &xs, &xt, &mut rng).unwrap();
        // Manual composition, layer by layer.
        let manual = |x: &Matrix, nets: &[&NetworkParams]| {
            let mut h = x.row(0).to_vec();
            for n in nets {
                for l in n.layers() {
                    let mut z: Vec<f64> = l.bias.clone();
                    for (i, &hi) in h.iter().enumerate() {
                        for (j, zj) in z.iter_mut().enumerate() {
                            *zj += hi * l.weights.get(i, j);
                        }
                    }
                    h = match l.activation {
                        Activation::Sigmoid => z.iter().map(|&v| 1.0 / (1.0 + (-v).exp())).collect(),
                        Activation::Relu => z.iter().map(|&v| v.max(0.0)).collect(),
                        Activation::Linear => z,
                        Activation::Softmax => {
                            let e: Vec<f64> = z.iter().map(|v| v.exp()).collect();
                            let s: f64 = e.iter().sum();
                            e.iter().map(|v| v / s).collect()
                        }
                    };
                }
            }
            h
        };
        let ys = manual(&xs, &[&net.gen_source, &net.shared, &net.clf]);
        let dt = manual(&xt, &[&net.gen_target, &net.shared, &net.disc]);
        for (a, b) in ys.iter().zip(cap.y_hat_s.row(0)) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in dt.iter().zip(cap.d_hat_t.row(0)) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(net.predict(&xs, Domain::Source).unwrap(), cap.y_hat_s);
    }

    #[test]
    fn wrong_width_is_shape_error() {
        let net = AdversarialNet::init(&tiny_arch(), &mut RngState::new(7)).unwrap();
        let bad = Matrix::zeros(2, 5);
        assert!(matches!(
            forward_pair(&net, &bad, &Matrix::zeros(2, 6), &mut RngState::new(0)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn checkpoint_roundtrip() {
        let net = AdversarialNet::init(&tiny_arch(), &mut RngState::new(8)).unwrap();
        let ck = net.to_checkpoint(AdaMode::Dirac, serde_json::Value::Null);
        let (back, mode) = AdversarialNet::from_checkpoint(&Checkpoint::decode(&ck.encode()).unwrap()).unwrap();
        assert_eq!(mode, AdaMode::Dirac);
        for p in Part::ALL {
            assert_eq!(back.part(p).params_flat(), net.part(p).params_flat());
        }
    }
}
