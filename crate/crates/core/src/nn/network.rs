use serde::{Deserialize, Serialize};

use crate::numcore::{sigmoid, Matrix, RngState};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Relu,
    /// Row-wise softmax; only valid on the final layer.
    Softmax,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// `in × out`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn input_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.cols()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerShape {
    pub units: usize,
    pub activation: Activation,
}

/// Architecture descriptor: everything but the parameter values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub layers: Vec<LayerShape>,
    /// Dropout rate after each hidden layer (`layers.len() − 1` entries).
    pub dropout: Vec<f64>,
}

impl Architecture {
    pub fn new(input_dim: usize) -> Self {
        Architecture {
            input_dim,
            layers: Vec::new(),
            dropout: Vec::new(),
        }
    }

    /// Appends a layer; `dropout_before` is applied to the previous layer's output.
    pub fn layer(mut self, units: usize, activation: Activation, dropout_before: f64) -> Self {
        if !self.layers.is_empty() {
            self.dropout.push(dropout_before);
        }
        self.layers.push(LayerShape { units, activation });
        self
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(self.input_dim, |l| l.units)
    }

    pub fn param_count(&self) -> usize {
        let mut fan_in = self.input_dim;
        let mut total = 0;
        for l in &self.layers {
            total += fan_in * l.units + l.units;
            fan_in = l.units;
        }
        total
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Config("network needs at least one layer".into()));
        }
        if self.dropout.len() != self.layers.len() - 1 {
            return Err(Error::Config(format!(
                "{} dropout rates for {} layer boundaries",
                self.dropout.len(),
                self.layers.len() - 1
            )));
        }
        if let Some(p) = self.dropout.iter().find(|p| !(0.0..1.0).contains(*p)) {
            return Err(Error::Config(format!("dropout rate {p} outside [0, 1)")));
        }
        let last = self.layers.len() - 1;
        if self.layers[..last].iter().any(|l| l.activation == Activation::Softmax) {
            return Err(Error::Config("softmax is only allowed on the final layer".into()));
        }
        if self.input_dim == 0 || self.layers.iter().any(|l| l.units == 0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        Ok(())
    }
}

/// A feed-forward stack of dense layers.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams {
    layers: Vec<DenseLayer>,
    dropout: Vec<f64>,
    mode: Mode,
    /// Bumped on every parameter update; caches record it to detect staleness.
    generation: u64,
}

impl NetworkParams {
    /// Glorot-uniform weights `U(−a, a)`, `a = √(6 / (fan_in + fan_out))`, zero biases.
    pub fn init(arch: &Architecture, rng: &mut RngState) -> Result<Self> {
        arch.validate()?;
        let mut fan_in = arch.input_dim;
        let mut layers = Vec::with_capacity(arch.layers.len());
        for shape in &arch.layers {
            let a = (6.0 / (fan_in + shape.units) as f64).sqrt();
            let w = (0..fan_in * shape.units).map(|_| (2.0 * rng.next_f64() - 1.0) * a).collect();
            layers.push(DenseLayer {
                weights: Matrix::from_vec(fan_in, shape.units, w)?,
                bias: vec![0.0; shape.units],
                activation: shape.activation,
            });
            fan_in = shape.units;
        }
        Ok(NetworkParams {
            layers,
            dropout: arch.dropout.clone(),
            mode: Mode::Train,
            generation: 0,
        })
    }

    pub fn from_layers(layers: Vec<DenseLayer>, dropout: Vec<f64>) -> Result<Self> {
        let net = NetworkParams {
            layers,
            dropout,
            mode: Mode::Train,
            generation: 0,
        };
        net.architecture().validate()?;
        for (i, w) in net.layers.windows(2).enumerate() {
            if w[0].output_dim() != w[1].input_dim() {
                return Err(Error::Shape(format!(
                    "layer {i} outputs {} but layer {} expects {}",
                    w[0].output_dim(),
                    i + 1,
                    w[1].input_dim()
                )));
            }
        }
        if let Some((i, _)) = net
            .layers
            .iter()
            .enumerate()
            .find(|(_, l)| l.bias.len() != l.output_dim())
        {
            return Err(Error::Shape(format!("layer {i} bias length mismatch")));
        }
        Ok(net)
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            input_dim: self.layers.first().map_or(0, DenseLayer::input_dim),
            layers: self
                .layers
                .iter()
                .map(|l| LayerShape {
                    units: l.output_dim(),
                    activation: l.activation,
                })
                .collect(),
            dropout: self.dropout.clone(),
        }
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn dropout(&self) -> &[f64] {
        &self.dropout
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// All parameters, layer by layer: weights row-major, then bias.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    /// Overwrites all parameters from the layout of [`Self::params_flat`].
    pub fn set_params_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "{} values for {} parameters",
                values.len(),
                self.param_count()
            )));
        }
        let mut at = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.as_mut_slice().copy_from_slice(&values[at..at + nw]);
            at += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&values[at..at + nb]);
            at += nb;
        }
        self.generation += 1;
        Ok(())
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [DenseLayer] {
        self.generation += 1;
        &mut self.layers
    }

    /// Infer-mode forward pass without a cache.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        let mut h = self.check_input(x)?.clone();
        for l in &self.layers {
            h = affine(&h, l)?;
            activate(&mut h, l.activation);
        }
        Ok(h)
    }

    fn check_input<'a>(&self, x: &'a Matrix) -> Result<&'a Matrix> {
        if x.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input has {} columns, network expects {}",
                x.cols(),
                self.input_dim()
            )));
        }
        Ok(x)
    }
}

fn affine(x: &Matrix, l: &DenseLayer) -> Result<Matrix> {
    let mut z = x.matmul(&l.weights)?;
    z.add_row_vector(&l.bias)?;
    Ok(z)
}

fn activate(z: &mut Matrix, act: Activation) {
    match act {
        Activation::Linear => {}
        Activation::Relu => z.map_inplace(|v| v.max(0.0)),
        Activation::Sigmoid => z.map_inplace(sigmoid),
        Activation::Softmax => softmax_rows(z),
    }
}

/// Row-wise softmax in place, shifted by the row maximum.
pub fn softmax_rows(z: &mut Matrix) {
    for r in 0..z.rows() {
        let row = z.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

/// Everything `backward` needs from a forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    generation: u64,
    /// Input fed to each layer (after the previous layer's dropout).
    inputs: Vec<Matrix>,
    /// Pre-activation `x·W + b` of each layer.
    pre: Vec<Matrix>,
    /// Post-activation output of each layer, before dropout.
    post: Vec<Matrix>,
    /// Inverted-dropout multipliers (0 or 1/(1−p)) after each hidden layer.
    masks: Vec<Option<Matrix>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Matrix {
        self.post.last().expect("non-empty network")
    }

    pub fn masks(&self) -> &[Option<Matrix>] {
        &self.masks
    }
}

/// Forward pass. In train mode, dropout masks are drawn from `rng`; in infer mode
/// dropout is the identity and `rng` is untouched.
pub fn forward(net: &NetworkParams, x: &Matrix, rng: &mut RngState) -> Result<(Matrix, ForwardCache)> {
    net.check_input(x)?;
    let n = net.layers.len();
    let mut cache = ForwardCache {
        generation: net.generation,
        inputs: Vec::with_capacity(n),
        pre: Vec::with_capacity(n),
        post: Vec::with_capacity(n),
        masks: Vec::with_capacity(n.saturating_sub(1)),
    };
    let mut h = x.clone();
    for (i, l) in net.layers.iter().enumerate() {
        let z = affine(&h, l)?;
        let mut a = z.clone();
        activate(&mut a, l.activation);
        cache.inputs.push(h);
        cache.pre.push(z);
        h = a.clone();
        cache.post.push(a);
        if i + 1 < n {
            let p = net.dropout[i];
            let mask = (net.mode == Mode::Train && p > 0.0).then(|| {
                let keep = 1.0 / (1.0 - p);
                let draws = rng.uniform_vec(h.len());
                Matrix::from_vec(
                    h.rows(),
                    h.cols(),
                    draws.into_iter().map(|u| if u < p { 0.0 } else { keep }).collect(),
                )
                .expect("mask matches activation shape")
            });
            if let Some(m) = &mask {
                h = h.zip_map(m, |a, k| a * k)?;
            }
            cache.masks.push(mask);
        }
    }
    Ok((h, cache))
}

/// Per-layer gradients, congruent with a [`NetworkParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct GradBundle {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl GradBundle {
    pub fn zeros_like(net: &NetworkParams) -> Self {
        GradBundle {
            weights: net
                .layers
                .iter()
                .map(|l| Matrix::zeros(l.weights.rows(), l.weights.cols()))
                .collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    pub fn check_congruent(&self, net: &NetworkParams) -> Result<()> {
        let ok = self.weights.len() == net.layers.len()
            && self.biases.len() == net.layers.len()
            && net
                .layers
                .iter()
                .zip(self.weights.iter().zip(&self.biases))
                .all(|(l, (w, b))| w.shape() == l.weights.shape() && b.len() == l.bias.len());
        if ok {
            Ok(())
        } else {
            Err(Error::Shape("gradient bundle does not match the network".into()))
        }
    }

    pub fn scale(&mut self, s: f64) {
        for w in &mut self.weights {
            w.map_inplace(|v| v * s);
        }
        for b in &mut self.biases {
            b.iter_mut().for_each(|v| *v *= s);
        }
    }

    /// `self += alpha · other`.
    pub fn add_scaled(&mut self, alpha: f64, other: &GradBundle) -> Result<()> {
        if self.weights.len() != other.weights.len() {
            return Err(Error::Shape("gradient bundles of different depth".into()));
        }
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.axpy(alpha, b)?;
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            if a.len() != b.len() {
                return Err(Error::Shape("bias gradients of different length".into()));
            }
            a.iter_mut().zip(b).for_each(|(x, y)| *x += alpha * y);
        }
        Ok(())
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.flat().iter().all(|&v| v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.flat().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Clone, Debug)]
pub struct Backprop {
    pub grads: GradBundle,
    /// Gradient with respect to the network input, when requested.
    pub input_grad: Option<Matrix>,
}

/// Reverse pass.
///
/// `upstream` is the loss gradient with respect to the final layer's *logits* when
/// the network ends in softmax (the fused cross-entropy path, see
/// [`crate::nn::cross_entropy`]), and with respect to the network output otherwise.
pub fn backward(
    net: &NetworkParams,
    cache: &ForwardCache,
    upstream: &Matrix,
    want_input_grad: bool,
) -> Result<Backprop> {
    if cache.generation != net.generation || cache.pre.len() != net.layers.len() {
        return Err(Error::Contract(
            "forward cache does not belong to the current parameters".into(),
        ));
    }
    if upstream.shape() != cache.output().shape() {
        return Err(Error::Shape(format!(
            "upstream gradient {:?} for output {:?}",
            upstream.shape(),
            cache.output().shape()
        )));
    }
    let n = net.layers.len();
    let mut grads = GradBundle {
        weights: Vec::with_capacity(n),
        biases: Vec::with_capacity(n),
    };
    let mut delta = upstream.clone();
    let mut input_grad = None;
    for i in (0..n).rev() {
        let l = &net.layers[i];
        // delta: gradient w.r.t. this layer's post-activation output (or logits for softmax).
        match l.activation {
            Activation::Linear | Activation::Softmax => {}
            Activation::Relu => {
                let pre = cache.pre[i].as_slice();
                for (d, &z) in delta.as_mut_slice().iter_mut().zip(pre) {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            Activation::Sigmoid => {
                let post = cache.post[i].as_slice();
                for (d, &s) in delta.as_mut_slice().iter_mut().zip(post) {
                    *d *= s * (1.0 - s);
                }
            }
        }
        grads.weights.push(cache.inputs[i].t_matmul(&delta)?);
        grads.biases.push(delta.column_sums());
        if i > 0 || want_input_grad {
            let mut g = delta.matmul_t(&l.weights)?;
            if i > 0 {
                if let Some(mask) = &cache.masks[i - 1] {
                    g = g.zip_map(mask, |a, k| a * k)?;
                }
                delta = g;
            } else {
                input_grad = Some(g);
            }
        }
    }
    grads.weights.reverse();
    grads.biases.reverse();
    Ok(Backprop { grads, input_grad })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{cross_entropy, one_hot};

    fn rand_matrix(r: usize, c: usize, rng: &mut RngState) -> Matrix {
        Matrix::from_vec(r, c, (0..r * c).map(|_| rng.next_normal()).collect()).unwrap()
    }

    #[test]
    fn linear_identity_layer() {
        let layer = DenseLayer {
            weights: Matrix::identity(3),
            bias: vec![0.0; 3],
            activation: Activation::Linear,
        };
        let net = NetworkParams::from_layers(vec![layer], vec![]).unwrap();
        let x = rand_matrix(4, 3, &mut RngState::new(1));
        let (y, _) = forward(&net, &x, &mut RngState::new(0)).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn softmax_of_equal_logits() {
        let layer = DenseLayer {
            weights: Matrix::zeros(2, 2),
            bias: vec![0.0; 2],
            activation: Activation::Softmax,
        };
        let net = NetworkParams::from_layers(vec![layer], vec![]).unwrap();
        let y = net.predict(&Matrix::filled(1, 2, 0.3)).unwrap();
        assert_eq!(y.row(0), &[0.5, 0.5]);
    }

    #[test]
    fn no_dropout_means_train_equals_infer() {
        let arch = Architecture::new(5)
            .layer(4, Activation::Relu, 0.0)
            .layer(2, Activation::Softmax, 0.0);
        let mut net = NetworkParams::init(&arch, &mut RngState::new(2)).unwrap();
        let x = rand_matrix(6, 5, &mut RngState::new(3));
        let (train, _) = forward(&net, &x, &mut RngState::new(4)).unwrap();
        net.set_mode(Mode::Infer);
        let (infer, _) = forward(&net, &x, &mut RngState::new(4)).unwrap();
        assert_eq!(train, infer);
        assert_eq!(net.predict(&x).unwrap(), infer);
    }

    #[test]
    fn inverted_dropout_scaling() {
        let arch = Architecture::new(3)
            .layer(2000, Activation::Relu, 0.0)
            .layer(1, Activation::Linear, 0.25);
        let net = NetworkParams::init(&arch, &mut RngState::new(5)).unwrap();
        let (_, cache) = forward(&net, &Matrix::filled(4, 3, 1.0), &mut RngState::new(6)).unwrap();
        let mask = cache.masks()[0].as_ref().unwrap();
        assert!(mask.as_slice().iter().all(|&m| m == 0.0 || m == 1.0 / 0.75));
        let dropped = mask.as_slice().iter().filter(|&&m| m == 0.0).count() as f64 / mask.len() as f64;
        assert!((dropped - 0.25).abs() < 0.02);
    }

    #[test]
    fn rejects_bad_input_and_architecture() {
        let arch = Architecture::new(3).layer(2, Activation::Softmax, 0.0);
        let net = NetworkParams::init(&arch, &mut RngState::new(0)).unwrap();
        assert!(matches!(
            forward(&net, &Matrix::zeros(1, 4), &mut RngState::new(0)),
            Err(Error::Shape(_))
        ));
        let bad = Architecture::new(3)
            .layer(2, Activation::Softmax, 0.0)
            .layer(2, Activation::Softmax, 0.0);
        assert!(NetworkParams::init(&bad, &mut RngState::new(0)).is_err());
        let bad_drop = Architecture::new(3)
            .layer(2, Activation::Relu, 0.0)
            .layer(2, Activation::Softmax, 1.0);
        assert!(NetworkParams::init(&bad_drop, &mut RngState::new(0)).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let arch = Architecture::new(5)
            .layer(3, Activation::Sigmoid, 0.0)
            .layer(2, Activation::Softmax, 0.0);
        let net = NetworkParams::init(&arch, &mut RngState::new(7)).unwrap();
        let x = rand_matrix(4, 5, &mut RngState::new(8));
        let (_, cache) = forward(&net, &x, &mut RngState::new(0)).unwrap();
        let bp = backward(&net, &cache, &Matrix::zeros(4, 2), true).unwrap();
        assert!(bp.grads.is_zero());
        assert!(bp.input_grad.unwrap().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_layer_weight_grad_closed_form() {
        let arch = Architecture::new(4).layer(3, Activation::Linear, 0.0);
        let net = NetworkParams::init(&arch, &mut RngState::new(9)).unwrap();
        let mut rng = RngState::new(10);
        let x = rand_matrix(5, 4, &mut rng);
        let d_out = rand_matrix(5, 3, &mut rng);
        let (_, cache) = forward(&net, &x, &mut RngState::new(0)).unwrap();
        let bp = backward(&net, &cache, &d_out, false).unwrap();
        assert_eq!(bp.grads.weights[0], x.transpose().matmul(&d_out).unwrap());
        assert!(bp.input_grad.is_none());
    }

    #[test]
    fn stale_cache_is_contract_error() {
        let arch = Architecture::new(2).layer(2, Activation::Softmax, 0.0);
        let mut net = NetworkParams::init(&arch, &mut RngState::new(0)).unwrap();
        let (_, cache) = forward(&net, &Matrix::zeros(1, 2), &mut RngState::new(0)).unwrap();
        let p = net.params_flat();
        net.set_params_flat(&p).unwrap();
        assert!(matches!(
            backward(&net, &cache, &Matrix::zeros(1, 2), false),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn softmax_rows_sum_to_one_and_shift_invariant() {
        let mut rng = RngState::new(12);
        for _ in 0..100 {
            let z = rand_matrix(3, 4, &mut rng).scale(10.0);
            let c = rng.next_normal() * 50.0;
            let mut a = z.clone();
            let mut b = z.map(|v| v + c);
            softmax_rows(&mut a);
            softmax_rows(&mut b);
            for r in 0..3 {
                assert!((a.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    /// Central differences of `loss(params)` against the analytic gradient.
    fn max_rel_error(
        net: &NetworkParams,
        analytic: &[f64],
        loss: impl Fn(&NetworkParams) -> f64,
    ) -> f64 {
        let eps = 1e-6;
        let base = net.params_flat();
        let mut worst: f64 = 0.0;
        for k in 0..base.len() {
            let mut p = net.clone();
            let mut v = base.clone();
            v[k] += eps;
            p.set_params_flat(&v).unwrap();
            let up = loss(&p);
            v[k] -= 2.0 * eps;
            p.set_params_flat(&v).unwrap();
            let down = loss(&p);
            let numeric = (up - down) / (2.0 * eps);
            let denom = numeric.abs().max(analytic[k].abs()).max(1e-7);
            worst = worst.max((numeric - analytic[k]).abs() / denom);
        }
        worst
    }

    #[test]
    fn finite_differences_through_every_activation_and_dropout() {
        let mut rng = RngState::new(13);
        let arch = Architecture::new(5)
            .layer(4, Activation::Sigmoid, 0.0)
            .layer(4, Activation::Relu, 0.3)
            .layer(3, Activation::Linear, 0.2)
            .layer(2, Activation::Softmax, 0.0);
        let net = NetworkParams::init(&arch, &mut rng).unwrap();
        let x = rand_matrix(6, 5, &mut rng);
        let y = one_hot(&[0, 1, 1, 0, 1, 0], 2);
        let mask_seed = RngState::new(99);
        let loss = |n: &NetworkParams| {
            let (p, _) = forward(n, &x, &mut mask_seed.clone()).unwrap();
            cross_entropy(&p, &y, 1.3).unwrap().0
        };
        let (p, cache) = forward(&net, &x, &mut mask_seed.clone()).unwrap();
        let (_, dlogits) = cross_entropy(&p, &y, 1.3).unwrap();
        let bp = backward(&net, &cache, &dlogits, false).unwrap();
        let err = max_rel_error(&net, &bp.grads.flat(), loss);
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn input_gradient_by_finite_differences() {
        let mut rng = RngState::new(14);
        let arch = Architecture::new(3)
            .layer(4, Activation::Sigmoid, 0.0)
            .layer(2, Activation::Linear, 0.0);
        let net = NetworkParams::init(&arch, &mut rng).unwrap();
        let x = rand_matrix(2, 3, &mut rng);
        let w = rand_matrix(2, 2, &mut rng);
        let objective = |x: &Matrix| {
            let y = net.predict(x).unwrap();
            y.as_slice().iter().zip(w.as_slice()).map(|(a, b)| a * b).sum::<f64>()
        };
        let (_, cache) = forward(&net, &x, &mut RngState::new(0)).unwrap();
        let g = backward(&net, &cache, &w, true).unwrap().input_grad.unwrap();
        for k in 0..x.len() {
            let mut xp = x.clone();
            xp.as_mut_slice()[k] += 1e-6;
            let mut xm = x.clone();
            xm.as_mut_slice()[k] -= 1e-6;
            let numeric = (objective(&xp) - objective(&xm)) / 2e-6;
            assert!((numeric - g.as_slice()[k]).abs() < 1e-7);
        }
    }
}
