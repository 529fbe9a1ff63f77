use serde::{Deserialize, Serialize};

use crate::nn::{GradBundle, NetworkParams};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn new(lr: f64, beta1: f64) -> Self {
        AdamConfig {
            lr,
            beta1,
            ..AdamConfig::default()
        }
    }
}

/// Adam moment estimates for one network.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub config: AdamConfig,
    m: GradBundle,
    v: GradBundle,
    t: u64,
    frozen: Vec<bool>,
}

impl AdamState {
    pub fn new(net: &NetworkParams, config: AdamConfig) -> Self {
        AdamState {
            config,
            m: GradBundle::zeros_like(net),
            v: GradBundle::zeros_like(net),
            t: 0,
            frozen: vec![false; net.layers().len()],
        }
    }

    pub fn step(&self) -> u64 {
        self.t
    }

    /// Excludes a layer from future updates.
    pub fn freeze(&mut self, layer: usize) {
        self.frozen[layer] = true;
    }

    pub fn is_frozen(&self, layer: usize) -> bool {
        self.frozen[layer]
    }
}

fn update(p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], c: &AdamConfig, bc1: f64, bc2: f64) {
    for i in 0..p.len() {
        m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
        v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        p[i] -= c.lr * m_hat / (v_hat.sqrt() + c.epsilon);
    }
}

/// One bias-corrected Adam step, in place.
pub fn adam_apply(net: &mut NetworkParams, grads: &GradBundle, state: &mut AdamState) -> Result<()> {
    grads.check_congruent(net)?;
    state.t += 1;
    let c = state.config;
    let bc1 = 1.0 - c.beta1.powi(state.t as i32);
    let bc2 = 1.0 - c.beta2.powi(state.t as i32);
    let frozen = state.frozen.clone();
    for (i, layer) in net.layers_mut().iter_mut().enumerate() {
        if frozen[i] {
            continue;
        }
        update(
            layer.weights.as_mut_slice(),
            grads.weights[i].as_slice(),
            state.m.weights[i].as_mut_slice(),
            state.v.weights[i].as_mut_slice(),
            &c,
            bc1,
            bc2,
        );
        update(
            &mut layer.bias,
            &grads.biases[i],
            &mut state.m.biases[i],
            &mut state.v.biases[i],
            &c,
            bc1,
            bc2,
        );
    }
    Ok(())
}
