use crate::nn::{Activation, Architecture, NetworkParams};
use crate::numcore::RngState;
use crate::Result;

/// `input → 512 ReLU → dropout 0.2 → 200 ReLU → dropout 0.2 → 2 softmax`.
pub fn vanilla_architecture(input_dim: usize) -> Architecture {
    Architecture::new(input_dim)
        .layer(512, Activation::Relu, 0.0)
        .layer(200, Activation::Relu, 0.2)
        .layer(2, Activation::Softmax, 0.2)
}

/// `input → 512 sigmoid → 2 softmax`.
pub fn probe_architecture(input_dim: usize) -> Architecture {
    Architecture::new(input_dim)
        .layer(512, Activation::Sigmoid, 0.0)
        .layer(2, Activation::Softmax, 0.0)
}

/// Baseline classifier on 1,025 spectral features.
pub fn build_vanilla(seed: u64) -> Result<NetworkParams> {
    NetworkParams::init(&vanilla_architecture(1025), &mut RngState::new(seed))
}

/// Single-hidden-layer probe on 1,025 spectral features.
pub fn build_probe(seed: u64) -> Result<NetworkParams> {
    NetworkParams::init(&probe_architecture(1025), &mut RngState::new(seed))
}
