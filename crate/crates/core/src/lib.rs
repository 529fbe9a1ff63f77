//! Adversarial domain adaptation for frame-level cutting-sound detection.
//!
//! The crate is layered bottom-up:
//!
//! * [`numcore`]: dense matrices, a counter-based RNG and a radix-2 FFT.
//! * [`features`]: WAV decoding, centered STFT framing, dB features and the five
//!   intensity transforms (`idx`, `stanx`, `logx`, `sigmoidx`, `gammax`).
//! * [`dataset`]: interval labels, seeded splits, batching and synthetic two-domain data.
//! * [`nn`]: dense layers with analytic gradients, fused softmax cross-entropy, Adam and checkpoints.
//! * [`adversarial`]: the FARADAy and DIRAC compositions of private/shared generators,
//!   discriminator and classifier, with their losses and gradient routing.
//! * [`train`]: vanilla baselines (BSM, BMM, BFM), the adversarial trainers, evaluation and grids.
//! * [`app`]: the experiment configuration and the commands behind the `domainshift` binary.

pub mod adversarial;
pub mod app;
pub mod dataset;
mod error;
pub mod features;
pub mod nn;
pub mod numcore;
pub mod train;

pub use error::{Error, Result};
