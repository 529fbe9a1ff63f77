//! Numeric substrate: matrices, deterministic random streams and the FFT.

mod fft;
mod matrix;
mod rng;

pub use fft::{fft_real, ComplexSpectrum, FftPlan, Window};
pub use matrix::Matrix;
pub use rng::{rng_uniform, RngState};

/// Logistic function, evaluated without overflow for large `|x|`.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
