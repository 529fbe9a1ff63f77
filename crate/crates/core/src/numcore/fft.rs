//! Iterative radix-2 FFT for real frames.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Rectangular,
    /// Periodic Hann, `0.5 − 0.5·cos(2πn/N)`.
    Hann,
}

impl Window {
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
                .collect(),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rectangular" | "rect" => Ok(Window::Rectangular),
            "hann" => Ok(Window::Hann),
            other => Err(Error::Config(format!("unknown window '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Window::Rectangular => "rectangular",
            Window::Hann => "hann",
        }
    }
}

/// Non-negative-frequency half of a real signal's DFT: `1 + n_fft/2` bins.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSpectrum {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexSpectrum {
    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn magnitude(&self, k: usize) -> f64 {
        self.re[k].hypot(self.im[k])
    }

    /// `re² + im²` per bin.
    pub fn power(&self) -> Vec<f64> {
        self.re
            .iter()
            .zip(&self.im)
            .map(|(r, i)| r * r + i * i)
            .collect()
    }
}

/// Precomputed twiddles, window and bit-reversal table for one transform length.
#[derive(Clone, Debug)]
pub struct FftPlan {
    n: usize,
    window: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
    bitrev: Vec<usize>,
}

impl FftPlan {
    pub fn new(n: usize, window: Window) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Config(format!(
                "FFT length must be a power of two >= 2, got {n}"
            )));
        }
        let bits = n.trailing_zeros();
        let bitrev = (0..n)
            .map(|i| i.reverse_bits() >> (usize::BITS - bits))
            .collect();
        let (cos, sin) = (0..n / 2)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / n as f64;
                (a.cos(), a.sin())
            })
            .unzip();
        Ok(FftPlan {
            n,
            window: window.coefficients(n),
            cos,
            sin,
            bitrev,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bins(&self) -> usize {
        self.n / 2 + 1
    }

    pub fn transform(&self, frame: &[f64]) -> Result<ComplexSpectrum> {
        if frame.len() != self.n {
            return Err(Error::Shape(format!(
                "frame of {} samples for a {}-point FFT",
                frame.len(),
                self.n
            )));
        }
        let mut re = vec![0.0; self.n];
        let mut im = vec![0.0; self.n];
        for (i, &j) in self.bitrev.iter().enumerate() {
            re[j] = frame[i] * self.window[i];
        }
        self.butterflies(&mut re, &mut im);
        re.truncate(self.bins());
        im.truncate(self.bins());
        Ok(ComplexSpectrum { re, im })
    }

    /// Power spectrum of one frame written into `out` (length `bins()`).
    pub fn power_into(&self, frame: &[f64], out: &mut [f64]) -> Result<()> {
        let spec = self.transform(frame)?;
        for (o, (r, i)) in out.iter_mut().zip(spec.re.iter().zip(&spec.im)) {
            *o = r * r + i * i;
        }
        Ok(())
    }

    fn butterflies(&self, re: &mut [f64], im: &mut [f64]) {
        let n = self.n;
        let mut size = 2;
        while size <= n {
            let half = size / 2;
            let step = n / size;
            for start in (0..n).step_by(size) {
                for k in 0..half {
                    let (wr, wi) = (self.cos[k * step], self.sin[k * step]);
                    let u = start + k;
                    let v = u + half;
                    let tr = wr * re[v] - wi * im[v];
                    let ti = wr * im[v] + wi * re[v];
                    re[v] = re[u] - tr;
                    im[v] = im[u] - ti;
                    re[u] += tr;
                    im[u] += ti;
                }
            }
            size *= 2;
        }
    }
}

/// One-shot transform of a real frame; the frame length is the FFT length.
pub fn fft_real(frame: &[f64], window: Window) -> Result<ComplexSpectrum> {
    FftPlan::new(frame.len(), window)?.transform(frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::RngState;

    fn naive_dft(x: &[f64], w: &[f64]) -> ComplexSpectrum {
        let n = x.len();
        let mut re = vec![0.0; n / 2 + 1];
        let mut im = vec![0.0; n / 2 + 1];
        for k in 0..=n / 2 {
            for t in 0..n {
                let a = -2.0 * PI * ((k * t) % n) as f64 / n as f64;
                re[k] += w[t] * x[t] * a.cos();
                im[k] += w[t] * x[t] * a.sin();
            }
        }
        ComplexSpectrum { re, im }
    }

    #[test]
    fn zero_frame() {
        let s = fft_real(&vec![0.0; 2048], Window::Hann).unwrap();
        assert_eq!(s.len(), 1025);
        assert!(s.re.iter().chain(&s.im).all(|&v| v == 0.0));
    }

    #[test]
    fn pure_cosine_lands_in_one_bin() {
        let n = 2048;
        let x: Vec<f64> = (0..n)
            .map(|t| (2.0 * PI * 4.0 * t as f64 / n as f64).cos())
            .collect();
        let s = fft_real(&x, Window::Rectangular).unwrap();
        assert!((s.magnitude(4) - 1024.0).abs() < 1e-9);
        for k in (0..s.len()).filter(|&k| k != 4) {
            assert!(s.magnitude(k) < 1e-9, "bin {k}: {}", s.magnitude(k));
        }
    }

    #[test]
    fn matches_naive_dft_with_hann() {
        let mut rng = RngState::new(17);
        let x: Vec<f64> = (0..256).map(|_| rng.next_f64() * 2.0 - 1.0).collect();
        let fast = fft_real(&x, Window::Hann).unwrap();
        let slow = naive_dft(&x, &Window::Hann.coefficients(256));
        for k in 0..fast.len() {
            assert!((fast.re[k] - slow.re[k]).abs() < 1e-9);
            assert!((fast.im[k] - slow.im[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(matches!(
            fft_real(&[0.0; 1000], Window::Hann),
            Err(Error::Config(_))
        ));
        assert!(FftPlan::new(1, Window::Hann).is_err());
    }

    #[test]
    fn linearity() {
        let mut rng = RngState::new(23);
        let n = 512;
        let x: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
        let (a, b) = (1.7, -0.3);
        let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let plan = FftPlan::new(n, Window::Hann).unwrap();
        let (fx, fy, fc) = (
            plan.transform(&x).unwrap(),
            plan.transform(&y).unwrap(),
            plan.transform(&combo).unwrap(),
        );
        for k in 0..fc.len() {
            assert!((fc.re[k] - (a * fx.re[k] + b * fy.re[k])).abs() < 1e-9);
            assert!((fc.im[k] - (a * fx.im[k] + b * fy.im[k])).abs() < 1e-9);
        }
    }

    #[test]
    fn parseval_from_half_spectrum() {
        let mut rng = RngState::new(29);
        let n = 2048;
        let x: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
        let p = fft_real(&x, Window::Rectangular).unwrap().power();
        // DC and Nyquist appear once in the full spectrum, interior bins twice.
        let full: f64 = p[0] + p[n / 2] + 2.0 * p[1..n / 2].iter().sum::<f64>();
        let time: f64 = x.iter().map(|v| v * v).sum();
        assert!(((full / n as f64) - time).abs() / time < 1e-6);
    }
}
