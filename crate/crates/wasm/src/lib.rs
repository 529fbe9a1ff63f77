//! Browser bindings for three small, self-contained operations of `domainshift`:
//! evaluating an intensity transform over a range of dB values, computing the dB
//! spectrum of a pure tone, and sampling a two-dimensional synthetic domain pair.
//!
//! Each export is a thin wrapper over a plain Rust function so the logic can be
//! tested natively.

use domainshift::dataset::{synth_domains, Domain, SynthSpec};
use domainshift::features::{extract_features, FeatureConfig, FittedTransform, TransformKind, TransformSpec};
use domainshift::numcore::Matrix;
use domainshift::Result;
use wasm_bindgen::prelude::*;

/// Values of transform `kind` at each of `xs`, fitted with statistics `min`/`max`.
pub fn transform_values(kind: &str, gamma: f64, min: f64, max: f64, xs: &[f64]) -> Result<Vec<f64>> {
    let spec = TransformSpec {
        kind: TransformKind::parse(kind)?,
        gamma,
    };
    spec.validate()?;
    let fitted = FittedTransform { spec, min, max };
    let x = Matrix::from_vec(1, xs.len(), xs.to_vec())?;
    Ok(fitted.apply(&x)?.into_vec())
}

/// dB spectrum (`1 + n_fft/2` bins) of the middle frame of a unit sine at `freq_hz`.
pub fn tone_spectrum(freq_hz: f64, sample_rate: u32, n_fft: usize) -> Result<Vec<f64>> {
    let cfg = FeatureConfig {
        sample_rate,
        n_fft,
        hop: (n_fft / 4).max(1),
        ..FeatureConfig::default()
    };
    cfg.validate()?;
    let step = std::f64::consts::TAU * freq_hz / sample_rate as f64;
    let samples: Vec<f64> = (0..4 * n_fft).map(|i| (step * i as f64).sin()).collect();
    let set = extract_features(&samples, &cfg)?;
    Ok(set.features.row(set.n_frames() / 2).to_vec())
}

/// Flattened `[x, y, label, domain]` rows for `n` source then `n` target points
/// (`domain` is 0 for source, 1 for target).
pub fn synthetic_points(class_sep: f64, domain_shift: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    let spec = SynthSpec {
        dim: 2,
        latent_dim: 2,
        n_source: n,
        n_target: n,
        class_sep,
        domain_shift,
        seed,
        ..SynthSpec::default()
    };
    let domains = synth_domains(&spec)?;
    let mut out = Vec::with_capacity(8 * n);
    for ds in [&domains.source, &domains.target] {
        for i in 0..ds.len() {
            let row = ds.features().row(i);
            let domain = if ds.domains()[i] == Domain::Source { 0.0 } else { 1.0 };
            out.extend_from_slice(&[row[0], row[1], ds.labels()[i] as f64, domain]);
        }
    }
    Ok(out)
}

fn js(e: domainshift::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn transform_curve(kind: &str, gamma: f64, min: f64, max: f64, xs: &[f64]) -> std::result::Result<Vec<f64>, JsError> {
    transform_values(kind, gamma, min, max, xs).map_err(js)
}

#[wasm_bindgen]
pub fn tone_spectrum_db(freq_hz: f64, sample_rate: u32, n_fft: usize) -> std::result::Result<Vec<f64>, JsError> {
    tone_spectrum(freq_hz, sample_rate, n_fft).map_err(js)
}

#[wasm_bindgen]
pub fn synth_projection(class_sep: f64, domain_shift: f64, n: usize, seed: u64) -> std::result::Result<Vec<f64>, JsError> {
    synthetic_points(class_sep, domain_shift, n, seed).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_values_match_closed_forms() {
        let xs = [-80.0, -40.0, 0.0];
        let stanx = transform_values("stanx", 4.2, -80.0, 0.0, &xs).unwrap();
        assert_eq!(stanx, vec![0.0, 0.5, 1.0]);
        let gammax = transform_values("gammax", 4.2, -80.0, 0.0, &xs).unwrap();
        assert!((gammax[2] - 255.0).abs() < 1e-12);
        assert!((gammax[0] - 255.0 * (1.0f64 / 81.0).powf(4.2)).abs() < 1e-12);
        let sig = transform_values("sigmoidx", 4.2, -80.0, 0.0, &[-41.0]).unwrap();
        assert!((sig[0] - 127.5).abs() < 1e-12);
    }

    #[test]
    fn transform_values_reject_bad_input() {
        assert!(transform_values("cubex", 4.2, 0.0, 1.0, &[0.0]).is_err());
        assert!(transform_values("gammax", 0.0, 0.0, 1.0, &[0.0]).is_err());
        assert!(transform_values("logx", 4.2, -90.0, 0.0, &[-90.0]).is_err());
    }

    #[test]
    fn tone_spectrum_peaks_at_the_tone_bin() {
        let spec = tone_spectrum(1000.0, 8000, 256).unwrap();
        assert_eq!(spec.len(), 129);
        let peak = (0..spec.len()).max_by(|&a, &b| spec[a].total_cmp(&spec[b])).unwrap();
        assert_eq!(peak, 32);
        assert!(spec[peak] > -1.0 && spec[peak] <= 0.0);
        assert!(tone_spectrum(1000.0, 8000, 100).is_err());
    }

    #[test]
    fn synthetic_points_have_expected_layout() {
        let pts = synthetic_points(4.0, 3.0, 50, 7).unwrap();
        assert_eq!(pts.len(), 4 * 100);
        let rows: Vec<&[f64]> = pts.chunks(4).collect();
        assert!(rows[..50].iter().all(|r| r[3] == 0.0));
        assert!(rows[50..].iter().all(|r| r[3] == 1.0));
        assert_eq!(rows.iter().filter(|r| r[2] == 1.0).count(), 50);
        assert_eq!(pts, synthetic_points(4.0, 3.0, 50, 7).unwrap());
    }
}
