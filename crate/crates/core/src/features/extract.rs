use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::numcore::{FftPlan, Matrix, Window};
use crate::{Error, Result};

/// Power floor applied before taking logarithms.
pub const POWER_FLOOR: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DbReference {
    /// 0 dB is the largest frame-bin power in the file; values are clipped at `db_floor`.
    MaxPower,
    /// 0 dB is a power of 1.0; no clipping.
    Unity,
}

impl DbReference {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "max_power" => Ok(DbReference::MaxPower),
            "unity" => Ok(DbReference::Unity),
            other => Err(Error::Config(format!("unknown dB reference '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DbReference::MaxPower => "max_power",
            DbReference::Unity => "unity",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub sample_rate: u32,
    pub n_fft: usize,
    pub hop: usize,
    pub window: Window,
    pub db_floor: f64,
    pub db_ref: DbReference,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            sample_rate: 48_000,
            n_fft: 2048,
            hop: 512,
            window: Window::Hann,
            db_floor: -80.0,
            db_ref: DbReference::MaxPower,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hop == 0 {
            return Err(Error::Config("hop must be positive".into()));
        }
        if self.n_fft < 2 || !self.n_fft.is_power_of_two() {
            return Err(Error::Config(format!(
                "n_fft must be a power of two, got {}",
                self.n_fft
            )));
        }
        if !(self.db_floor < 0.0) {
            return Err(Error::Config(format!(
                "db_floor must be negative, got {}",
                self.db_floor
            )));
        }
        if self.sample_rate == 0 {
            return Err(Error::Config("sample_rate must be positive".into()));
        }
        Ok(())
    }

    pub fn bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    /// Center time of frame `i` in seconds.
    #[inline]
    pub fn frame_time(&self, i: usize) -> f64 {
        i as f64 * self.hop as f64 / self.sample_rate as f64
    }
}

/// Number of centered frames for a signal of `n_samples`: `1 + ⌊n_samples / hop⌋`.
pub fn frame_count(n_samples: usize, cfg: &FeatureConfig) -> usize {
    1 + n_samples / cfg.hop
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameFeatureSet {
    /// `n_frames × (1 + n_fft/2)` dB values.
    pub features: Matrix,
    pub frame_times: Vec<f64>,
    pub source_file: Option<PathBuf>,
    pub config: FeatureConfig,
}

impl FrameFeatureSet {
    pub fn n_frames(&self) -> usize {
        self.features.rows()
    }
}

/// Maps any integer position onto `0..n` by mirror reflection about the end
/// samples (the end samples themselves are not repeated).
fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Per-frame power spectra of the centered, reflect-padded signal.
pub fn power_frames(samples: &[f64], cfg: &FeatureConfig) -> Result<Matrix> {
    cfg.validate()?;
    let plan = FftPlan::new(cfg.n_fft, cfg.window)?;
    let n_frames = frame_count(samples.len(), cfg);
    let bins = cfg.bins();
    let half = (cfg.n_fft / 2) as isize;
    let mut power = Matrix::zeros(n_frames, bins);
    let mut frame = vec![0.0; cfg.n_fft];
    for f in 0..n_frames {
        if !samples.is_empty() {
            let start = (f * cfg.hop) as isize - half;
            for (j, slot) in frame.iter_mut().enumerate() {
                let pos = start + j as isize;
                *slot = if pos >= 0 && (pos as usize) < samples.len() {
                    samples[pos as usize]
                } else {
                    samples[reflect_index(pos, samples.len())]
                };
            }
        }
        plan.power_into(&frame, power.row_mut(f))?;
    }
    Ok(power)
}

/// Converts power spectra to dB according to `cfg.db_ref` and `cfg.db_floor`.
pub fn power_to_db(power: &Matrix, cfg: &FeatureConfig) -> Matrix {
    match cfg.db_ref {
        DbReference::Unity => power.map(|p| 10.0 * p.max(POWER_FLOOR).log10()),
        DbReference::MaxPower => {
            let reference = power.max();
            if !(reference > POWER_FLOOR) {
                return Matrix::filled(power.rows(), power.cols(), cfg.db_floor);
            }
            let floor = cfg.db_floor;
            power.map(|p| (10.0 * (p.max(POWER_FLOOR) / reference).log10()).max(floor))
        }
    }
}

pub fn extract_features(samples: &[f64], cfg: &FeatureConfig) -> Result<FrameFeatureSet> {
    let power = power_frames(samples, cfg)?;
    let features = power_to_db(&power, cfg);
    let frame_times = (0..features.rows()).map(|i| cfg.frame_time(i)).collect();
    Ok(FrameFeatureSet {
        features,
        frame_times,
        source_file: None,
        config: cfg.clone(),
    })
}
