//! Flat binary feature cache.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "DSF1"
//! 4       8     n_frames   (u64)
//! 12      8     n_bins     (u64)
//! 20      4     sample_rate (u32, Hz)
//! 24      4     hop        (u32, samples)
//! 28      8·n_frames·n_bins  features, row-major f64
//! ```

use std::fs;
use std::path::Path;

use crate::features::{FeatureConfig, FrameFeatureSet};
use crate::numcore::Matrix;
use crate::{Error, Result};

pub const CACHE_MAGIC: &[u8; 4] = b"DSF1";
const HEADER_LEN: usize = 28;

pub fn encode_cache(set: &FrameFeatureSet) -> Vec<u8> {
    let m = &set.features;
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * m.len());
    out.extend_from_slice(CACHE_MAGIC);
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    out.extend_from_slice(&set.config.sample_rate.to_le_bytes());
    out.extend_from_slice(&(set.config.hop as u32).to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decodes a cache. Settings not stored in the header (window, dB options) are
/// taken from `base`.
pub fn decode_cache(bytes: &[u8], base: &FeatureConfig) -> Result<FrameFeatureSet> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format("feature cache shorter than its header".into()));
    }
    if &bytes[0..4] != CACHE_MAGIC {
        return Err(Error::Format("bad feature cache magic".into()));
    }
    let u64_at = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
    let u32_at = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let n_frames = u64_at(4) as usize;
    let n_bins = u64_at(12) as usize;
    let sample_rate = u32_at(20);
    let hop = u32_at(24) as usize;
    let expected = n_frames
        .checked_mul(n_bins)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Format("feature cache dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "feature cache holds {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    if n_bins < 2 {
        return Err(Error::Format(format!("feature cache has {n_bins} bins")));
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let config = FeatureConfig {
        sample_rate,
        hop,
        n_fft: 2 * (n_bins - 1),
        ..base.clone()
    };
    config.validate().map_err(|e| Error::Format(format!("feature cache header: {e}")))?;
    let features = Matrix::from_vec(n_frames, n_bins, data)?;
    let frame_times = (0..n_frames).map(|i| config.frame_time(i)).collect();
    Ok(FrameFeatureSet {
        features,
        frame_times,
        source_file: None,
        config,
    })
}

pub fn write_cache(path: impl AsRef<Path>, set: &FrameFeatureSet) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_cache(set)).map_err(|e| Error::io(path, e))
}

pub fn read_cache(path: impl AsRef<Path>, base: &FeatureConfig) -> Result<FrameFeatureSet> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut set = decode_cache(&bytes, base)?;
    set.source_file = Some(path.to_path_buf());
    Ok(set)
}
