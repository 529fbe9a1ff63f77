//! Audio decoding, framed dB spectra and feature transforms.

mod cache;
mod extract;
mod transform;
mod wav;

pub use cache::{decode_cache, encode_cache, read_cache, write_cache, CACHE_MAGIC};
pub use extract::{
    extract_features, frame_count, power_frames, power_to_db, DbReference, FeatureConfig,
    FrameFeatureSet, POWER_FLOOR,
};
pub use transform::{
    apply_transform, FittedTransform, TransformKind, TransformSpec, DEFAULT_GAMMA,
};
pub use wav::{decode_wav, encode_wav, load_wav, write_wav, Audio, SampleFormat};

use crate::{Error, Result};

/// Loads a WAV file and extracts its features, refusing sample-rate mismatches.
pub fn extract_file(path: impl AsRef<std::path::Path>, cfg: &FeatureConfig) -> Result<FrameFeatureSet> {
    let path = path.as_ref();
    let audio = load_wav(path)?;
    if audio.sample_rate != cfg.sample_rate {
        return Err(Error::Config(format!(
            "{} is sampled at {} Hz but the configuration expects {} Hz",
            path.display(),
            audio.sample_rate,
            cfg.sample_rate
        )));
    }
    let mut set = extract_features(&audio.samples, cfg)?;
    set.source_file = Some(path.to_path_buf());
    Ok(set)
}
