//! Minimal RIFF/WAVE reader and writer (PCM16 and IEEE float32).

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::{Error, Result};

const FORMAT_PCM: u16 = 1;
const FORMAT_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleFormat {
    Pcm16,
    Float32,
}

/// Decoded audio, averaged to mono.
#[derive(Clone, Debug, PartialEq)]
pub struct Audio {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

pub fn load_wav(path: impl AsRef<Path>) -> Result<Audio> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_wav(&bytes).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

fn truncated(what: &str) -> Error {
    Error::io(
        "<wav>",
        io::Error::new(io::ErrorKind::UnexpectedEof, format!("truncated {what}")),
    )
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

pub fn decode_wav(bytes: &[u8]) -> Result<Audio> {
    if bytes.len() < 12 {
        return Err(truncated("RIFF header"));
    }
    if &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::Format("not a RIFF/WAVE file".into()));
    }
    let mut fmt: Option<(SampleFormat, u16, u32)> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body = pos + 8;
        if id == b"fmt " {
            if size < 16 || body + size > bytes.len() {
                return Err(truncated("fmt chunk"));
            }
            let mut tag = u16_at(bytes, body);
            let channels = u16_at(bytes, body + 2);
            let rate = u32_at(bytes, body + 4);
            let bits = u16_at(bytes, body + 14);
            if tag == FORMAT_EXTENSIBLE {
                if size < 40 {
                    return Err(Error::Format("short WAVE_FORMAT_EXTENSIBLE header".into()));
                }
                tag = u16_at(bytes, body + 24);
            }
            let format = match (tag, bits) {
                (FORMAT_PCM, 16) => SampleFormat::Pcm16,
                (FORMAT_FLOAT, 32) => SampleFormat::Float32,
                _ => {
                    return Err(Error::Format(format!(
                        "unsupported codec: format tag {tag}, {bits} bits per sample"
                    )))
                }
            };
            if channels == 0 {
                return Err(Error::Format("zero channels".into()));
            }
            fmt = Some((format, channels, rate));
        } else if id == b"data" {
            let (format, channels, sample_rate) =
                fmt.ok_or_else(|| Error::Format("data chunk before fmt chunk".into()))?;
            if body + size > bytes.len() {
                return Err(truncated("data chunk"));
            }
            let data = &bytes[body..body + size];
            let width = match format {
                SampleFormat::Pcm16 => 2,
                SampleFormat::Float32 => 4,
            };
            let frame_bytes = width * channels as usize;
            if data.len() % frame_bytes != 0 {
                return Err(truncated("sample frame"));
            }
            let samples = data
                .chunks_exact(frame_bytes)
                .map(|frame| {
                    let sum: f64 = frame
                        .chunks_exact(width)
                        .map(|s| match format {
                            SampleFormat::Pcm16 => {
                                i16::from_le_bytes([s[0], s[1]]) as f64 / 32768.0
                            }
                            SampleFormat::Float32 => {
                                f32::from_le_bytes([s[0], s[1], s[2], s[3]]) as f64
                            }
                        })
                        .sum();
                    sum / channels as f64
                })
                .collect();
            return Ok(Audio {
                samples,
                sample_rate,
            });
        }
        // Chunks are padded to even length.
        pos = body + size + (size & 1);
    }
    if fmt.is_none() {
        Err(truncated("file: no fmt chunk"))
    } else {
        Err(truncated("file: no data chunk"))
    }
}

/// Encodes interleaved samples (`channels` per frame) as a WAV byte stream.
pub fn encode_wav(
    interleaved: &[f64],
    channels: u16,
    sample_rate: u32,
    format: SampleFormat,
) -> Vec<u8> {
    let (tag, width) = match format {
        SampleFormat::Pcm16 => (FORMAT_PCM, 2u16),
        SampleFormat::Float32 => (FORMAT_FLOAT, 4u16),
    };
    let data_len = interleaved.len() * width as usize;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&tag.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    let block = channels * width;
    out.extend_from_slice(&(sample_rate * block as u32).to_le_bytes());
    out.extend_from_slice(&block.to_le_bytes());
    out.extend_from_slice(&(width * 8).to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in interleaved {
        match format {
            SampleFormat::Pcm16 => {
                let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                out.extend_from_slice(&v.to_le_bytes());
            }
            SampleFormat::Float32 => out.extend_from_slice(&(s as f32).to_le_bytes()),
        }
    }
    out
}

pub fn write_wav(
    path: impl AsRef<Path>,
    interleaved: &[f64],
    channels: u16,
    sample_rate: u32,
    format: SampleFormat,
) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_wav(interleaved, channels, sample_rate, format);
    fs::File::create(path)
        .and_then(|mut f| f.write_all(&bytes))
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn silence_decodes_to_zeros() {
        let bytes = encode_wav(&vec![0.0; 48_000], 1, 48_000, SampleFormat::Pcm16);
        let a = decode_wav(&bytes).unwrap();
        assert_eq!(a.sample_rate, 48_000);
        assert_eq!(a.samples.len(), 48_000);
        assert!(a.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn full_scale_pcm16_scaling() {
        let bytes = encode_wav(&[32767.0 / 32768.0; 10], 1, 8000, SampleFormat::Pcm16);
        let a = decode_wav(&bytes).unwrap();
        assert!(a.samples.iter().all(|&s| s == 32767.0 / 32768.0));
    }

    #[test]
    fn opposite_stereo_channels_cancel() {
        let interleaved: Vec<f64> = (0..200)
            .map(|i| if i % 2 == 0 { 0.25 } else { -0.25 })
            .collect();
        for fmt in [SampleFormat::Pcm16, SampleFormat::Float32] {
            let a = decode_wav(&encode_wav(&interleaved, 2, 48_000, fmt)).unwrap();
            assert_eq!(a.samples.len(), 100);
            assert!(a.samples.iter().all(|&s| s == 0.0));
        }
    }

    #[test]
    fn float32_roundtrip() {
        let x = [0.5, -0.125, 1.0, -1.0];
        let a = decode_wav(&encode_wav(&x, 1, 44_100, SampleFormat::Float32)).unwrap();
        assert_eq!(a.samples, x.to_vec());
    }

    #[test]
    fn truncated_data_is_io_error() {
        let bytes = encode_wav(&[0.1; 100], 1, 48_000, SampleFormat::Pcm16);
        let err = decode_wav(&bytes[..bytes.len() - 11]).unwrap_err();
        assert!(matches!(err, Error::Io { .. }), "{err}");
        assert!(matches!(decode_wav(&bytes[..6]), Err(Error::Io { .. })));
    }

    #[test]
    fn unsupported_codec_is_format_error() {
        let mut bytes = encode_wav(&[0.1; 10], 1, 48_000, SampleFormat::Pcm16);
        // Patch bits-per-sample to 24.
        bytes[34] = 24;
        assert!(matches!(decode_wav(&bytes), Err(Error::Format(_))));
        assert!(matches!(decode_wav(b"RIFX\0\0\0\0WAVE"), Err(Error::Format(_))));
    }
}
