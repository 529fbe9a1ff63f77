//! Frame predictions to cut intervals.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::dataset::Interval;
use crate::{Error, Result};

/// Merges runs of 1s into intervals.
///
/// A run over frames `i..=j` becomes `[t_i, t_{j+1})`, with frame `k` centered at
/// `frame_time(k)`. Intervals shorter than `min_duration_s` are dropped. With no
/// filtering, labelling the frame centers with the result reproduces `predictions`.
pub fn merge_intervals(predictions: &[u8], frame_time: impl Fn(usize) -> f64, min_duration_s: f64) -> Vec<Interval> {
    let mut out = Vec::new();
    let mut start = None;
    for k in 0..=predictions.len() {
        let on = predictions.get(k).is_some_and(|&p| p == 1);
        match (on, start) {
            (true, None) => start = Some(k),
            (false, Some(i)) => {
                let iv = Interval::new(frame_time(i), frame_time(k));
                if iv.end_s - iv.start_s >= min_duration_s {
                    out.push(iv);
                }
                start = None;
            }
            _ => {}
        }
    }
    out
}

/// Whole-file prediction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimelinePrediction {
    pub audio: PathBuf,
    pub checkpoint_id: String,
    pub frame_times: Vec<f64>,
    /// Raw per-frame model output.
    pub predictions: Vec<u8>,
    /// Per-frame labels implied by `intervals` (equal to `predictions` without filtering).
    pub smoothed: Vec<u8>,
    pub intervals: Vec<Interval>,
    pub truth: Option<Vec<u8>>,
    /// Accuracy of `predictions` against `truth`.
    pub accuracy: Option<f64>,
    /// Accuracy of `smoothed` against `truth`.
    pub smoothed_accuracy: Option<f64>,
}

impl TimelinePrediction {
    /// `frame_time,truth,prediction` rows; `truth` is empty without labels.
    pub fn plot_csv(&self) -> String {
        let mut out = String::from("frame_time,truth,prediction\n");
        for (k, t) in self.frame_times.iter().enumerate() {
            let truth = self.truth.as_ref().map(|v| v[k].to_string()).unwrap_or_default();
            out.push_str(&format!("{t:?},{truth},{}\n", self.smoothed[k]));
        }
        out
    }

    /// Intervals in label-CSV form for `file`.
    pub fn intervals_csv(&self, file: &str) -> String {
        let mut out = String::from("file,start_s,end_s\n");
        for iv in &self.intervals {
            out.push_str(&format!("{file},{:?},{:?}\n", iv.start_s, iv.end_s));
        }
        out
    }
}

pub fn accuracy(truth: &[u8], predicted: &[u8]) -> Result<f64> {
    if truth.len() != predicted.len() || truth.is_empty() {
        return Err(Error::Data(format!(
            "cannot score {} predictions against {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    let hits = truth.iter().zip(predicted).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Stable 64-bit FNV-1a digest, used to identify checkpoint files.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}
