//! Cut-interval annotations and frame labelling.
//!
//! Label files are CSV with the exact header `file,start_s,end_s`; each row marks a
//! half-open cut interval `[start_s, end_s)` within the named audio file.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const LABEL_HEADER: [&str; 3] = ["file", "start_s", "end_s"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start_s: f64,
    pub end_s: f64,
}

impl Interval {
    pub fn new(start_s: f64, end_s: f64) -> Self {
        Interval { start_s, end_s }
    }

    fn validate(&self) -> Result<()> {
        if !(self.start_s >= 0.0) || !(self.end_s > self.start_s) || !self.end_s.is_finite() {
            return Err(Error::Validation(format!(
                "malformed interval [{}, {})",
                self.start_s, self.end_s
            )));
        }
        Ok(())
    }
}

/// Validates, sorts and merges overlapping or touching intervals.
pub fn normalize_intervals(intervals: &[Interval]) -> Result<Vec<Interval>> {
    for iv in intervals {
        iv.validate()?;
    }
    let mut sorted = intervals.to_vec();
    sorted.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
    let mut merged: Vec<Interval> = Vec::with_capacity(sorted.len());
    for iv in sorted {
        match merged.last_mut() {
            Some(last) if iv.start_s <= last.end_s => last.end_s = last.end_s.max(iv.end_s),
            _ => merged.push(iv),
        }
    }
    Ok(merged)
}

/// `label[i] = 1` iff `frame_times[i]` lies in some `[start, end)`.
pub fn label_frames(frame_times: &[f64], intervals: &[Interval]) -> Result<Vec<u8>> {
    if frame_times.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Validation("frame times must be sorted ascending".into()));
    }
    let merged = normalize_intervals(intervals)?;
    let mut labels = vec![0u8; frame_times.len()];
    let mut k = 0;
    for (label, &t) in labels.iter_mut().zip(frame_times) {
        while k < merged.len() && merged[k].end_s <= t {
            k += 1;
        }
        if k < merged.len() && merged[k].start_s <= t {
            *label = 1;
        }
    }
    Ok(labels)
}

/// Interval annotations for a set of audio files, keyed by file name.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IntervalLabelFile {
    pub files: BTreeMap<String, Vec<Interval>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelRow {
    file: String,
    start_s: f64,
    end_s: f64,
}

impl IntervalLabelFile {
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| Error::Format(format!("label CSV header: {e}")))?;
        if header.iter().collect::<Vec<_>>() != LABEL_HEADER {
            return Err(Error::Format(format!(
                "label CSV header must be 'file,start_s,end_s', found '{}'",
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut files: BTreeMap<String, Vec<Interval>> = BTreeMap::new();
        for (line, row) in reader.deserialize::<LabelRow>().enumerate() {
            let row = row.map_err(|e| Error::Format(format!("label CSV row {}: {e}", line + 2)))?;
            let iv = Interval::new(row.start_s, row.end_s);
            iv.validate()?;
            files.entry(row.file).or_default().push(iv);
        }
        for ivs in files.values_mut() {
            *ivs = normalize_intervals(ivs)?;
        }
        Ok(IntervalLabelFile { files })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("file,start_s,end_s\n");
        for (file, ivs) in &self.files {
            for iv in ivs {
                out.push_str(&format!("{file},{:?},{:?}\n", iv.start_s, iv.end_s));
            }
        }
        out
    }

    /// Intervals for `file`; unlisted files have none.
    pub fn intervals(&self, file: &str) -> &[Interval] {
        self.files.get(file).map_or(&[], Vec::as_slice)
    }
}
