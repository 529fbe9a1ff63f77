//! Shuffled mini-batches.
//!
//! Epoch `e` visits the samples in the order of a permutation drawn from
//! `RngState::new(seed + e)`. A non-cycling stream ends after one epoch and keeps the
//! final short batch. A cycling stream never ends: batches are always full and run
//! across epoch boundaries, so position `p` of the stream is sample
//! `perm_{p / n}[p % n]`.

use crate::dataset::DatasetView;
use crate::numcore::{Matrix, RngState};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct BatchStream {
    indices: Vec<usize>,
    batch_size: usize,
    seed: u64,
    cycle: bool,
    epoch: u64,
    order: Vec<usize>,
    cursor: usize,
}

impl BatchStream {
    pub fn new(indices: Vec<usize>, batch_size: usize, seed: u64, cycle: bool) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        let mut s = BatchStream {
            indices,
            batch_size,
            seed,
            cycle,
            epoch: 0,
            order: Vec::new(),
            cursor: 0,
        };
        s.shuffle_for(0);
        Ok(s)
    }

    fn shuffle_for(&mut self, epoch: u64) {
        self.epoch = epoch;
        self.order = self.indices.clone();
        RngState::new(self.seed.wrapping_add(epoch)).shuffle(&mut self.order);
        self.cursor = 0;
    }

    /// Restarts a stream at the beginning of `epoch`.
    pub fn start_epoch(&mut self, epoch: u64) {
        self.shuffle_for(epoch);
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// Batches per epoch for the non-cycling policy: `⌈n / batch_size⌉`.
    pub fn batches_per_epoch(&self) -> usize {
        self.indices.len().div_ceil(self.batch_size)
    }

    pub fn next_indices(&mut self) -> Option<Vec<usize>> {
        let n = self.order.len();
        if n == 0 {
            return None;
        }
        if !self.cycle {
            if self.cursor >= n {
                return None;
            }
            let end = (self.cursor + self.batch_size).min(n);
            let batch = self.order[self.cursor..end].to_vec();
            self.cursor = end;
            return Some(batch);
        }
        let mut batch = Vec::with_capacity(self.batch_size);
        while batch.len() < self.batch_size {
            if self.cursor == n {
                self.shuffle_for(self.epoch + 1);
            }
            let take = (self.batch_size - batch.len()).min(n - self.cursor);
            batch.extend_from_slice(&self.order[self.cursor..self.cursor + take]);
            self.cursor += take;
        }
        Some(batch)
    }
}

/// One mini-batch: feature rows and their labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub x: Matrix,
    pub labels: Vec<u8>,
    pub indices: Vec<usize>,
}

/// Iterator of feature/label batches over a view.
pub struct Batches<'a> {
    view: &'a DatasetView<'a>,
    stream: BatchStream,
}

impl<'a> Batches<'a> {
    pub fn stream(&mut self) -> &mut BatchStream {
        &mut self.stream
    }
}

impl Iterator for Batches<'_> {
    type Item = Batch;

    fn next(&mut self) -> Option<Batch> {
        let positions = self.stream.next_indices()?;
        let data = self.view.dataset();
        let indices: Vec<usize> = positions.iter().map(|&p| self.view.indices()[p]).collect();
        Some(Batch {
            x: data.features().select_rows(&indices),
            labels: indices.iter().map(|&i| data.labels()[i]).collect(),
            indices,
        })
    }
}

/// Batches over `view`. Shuffles within the view; yielded `indices` refer to the
/// underlying dataset.
pub fn batches<'a>(view: &'a DatasetView<'a>, batch_size: usize, seed: u64, cycle: bool) -> Result<Batches<'a>> {
    Ok(Batches {
        view,
        stream: BatchStream::new((0..view.len()).collect(), batch_size, seed, cycle)?,
    })
}
