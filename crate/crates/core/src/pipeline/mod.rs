//! End-to-end workflows from labelled EMG epochs to synergy reports.

mod extract;
mod report;
mod synth;
mod tensorize;

pub use extract::{
    compare_methods, extract_constd, extract_nmf_benchmark, extract_parafac, extract_tucker,
    shuffle_validation,
    shuffle_validation_with, MethodComparison, PipelineConfig, ShuffleValidation,
};
pub use report::{
    FitMetrics, LabeledSynergy, Method, RepetitionLabel, RepetitionVaf, SynergyLabel,
    SynergyReport, TaskSynergies,
};
pub use synth::{generate_synthetic, ActivationShape, GroundTruth, Noise, PlantedSynergy, SynthSpec};
pub use tensorize::{resample, tensorize, Tensorized};

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// One repetition of one task: `samples × channels`, non-negative envelopes.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    pub task_id: u32,
    pub repetition_id: u32,
    pub samples: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordingSet {
    epochs: Vec<Epoch>,
    sample_rate: f64,
    channel_count: usize,
}

impl RecordingSet {
    pub fn new(epochs: Vec<Epoch>, sample_rate: f64) -> Result<Self> {
        let first = epochs
            .first()
            .ok_or_else(|| Error::arg("a recording set needs at least one epoch"))?;
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::arg("sample rate must be positive"));
        }
        let channel_count = first.samples.cols();
        if channel_count == 0 {
            return Err(Error::arg("epochs need at least one channel"));
        }
        let mut seen = BTreeSet::new();
        for e in &epochs {
            let id = (e.task_id, e.repetition_id);
            if e.samples.cols() != channel_count {
                return Err(Error::arg(format!(
                    "task {} repetition {} has {} channels, expected {channel_count}",
                    id.0,
                    id.1,
                    e.samples.cols()
                )));
            }
            if e.samples.rows() == 0 {
                return Err(Error::arg(format!("task {} repetition {} is empty", id.0, id.1)));
            }
            if !seen.insert(id) {
                return Err(Error::arg(format!("duplicate task {} repetition {}", id.0, id.1)));
            }
            if let Some(v) = e.samples.data().iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
                return Err(Error::arg(format!(
                    "task {} repetition {} contains {v}; envelopes must be finite and non-negative",
                    id.0, id.1
                )));
            }
        }
        Ok(Self {
            epochs,
            sample_rate,
            channel_count,
        })
    }

    pub fn epochs(&self) -> &[Epoch] {
        &self.epochs
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn channel_count(&self) -> usize {
        self.channel_count
    }

    /// Distinct task ids in increasing order.
    pub fn task_ids(&self) -> Vec<u32> {
        let set: BTreeSet<u32> = self.epochs.iter().map(|e| e.task_id).collect();
        set.into_iter().collect()
    }

    /// Epochs of one task ordered by repetition id.
    pub fn task_epochs(&self, task: u32) -> Vec<&Epoch> {
        let mut v: Vec<&Epoch> = self.epochs.iter().filter(|e| e.task_id == task).collect();
        v.sort_by_key(|e| e.repetition_id);
        v
    }

    /// Common repetition count; errors when tasks differ.
    pub fn reps_per_task(&self) -> Result<usize> {
        let tasks = self.task_ids();
        let counts: Vec<usize> = tasks.iter().map(|&t| self.task_epochs(t).len()).collect();
        if counts.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::arg(format!(
                "tasks {tasks:?} have unequal repetition counts {counts:?}"
            )));
        }
        Ok(counts[0])
    }

    pub fn max_epoch_len(&self) -> usize {
        self.epochs.iter().map(|e| e.samples.rows()).max().unwrap_or(0)
    }
}
