use crate::error::{Error, Result};
use crate::tensor::{Matrix, Tensor3};

use super::{RecordingSet, RepetitionLabel};

/// A stacked EMG tensor plus the `(task, repetition)` behind each mode-3 slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensorized {
    pub tensor: Tensor3,
    pub labels: Vec<RepetitionLabel>,
}

impl Tensorized {
    pub fn slice_of(&self, task: u32, repetition: u32) -> Option<usize> {
        self.labels
            .iter()
            .position(|l| l.task == task && l.repetition == repetition)
    }
}

/// Resamples every epoch to `epoch_len` rows and stacks them along mode 3,
/// ordered by `(task_id, repetition_id)`.
pub fn tensorize(rs: &RecordingSet, epoch_len: usize) -> Result<Tensorized> {
    if epoch_len < 2 {
        return Err(Error::arg("epoch length must be >= 2 samples"));
    }
    let mut epochs: Vec<_> = rs.epochs().iter().collect();
    epochs.sort_by_key(|e| (e.task_id, e.repetition_id));
    let slices: Vec<Matrix> = epochs.iter().map(|e| resample(&e.samples, epoch_len)).collect();
    let labels = epochs
        .iter()
        .map(|e| RepetitionLabel {
            task: e.task_id,
            repetition: e.repetition_id,
        })
        .collect();
    Ok(Tensorized {
        tensor: Tensor3::from_frontal_slices(&slices)?,
        labels,
    })
}

/// Linear-interpolation resampling of each column to `len` rows. The first
/// and last samples map onto the first and last output rows; an input that
/// already has `len` rows is copied unchanged.
pub fn resample(m: &Matrix, len: usize) -> Matrix {
    let n = m.rows();
    if n == len {
        return m.clone();
    }
    let mut out = Matrix::zeros(len, m.cols());
    for i in 0..len {
        if n == 1 || len == 1 {
            for c in 0..m.cols() {
                out[(i, c)] = m[(0, c)];
            }
            continue;
        }
        let pos = i as f64 * (n - 1) as f64 / (len - 1) as f64;
        let lo = (pos.floor() as usize).min(n - 1);
        let hi = (lo + 1).min(n - 1);
        let frac = pos - lo as f64;
        for c in 0..m.cols() {
            out[(i, c)] = m[(lo, c)] * (1.0 - frac) + m[(hi, c)] * frac;
        }
    }
    out
}
