//! Ground-truth synthetic EMG envelopes built as linear mixtures of planted
//! non-negative synergies.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::diagnostics::unit;
use crate::error::{Error, Result};
use crate::tensor::Matrix;

use super::{Epoch, RecordingSet, SynergyLabel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    None,
    /// Half-normal noise `|N(0, σ²)|` with a fixed σ.
    Sigma(f64),
    /// Half-normal noise scaled per epoch to the given signal-to-noise ratio.
    SnrDb(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActivationShape {
    /// Raised-cosine bumps. Shared synergies peak `lag` (fraction of the
    /// epoch) before task-specific ones; `lag = 0` gives every synergy the
    /// same profile.
    Bumps { lag: f64 },
    /// Every synergy is active at a constant level.
    Constant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_channels: usize,
    pub n_samples: usize,
    pub n_dofs: usize,
    pub reps_per_task: usize,
    pub sample_rate: f64,
    /// Independent per-epoch gain noise: gains are scaled by `1 ± gain_jitter`.
    pub gain_jitter: f64,
    /// Slow gain trend over the repetitions of a task: each synergy drifts
    /// linearly from `1 - d` to `1 + d` with `|d|` in `[gain_drift/2, gain_drift]`.
    /// Within a task the shared and task-specific synergies drift in opposite
    /// directions, so their balance changes from one repetition to the next.
    pub gain_drift: f64,
    pub noise: Noise,
    /// Plant shared synergies (one per DoF, or one overall with
    /// `shared_across_dofs`).
    pub shared: bool,
    /// A single shared synergy active in every task, matching the 2-DoF
    /// constrained Tucker layout.
    pub shared_across_dofs: bool,
    /// Amplitude of shared synergies relative to task-specific ones.
    pub shared_gain: f64,
    /// Plant one task-specific synergy per task.
    pub task_specific: bool,
    pub activation: ActivationShape,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_channels: 10,
            n_samples: 500,
            n_dofs: 1,
            reps_per_task: 10,
            sample_rate: 100.0,
            gain_jitter: 0.05,
            gain_drift: 0.5,
            noise: Noise::SnrDb(20.0),
            shared: true,
            shared_across_dofs: false,
            shared_gain: 1.0,
            task_specific: true,
            activation: ActivationShape::Bumps { lag: 0.16 },
            seed: 0,
        }
    }
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        let planted = self.planted_count();
        if self.n_dofs == 0 || self.reps_per_task == 0 || self.n_samples < 2 {
            return Err(Error::arg("synthetic spec needs n_dofs, reps_per_task >= 1 and n_samples >= 2"));
        }
        if planted == 0 {
            return Err(Error::arg("at least one synergy kind must be planted"));
        }
        if self.n_channels < planted {
            return Err(Error::arg(format!(
                "{planted} planted synergies need at least as many channels (got {})",
                self.n_channels
            )));
        }
        if !(0.0..1.0).contains(&self.gain_jitter) || !(0.0..1.0).contains(&self.gain_drift) {
            return Err(Error::arg("gain jitter and drift must be in [0, 1)"));
        }
        if !(self.shared_gain > 0.0 && self.shared_gain.is_finite()) {
            return Err(Error::arg("shared gain must be positive"));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::arg("sample rate must be positive"));
        }
        match self.noise {
            Noise::Sigma(s) if !(s >= 0.0 && s.is_finite()) => {
                Err(Error::arg("noise sigma must be finite and >= 0"))
            }
            Noise::SnrDb(db) if !db.is_finite() => Err(Error::arg("SNR must be finite")),
            _ => Ok(()),
        }
    }

    fn planted_count(&self) -> usize {
        let shared = match (self.shared, self.shared_across_dofs) {
            (false, _) => 0,
            (true, true) => 1,
            (true, false) => self.n_dofs,
        };
        shared + 2 * self.n_dofs * usize::from(self.task_specific)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSynergy {
    pub label: SynergyLabel,
    /// 1-based; 0 for a shared synergy that spans all DoFs.
    pub dof: usize,
    /// Unit-norm, non-negative.
    pub vector: Vec<f64>,
    pub activation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub synergies: Vec<PlantedSynergy>,
    /// Measured SNR of each epoch in dB, in the recording set's epoch order;
    /// `None` for noiseless epochs.
    pub snr_db: Vec<Option<f64>>,
}

impl GroundTruth {
    /// The shared synergy active in a DoF (1-based).
    pub fn shared(&self, dof: usize) -> Option<&PlantedSynergy> {
        self.synergies
            .iter()
            .find(|s| (s.dof == dof || s.dof == 0) && s.label == SynergyLabel::Shared)
    }

    pub fn task_specific(&self, task: u32) -> Option<&PlantedSynergy> {
        self.synergies
            .iter()
            .find(|s| s.label == SynergyLabel::TaskSpecific { task })
    }
}

/// Task ids are `1..=2·n_dofs` (DoF `d` owns tasks `2d-1` and `2d`);
/// repetition ids are `1..=reps_per_task`. Each epoch is
/// `Σ_s activation_s(t) · gain_s · synergy_sᵀ` over the synergies active in
/// the task, plus half-normal noise.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<(RecordingSet, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let synergies = plant_synergies(spec, &mut rng);

    let mut epochs = Vec::new();
    let mut snr_db = Vec::new();
    for task in 1..=(2 * spec.n_dofs) as u32 {
        let dof = (task as usize + 1) / 2;
        let active: Vec<&PlantedSynergy> = synergies
            .iter()
            .filter(|s| match s.label {
                SynergyLabel::Shared => s.dof == dof || s.dof == 0,
                SynergyLabel::TaskSpecific { task: t } => t == task,
                SynergyLabel::Component { .. } => false,
            })
            .collect();
        let direction = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let drift: Vec<f64> = active
            .iter()
            .map(|s| {
                let sign = if s.label == SynergyLabel::Shared { direction } else { -direction };
                sign * spec.gain_drift * rng.gen_range(0.5..=1.0)
            })
            .collect();
        for rep in 1..=spec.reps_per_task as u32 {
            let progress = if spec.reps_per_task > 1 {
                2.0 * f64::from(rep - 1) / (spec.reps_per_task - 1) as f64 - 1.0
            } else {
                0.0
            };
            let mut samples = Matrix::zeros(spec.n_samples, spec.n_channels);
            for (s, d) in active.iter().zip(&drift) {
                let base = if s.label == SynergyLabel::Shared { spec.shared_gain } else { 1.0 };
                let gain = base * (1.0 + d * progress) * (1.0 + spec.gain_jitter * rng.gen_range(-1.0..=1.0));
                for (t, &a) in s.activation.iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    for (c, &w) in s.vector.iter().enumerate() {
                        samples[(t, c)] += gain * a * w;
                    }
                }
            }
            let power = mean_square(samples.data());
            let sigma = match spec.noise {
                Noise::None => 0.0,
                Noise::Sigma(s) => s,
                Noise::SnrDb(db) => (power / 10f64.powf(db / 10.0)).sqrt(),
            };
            if sigma > 0.0 {
                let normal = Normal::new(0.0, sigma).expect("sigma is finite and positive");
                let mut noise_power = 0.0;
                for v in samples.data_mut() {
                    let n: f64 = normal.sample(&mut rng);
                    let n = n.abs();
                    noise_power += n * n;
                    *v += n;
                }
                noise_power /= (spec.n_samples * spec.n_channels) as f64;
                snr_db.push(Some(10.0 * (power / noise_power).log10()));
            } else {
                snr_db.push(None);
            }
            epochs.push(Epoch {
                task_id: task,
                repetition_id: rep,
                samples,
            });
        }
    }
    let rs = RecordingSet::new(epochs, spec.sample_rate)?;
    Ok((rs, GroundTruth { synergies, snr_db }))
}

/// Every synergy gets its own anchor channel where the other planted
/// synergies are zero, which keeps the mixtures identifiable.
fn plant_synergies(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Vec<PlantedSynergy> {
    let mut labels = Vec::new();
    if spec.shared && spec.shared_across_dofs {
        labels.push((SynergyLabel::Shared, 0));
    }
    for dof in 1..=spec.n_dofs {
        if spec.shared && !spec.shared_across_dofs {
            labels.push((SynergyLabel::Shared, dof));
        }
        if spec.task_specific {
            for task in [2 * dof - 1, 2 * dof] {
                labels.push((SynergyLabel::TaskSpecific { task: task as u32 }, dof));
            }
        }
    }
    let mut channels: Vec<usize> = (0..spec.n_channels).collect();
    channels.shuffle(rng);
    let anchors = &channels[..labels.len()];

    labels
        .iter()
        .enumerate()
        .map(|(idx, &(label, dof))| {
            let mut v = vec![0.0; spec.n_channels];
            for (c, w) in v.iter_mut().enumerate() {
                if c == anchors[idx] {
                    *w = rng.gen_range(0.6..1.0);
                } else if !anchors.contains(&c) && rng.gen::<f64>() >= ZERO_WEIGHT_PROBABILITY {
                    *w = rng.gen::<f64>();
                }
            }
            let activation = activation_profile(spec, label);
            PlantedSynergy {
                label,
                dof,
                vector: unit(&v),
                activation,
            }
        })
        .collect()
}

/// Chance that a non-anchor channel has zero weight in a planted synergy.
const ZERO_WEIGHT_PROBABILITY: f64 = 0.45;

fn activation_profile(spec: &SynthSpec, label: SynergyLabel) -> Vec<f64> {
    let n = spec.n_samples;
    match spec.activation {
        ActivationShape::Constant => vec![1.0; n],
        ActivationShape::Bumps { lag } => {
            let center = match label {
                SynergyLabel::Shared => 0.5 - lag / 2.0,
                _ => 0.5 + lag / 2.0,
            };
            let half_width = 0.28;
            (0..n)
                .map(|t| {
                    let u = t as f64 / (n - 1) as f64;
                    let d = (u - center) / half_width;
                    if d.abs() < 1.0 {
                        0.5 * (1.0 + (std::f64::consts::PI * d).cos())
                    } else {
                        0.0
                    }
                })
                .collect()
        }
    }
}

fn mean_square(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64
}
