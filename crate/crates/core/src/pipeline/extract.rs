use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    identify_shared_nmf, match_synergies, pearson, reference_repetition, unit, CorrelationMatrix,
    DEFAULT_SHARED_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::factorization::{
    build_constd_spec, constrained_tucker, nmf, parafac_als, tucker_als, ConstraintSpec, FitConfig,
    TuckerModel,
};
use crate::tensor::{Mode, Tensor3};

use super::report::NamedCorrelation;
use super::{
    tensorize, FitMetrics, LabeledSynergy, Method, RecordingSet, RepetitionLabel, RepetitionVaf,
    SynergyLabel, SynergyReport, TaskSynergies,
};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Solver settings for the tensor models.
    pub fit: FitConfig,
    /// Solver settings for the per-repetition NMF.
    pub nmf: FitConfig,
    /// Samples per epoch after resampling; `None` uses the longest epoch.
    pub epoch_len: Option<usize>,
    pub shared_threshold: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            fit: FitConfig::constd(),
            nmf: FitConfig {
                max_iters: 1000,
                restarts: 1,
                ..FitConfig::default()
            },
            epoch_len: None,
            shared_threshold: DEFAULT_SHARED_THRESHOLD,
        }
    }
}

impl PipelineConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.fit.seed = seed;
        self.nmf.seed = seed;
        self
    }

    fn epoch_len(&self, rs: &RecordingSet) -> usize {
        self.epoch_len.unwrap_or_else(|| rs.max_epoch_len())
    }
}

fn check_constd_tasks(rs: &RecordingSet, n_dofs: usize) -> Result<(Vec<u32>, usize)> {
    let tasks = rs.task_ids();
    if tasks.len() != 2 * n_dofs {
        return Err(Error::arg(format!(
            "{n_dofs} DoF(s) need {} tasks, found {} ({tasks:?})",
            2 * n_dofs,
            tasks.len()
        )));
    }
    Ok((tasks, rs.reps_per_task()?))
}

/// Tensorizes the recording set and fits the constrained Tucker model. Spatial
/// components come out as one task-specific synergy per task followed by the
/// shared synergy.
pub fn extract_constd(rs: &RecordingSet, n_dofs: usize, cfg: &PipelineConfig) -> Result<SynergyReport> {
    let (tasks, reps) = check_constd_tasks(rs, n_dofs)?;
    let t = tensorize(rs, cfg.epoch_len(rs))?;
    let start = Instant::now();
    let model = constrained_tucker(&t.tensor, n_dofs, reps, &cfg.fit)?;
    let runtime = start.elapsed().as_secs_f64();
    Ok(constd_report(&model, &tasks, t.labels, cfg.fit.seed, runtime))
}

fn constd_report(
    model: &TuckerModel,
    tasks: &[u32],
    labels: Vec<RepetitionLabel>,
    seed: u64,
    runtime: f64,
) -> SynergyReport {
    let spatial = model.factor(Mode::Spatial);
    let shared_col = spatial.cols() - 1;
    let synergies = (0..spatial.cols())
        .map(|j| {
            let (label, dof) = if j == shared_col {
                (SynergyLabel::Shared, None)
            } else {
                (SynergyLabel::TaskSpecific { task: tasks[j] }, Some(j / 2 + 1))
            };
            LabeledSynergy {
                label,
                dof,
                vector: spatial.column(j),
            }
        })
        .collect();
    SynergyReport {
        method: Method::Constd,
        seed,
        synergies,
        temporal: model.factor(Mode::Temporal).columns(),
        repetition: Some(model.factor(Mode::Repetition).columns()),
        repetition_labels: labels,
        fit: FitMetrics {
            explained_variance: Some(model.fit),
            corcondia: None,
            vaf_per_repetition: Vec::new(),
            iters: model.iters,
            converged: model.converged,
        },
        correlations: Vec::new(),
        task_synergies: Vec::new(),
        warnings: model.warnings.clone(),
        runtime_seconds: runtime,
    }
}

/// Non-negative PARAFAC of the tensorized recordings. Components are
/// unlabelled; component weights are folded into the repetition mode.
pub fn extract_parafac(rs: &RecordingSet, rank: usize, cfg: &PipelineConfig) -> Result<SynergyReport> {
    let t = tensorize(rs, cfg.epoch_len(rs))?;
    let start = Instant::now();
    let model = parafac_als(&t.tensor, rank, &ConstraintSpec::nonneg(), &cfg.fit)?;
    let runtime = start.elapsed().as_secs_f64();
    let mut repetition = model.factor(Mode::Repetition).clone();
    for (c, l) in model.lambda.iter().enumerate() {
        repetition.scale_column(c, *l);
    }
    Ok(SynergyReport {
        method: Method::Parafac,
        seed: cfg.fit.seed,
        synergies: components(&model.factor(Mode::Spatial).columns()),
        temporal: model.factor(Mode::Temporal).columns(),
        repetition: Some(repetition.columns()),
        repetition_labels: t.labels,
        fit: FitMetrics {
            explained_variance: Some(model.fit),
            corcondia: model.corcondia,
            vaf_per_repetition: Vec::new(),
            iters: model.iters,
            converged: model.converged,
        },
        correlations: Vec::new(),
        task_synergies: Vec::new(),
        warnings: model.warnings,
        runtime_seconds: runtime,
    })
}

/// Unconstrained non-negative Tucker model with the given
/// `[temporal, spatial, repetition]` ranks.
pub fn extract_tucker(rs: &RecordingSet, ranks: [usize; 3], cfg: &PipelineConfig) -> Result<SynergyReport> {
    let t = tensorize(rs, cfg.epoch_len(rs))?;
    let start = Instant::now();
    let model = tucker_als(&t.tensor, ranks, &ConstraintSpec::nonneg(), &cfg.fit)?;
    let runtime = start.elapsed().as_secs_f64();
    Ok(SynergyReport {
        method: Method::Tucker,
        seed: cfg.fit.seed,
        synergies: components(&model.factor(Mode::Spatial).columns()),
        temporal: model.factor(Mode::Temporal).columns(),
        repetition: Some(model.factor(Mode::Repetition).columns()),
        repetition_labels: t.labels,
        fit: FitMetrics {
            explained_variance: Some(model.fit),
            corcondia: None,
            vaf_per_repetition: Vec::new(),
            iters: model.iters,
            converged: model.converged,
        },
        correlations: Vec::new(),
        task_synergies: Vec::new(),
        warnings: model.warnings,
        runtime_seconds: runtime,
    })
}

fn components(columns: &[Vec<f64>]) -> Vec<LabeledSynergy> {
    columns
        .iter()
        .enumerate()
        .map(|(index, v)| LabeledSynergy {
            label: SynergyLabel::Component { index },
            dof: None,
            vector: v.clone(),
        })
        .collect()
}

/// NMF benchmark: per-repetition NMF, alignment to each task's reference
/// repetition, averaging, then correlation-based shared-synergy labelling for
/// each consecutive pair of tasks.
pub fn extract_nmf_benchmark(
    rs: &RecordingSet,
    synergies_per_task: usize,
    cfg: &PipelineConfig,
) -> Result<SynergyReport> {
    let tasks = rs.task_ids();
    if tasks.len() % 2 != 0 {
        return Err(Error::arg(format!(
            "tasks are paired into DoFs; found an odd number ({tasks:?})"
        )));
    }
    let t = tensorize(rs, cfg.epoch_len(rs))?;
    let start = Instant::now();
    let mut vafs = Vec::new();
    let mut task_means = Vec::new();
    let mut converged = true;
    let mut iters = 0;
    for &task in &tasks {
        let epochs = rs.task_epochs(task);
        if epochs.len() < 2 {
            return Err(Error::arg(format!("task {task} needs at least two repetitions")));
        }
        let mut spatial_sets = Vec::new();
        let mut temporal_sets = Vec::new();
        for e in &epochs {
            let k = t.slice_of(task, e.repetition_id).expect("epoch was tensorized");
            let model = nmf(&t.tensor.frontal_slice(k), synergies_per_task, &cfg.nmf)?;
            converged &= model.converged;
            iters = iters.max(model.iters);
            vafs.push(RepetitionVaf {
                task,
                repetition: e.repetition_id,
                vaf: model.vaf,
            });
            spatial_sets.push(model.spatial.columns());
            temporal_sets.push(model.temporal.columns());
        }
        let reference = reference_repetition(&spatial_sets)?;
        let mut spatial_sum = vec![vec![0.0; rs.channel_count()]; synergies_per_task];
        let mut temporal_sum = vec![vec![0.0; t.tensor.dims()[0]]; synergies_per_task];
        for (set, temporal) in spatial_sets.iter().zip(&temporal_sets) {
            let m = match_synergies(set, &spatial_sets[reference])?;
            for p in &m.pairs {
                for (acc, v) in spatial_sum[p.b].iter_mut().zip(unit(&set[p.a])) {
                    *acc += v;
                }
                for (acc, v) in temporal_sum[p.b].iter_mut().zip(&temporal[p.a]) {
                    *acc += v;
                }
            }
        }
        let n = spatial_sets.len() as f64;
        task_means.push(TaskSynergies {
            task,
            reference_repetition: epochs[reference].repetition_id,
            synergies: spatial_sum.iter().map(|s| unit(s)).collect(),
            temporal: temporal_sum
                .into_iter()
                .map(|s| s.into_iter().map(|v| v / n).collect())
                .collect(),
            shared_index: None,
        });
    }

    let mut synergies = Vec::new();
    let mut correlations = Vec::new();
    for (d, pair) in task_means.chunks_mut(2).enumerate() {
        let dof = d + 1;
        let id = identify_shared_nmf(&pair[0].synergies, &pair[1].synergies, cfg.shared_threshold)?;
        pair[0].shared_index = Some(id.shared_a);
        pair[1].shared_index = Some(id.shared_b);
        synergies.push(LabeledSynergy {
            label: SynergyLabel::Shared,
            dof: Some(dof),
            vector: id.shared.clone(),
        });
        for (ts, specific) in [(&pair[0], &id.task_a_specific), (&pair[1], &id.task_b_specific)] {
            for &i in specific {
                synergies.push(LabeledSynergy {
                    label: SynergyLabel::TaskSpecific { task: ts.task },
                    dof: Some(dof),
                    vector: ts.synergies[i].clone(),
                });
            }
        }
        let mut cross = id.cross;
        cross.row_labels = (1..=pair[0].synergies.len())
            .map(|i| format!("task{}/syn{i}", pair[0].task))
            .collect();
        cross.col_labels = (1..=pair[1].synergies.len())
            .map(|i| format!("task{}/syn{i}", pair[1].task))
            .collect();
        correlations.push(NamedCorrelation {
            name: format!("dof{dof}_cross_task"),
            matrix: cross,
        });
    }

    let temporal = task_means.iter().flat_map(|t| t.temporal.clone()).collect();
    Ok(SynergyReport {
        method: Method::Nmf,
        seed: cfg.nmf.seed,
        synergies,
        temporal,
        repetition: None,
        repetition_labels: t.labels,
        fit: FitMetrics {
            explained_variance: None,
            corcondia: None,
            vaf_per_repetition: vafs,
            iters,
            converged,
        },
        correlations,
        task_synergies: task_means,
        warnings: Vec::new(),
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Both extractors on the same data, with their synergies cross-correlated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodComparison {
    pub constd: SynergyReport,
    pub nmf: SynergyReport,
    /// Rows: each task's mean NMF synergies; columns: constrained Tucker synergies.
    pub full: CorrelationMatrix,
    /// Rows: tasks; each entry is the best correlation of the column synergy
    /// with that task's NMF synergies.
    pub by_task: CorrelationMatrix,
}

pub fn compare_methods(rs: &RecordingSet, n_dofs: usize, cfg: &PipelineConfig) -> Result<MethodComparison> {
    let constd = extract_constd(rs, n_dofs, cfg)?;
    let nmf = extract_nmf_benchmark(rs, 2, cfg)?;
    let col_labels: Vec<String> = constd.synergies.iter().map(|s| s.label.short()).collect();
    let cols = constd.vectors();

    let mut rows = Vec::new();
    let mut row_labels = Vec::new();
    for ts in &nmf.task_synergies {
        for (i, s) in ts.synergies.iter().enumerate() {
            rows.push(s.clone());
            let tag = if ts.shared_index == Some(i) { " (shared)" } else { "" };
            row_labels.push(format!("task{}/syn{}{tag}", ts.task, i + 1));
        }
    }
    let full = CorrelationMatrix::between(&rows, row_labels, &cols, col_labels.clone())?;

    let mut values = Vec::new();
    let mut offset = 0;
    for ts in &nmf.task_synergies {
        let n = ts.synergies.len();
        values.push(
            (0..cols.len())
                .map(|c| {
                    (offset..offset + n)
                        .map(|r| full.get(r, c))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect(),
        );
        offset += n;
    }
    let by_task = CorrelationMatrix {
        row_labels: nmf.task_synergies.iter().map(|t| format!("task{}", t.task)).collect(),
        col_labels,
        values,
    };
    Ok(MethodComparison {
        constd,
        nmf,
        full,
        by_task,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShuffleValidation {
    pub intact_fit: f64,
    /// Slice order used for each shuffle.
    pub permutations: Vec<Vec<usize>>,
    /// Correlation of each shuffled fit's shared synergy with the intact one.
    pub shared_r: Vec<f64>,
    pub mean_shared_r: f64,
    /// Mean matched correlation of the task-specific synergies, per shuffle.
    pub task_specific_r: Vec<f64>,
    pub mean_task_specific_r: f64,
}

/// Refits the constrained model on `n_shuffles` seeded shuffles of the
/// repetition mode and checks that the shared synergy survives.
pub fn shuffle_validation(
    rs: &RecordingSet,
    n_dofs: usize,
    n_shuffles: usize,
    cfg: &PipelineConfig,
) -> Result<ShuffleValidation> {
    if n_shuffles == 0 {
        return Err(Error::arg("n_shuffles must be >= 1"));
    }
    let (_, reps) = check_constd_tasks(rs, n_dofs)?;
    let t = tensorize(rs, cfg.epoch_len(rs))?;
    let n = t.tensor.dims()[2];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.fit.seed);
    rng.set_stream(SHUFFLE_STREAM);
    let identity: Vec<usize> = (0..n).collect();
    let permutations: Vec<Vec<usize>> = (0..n_shuffles)
        .map(|_| loop {
            let mut p = identity.clone();
            p.shuffle(&mut rng);
            if p != identity || n == 1 {
                break p;
            }
        })
        .collect();
    shuffle_validation_with(&t.tensor, n_dofs, reps, &permutations, &cfg.fit)
}

const SHUFFLE_STREAM: u64 = 0x5348_5546;

/// Shuffle validation with explicit slice orders.
pub fn shuffle_validation_with(
    x: &Tensor3,
    n_dofs: usize,
    reps_per_task: usize,
    permutations: &[Vec<usize>],
    cfg: &FitConfig,
) -> Result<ShuffleValidation> {
    let layout = build_constd_spec(n_dofs, reps_per_task)?;
    let shared = layout.shared_column();
    let intact = constrained_tucker(x, n_dofs, reps_per_task, cfg)?;
    let intact_spatial = intact.factor(Mode::Spatial);
    let intact_specific: Vec<Vec<f64>> = (0..shared).map(|j| intact_spatial.column(j)).collect();

    let mut shared_r = Vec::new();
    let mut task_specific_r = Vec::new();
    for perm in permutations {
        let shuffled = x.permute_slices(perm)?;
        let model = constrained_tucker(&shuffled, n_dofs, reps_per_task, cfg)?;
        let spatial = model.factor(Mode::Spatial);
        shared_r.push(lenient_pearson(&spatial.column(shared), &intact_spatial.column(shared))?);
        let specific: Vec<Vec<f64>> = (0..shared).map(|j| spatial.column(j)).collect();
        task_specific_r.push(match_synergies(&intact_specific, &specific)?.mean_r);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    Ok(ShuffleValidation {
        intact_fit: intact.fit,
        permutations: permutations.to_vec(),
        mean_shared_r: mean(&shared_r),
        mean_task_specific_r: mean(&task_specific_r),
        shared_r,
        task_specific_r,
    })
}

fn lenient_pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    match pearson(a, b) {
        Err(Error::Degenerate(_)) => Ok(0.0),
        other => other,
    }
}
