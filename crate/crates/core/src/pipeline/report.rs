use serde::{Deserialize, Serialize};

use crate::diagnostics::CorrelationMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Nmf,
    Parafac,
    Tucker,
    Constd,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Nmf => "nmf",
            Method::Parafac => "parafac",
            Method::Tucker => "tucker",
            Method::Constd => "constd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SynergyLabel {
    Shared,
    TaskSpecific { task: u32 },
    /// Unlabelled component of an unconstrained model.
    Component { index: usize },
}

impl SynergyLabel {
    pub fn short(&self) -> String {
        match self {
            SynergyLabel::Shared => "shared".into(),
            SynergyLabel::TaskSpecific { task } => format!("task{task}"),
            SynergyLabel::Component { index } => format!("component{}", index + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSynergy {
    pub label: SynergyLabel,
    /// 1-based DoF the synergy belongs to; `None` when it spans all DoFs.
    pub dof: Option<usize>,
    /// Unit-norm channel weights.
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RepetitionLabel {
    pub task: u32,
    pub repetition: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepetitionVaf {
    pub task: u32,
    pub repetition: u32,
    pub vaf: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FitMetrics {
    pub explained_variance: Option<f64>,
    pub corcondia: Option<f64>,
    pub vaf_per_repetition: Vec<RepetitionVaf>,
    pub iters: usize,
    pub converged: bool,
}

/// NMF synergies of one task after alignment and averaging over repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSynergies {
    pub task: u32,
    pub reference_repetition: u32,
    /// Unit-norm mean synergies, in the reference repetition's order.
    pub synergies: Vec<Vec<f64>>,
    pub temporal: Vec<Vec<f64>>,
    /// Index into `synergies` of the one labelled shared, if any.
    pub shared_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedCorrelation {
    pub name: String,
    pub matrix: CorrelationMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynergyReport {
    pub method: Method,
    pub seed: u64,
    pub synergies: Vec<LabeledSynergy>,
    /// Temporal components, one vector per component.
    pub temporal: Vec<Vec<f64>>,
    /// Repetition-mode components (tensor methods only).
    pub repetition: Option<Vec<Vec<f64>>>,
    pub repetition_labels: Vec<RepetitionLabel>,
    pub fit: FitMetrics,
    pub correlations: Vec<NamedCorrelation>,
    pub task_synergies: Vec<TaskSynergies>,
    pub warnings: Vec<String>,
    /// Wall-clock fitting time. Not serialised, so reports stay byte-identical
    /// across runs.
    #[serde(skip)]
    pub runtime_seconds: f64,
}

impl SynergyReport {
    pub fn shared(&self) -> Vec<&LabeledSynergy> {
        self.synergies
            .iter()
            .filter(|s| s.label == SynergyLabel::Shared)
            .collect()
    }

    pub fn task_specific(&self, task: u32) -> Option<&LabeledSynergy> {
        self.synergies
            .iter()
            .find(|s| s.label == SynergyLabel::TaskSpecific { task })
    }

    pub fn vectors(&self) -> Vec<Vec<f64>> {
        self.synergies.iter().map(|s| s.vector.clone()).collect()
    }
}
