use crate::error::{Error, Result};
use crate::tensor::{CoreTensor, Matrix, Tensor3};

use super::{tucker_als, ConstraintSpec, FitConfig, ModeConstraint, TuckerModel};

/// Centered moving average down each column. Near the edges the window is
/// truncated to the rows that exist.
pub fn controlled_averaging(m: &Matrix, k: usize) -> Result<Matrix> {
    let rows = m.rows();
    if k == 0 || k % 2 == 0 || k > rows {
        return Err(Error::arg(format!(
            "averaging window must be odd and between 1 and {rows} (got {k})"
        )));
    }
    let half = k / 2;
    let mut out = Matrix::zeros(rows, m.cols());
    for j in 0..m.cols() {
        for i in 0..rows {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(rows - 1);
            let sum: f64 = (lo..=hi).map(|r| m[(r, j)]).sum();
            out[(i, j)] = sum / (hi - lo + 1) as f64;
        }
    }
    Ok(out)
}

/// Component layout of a constrained Tucker model.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstdLayout {
    pub n_dofs: usize,
    pub reps_per_task: usize,
    /// `[temporal, spatial, repetition]` component counts.
    pub ranks: [usize; 3],
    pub constraints: ConstraintSpec,
}

impl ConstdLayout {
    pub fn n_tasks(&self) -> usize {
        2 * self.n_dofs
    }

    /// Spatial column holding the shared synergy (always the last one).
    pub fn shared_column(&self) -> usize {
        self.ranks[1] - 1
    }
}

/// Ranks, fixed core and repetition-mode initialisation for a 1- or 2-DoF
/// constrained Tucker model.
///
/// Spatial and repetition components are ordered task by task with the shared
/// component last. The core links temporal component `d` to the two
/// task-specific components of DoF `d` and to the shared component, with value
/// 1 and zero elsewhere. Task-specific repetition columns start at 1 on their
/// task's repetitions and 0 elsewhere; the shared column starts at 0.5.
pub fn build_constd_spec(n_dofs: usize, reps_per_task: usize) -> Result<ConstdLayout> {
    if !(1..=2).contains(&n_dofs) {
        return Err(Error::arg(format!(
            "constrained Tucker layouts exist for 1 or 2 DoFs (got {n_dofs})"
        )));
    }
    if reps_per_task == 0 {
        return Err(Error::arg("reps_per_task must be >= 1"));
    }
    let n_tasks = 2 * n_dofs;
    let n_components = n_tasks + 1;
    let ranks = [n_dofs, n_components, n_components];
    let shared = n_components - 1;

    let core = Tensor3::from_fn(ranks, |dof, j, k| {
        let linked = j == 2 * dof || j == 2 * dof + 1 || j == shared;
        if j == k && linked {
            1.0
        } else {
            0.0
        }
    })?;

    let n_reps = n_tasks * reps_per_task;
    let mut repetition = Matrix::zeros(n_reps, n_components);
    for rep in 0..n_reps {
        repetition[(rep, rep / reps_per_task)] = 1.0;
        repetition[(rep, shared)] = 0.5;
    }

    let nonneg = ModeConstraint {
        nonneg: true,
        ..ModeConstraint::default()
    };
    let constraints = ConstraintSpec {
        modes: [
            nonneg.clone(),
            nonneg,
            ModeConstraint {
                nonneg: false,
                fixed_init: Some(repetition),
                controlled_averaging: true,
            },
        ],
        core: Some(CoreTensor::fixed(core)),
        core_nonneg: false,
    };
    Ok(ConstdLayout {
        n_dofs,
        reps_per_task,
        ranks,
        constraints,
    })
}

/// Constrained Tucker decomposition of a tensor whose repetitions are ordered
/// task by task (`reps_per_task` consecutive slices per task).
pub fn constrained_tucker(
    x: &Tensor3,
    n_dofs: usize,
    reps_per_task: usize,
    cfg: &FitConfig,
) -> Result<TuckerModel> {
    let layout = build_constd_spec(n_dofs, reps_per_task)?;
    let expected = layout.n_tasks() * reps_per_task;
    if x.dims()[2] != expected {
        return Err(Error::arg(format!(
            "tensor has {} repetitions but {} tasks x {reps_per_task} repetitions = {expected}",
            x.dims()[2],
            layout.n_tasks()
        )));
    }
    tucker_als(x, layout.ranks, &layout.constraints, cfg)
}
