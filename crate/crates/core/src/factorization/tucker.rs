use crate::error::Result;
use crate::linalg::pinv;
use crate::tensor::{
    explained_variance, mode_n_product, reconstruct_tucker, unfold, CoreTensor, Matrix, Mode,
    Tensor3,
};

use super::{
    best_of_restarts, controlled_averaging, Convergence, initial_factor, solve_factor, validate_ranks, ConstraintSpec,
    FitConfig, Warnings,
};

#[derive(Debug, Clone, PartialEq)]
pub struct TuckerModel {
    pub core: CoreTensor,
    /// Temporal `B1`, spatial `B2`, repetition `B3`.
    pub factors: [Matrix; 3],
    /// Explained variance in percent.
    pub fit: f64,
    pub iters: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
    /// Explained variance after each iteration.
    pub trace: Vec<f64>,
}

impl TuckerModel {
    pub fn factor(&self, mode: Mode) -> &Matrix {
        &self.factors[mode.index()]
    }

    pub fn reconstruct(&self) -> Result<Tensor3> {
        reconstruct_tucker(&self.core, [&self.factors[0], &self.factors[1], &self.factors[2]])
    }
}

/// Tucker decomposition by alternating least squares.
///
/// Each iteration updates the three factor matrices in turn (each the exact
/// least-squares solution given the others and the core), then the free core
/// entries, then applies controlled averaging to flagged modes. Non-negative
/// modes take the clamped least-squares solution refined by a few HALS sweeps.
/// On return the spatial columns have unit norm; the scale goes into the core,
/// or into the paired repetition column when the core is frozen.
pub fn tucker_als(
    x: &Tensor3,
    ranks: [usize; 3],
    cons: &ConstraintSpec,
    cfg: &FitConfig,
) -> Result<TuckerModel> {
    cfg.validate()?;
    validate_ranks(x.dims(), ranks)?;
    cons.validate(x.dims(), ranks)?;
    for mode in Mode::ALL {
        if cons.mode(mode).controlled_averaging && cfg.averaging_window > x.dim(mode) {
            return Err(crate::Error::arg(format!(
                "averaging window {} exceeds the {} entries of mode {}",
                cfg.averaging_window,
                x.dim(mode),
                mode.index() + 1
            )));
        }
    }
    let total = x.frobenius_norm();
    if total == 0.0 {
        return Err(crate::Error::Degenerate("tensor is identically zero".into()));
    }
    best_of_restarts(cfg.restarts, |r| fit_once(x, ranks, cons, cfg, r), |m| m.fit)
}

fn fit_once(
    x: &Tensor3,
    ranks: [usize; 3],
    cons: &ConstraintSpec,
    cfg: &FitConfig,
    restart: usize,
) -> Result<TuckerModel> {
    let mut rng = cfg.rng(restart);
    let mut warnings = Warnings::default();
    let mut factors: [Matrix; 3] = Mode::ALL
        .map(|mode| initial_factor(x, mode, ranks[mode.index()], cons.mode(mode), cfg, &mut rng));

    let mut core = match &cons.core {
        Some(c) => c.clone(),
        None => CoreTensor::free(Tensor3::zeros(ranks)?),
    };
    if !core.is_fully_fixed() {
        update_core(x, &mut core, &factors, cons.core_nonneg, &mut warnings)?;
    }

    let mut trace = Vec::new();
    let mut stop = Convergence::new(cfg.tol);
    let mut converged = false;
    for _ in 0..cfg.max_iters {
        for mode in Mode::ALL {
            let nonneg = cons.mode(mode).nonneg;
            factors[mode.index()] = update_factor(x, &core, &factors, mode, nonneg, &mut warnings)?;
        }
        if !core.is_fully_fixed() {
            update_core(x, &mut core, &factors, cons.core_nonneg, &mut warnings)?;
        }
        for mode in Mode::ALL {
            if cons.mode(mode).controlled_averaging {
                factors[mode.index()] =
                    controlled_averaging(&factors[mode.index()], cfg.averaging_window)?;
            }
        }
        let xhat = reconstruct_tucker(&core, [&factors[0], &factors[1], &factors[2]])?;
        let ev = explained_variance(x, &xhat)?;
        trace.push(ev);
        if stop.settled(ev) {
            converged = true;
            break;
        }
    }

    let mut model = TuckerModel {
        core,
        fit: *trace.last().expect("max_iters >= 1"),
        iters: trace.len(),
        factors,
        converged,
        warnings: warnings.into_vec(),
        trace,
    };
    normalize_spatial(&mut model);
    Ok(model)
}

/// Least-squares update of the factor for `mode` with the core and the other
/// two factors held fixed: `B_n = X(n)·Z · (ZᵀZ)⁺` with
/// `Z = (B_c ⊗ B_b)·G(n)ᵀ`, evaluated without forming the Kronecker product.
/// Non-negative modes solve the same normal equations under the constraint.
fn update_factor(
    x: &Tensor3,
    core: &CoreTensor,
    factors: &[Matrix; 3],
    mode: Mode,
    nonneg: bool,
    warnings: &mut Warnings,
) -> Result<Matrix> {
    let (a, b) = mode.others();
    let fa = &factors[a.index()];
    let fb = &factors[b.index()];
    let projected = mode_n_product(x, &fa.transpose(), a)?;
    let projected = mode_n_product(&projected, &fb.transpose(), b)?;
    let g_n = unfold(core.values(), mode);
    let rhs = unfold(&projected, mode).matmul(&g_n.transpose())?;

    let weighted = mode_n_product(core.values(), &fa.gram(), a)?;
    let weighted = mode_n_product(&weighted, &fb.gram(), b)?;
    let normal = unfold(&weighted, mode).matmul(&g_n.transpose())?;
    solve_factor(&rhs, &normal, nonneg, mode, warnings)
}

/// `G = X ×1 B1⁺ ×2 B2⁺ ×3 B3⁺`, written only into the free core entries.
fn update_core(
    x: &Tensor3,
    core: &mut CoreTensor,
    factors: &[Matrix; 3],
    nonneg: bool,
    warnings: &mut Warnings,
) -> Result<()> {
    let mut g = x.clone();
    for mode in Mode::ALL {
        let (inv, deficient) = pinv(&factors[mode.index()]);
        if deficient {
            warnings.push(
                "core",
                "rank-deficient factor in core update; solved by pseudo-inverse".into(),
            );
        }
        g = mode_n_product(&g, &inv, mode)?;
    }
    core.update_free(&g);
    if nonneg {
        core.clamp_free_nonneg();
    }
    Ok(())
}

/// Rescales spatial columns to unit norm without changing the model.
fn normalize_spatial(model: &mut TuckerModel) {
    let spatial = Mode::Spatial.index();
    let repetition = Mode::Repetition.index();
    let free_core = !model.core.has_fixed_entries();
    let paired = !free_core && spatial_repetition_diagonal(&model.core);
    if !free_core && !paired {
        return;
    }
    for j in 0..model.factors[spatial].cols() {
        let norm = model.factors[spatial].column_norm(j);
        if norm == 0.0 {
            continue;
        }
        model.factors[spatial].scale_column(j, 1.0 / norm);
        if free_core {
            model.core.scale_slice(Mode::Spatial, j, norm);
        } else {
            model.factors[repetition].scale_column(j, norm);
        }
    }
}

/// True when every non-zero core entry `g(i, j, k)` has `j == k`, so spatial
/// column `j` interacts only with repetition column `j`.
fn spatial_repetition_diagonal(core: &CoreTensor) -> bool {
    let [j1, j2, j3] = core.dims();
    if j2 != j3 {
        return false;
    }
    let g = core.values();
    (0..j3).all(|k| (0..j2).all(|j| j == k || (0..j1).all(|i| g.get(i, j, k) == 0.0)))
}
