use crate::diagnostics::corcondia;
use crate::error::{Error, Result};
use crate::tensor::{explained_variance, khatri_rao, reconstruct_parafac, unfold, Matrix, Mode, Tensor3};

use super::{
    best_of_restarts, controlled_averaging, Convergence, initial_factor, solve_factor, validate_ranks, ConstraintSpec,
    FitConfig, Warnings,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ParafacModel {
    /// Component weights, sorted in decreasing order.
    pub lambda: Vec<f64>,
    /// Unit-norm factor columns for the temporal, spatial and repetition modes.
    pub factors: [Matrix; 3],
    pub fit: f64,
    pub iters: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
    pub trace: Vec<f64>,
    /// Core consistency of the fitted model, in percent.
    pub corcondia: Option<f64>,
}

impl ParafacModel {
    pub fn rank(&self) -> usize {
        self.lambda.len()
    }

    pub fn factor(&self, mode: Mode) -> &Matrix {
        &self.factors[mode.index()]
    }

    pub fn reconstruct(&self) -> Result<Tensor3> {
        reconstruct_parafac(&self.lambda, [&self.factors[0], &self.factors[1], &self.factors[2]])
    }
}

/// PARAFAC by alternating least squares.
///
/// The per-mode update solves the Khatri-Rao normal equations
/// `A_n = X(n)·(A_c ⊙ A_b) · [(A_bᵀA_b) ∘ (A_cᵀA_c)]⁺`. Core constraints are
/// not meaningful here and are rejected.
pub fn parafac_als(
    x: &Tensor3,
    rank: usize,
    cons: &ConstraintSpec,
    cfg: &FitConfig,
) -> Result<ParafacModel> {
    cfg.validate()?;
    if rank == 0 {
        return Err(Error::arg("PARAFAC rank must be >= 1"));
    }
    let ranks = [rank; 3];
    if cons.core.is_some() {
        return Err(Error::arg("PARAFAC does not accept a core constraint"));
    }
    cons.validate(x.dims(), ranks)?;
    if x.frobenius_norm() == 0.0 {
        return Err(Error::Degenerate("tensor is identically zero".into()));
    }
    let mut warnings_overdetermined = Vec::new();
    if validate_ranks(x.dims(), ranks).is_err() {
        warnings_overdetermined.push(format!(
            "rank {rank} exceeds a tensor dimension {:?}; the fit is not well posed",
            x.dims()
        ));
    }
    let unfoldings = Mode::ALL.map(|m| unfold(x, m));
    let mut model = best_of_restarts(
        cfg.restarts,
        |r| fit_once(x, &unfoldings, rank, cons, cfg, r),
        |m| m.fit,
    )?;
    model.warnings.extend(warnings_overdetermined);
    Ok(model)
}

fn fit_once(
    x: &Tensor3,
    unfoldings: &[Matrix; 3],
    rank: usize,
    cons: &ConstraintSpec,
    cfg: &FitConfig,
    restart: usize,
) -> Result<ParafacModel> {
    let mut rng = cfg.rng(restart);
    let mut warnings = Warnings::default();
    let mut factors: [Matrix; 3] =
        Mode::ALL.map(|mode| initial_factor(x, mode, rank, cons.mode(mode), cfg, &mut rng));
    let ones = vec![1.0; rank];

    let mut trace = Vec::new();
    let mut stop = Convergence::new(cfg.tol);
    let mut converged = false;
    for _ in 0..cfg.max_iters {
        for mode in Mode::ALL {
            let (a, b) = mode.others();
            let kr = khatri_rao(&factors[b.index()], &factors[a.index()])?;
            let rhs = unfoldings[mode.index()].matmul(&kr)?;
            let normal = factors[a.index()].gram().hadamard(&factors[b.index()].gram())?;
            let mut updated = solve_factor(&rhs, &normal, cons.mode(mode).nonneg, mode, &mut warnings)?;
            if cons.mode(mode).controlled_averaging {
                updated = controlled_averaging(&updated, cfg.averaging_window)?;
            }
            factors[mode.index()] = updated;
        }
        // Keep the scale in the last mode so the first two stay well conditioned.
        for c in 0..rank {
            for n in 0..2 {
                let norm = factors[n].column_norm(c);
                if norm > 0.0 {
                    factors[n].scale_column(c, 1.0 / norm);
                    factors[2].scale_column(c, norm);
                }
            }
        }
        let xhat = reconstruct_parafac(&ones, [&factors[0], &factors[1], &factors[2]])?;
        let ev = explained_variance(x, &xhat)?;
        trace.push(ev);
        if stop.settled(ev) {
            converged = true;
            break;
        }
    }

    let mut lambda = vec![1.0; rank];
    for (c, l) in lambda.iter_mut().enumerate() {
        for f in factors.iter_mut() {
            let norm = f.column_norm(c);
            *l *= norm;
            if norm > 0.0 {
                f.scale_column(c, 1.0 / norm);
            }
        }
    }
    let mut order: Vec<usize> = (0..rank).collect();
    order.sort_by(|&p, &q| lambda[q].total_cmp(&lambda[p]));
    let lambda: Vec<f64> = order.iter().map(|&c| lambda[c]).collect();
    let factors = factors.map(|f| {
        let cols: Vec<Vec<f64>> = order.iter().map(|&c| f.column(c)).collect();
        Matrix::from_columns(&cols).expect("same rows")
    });

    let mut model = ParafacModel {
        lambda,
        factors,
        fit: *trace.last().expect("max_iters >= 1"),
        iters: trace.len(),
        converged,
        warnings: warnings.into_vec(),
        trace,
        corcondia: None,
    };
    match corcondia(x, &model) {
        Ok(cc) => {
            model.corcondia = Some(cc.value);
            model.warnings.extend(cc.warnings);
        }
        Err(e) => model.warnings.push(format!("core consistency unavailable: {e}")),
    }
    Ok(model)
}
