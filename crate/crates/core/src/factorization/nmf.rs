use crate::error::{Error, Result};
use crate::linalg::pinv;
use crate::tensor::{explained_variance_slices, Matrix};

use super::{best_of_restarts, random_matrix, Convergence, FitConfig, NmfSolver};

const DENOMINATOR_FLOOR: f64 = 1e-12;

/// `X ≈ W · Hᵀ` with `W` temporal (samples × r) and `H` spatial
/// (channels × r, the synergies).
#[derive(Debug, Clone, PartialEq)]
pub struct NmfModel {
    pub temporal: Matrix,
    /// Unit-norm synergy columns.
    pub spatial: Matrix,
    /// Variance accounted for, in percent.
    pub vaf: f64,
    pub iters: usize,
    pub converged: bool,
    pub trace: Vec<f64>,
}

impl NmfModel {
    pub fn rank(&self) -> usize {
        self.spatial.cols()
    }

    pub fn reconstruct(&self) -> Matrix {
        self.temporal
            .matmul(&self.spatial.transpose())
            .expect("factor shapes agree")
    }
}

/// Non-negative matrix factorisation of a non-negative `x`.
pub fn nmf(x: &Matrix, r: usize, cfg: &FitConfig) -> Result<NmfModel> {
    cfg.validate()?;
    let (rows, cols) = x.shape();
    if r == 0 || r > rows.min(cols) {
        return Err(Error::arg(format!(
            "NMF rank {r} must be between 1 and {}",
            rows.min(cols)
        )));
    }
    if let Some(pos) = x.data().iter().position(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::arg(format!(
            "NMF input must be finite and non-negative (entry ({}, {}))",
            pos / cols,
            pos % cols
        )));
    }
    let mean = x.data().iter().sum::<f64>() / x.data().len() as f64;
    if mean == 0.0 {
        return Err(Error::Degenerate("NMF input is identically zero".into()));
    }
    let xt = x.transpose();
    let scale = (mean / r as f64).sqrt();
    best_of_restarts(
        cfg.restarts,
        |restart| {
            let mut rng = cfg.rng(restart);
            let w = random_matrix(rows, r, scale, &mut rng);
            let h = random_matrix(cols, r, scale, &mut rng);
            fit_once(x, &xt, w, h, cfg)
        },
        |m| m.vaf,
    )
}

fn fit_once(x: &Matrix, xt: &Matrix, mut w: Matrix, mut h: Matrix, cfg: &FitConfig) -> Result<NmfModel> {
    let total: f64 = x.data().iter().map(|v| v * v).sum();
    let mut trace = Vec::new();
    let mut stop = Convergence::new(cfg.tol);
    let mut converged = false;
    for _ in 0..cfg.max_iters {
        let xtw = match cfg.nmf_solver {
            NmfSolver::Multiplicative => {
                multiplicative_step(&x.matmul(&h)?, &mut w, &h)?;
                let xtw = xt.matmul(&w)?;
                multiplicative_step(&xtw, &mut h, &w)?;
                xtw
            }
            NmfSolver::ClampedAls => {
                w = clamped_ls(x, &h)?;
                h = clamped_ls(xt, &w)?;
                xt.matmul(&w)?
            }
        };
        // ‖x − w·hᵀ‖² = ‖x‖² − 2⟨xᵀw, h⟩ + ⟨wᵀw, hᵀh⟩
        let cross: f64 = xtw.data().iter().zip(h.data()).map(|(a, b)| a * b).sum();
        let model: f64 = w.gram().data().iter().zip(h.gram().data()).map(|(a, b)| a * b).sum();
        let vaf = 100.0 * (1.0 - ((total - 2.0 * cross + model) / total).max(0.0));
        trace.push(vaf);
        if stop.settled(vaf) {
            converged = true;
            break;
        }
    }
    for j in 0..h.cols() {
        let norm = h.column_norm(j);
        if norm > 0.0 {
            h.scale_column(j, 1.0 / norm);
            w.scale_column(j, norm);
        }
    }
    Ok(NmfModel {
        temporal: w,
        spatial: h,
        vaf: *trace.last().expect("max_iters >= 1"),
        iters: trace.len(),
        converged,
        trace,
    })
}

/// `a ← a ∘ (x·b) ⊘ (a·bᵀb)`, the Lee–Seung update for `x ≈ a·bᵀ`, given
/// `numer = x·b`.
fn multiplicative_step(numer: &Matrix, a: &mut Matrix, b: &Matrix) -> Result<()> {
    let denom = a.matmul(&b.gram())?;
    for ((v, n), d) in a.data_mut().iter_mut().zip(numer.data()).zip(denom.data()) {
        *v *= n / d.max(DENOMINATOR_FLOOR);
    }
    Ok(())
}

fn clamped_ls(x: &Matrix, b: &Matrix) -> Result<Matrix> {
    let (inv, _) = pinv(&b.gram());
    let mut a = x.matmul(b)?.matmul(&inv)?;
    a.clamp_nonneg();
    Ok(a)
}

/// Variance accounted for: `100 · (1 − ‖x − xhat‖² / ‖x‖²)`.
pub fn vaf(x: &Matrix, xhat: &Matrix) -> Result<f64> {
    if x.shape() != xhat.shape() {
        return Err(Error::arg("VAF needs matrices of equal shape"));
    }
    explained_variance_slices(x.data(), xhat.data())
}
