//! Alternating-least-squares solvers: NMF, PARAFAC, Tucker and the
//! constrained Tucker model used for shared-synergy extraction.

mod constd;
mod nmf;
mod parafac;
mod tucker;

pub use constd::{build_constd_spec, constrained_tucker, controlled_averaging, ConstdLayout};
pub use nmf::{nmf, vaf, NmfModel};
pub use parafac::{parafac_als, ParafacModel};
pub use tucker::{tucker_als, TuckerModel};

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::tensor::{CoreTensor, Matrix, Mode, Tensor3};

/// How factor matrices are initialised when no fixed initial value is given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Init {
    /// Entries drawn uniformly from `[0, 1)` with a seeded generator.
    #[default]
    RandomNonneg,
    /// Leading left singular vectors of each unfolding (absolute values for
    /// non-negative modes). Deterministic, so restarts all coincide.
    Hosvd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NmfSolver {
    /// Lee–Seung multiplicative updates for the Frobenius loss.
    #[default]
    Multiplicative,
    /// Unconstrained least squares per factor, negatives clamped to zero.
    ClampedAls,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub max_iters: usize,
    /// Stop once the explained variance (in percent) changes by less than this
    /// on three consecutive iterations.
    pub tol: f64,
    pub seed: u64,
    pub restarts: usize,
    pub init: Init,
    /// Window length of the repetition-mode moving average; odd.
    pub averaging_window: usize,
    pub nmf_solver: NmfSolver,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            tol: 1e-6,
            seed: 0,
            restarts: 5,
            init: Init::RandomNonneg,
            averaging_window: 3,
            nmf_solver: NmfSolver::Multiplicative,
        }
    }
}

impl FitConfig {
    /// Defaults for the constrained Tucker model, which converges to the same
    /// solution from any start and needs a single run.
    pub fn constd() -> Self {
        Self {
            restarts: 1,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::arg("max_iters must be >= 1"));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::arg("tol must be a positive finite number"));
        }
        if self.restarts == 0 {
            return Err(Error::arg("restarts must be >= 1"));
        }
        if self.averaging_window == 0 || self.averaging_window % 2 == 0 {
            return Err(Error::arg("averaging window must be odd and >= 1"));
        }
        Ok(())
    }

    /// Generator for one restart. Restarts use independent streams of the
    /// same seed, so adding restarts never changes earlier ones.
    pub(crate) fn rng(&self, restart: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(restart as u64);
        rng
    }
}

/// Constraints on one factor matrix.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModeConstraint {
    /// Clamp negative entries to zero after every update.
    pub nonneg: bool,
    /// Initial value; the factor still updates.
    pub fixed_init: Option<Matrix>,
    /// Apply the moving-average filter at the end of each iteration.
    pub controlled_averaging: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConstraintSpec {
    /// Temporal, spatial, repetition.
    pub modes: [ModeConstraint; 3],
    /// Initial core; entries marked in its mask never update.
    pub core: Option<CoreTensor>,
    /// Clamp negative free core entries to zero.
    pub core_nonneg: bool,
}

impl ConstraintSpec {
    pub fn unconstrained() -> Self {
        Self::default()
    }

    /// Non-negativity on every factor and on the core.
    pub fn nonneg() -> Self {
        let m = ModeConstraint {
            nonneg: true,
            ..ModeConstraint::default()
        };
        Self {
            modes: [m.clone(), m.clone(), m],
            core: None,
            core_nonneg: true,
        }
    }

    pub fn mode(&self, mode: Mode) -> &ModeConstraint {
        &self.modes[mode.index()]
    }

    pub(crate) fn validate(&self, dims: [usize; 3], ranks: [usize; 3]) -> Result<()> {
        for mode in Mode::ALL {
            let n = mode.index();
            if let Some(init) = &self.modes[n].fixed_init {
                if init.shape() != (dims[n], ranks[n]) {
                    return Err(Error::arg(format!(
                        "initial factor for mode {} is {}x{}, expected {}x{}",
                        n + 1,
                        init.rows(),
                        init.cols(),
                        dims[n],
                        ranks[n]
                    )));
                }
            }
        }
        if let Some(core) = &self.core {
            if core.dims() != ranks {
                return Err(Error::arg(format!(
                    "core dims {:?} do not match ranks {ranks:?}",
                    core.dims()
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn validate_ranks(dims: [usize; 3], ranks: [usize; 3]) -> Result<()> {
    for n in 0..3 {
        if ranks[n] == 0 || ranks[n] > dims[n] {
            return Err(Error::arg(format!(
                "rank {} for mode {} must be between 1 and {}",
                ranks[n],
                n + 1,
                dims[n]
            )));
        }
    }
    Ok(())
}

pub(crate) fn random_matrix(rows: usize, cols: usize, scale: f64, rng: &mut impl Rng) -> Matrix {
    let data = (0..rows * cols).map(|_| scale * rng.gen::<f64>()).collect();
    Matrix::new(rows, cols, data).expect("shape")
}

/// Initial factor for `mode` under `constraint` and `cfg`.
pub(crate) fn initial_factor(
    x: &Tensor3,
    mode: Mode,
    rank: usize,
    constraint: &ModeConstraint,
    cfg: &FitConfig,
    rng: &mut impl Rng,
) -> Matrix {
    if let Some(init) = &constraint.fixed_init {
        return init.clone();
    }
    match cfg.init {
        Init::RandomNonneg => random_matrix(x.dim(mode), rank, 1.0, rng),
        Init::Hosvd => {
            let mut u = linalg::leading_left_singular_vectors(&crate::tensor::unfold(x, mode), rank);
            if constraint.nonneg {
                u.map_in_place(f64::abs);
            }
            u
        }
    }
}

/// Collects solver warnings, keeping only the first occurrence of each.
#[derive(Debug, Default)]
pub(crate) struct Warnings {
    seen: BTreeSet<String>,
    list: Vec<String>,
}

impl Warnings {
    pub(crate) fn push(&mut self, key: &str, message: String) {
        if self.seen.insert(key.to_string()) {
            self.list.push(message);
        }
    }

    pub(crate) fn into_vec(self) -> Vec<String> {
        self.list
    }
}

/// Runs `fit` once per restart and keeps the result with the highest score;
/// ties go to the earliest restart.
/// Solves `B·normal ≈ rhs` for a factor `B`. Unconstrained modes use the
/// pseudo-inverse. Non-negative modes start from the clamped pseudo-inverse
/// solution and refine it by hierarchical ALS, where each column in turn gets
/// its exact non-negative minimiser with the others held fixed.
pub(crate) fn solve_factor(
    rhs: &Matrix,
    normal: &Matrix,
    nonneg: bool,
    mode: Mode,
    warnings: &mut Warnings,
) -> Result<Matrix> {
    const SWEEPS: usize = 10;
    let (inv, deficient) = linalg::pinv(normal);
    if deficient {
        let n = mode.index() + 1;
        warnings.push(
            &format!("mode{n}"),
            format!("rank-deficient normal equations for mode {n}; solved by pseudo-inverse"),
        );
    }
    let mut b = rhs.matmul(&inv)?;
    if !nonneg {
        return Ok(b);
    }
    b.clamp_nonneg();
    let (rows, cols) = b.shape();
    for _ in 0..SWEEPS {
        for j in 0..cols {
            let d = normal[(j, j)];
            if d <= 0.0 {
                continue;
            }
            for i in 0..rows {
                let fitted: f64 = (0..cols).map(|c| b[(i, c)] * normal[(c, j)]).sum();
                b[(i, j)] = (b[(i, j)] + (rhs[(i, j)] - fitted) / d).max(0.0);
            }
        }
    }
    Ok(b)
}

pub(crate) fn best_of_restarts<M>(
    restarts: usize,
    mut fit: impl FnMut(usize) -> Result<M>,
    score: impl Fn(&M) -> f64,
) -> Result<M> {
    let mut best: Option<(f64, M)> = None;
    for restart in 0..restarts {
        let model = fit(restart)?;
        let s = score(&model);
        match &best {
            Some((b, _)) if !(s > *b) => {}
            _ => best = Some((s, model)),
        }
    }
    Ok(best.expect("restarts >= 1").1)
}


/// Stopping rule shared by the solvers: the fit must change by less than
/// `tol` on this many consecutive iterations. A single small step is not
/// enough; constrained updates can stall briefly before moving on.
pub(crate) const CONVERGENCE_PATIENCE: usize = 3;

pub(crate) struct Convergence {
    tol: f64,
    prev: f64,
    calm: usize,
}

impl Convergence {
    pub(crate) fn new(tol: f64) -> Self {
        Self {
            tol,
            prev: f64::NEG_INFINITY,
            calm: 0,
        }
    }

    /// Records the latest fit; true once the run has converged.
    pub(crate) fn settled(&mut self, fit: f64) -> bool {
        if (fit - self.prev).abs() < self.tol {
            self.calm += 1;
        } else {
            self.calm = 0;
        }
        self.prev = fit;
        self.calm >= CONVERGENCE_PATIENCE
    }
}
