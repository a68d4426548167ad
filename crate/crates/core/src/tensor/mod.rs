//! Dense 3rd-order tensors and the multilinear primitives used by every
//! decomposition in this crate.
//!
//! # Layout
//!
//! A [`Tensor3`] with dims `(I1, I2, I3)` stores entry `(i, j, k)` at linear
//! offset `i + I1 * (j + I2 * k)`: the mode-1 (temporal) index runs fastest,
//! so every mode-1 fiber is contiguous.
//!
//! # Unfolding convention
//!
//! The mode-n unfolding places mode `n` on the rows and orders the columns so
//! that the lower remaining mode runs fastest:
//!
//! | mode | rows | column of entry `(i, j, k)` |
//! |------|------|-----------------------------|
//! | 1    | `I1` | `j + I2 * k`                |
//! | 2    | `I2` | `i + I1 * k`                |
//! | 3    | `I3` | `i + I1 * j`                |
//!
//! With this ordering the Tucker model unfolds as
//! `X(1) = B1 · G(1) · (B3 ⊗ B2)ᵀ`, and likewise for the other modes.

mod matrix;

pub use matrix::Matrix;

use crate::error::{Error, Result};

/// One of the three tensor modes. For EMG tensors these are
/// temporal × spatial × repetition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Temporal,
    Spatial,
    Repetition,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Temporal, Mode::Spatial, Mode::Repetition];

    /// Parses a 1-based mode number.
    pub fn from_number(n: usize) -> Result<Mode> {
        match n {
            1 => Ok(Mode::Temporal),
            2 => Ok(Mode::Spatial),
            3 => Ok(Mode::Repetition),
            _ => Err(Error::arg(format!("mode must be 1, 2 or 3 (got {n})"))),
        }
    }

    /// 0-based position.
    pub fn index(self) -> usize {
        match self {
            Mode::Temporal => 0,
            Mode::Spatial => 1,
            Mode::Repetition => 2,
        }
    }

    /// The two other modes, lower first.
    pub fn others(self) -> (Mode, Mode) {
        match self {
            Mode::Temporal => (Mode::Spatial, Mode::Repetition),
            Mode::Spatial => (Mode::Temporal, Mode::Repetition),
            Mode::Repetition => (Mode::Temporal, Mode::Spatial),
        }
    }
}

/// Dense 3rd-order tensor of finite `f64` values, mode-1 index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dims: [usize; 3],
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn new(dims: [usize; 3], data: Vec<f64>) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::arg(format!("tensor dims must be >= 1, got {dims:?}")));
        }
        let expected = dims[0] * dims[1] * dims[2];
        if data.len() != expected {
            return Err(Error::arg(format!(
                "tensor data length {} does not match dims {dims:?}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::arg(format!("non-finite tensor entry at offset {pos}")));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: [usize; 3]) -> Result<Self> {
        Self::new(dims, vec![0.0; dims.iter().product()])
    }

    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(dims.iter().product());
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    data.push(f(i, j, k));
                }
            }
        }
        Self::new(dims, data)
    }

    /// Stacks `I1 × I2` matrices along mode 3.
    pub fn from_frontal_slices(slices: &[Matrix]) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::arg("at least one slice is required"))?;
        let (rows, cols) = first.shape();
        let mut data = Vec::with_capacity(rows * cols * slices.len());
        for (k, s) in slices.iter().enumerate() {
            if s.shape() != (rows, cols) {
                return Err(Error::arg(format!(
                    "slice {k} is {}x{}, expected {rows}x{cols}",
                    s.rows(),
                    s.cols()
                )));
            }
            for j in 0..cols {
                for i in 0..rows {
                    data.push(s[(i, j)]);
                }
            }
        }
        Self::new([rows, cols, slices.len()], data)
    }

    /// Internal constructor for values produced by arithmetic on finite inputs.
    pub(crate) fn from_raw(dims: [usize; 3], data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), dims.iter().product::<usize>());
        Self { dims, data }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn dim(&self, mode: Mode) -> usize {
        self.dims[mode.index()]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Linear storage, mode-1 index fastest.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.offset(i, j, k)]
    }

    /// The `I1 × I2` matrix at repetition `k`.
    pub fn frontal_slice(&self, k: usize) -> Matrix {
        let [i1, i2, _] = self.dims;
        let mut m = Matrix::zeros(i1, i2);
        for j in 0..i2 {
            for i in 0..i1 {
                m[(i, j)] = self.get(i, j, k);
            }
        }
        m
    }

    /// Reorders mode-3 slices: slice `k` of the result is slice `perm[k]` of `self`.
    pub fn permute_slices(&self, perm: &[usize]) -> Result<Tensor3> {
        let [i1, i2, i3] = self.dims;
        let mut seen = vec![false; i3];
        if perm.len() != i3 {
            return Err(Error::arg("permutation length must equal the repetition count"));
        }
        for &p in perm {
            if p >= i3 || std::mem::replace(&mut seen[p], true) {
                return Err(Error::arg("slice order is not a permutation"));
            }
        }
        let slab = i1 * i2;
        let mut data = Vec::with_capacity(self.data.len());
        for &p in perm {
            data.extend_from_slice(&self.data[p * slab..(p + 1) * slab]);
        }
        Ok(Tensor3::from_raw(self.dims, data))
    }

    pub fn frobenius_norm(&self) -> f64 {
        squared_norm(&self.data).sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Tensor3 {
        Tensor3::from_raw(self.dims, self.data.iter().map(|v| v * factor).collect())
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn squared_norm(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum()
}

/// Tucker core tensor with a per-entry mask marking entries that solvers must
/// not update.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreTensor {
    values: Tensor3,
    fixed: Vec<bool>,
}

impl CoreTensor {
    /// A core whose entries are all free to update.
    pub fn free(values: Tensor3) -> Self {
        let fixed = vec![false; values.len()];
        Self { values, fixed }
    }

    /// A core that is frozen entirely.
    pub fn fixed(values: Tensor3) -> Self {
        let fixed = vec![true; values.len()];
        Self { values, fixed }
    }

    pub fn with_mask(values: Tensor3, fixed: Vec<bool>) -> Result<Self> {
        if fixed.len() != values.len() {
            return Err(Error::arg("core mask must have the same shape as the core"));
        }
        Ok(Self { values, fixed })
    }

    /// `r × r × r` core with `lambda` on the super-diagonal.
    pub fn superdiagonal(lambda: &[f64]) -> Result<Self> {
        let r = lambda.len();
        if r == 0 {
            return Err(Error::arg("super-diagonal core needs at least one weight"));
        }
        let values = Tensor3::from_fn([r, r, r], |i, j, k| {
            if i == j && j == k {
                lambda[i]
            } else {
                0.0
            }
        })?;
        Ok(Self::free(values))
    }

    pub fn values(&self) -> &Tensor3 {
        &self.values
    }

    pub fn dims(&self) -> [usize; 3] {
        self.values.dims()
    }

    pub fn mask(&self) -> &[bool] {
        &self.fixed
    }

    pub fn is_fully_fixed(&self) -> bool {
        self.fixed.iter().all(|&f| f)
    }

    pub fn has_fixed_entries(&self) -> bool {
        self.fixed.iter().any(|&f| f)
    }

    /// Replaces the free entries with those of `candidate`; fixed entries keep
    /// their current value.
    pub(crate) fn update_free(&mut self, candidate: &Tensor3) {
        debug_assert_eq!(candidate.dims(), self.values.dims());
        for ((v, &c), &fixed) in self
            .values
            .data
            .iter_mut()
            .zip(&candidate.data)
            .zip(&self.fixed)
        {
            if !fixed {
                *v = c;
            }
        }
    }

    pub(crate) fn clamp_free_nonneg(&mut self) {
        for (v, &fixed) in self.values.data.iter_mut().zip(&self.fixed) {
            if !fixed && *v < 0.0 {
                *v = 0.0;
            }
        }
    }

    /// Multiplies the slice at index `idx` of `mode` by `factor`.
    pub(crate) fn scale_slice(&mut self, mode: Mode, idx: usize, factor: f64) {
        let [j1, j2, j3] = self.values.dims;
        for k in 0..j3 {
            for j in 0..j2 {
                for i in 0..j1 {
                    let hit = match mode {
                        Mode::Temporal => i == idx,
                        Mode::Spatial => j == idx,
                        Mode::Repetition => k == idx,
                    };
                    if hit {
                        let o = self.values.offset(i, j, k);
                        self.values.data[o] *= factor;
                    }
                }
            }
        }
    }
}

/// Mode-n matricization; see the module docs for the column order.
pub fn unfold(x: &Tensor3, mode: Mode) -> Matrix {
    let [i1, i2, i3] = x.dims;
    match mode {
        Mode::Temporal => {
            let mut m = Matrix::zeros(i1, i2 * i3);
            for k in 0..i3 {
                for j in 0..i2 {
                    let col = j + i2 * k;
                    for i in 0..i1 {
                        m[(i, col)] = x.get(i, j, k);
                    }
                }
            }
            m
        }
        Mode::Spatial => {
            let mut m = Matrix::zeros(i2, i1 * i3);
            for k in 0..i3 {
                for j in 0..i2 {
                    for i in 0..i1 {
                        m[(j, i + i1 * k)] = x.get(i, j, k);
                    }
                }
            }
            m
        }
        Mode::Repetition => {
            // Each row is one contiguous frontal slab.
            let slab = i1 * i2;
            Matrix::new(i3, slab, x.data.clone()).expect("slab layout")
        }
    }
}

/// Inverse of [`unfold`].
pub fn fold(m: &Matrix, mode: Mode, dims: [usize; 3]) -> Result<Tensor3> {
    let [i1, i2, i3] = dims;
    let n = mode.index();
    let expected = (dims[n], dims.iter().product::<usize>() / dims[n].max(1));
    if dims.iter().any(|&d| d == 0) || m.shape() != expected {
        return Err(Error::arg(format!(
            "cannot fold a {}x{} matrix along mode {} into dims {dims:?}",
            m.rows(),
            m.cols(),
            n + 1
        )));
    }
    let mut data = vec![0.0; i1 * i2 * i3];
    for k in 0..i3 {
        for j in 0..i2 {
            for i in 0..i1 {
                let v = match mode {
                    Mode::Temporal => m[(i, j + i2 * k)],
                    Mode::Spatial => m[(j, i + i1 * k)],
                    Mode::Repetition => m[(k, i + i1 * j)],
                };
                data[i + i1 * (j + i2 * k)] = v;
            }
        }
    }
    Tensor3::new(dims, data)
}

/// `x ×_mode u`: replaces dimension `mode` of `x` by `u.rows()`.
pub fn mode_n_product(x: &Tensor3, u: &Matrix, mode: Mode) -> Result<Tensor3> {
    let n = mode.index();
    if u.cols() != x.dims[n] {
        return Err(Error::arg(format!(
            "mode-{} product needs a matrix with {} columns, got {}x{}",
            n + 1,
            x.dims[n],
            u.rows(),
            u.cols()
        )));
    }
    let [i1, i2, i3] = x.dims;
    let mut dims = x.dims;
    dims[n] = u.rows();
    let p = u.rows();
    let mut out = vec![0.0; dims.iter().product()];
    match mode {
        Mode::Temporal => {
            for k in 0..i3 {
                for j in 0..i2 {
                    let src = &x.data[i1 * (j + i2 * k)..i1 * (j + i2 * k + 1)];
                    let dst = &mut out[p * (j + i2 * k)..p * (j + i2 * k + 1)];
                    for (r, d) in dst.iter_mut().enumerate() {
                        *d = u.row(r).iter().zip(src).map(|(a, b)| a * b).sum();
                    }
                }
            }
        }
        Mode::Spatial => {
            for k in 0..i3 {
                for j in 0..i2 {
                    let src = &x.data[i1 * (j + i2 * k)..i1 * (j + i2 * k + 1)];
                    for q in 0..p {
                        let w = u[(q, j)];
                        if w == 0.0 {
                            continue;
                        }
                        let dst = &mut out[i1 * (q + p * k)..i1 * (q + p * k + 1)];
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d += w * s;
                        }
                    }
                }
            }
        }
        Mode::Repetition => {
            let slab = i1 * i2;
            for k in 0..i3 {
                let src = &x.data[slab * k..slab * (k + 1)];
                for r in 0..p {
                    let w = u[(r, k)];
                    if w == 0.0 {
                        continue;
                    }
                    let dst = &mut out[slab * r..slab * (r + 1)];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += w * s;
                    }
                }
            }
        }
    }
    Ok(Tensor3::from_raw(dims, out))
}

/// Standard Kronecker product `a ⊗ b`.
pub fn kronecker(a: &Matrix, b: &Matrix) -> Matrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = Matrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            for p in 0..br {
                for q in 0..bc {
                    out[(i * br + p, j * bc + q)] = s * b[(p, q)];
                }
            }
        }
    }
    out
}

/// Column-wise Kronecker product: column `r` is `a[:, r] ⊗ b[:, r]`.
pub fn khatri_rao(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.cols() {
        return Err(Error::arg(format!(
            "khatri-rao product needs equal column counts ({} vs {})",
            a.cols(),
            b.cols()
        )));
    }
    let (ar, br, r) = (a.rows(), b.rows(), a.cols());
    let mut out = Matrix::zeros(ar * br, r);
    for i in 0..ar {
        for p in 0..br {
            for c in 0..r {
                out[(i * br + p, c)] = a[(i, c)] * b[(p, c)];
            }
        }
    }
    Ok(out)
}

/// `G ×1 B1 ×2 B2 ×3 B3`.
pub fn reconstruct_tucker(core: &CoreTensor, factors: [&Matrix; 3]) -> Result<Tensor3> {
    let dims = core.dims();
    for (n, f) in factors.iter().enumerate() {
        if f.cols() != dims[n] {
            return Err(Error::arg(format!(
                "factor {} has {} columns but the core has {} entries along that mode",
                n + 1,
                f.cols(),
                dims[n]
            )));
        }
    }
    // Expand the cheapest mode first.
    let t = mode_n_product(core.values(), factors[1], Mode::Spatial)?;
    let t = mode_n_product(&t, factors[2], Mode::Repetition)?;
    mode_n_product(&t, factors[0], Mode::Temporal)
}

/// `Σ_r λ_r · a1[:, r] ∘ a2[:, r] ∘ a3[:, r]`.
pub fn reconstruct_parafac(lambda: &[f64], factors: [&Matrix; 3]) -> Result<Tensor3> {
    let r = lambda.len();
    if r == 0 || factors.iter().any(|f| f.cols() != r) {
        return Err(Error::arg(format!(
            "all factors must have {r} columns to match the weight vector"
        )));
    }
    let [a1, a2, a3] = factors;
    let dims = [a1.rows(), a2.rows(), a3.rows()];
    let mut data = vec![0.0; dims.iter().product()];
    let mut offset = 0;
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            let weights: Vec<f64> = (0..r).map(|c| lambda[c] * a2[(j, c)] * a3[(k, c)]).collect();
            for i in 0..dims[0] {
                data[offset] = a1.row(i).iter().zip(&weights).map(|(a, w)| a * w).sum();
                offset += 1;
            }
        }
    }
    Ok(Tensor3::from_raw(dims, data))
}

/// Percentage of `x`'s energy captured by `xhat`:
/// `100 · (1 − ‖x − xhat‖² / ‖x‖²)`. Negative for fits worse than zero.
pub fn explained_variance(x: &Tensor3, xhat: &Tensor3) -> Result<f64> {
    if x.dims != xhat.dims {
        return Err(Error::arg(format!(
            "explained variance needs equal dims ({:?} vs {:?})",
            x.dims, xhat.dims
        )));
    }
    explained_variance_slices(&x.data, &xhat.data)
}

pub(crate) fn explained_variance_slices(x: &[f64], xhat: &[f64]) -> Result<f64> {
    let total = squared_norm(x);
    if total == 0.0 {
        return Err(Error::Degenerate("data has zero Frobenius norm".into()));
    }
    let resid: f64 = x.iter().zip(xhat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(100.0 * (1.0 - resid / total))
}
