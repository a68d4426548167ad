//! Small dense solvers on top of `nalgebra`'s SVD.

use nalgebra::DMatrix;

use crate::tensor::Matrix;

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

/// Moore–Penrose pseudo-inverse together with a flag that is set when some
/// singular values were truncated (the matrix was numerically rank deficient).
pub(crate) fn pinv(m: &Matrix) -> (Matrix, bool) {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return (Matrix::zeros(cols, rows), true);
    }
    let svd = to_na(m).svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let tol = rows.max(cols) as f64 * smax * f64::EPSILON;
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let mut out = Matrix::zeros(cols, rows);
    let mut deficient = false;
    for (s_idx, &s) in svd.singular_values.iter().enumerate() {
        if s <= tol || s == 0.0 {
            deficient = true;
            continue;
        }
        let inv = 1.0 / s;
        for i in 0..cols {
            let v = vt[(s_idx, i)] * inv;
            if v == 0.0 {
                continue;
            }
            for j in 0..rows {
                out[(i, j)] += v * u[(j, s_idx)];
            }
        }
    }
    if svd.singular_values.len() < rows.min(cols) {
        deficient = true;
    }
    (out, deficient)
}

/// The `k` leading left singular vectors of `m`, as columns.
pub(crate) fn leading_left_singular_vectors(m: &Matrix, k: usize) -> Matrix {
    let rows = m.rows();
    let svd = to_na(m).svd(true, false);
    let u = svd.u.expect("u requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut out = Matrix::zeros(rows, k);
    for (c, &idx) in order.iter().take(k).enumerate() {
        for i in 0..rows {
            out[(i, c)] = u[(i, idx)];
        }
    }
    out
}
