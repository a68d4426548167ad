//! Model-quality metrics and synergy comparison.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorization::ParafacModel;
use crate::linalg::pinv;
use crate::tensor::{mode_n_product, Mode, Tensor3};

/// Core consistency of a PARAFAC model and any numerical warnings raised
/// while computing it.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreConsistency {
    pub value: f64,
    pub warnings: Vec<String>,
}

/// Core consistency diagnostic in percent.
///
/// Computes the least-squares Tucker core implied by the model's loadings,
/// `Ĝ = X ×1 A1⁺ ×2 A2⁺ ×3 A3⁺` (weights folded into the first mode), and
/// compares it with the super-diagonal identity core `T`:
/// `100 · (1 − Σ(ĝ − t)² / Σt²)`. At most 100; can be negative.
pub fn corcondia(x: &Tensor3, model: &ParafacModel) -> Result<CoreConsistency> {
    let r = model.rank();
    for mode in Mode::ALL {
        let f = model.factor(mode);
        if f.rows() != x.dim(mode) || f.cols() != r {
            return Err(Error::arg(format!(
                "factor {} is {}x{}, tensor needs {}x{r}",
                mode.index() + 1,
                f.rows(),
                f.cols(),
                x.dim(mode)
            )));
        }
    }
    let mut warnings = Vec::new();
    let mut g = x.clone();
    for mode in Mode::ALL {
        let mut f = model.factor(mode).clone();
        if mode == Mode::Temporal {
            for (c, &l) in model.lambda.iter().enumerate() {
                f.scale_column(c, l);
            }
        }
        let (inv, deficient) = pinv(&f);
        if deficient {
            warnings.push(format!(
                "mode {} loadings are rank deficient; core consistency used a pseudo-inverse",
                mode.index() + 1
            ));
        }
        g = mode_n_product(&g, &inv, mode)?;
    }
    let mut dev = 0.0;
    for k in 0..r {
        for j in 0..r {
            for i in 0..r {
                let t = if i == j && j == k { 1.0 } else { 0.0 };
                let d = g.get(i, j, k) - t;
                dev += d * d;
            }
        }
    }
    Ok(CoreConsistency {
        value: 100.0 * (1.0 - dev / r as f64),
        warnings,
    })
}

/// Pearson correlation coefficient.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::arg(format!(
            "correlation needs two vectors of equal length >= 2 (got {} and {})",
            a.len(),
            b.len()
        )));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Degenerate("correlation of a constant vector".into()));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Correlation used for ranking: a constant vector correlates 0 with anything.
fn similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    match pearson(a, b) {
        Ok(r) => Ok(r),
        Err(Error::Degenerate(_)) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Labelled matrix of Pearson coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    /// Row-major values in `[-1, 1]`.
    pub values: Vec<Vec<f64>>,
}

impl CorrelationMatrix {
    /// Correlates every row vector with every column vector. Constant vectors
    /// score 0.
    pub fn between(
        rows: &[Vec<f64>],
        row_labels: Vec<String>,
        cols: &[Vec<f64>],
        col_labels: Vec<String>,
    ) -> Result<Self> {
        if rows.len() != row_labels.len() || cols.len() != col_labels.len() {
            return Err(Error::arg("one label per vector is required"));
        }
        let values = rows
            .iter()
            .map(|a| cols.iter().map(|b| similarity(a, b)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            row_labels,
            col_labels,
            values,
        })
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row][col]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub a: usize,
    pub b: usize,
    pub r: f64,
}

/// Pairing between two synergy sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    /// Matched pairs ordered by `a`.
    pub pairs: Vec<MatchedPair>,
    pub mean_r: f64,
}

impl MatchResult {
    /// `permutation()[a]` is the element of set B paired with element `a` of
    /// set A, if any.
    pub fn permutation(&self, len_a: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; len_a];
        for p in &self.pairs {
            out[p.a] = Some(p.b);
        }
        out
    }

    pub fn partner_of(&self, a: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.a == a).map(|p| p.b)
    }
}

/// Greedy matching: repeatedly pair the remaining `(a, b)` with the highest
/// correlation, ties going to the lowest `(a, b)`.
pub fn match_synergies(set_a: &[Vec<f64>], set_b: &[Vec<f64>]) -> Result<MatchResult> {
    if set_a.is_empty() || set_b.is_empty() {
        return Err(Error::arg("synergy sets must be non-empty"));
    }
    let r: Vec<Vec<f64>> = set_a
        .iter()
        .map(|a| set_b.iter().map(|b| similarity(a, b)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let mut used_a = vec![false; set_a.len()];
    let mut used_b = vec![false; set_b.len()];
    let mut pairs = Vec::new();
    for _ in 0..set_a.len().min(set_b.len()) {
        let mut best: Option<MatchedPair> = None;
        for (a, row) in r.iter().enumerate() {
            if used_a[a] {
                continue;
            }
            for (b, &v) in row.iter().enumerate() {
                if used_b[b] {
                    continue;
                }
                if best.map_or(true, |p| v > p.r) {
                    best = Some(MatchedPair { a, b, r: v });
                }
            }
        }
        let p = best.expect("unused pair remains");
        used_a[p.a] = true;
        used_b[p.b] = true;
        pairs.push(p);
    }
    pairs.sort_by_key(|p| p.a);
    let mean_r = pairs.iter().map(|p| p.r).sum::<f64>() / pairs.len() as f64;
    Ok(MatchResult { pairs, mean_r })
}

/// Per-candidate score used by [`reference_repetition`]: the mean matched
/// correlation of every other repetition against the candidate.
pub fn reference_scores(per_rep: &[Vec<Vec<f64>>]) -> Result<Vec<f64>> {
    if per_rep.len() < 2 {
        return Err(Error::arg("reference selection needs at least two repetitions"));
    }
    let count = per_rep[0].len();
    if count == 0 || per_rep.iter().any(|s| s.len() != count) {
        return Err(Error::arg(
            "every repetition must have the same, non-zero number of synergies",
        ));
    }
    (0..per_rep.len())
        .map(|c| {
            let mut total = 0.0;
            for (o, set) in per_rep.iter().enumerate() {
                if o != c {
                    total += match_synergies(set, &per_rep[c])?.mean_r;
                }
            }
            Ok(total / (per_rep.len() - 1) as f64)
        })
        .collect()
}

/// Index of the repetition whose synergies agree best with all others; ties go
/// to the lowest index.
pub fn reference_repetition(per_rep: &[Vec<Vec<f64>>]) -> Result<usize> {
    let scores = reference_scores(per_rep)?;
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Outcome of labelling one task pair's NMF synergies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharedIdentification {
    /// Index into task A's and task B's synergy lists of the shared pair.
    pub shared_a: usize,
    pub shared_b: usize,
    pub r: f64,
    pub above_threshold: bool,
    /// Unit-norm element-wise mean of the (unit-normalised) shared pair.
    pub shared: Vec<f64>,
    pub task_a_specific: Vec<usize>,
    pub task_b_specific: Vec<usize>,
    pub cross: CorrelationMatrix,
}

pub const DEFAULT_SHARED_THRESHOLD: f64 = 0.8;

/// Labels the most correlated cross-task pair as shared and the remaining
/// synergies as task-specific.
pub fn identify_shared_nmf(
    task_a: &[Vec<f64>],
    task_b: &[Vec<f64>],
    threshold: f64,
) -> Result<SharedIdentification> {
    if task_a.is_empty() || task_b.is_empty() {
        return Err(Error::arg("each task needs at least one synergy"));
    }
    let labels = |p: &str, n: usize| (0..n).map(|i| format!("{p}{}", i + 1)).collect();
    let cross = CorrelationMatrix::between(
        task_a,
        labels("a", task_a.len()),
        task_b,
        labels("b", task_b.len()),
    )?;
    let (mut sa, mut sb) = (0, 0);
    for a in 0..task_a.len() {
        for b in 0..task_b.len() {
            if cross.get(a, b) > cross.get(sa, sb) {
                (sa, sb) = (a, b);
            }
        }
    }
    let r = cross.get(sa, sb);
    let ua = unit(&task_a[sa]);
    let ub = unit(&task_b[sb]);
    let shared = unit(&ua.iter().zip(&ub).map(|(x, y)| 0.5 * (x + y)).collect::<Vec<_>>());
    Ok(SharedIdentification {
        shared_a: sa,
        shared_b: sb,
        r,
        above_threshold: r > threshold,
        shared,
        task_a_specific: (0..task_a.len()).filter(|&i| i != sa).collect(),
        task_b_specific: (0..task_b.len()).filter(|&i| i != sb).collect(),
        cross,
    })
}

/// Scales `v` to unit Euclidean norm; zero vectors are returned unchanged.
pub fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        v.to_vec()
    } else {
        v.iter().map(|x| x / n).collect()
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    })
}
