#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synten::tensor::{reconstruct_parafac, Matrix, Tensor3};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Matrix::new(rows, cols, data).unwrap()
}

pub fn random_nonneg(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.gen::<f64>()).collect();
    Matrix::new(rows, cols, data).unwrap()
}

pub fn random_tensor(rng: &mut ChaCha8Rng, dims: [usize; 3]) -> Tensor3 {
    Tensor3::from_fn(dims, |_, _, _| rng.gen_range(-1.0..1.0)).unwrap()
}

/// Noise-free non-negative rank-`r` tensor and its planted factors.
pub fn planted_parafac(seed: u64, dims: [usize; 3], r: usize) -> (Tensor3, [Matrix; 3]) {
    let mut g = rng(seed);
    let f = [
        random_nonneg(&mut g, dims[0], r),
        random_nonneg(&mut g, dims[1], r),
        random_nonneg(&mut g, dims[2], r),
    ];
    let x = reconstruct_parafac(&vec![1.0; r], [&f[0], &f[1], &f[2]]).unwrap();
    (x, f)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Pearson correlation written out directly, independent of the library.
pub fn corr(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Best correlation of every planted column with any recovered column,
/// using each recovered column at most once (exhaustive over permutations).
pub fn best_assignment(planted: &Matrix, found: &Matrix) -> Vec<f64> {
    let p = planted.columns();
    let f = found.columns();
    let mut best: Option<Vec<f64>> = None;
    permutations(f.len(), &mut |perm| {
        let rs: Vec<f64> = p.iter().zip(perm).map(|(a, &j)| corr(a, &f[j])).collect();
        let score = rs.iter().sum::<f64>();
        if best.as_ref().map_or(true, |b| score > b.iter().sum::<f64>()) {
            best = Some(rs);
        }
    });
    best.unwrap()
}

fn permutations(n: usize, visit: &mut dyn FnMut(&[usize])) {
    fn go(prefix: &mut Vec<usize>, n: usize, visit: &mut dyn FnMut(&[usize])) {
        if prefix.len() == n {
            visit(prefix);
            return;
        }
        for i in 0..n {
            if !prefix.contains(&i) {
                prefix.push(i);
                go(prefix, n, visit);
                prefix.pop();
            }
        }
    }
    go(&mut Vec::new(), n, visit);
}
