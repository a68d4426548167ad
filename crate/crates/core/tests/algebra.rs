mod common;

use common::*;
use proptest::prelude::*;
use synten::tensor::{
    explained_variance, fold, khatri_rao, kronecker, mode_n_product, reconstruct_parafac,
    reconstruct_tucker, unfold, CoreTensor, Matrix, Mode, Tensor3,
};

fn counting() -> Tensor3 {
    Tensor3::new([2, 2, 2], (1..=8).map(f64::from).collect()).unwrap()
}

/// Element-by-element matricization with the column index of each mode.
fn unfold_oracle(x: &Tensor3, mode: Mode) -> Matrix {
    let [i1, i2, i3] = x.dims();
    let (rows, cols) = match mode {
        Mode::Temporal => (i1, i2 * i3),
        Mode::Spatial => (i2, i1 * i3),
        Mode::Repetition => (i3, i1 * i2),
    };
    let mut m = Matrix::zeros(rows, cols);
    for k in 0..i3 {
        for j in 0..i2 {
            for i in 0..i1 {
                let v = x.get(i, j, k);
                match mode {
                    Mode::Temporal => m[(i, j + i2 * k)] = v,
                    Mode::Spatial => m[(j, i + i1 * k)] = v,
                    Mode::Repetition => m[(k, i + i1 * j)] = v,
                }
            }
        }
    }
    m
}

#[test]
fn unfold_counting_tensor_mode1() {
    let m = unfold(&counting(), Mode::Temporal);
    assert_eq!(m, Matrix::from_rows(&[[1.0, 3.0, 5.0, 7.0], [2.0, 4.0, 6.0, 8.0]]).unwrap());
    assert_eq!(fold(&m, Mode::Temporal, [2, 2, 2]).unwrap(), counting());
}

#[test]
fn unfold_matches_loop_oracle() {
    let x = random_tensor(&mut rng(1), [3, 4, 5]);
    for mode in Mode::ALL {
        assert_eq!(unfold(&x, mode), unfold_oracle(&x, mode), "{mode:?}");
    }
}

#[test]
fn fold_rejects_wrong_shape() {
    assert!(fold(&Matrix::zeros(2, 5), Mode::Temporal, [2, 2, 2]).is_err());
    assert!(Mode::from_number(4).is_err());
}

#[test]
fn mode_product_examples() {
    let mut g = rng(2);
    let x = random_tensor(&mut g, [4, 3, 5]);
    assert_eq!(mode_n_product(&x, &Matrix::identity(4), Mode::Temporal).unwrap(), x);

    let sums = mode_n_product(&x, &Matrix::filled(1, 4, 1.0), Mode::Temporal).unwrap();
    assert_eq!(sums.dims(), [1, 3, 5]);
    for k in 0..5 {
        for j in 0..3 {
            let want: f64 = (0..4).map(|i| x.get(i, j, k)).sum();
            assert!((sums.get(0, j, k) - want).abs() < 1e-12);
        }
    }

    let a = random_matrix(&mut g, 2, 4);
    let b = random_matrix(&mut g, 6, 3);
    let ab = mode_n_product(&mode_n_product(&x, &a, Mode::Temporal).unwrap(), &b, Mode::Spatial).unwrap();
    let ba = mode_n_product(&mode_n_product(&x, &b, Mode::Spatial).unwrap(), &a, Mode::Temporal).unwrap();
    assert!(max_abs_diff(ab.data(), ba.data()) < 1e-12);
    assert!(mode_n_product(&x, &a, Mode::Spatial).is_err());
}

#[test]
fn kronecker_examples() {
    assert_eq!(kronecker(&Matrix::identity(2), &Matrix::identity(2)), Matrix::identity(4));
    let a = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
    let b = Matrix::from_rows(&[[3.0], [4.0]]).unwrap();
    assert_eq!(kronecker(&a, &b), Matrix::from_rows(&[[3.0, 6.0], [4.0, 8.0]]).unwrap());
    assert_eq!(kronecker(&Matrix::zeros(2, 3), &Matrix::zeros(4, 5)).shape(), (8, 15));
}

#[test]
fn khatri_rao_examples() {
    let mut g = rng(3);
    let a = random_matrix(&mut g, 3, 1);
    let b = random_matrix(&mut g, 4, 1);
    assert_eq!(khatri_rao(&a, &b).unwrap(), kronecker(&a, &b));

    let a = random_matrix(&mut g, 3, 2);
    let b = random_matrix(&mut g, 4, 2);
    let kr = khatri_rao(&a, &b).unwrap();
    assert_eq!(kr.shape(), (12, 2));
    for c in 0..2 {
        for i in 0..3 {
            for j in 0..4 {
                assert_eq!(kr[(i * 4 + j, c)], a[(i, c)] * b[(j, c)]);
            }
        }
    }
    assert!(khatri_rao(&a, &random_matrix(&mut g, 4, 3)).is_err());
}

#[test]
fn tucker_reconstruction_examples() {
    let id = Matrix::identity(3);
    let x = reconstruct_tucker(&CoreTensor::superdiagonal(&[1.0; 3]).unwrap(), [&id, &id, &id]).unwrap();
    for (i, j, k) in cube(3) {
        assert_eq!(x.get(i, j, k), if i == j && j == k { 1.0 } else { 0.0 });
    }

    let mut g = rng(4);
    let core = random_tensor(&mut g, [2, 3, 2]);
    let b = [random_matrix(&mut g, 4, 2), random_matrix(&mut g, 5, 3), random_matrix(&mut g, 3, 2)];
    let x = reconstruct_tucker(&CoreTensor::free(core.clone()), [&b[0], &b[1], &b[2]]).unwrap();
    for (i, j, k) in (0..4).flat_map(|i| (0..5).flat_map(move |j| (0..3).map(move |k| (i, j, k)))) {
        let mut want = 0.0;
        for p in 0..2 {
            for q in 0..3 {
                for r in 0..2 {
                    want += core.get(p, q, r) * b[0][(i, p)] * b[1][(j, q)] * b[2][(k, r)];
                }
            }
        }
        assert!((x.get(i, j, k) - want).abs() < 1e-12);
    }

    let u = |n: usize, v: &[f64]| Matrix::new(n, 1, v.to_vec()).unwrap();
    let (a, b, c) = (u(2, &[1.0, 2.0]), u(2, &[3.0, 1.0]), u(1, &[2.0]));
    let core = CoreTensor::free(Tensor3::new([1, 1, 1], vec![2.0]).unwrap());
    let x = reconstruct_tucker(&core, [&a, &b, &c]).unwrap();
    assert_eq!(x.get(1, 0, 0), 2.0 * 2.0 * 3.0 * 2.0);
}

fn cube(n: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..n).flat_map(move |i| (0..n).flat_map(move |j| (0..n).map(move |k| (i, j, k))))
}

#[test]
fn parafac_reconstruction_examples() {
    let e1 = Matrix::new(3, 1, vec![1.0, 0.0, 0.0]).unwrap();
    let x = reconstruct_parafac(&[1.0], [&e1, &e1, &e1]).unwrap();
    assert_eq!(x.data().iter().sum::<f64>(), 1.0);
    assert_eq!(x.get(0, 0, 0), 1.0);

    let mut g = rng(5);
    let f = [random_matrix(&mut g, 4, 2), random_matrix(&mut g, 3, 2), random_matrix(&mut g, 5, 2)];
    let lambda = [1.5, -0.5];
    let x = reconstruct_parafac(&lambda, [&f[0], &f[1], &f[2]]).unwrap();
    let mut oracle = vec![0.0; 60];
    for (r, l) in lambda.iter().enumerate() {
        for k in 0..5 {
            for j in 0..3 {
                for i in 0..4 {
                    oracle[i + 4 * (j + 3 * k)] += l * f[0][(i, r)] * f[1][(j, r)] * f[2][(k, r)];
                }
            }
        }
    }
    assert!(max_abs_diff(x.data(), &oracle) < 1e-12);
}

#[test]
fn explained_variance_examples() {
    let x = random_tensor(&mut rng(6), [3, 4, 2]);
    assert_eq!(explained_variance(&x, &x).unwrap(), 100.0);
    assert_eq!(explained_variance(&x, &x.scaled(0.0)).unwrap(), 0.0);
    assert!((explained_variance(&x, &x.scaled(0.5)).unwrap() - 75.0).abs() < 1e-12);
    assert!(explained_variance(&x, &Tensor3::zeros([3, 4, 1]).unwrap()).is_err());
}

fn dims() -> impl Strategy<Value = [usize; 3]> {
    (1usize..6, 1usize..6, 1usize..6).prop_map(|(a, b, c)| [a, b, c])
}

fn tensor() -> impl Strategy<Value = Tensor3> {
    dims().prop_flat_map(|d| {
        proptest::collection::vec(-10.0f64..10.0, d[0] * d[1] * d[2]).prop_map(move |v| Tensor3::new(d, v).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn fold_unfold_roundtrip(x in tensor()) {
        for mode in Mode::ALL {
            prop_assert_eq!(&fold(&unfold(&x, mode), mode, x.dims()).unwrap(), &x);
        }
    }

    #[test]
    fn unfolding_convention(seed in 0u64..1000, d in dims(), r in (1usize..4, 1usize..4, 1usize..4)) {
        let mut g = rng(seed);
        let core = random_tensor(&mut g, [r.0, r.1, r.2]);
        let b1 = random_matrix(&mut g, d[0], r.0);
        let b2 = random_matrix(&mut g, d[1], r.1);
        let b3 = random_matrix(&mut g, d[2], r.2);
        let x = reconstruct_tucker(&CoreTensor::free(core.clone()), [&b1, &b2, &b3]).unwrap();
        let rhs = b1
            .matmul(&unfold(&core, Mode::Temporal)).unwrap()
            .matmul(&kronecker(&b3, &b2).transpose()).unwrap();
        prop_assert!(max_abs_diff(unfold(&x, Mode::Temporal).data(), rhs.data()) < 1e-10);
    }

    #[test]
    fn parafac_is_superdiagonal_tucker(seed in 0u64..1000, d in dims(), r in 1usize..4) {
        let mut g = rng(seed);
        let f = [random_matrix(&mut g, d[0], r), random_matrix(&mut g, d[1], r), random_matrix(&mut g, d[2], r)];
        let lambda: Vec<f64> = (0..r).map(|i| 1.0 + i as f64).collect();
        let p = reconstruct_parafac(&lambda, [&f[0], &f[1], &f[2]]).unwrap();
        let t = reconstruct_tucker(&CoreTensor::superdiagonal(&lambda).unwrap(), [&f[0], &f[1], &f[2]]).unwrap();
        prop_assert!(max_abs_diff(p.data(), t.data()) < 1e-12);
    }

    #[test]
    fn explained_variance_ignores_entry_order(seed in 0u64..1000, d in dims()) {
        let mut g = rng(seed);
        let x = random_tensor(&mut g, d);
        let xhat = random_tensor(&mut g, d);
        let n = x.len();
        let perm: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % n).collect();
        let shuffle = |t: &Tensor3| {
            if n % 7 == 0 { return t.clone(); }
            Tensor3::new(d, perm.iter().map(|&i| t.data()[i]).collect()).unwrap()
        };
        if x.frobenius_norm() > 0.0 {
            let a = explained_variance(&x, &xhat).unwrap();
            let b = explained_variance(&shuffle(&x), &shuffle(&xhat)).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
