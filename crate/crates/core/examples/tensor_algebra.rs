//! Unfoldings, mode products and model reconstruction on a small tensor.

use synten::tensor::{fold, mode_n_product, reconstruct_parafac, reconstruct_tucker, unfold, CoreTensor, Matrix, Mode, Tensor3};

fn main() -> synten::Result<()> {
    let x = Tensor3::new([2, 2, 2], (1..=8).map(f64::from).collect())?;
    for mode in Mode::ALL {
        let m = unfold(&x, mode);
        println!("mode {} unfolding:", mode.index() + 1);
        for r in 0..m.rows() {
            println!("  {:?}", m.row(r));
        }
        assert_eq!(fold(&m, mode, x.dims())?, x);
    }

    let sums = mode_n_product(&x, &Matrix::filled(1, 2, 1.0), Mode::Temporal)?;
    println!("sums over the first mode: {:?}", sums.data());

    let a = Matrix::from_columns(&[[1.0, 0.5, 0.0], [0.0, 0.5, 1.0]])?;
    let b = Matrix::from_columns(&[[1.0, 1.0], [0.0, 2.0]])?;
    let c = Matrix::from_columns(&[[2.0, 1.0], [1.0, 1.0]])?;
    let p = reconstruct_parafac(&[1.0, 3.0], [&a, &b, &c])?;
    let t = reconstruct_tucker(&CoreTensor::superdiagonal(&[1.0, 3.0])?, [&a, &b, &c])?;
    println!("PARAFAC equals Tucker with a super-diagonal core: {}", p == t);
    Ok(())
}
