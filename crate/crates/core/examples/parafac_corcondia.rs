//! Non-negative PARAFAC on a planted rank-2 tensor; core consistency drops
//! once the rank exceeds the true one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synten::factorization::{parafac_als, ConstraintSpec, FitConfig};
use synten::tensor::{reconstruct_parafac, Matrix};

fn main() -> synten::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut factor = |rows| Matrix::new(rows, 2, (0..rows * 2).map(|_| rng.gen()).collect());
    let (a, b, c) = (factor(20)?, factor(8)?, factor(12)?);
    let x = reconstruct_parafac(&[1.0, 1.0], [&a, &b, &c])?;

    println!("rank  fit%      corcondia%  iters");
    for rank in 1..=4 {
        let m = parafac_als(&x, rank, &ConstraintSpec::nonneg(), &FitConfig::default())?;
        println!("{rank:>4}  {:>8.4}  {:>10.3e}  {:>5}", m.fit, m.corcondia.unwrap_or(f64::NAN), m.iters);
    }
    Ok(())
}
