//! Ten seeded runs of unconstrained non-negative Tucker against ten runs of
//! the constrained model on the same tensor.

use synten::diagnostics::{match_synergies, median, pearson};
use synten::factorization::{constrained_tucker, tucker_als, ConstraintSpec, FitConfig};
use synten::pipeline::{generate_synthetic, tensorize, SynthSpec};
use synten::tensor::Mode;

fn main() -> synten::Result<()> {
    let (rs, _) = generate_synthetic(&SynthSpec::default())?;
    let x = tensorize(&rs, 500)?.tensor;

    let mut tucker = Vec::new();
    let mut constd = Vec::new();
    for seed in 0..10 {
        let cfg = FitConfig { restarts: 1, ..FitConfig::default() }.with_seed(seed);
        tucker.push(tucker_als(&x, [3, 3, 3], &ConstraintSpec::nonneg(), &cfg)?);
        constd.push(constrained_tucker(&x, 1, 10, &FitConfig::constd().with_seed(seed))?);
    }

    let mut worst_tucker: f64 = 1.0;
    let mut worst_constd: f64 = 1.0;
    for a in 0..10 {
        for b in a + 1..10 {
            let m = match_synergies(&tucker[a].factor(Mode::Spatial).columns(), &tucker[b].factor(Mode::Spatial).columns())?;
            worst_tucker = m.pairs.iter().map(|p| p.r).fold(worst_tucker, f64::min);
            let shared = |i: usize| constd[i].factor(Mode::Spatial).column(2);
            worst_constd = worst_constd.min(pearson(&shared(a), &shared(b))?);
        }
    }
    let fits = |v: &[synten::factorization::TuckerModel]| median(&v.iter().map(|m| m.fit).collect::<Vec<_>>()).unwrap();
    println!("unconstrained [3,3,3]: median fit {:.2}%, worst matched synergy r {worst_tucker:.3}", fits(&tucker));
    println!("constrained [1,3,3]:   median fit {:.2}%, worst shared synergy r {worst_constd:.4}", fits(&constd));
    Ok(())
}
