//! Refits the constrained model on shuffled repetitions and compares the
//! synergies with the intact fit.

use synten::pipeline::{generate_synthetic, shuffle_validation, PipelineConfig, SynthSpec};

fn main() -> synten::Result<()> {
    let (rs, _) = generate_synthetic(&SynthSpec::default())?;
    let v = shuffle_validation(&rs, 1, 15, &PipelineConfig::default())?;
    println!("intact fit {:.2}%", v.intact_fit);
    for (i, (s, t)) in v.shared_r.iter().zip(&v.task_specific_r).enumerate() {
        println!("shuffle {:>2}: shared r {s:6.3}  task-specific r {t:6.3}", i + 1);
    }
    println!("mean shared r {:.3}, mean task-specific r {:.3}", v.mean_shared_r, v.mean_task_specific_r);
    Ok(())
}
