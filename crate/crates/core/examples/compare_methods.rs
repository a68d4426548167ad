//! Constrained Tucker synergies correlated with each task's NMF synergies.

use synten::pipeline::{compare_methods, generate_synthetic, PipelineConfig, SynthSpec};

fn main() -> synten::Result<()> {
    let (rs, _) = generate_synthetic(&SynthSpec { seed: 4, ..SynthSpec::default() })?;
    let c = compare_methods(&rs, 1, &PipelineConfig::default())?;
    print!("{:<8}", "");
    for l in &c.by_task.col_labels {
        print!("{l:>9}");
    }
    println!();
    for (label, row) in c.by_task.row_labels.iter().zip(&c.by_task.values) {
        print!("{label:<8}");
        for v in row {
            print!("{v:>9.3}");
        }
        println!();
    }
    Ok(())
}
