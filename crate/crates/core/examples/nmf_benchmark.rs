//! Per-repetition NMF, synergy alignment and shared-synergy identification.

use synten::pipeline::{extract_nmf_benchmark, generate_synthetic, Noise, PipelineConfig, SynthSpec};

fn main() -> synten::Result<()> {
    let (rs, _) = generate_synthetic(&SynthSpec { noise: Noise::SnrDb(20.0), ..SynthSpec::default() })?;
    let report = extract_nmf_benchmark(&rs, 2, &PipelineConfig::default())?;

    let vafs: Vec<f64> = report.fit.vaf_per_repetition.iter().map(|v| v.vaf).collect();
    let lowest = vafs.iter().cloned().fold(f64::INFINITY, f64::min);
    println!("{} repetitions, lowest VAF {lowest:.2}%", vafs.len());
    for ts in &report.task_synergies {
        println!(
            "task {}: reference repetition {}, shared synergy index {:?}",
            ts.task, ts.reference_repetition, ts.shared_index
        );
    }
    for c in &report.correlations {
        println!("{}:", c.name);
        for (label, row) in c.matrix.row_labels.iter().zip(&c.matrix.values) {
            println!("  {label:<12} {row:.3?}");
        }
    }
    Ok(())
}
