//! Writes a synthetic set as epoch CSV files, reads it back and emits a
//! report with its plot-data sidecars. Usage: csv_reports [OUT_DIR]

use std::path::PathBuf;

use synten::io::{emit_report, ingest_csv, write_epochs};
use synten::pipeline::{extract_constd, generate_synthetic, PipelineConfig, SynthSpec};

fn main() -> synten::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("synten-example"));
    let (rs, _) = generate_synthetic(&SynthSpec::default())?;
    let files = write_epochs(&rs, out.join("epochs"))?;
    println!("wrote {} epoch files to {}", files.len(), out.join("epochs").display());

    let back = ingest_csv(out.join("epochs"))?;
    println!("read {} epochs, {} channels at {} Hz", back.epochs().len(), back.channel_count(), back.sample_rate());

    let report = extract_constd(&back, 1, &PipelineConfig::default())?;
    for path in emit_report(&report, out.join("constd.json"))? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
