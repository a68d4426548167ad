//! The `synten` command line. Exit codes: 0 success, 1 usage error, 2 data
//! error, 3 the model did not converge (it is still written). Every failure
//! prints one `error[<kind>]: <message>` line to stderr.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::Error;
use crate::factorization::FitConfig;
use crate::io;
use crate::pipeline::{self, PipelineConfig, SynergyReport, SynthSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "synten", version, about = "Muscle-synergy extraction with constrained tensor decompositions")]
struct Cli {
    #[command(flatten)]
    solver: SolverArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Random seed [env: SYNTEN_SEED]
    #[arg(long, global = true, env = "SYNTEN_SEED", hide_env = true, default_value_t = 0)]
    seed: u64,
    /// Maximum ALS / multiplicative-update iterations
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    /// Stop when the fit changes by less than this (percentage points)
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Random restarts; the best fit is kept
    #[arg(long, global = true)]
    restarts: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic recording set with planted synergies
    Synth(SynthArgs),
    /// Stack epochs into a temporal x channel x repetition tensor
    Tensorize(TensorizeArgs),
    /// Extract synergies with one method
    Decompose(DecomposeArgs),
    /// Constrained Tucker vs. the NMF benchmark
    Compare(DataArgs),
    /// Refit on shuffled repetitions and compare with the intact fit
    ShuffleValidate(ShuffleArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1)]
    n_dofs: usize,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 10)]
    channels: usize,
    #[arg(long, default_value_t = 500)]
    samples: usize,
    /// Signal-to-noise ratio in dB
    #[arg(long, default_value_t = 20.0, conflicts_with = "noiseless")]
    snr_db: f64,
    #[arg(long)]
    noiseless: bool,
    /// Output directory for the epoch files and ground_truth.json
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TensorizeArgs {
    /// Epoch file or directory
    input: PathBuf,
    /// Samples per epoch after resampling (default: longest epoch)
    #[arg(long)]
    epoch_len: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Nmf,
    Parafac,
    Tucker,
    Constd,
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    #[arg(long, value_enum)]
    method: MethodArg,
    /// nmf: synergies per task; parafac: rank; tucker: r or r1,r2,r3
    #[arg(long, value_delimiter = ',')]
    ranks: Option<Vec<usize>>,
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Epoch file or directory
    input: PathBuf,
    #[arg(long, default_value_t = 1)]
    n_dofs: usize,
    #[arg(long)]
    epoch_len: Option<usize>,
    /// Report path; sidecar tables are written next to it. Default: stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ShuffleArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 15)]
    shuffles: usize,
}

struct Failure {
    code: i32,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            kind: "usage",
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let kind = match e {
            Error::Io { .. } => "io",
            Error::Ingest(_) | Error::NoEpochs(_) => "ingest",
            _ => "data",
        };
        Self {
            code: EXIT_DATA,
            kind,
            message: e.to_string(),
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let text = e.render().to_string();
            let mut lines = text.lines();
            let first = lines.next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error[usage]: {first}");
            for l in lines {
                eprintln!("{l}");
            }
            return EXIT_USAGE;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error[{}]: {}", f.kind, f.message.replace('\n', " "));
            if f.code == EXIT_USAGE {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            f.code
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32, Failure> {
    let s = &cli.solver;
    match &cli.command {
        Command::Synth(a) => synth(a, s.seed),
        Command::Tensorize(a) => {
            let rs = ingest(&a.input)?;
            let t = pipeline::tensorize(&rs, a.epoch_len.unwrap_or_else(|| rs.max_epoch_len()))?;
            let doc = TensorDoc {
                dims: t.tensor.dims(),
                layout: "temporal index fastest: offset = i + I1*(j + I2*k)",
                repetition_labels: t.labels,
                data: t.tensor.data().to_vec(),
            };
            emit_json(&doc, a.out.as_deref())?;
            Ok(EXIT_OK)
        }
        Command::Decompose(a) => decompose(a, s),
        Command::Compare(a) => {
            let cfg = pipeline_config(s, a, FitConfig::constd())?;
            let rs = ingest(&a.input)?;
            let cmp = pipeline::compare_methods(&rs, a.n_dofs, &cfg)?;
            emit_json(&cmp, a.out.as_deref())?;
            if let Some(out) = &a.out {
                let table = out.with_extension("by_task.tsv");
                let rows: Vec<&[f64]> = cmp.by_task.values.iter().map(Vec::as_slice).collect();
                // One column per task, one row per constrained synergy.
                io::write_tsv(&table, "constd_synergy", &cmp.by_task.row_labels, &rows)?;
            }
            let converged = cmp.constd.fit.converged && cmp.nmf.fit.converged;
            Ok(convergence_code(converged, "compare", cli.solver.max_iters))
        }
        Command::ShuffleValidate(a) => {
            let cfg = pipeline_config(s, &a.data, FitConfig::constd())?;
            if a.shuffles == 0 {
                return Err(Failure::usage("--shuffles must be >= 1"));
            }
            let rs = ingest(&a.data.input)?;
            let v = pipeline::shuffle_validation(&rs, a.data.n_dofs, a.shuffles, &cfg)?;
            emit_json(&v, a.data.out.as_deref())?;
            Ok(EXIT_OK)
        }
    }
}

#[derive(Serialize)]
struct TensorDoc {
    dims: [usize; 3],
    layout: &'static str,
    repetition_labels: Vec<pipeline::RepetitionLabel>,
    data: Vec<f64>,
}

#[derive(Serialize)]
struct GroundTruthDoc<'a> {
    spec: SpecDoc,
    #[serde(flatten)]
    truth: &'a pipeline::GroundTruth,
}

#[derive(Serialize)]
struct SpecDoc {
    seed: u64,
    n_dofs: usize,
    reps_per_task: usize,
    n_channels: usize,
    n_samples: usize,
    snr_db: Option<f64>,
}

fn synth(a: &SynthArgs, seed: u64) -> Result<i32, Failure> {
    let spec = SynthSpec {
        n_channels: a.channels,
        n_samples: a.samples,
        n_dofs: a.n_dofs,
        reps_per_task: a.reps,
        noise: if a.noiseless {
            pipeline::Noise::None
        } else {
            pipeline::Noise::SnrDb(a.snr_db)
        },
        seed,
        ..SynthSpec::default()
    };
    let (rs, truth) = pipeline::generate_synthetic(&spec).map_err(|e| Failure::usage(e.to_string()))?;
    io::write_epochs(&rs, &a.out)?;
    let doc = GroundTruthDoc {
        spec: SpecDoc {
            seed,
            n_dofs: a.n_dofs,
            reps_per_task: a.reps,
            n_channels: a.channels,
            n_samples: a.samples,
            snr_db: (!a.noiseless).then_some(a.snr_db),
        },
        truth: &truth,
    };
    io::write_json(&doc, a.out.join("ground_truth.json"))?;
    Ok(EXIT_OK)
}

fn decompose(a: &DecomposeArgs, s: &SolverArgs) -> Result<i32, Failure> {
    let d = &a.data;
    let ranks = a.ranks.as_deref();
    if ranks.is_some_and(|r| r.contains(&0)) {
        return Err(Failure::usage("--ranks values must be >= 1"));
    }
    let base = match a.method {
        MethodArg::Constd | MethodArg::Nmf => FitConfig::constd(),
        MethodArg::Parafac | MethodArg::Tucker => FitConfig::default(),
    };
    let cfg = pipeline_config(s, d, base)?;
    let run: Box<dyn Fn(&pipeline::RecordingSet) -> crate::Result<SynergyReport>> = match a.method {
        MethodArg::Constd => {
            if ranks.is_some() {
                return Err(Failure::usage("constd ranks are fixed by --n-dofs; drop --ranks"));
            }
            Box::new(move |rs| pipeline::extract_constd(rs, d.n_dofs, &cfg))
        }
        MethodArg::Nmf => {
            let r = single_rank(ranks, 2, "nmf")?;
            Box::new(move |rs| pipeline::extract_nmf_benchmark(rs, r, &cfg))
        }
        MethodArg::Parafac => {
            let r = single_rank(ranks, 3, "parafac")?;
            Box::new(move |rs| pipeline::extract_parafac(rs, r, &cfg))
        }
        MethodArg::Tucker => {
            let r = match ranks {
                None => [3, 3, 3],
                Some([r]) => [*r; 3],
                Some([a, b, c]) => [*a, *b, *c],
                Some(_) => return Err(Failure::usage("tucker takes --ranks r or r1,r2,r3")),
            };
            Box::new(move |rs| pipeline::extract_tucker(rs, r, &cfg))
        }
    };
    let rs = ingest(&d.input)?;
    let report = run(&rs)?;
    match &d.out {
        Some(out) => {
            io::emit_report(&report, out)?;
        }
        None => print!("{}", io::to_json(&report)?),
    }
    Ok(convergence_code(report.fit.converged, "decompose", s.max_iters))
}

fn single_rank(ranks: Option<&[usize]>, default: usize, method: &str) -> Result<usize, Failure> {
    match ranks {
        None => Ok(default),
        Some([r]) => Ok(*r),
        Some(_) => Err(Failure::usage(format!("{method} takes a single --ranks value"))),
    }
}

fn convergence_code(converged: bool, what: &str, max_iters: Option<usize>) -> i32 {
    if converged {
        return EXIT_OK;
    }
    let limit = max_iters.map_or("the iteration limit".to_string(), |m| format!("{m} iterations"));
    eprintln!("error[nonconvergence]: {what} did not converge within {limit}; the model was still written");
    EXIT_NONCONVERGENCE
}

fn pipeline_config(s: &SolverArgs, d: &DataArgs, base: FitConfig) -> Result<PipelineConfig, Failure> {
    if d.n_dofs == 0 {
        return Err(Failure::usage("--n-dofs must be >= 1"));
    }
    if d.epoch_len.is_some_and(|l| l < 2) {
        return Err(Failure::usage("--epoch-len must be >= 2"));
    }
    let mut cfg = PipelineConfig {
        fit: base,
        epoch_len: d.epoch_len,
        ..PipelineConfig::default()
    }
    .with_seed(s.seed);
    for fit in [&mut cfg.fit, &mut cfg.nmf] {
        if let Some(m) = s.max_iters {
            fit.max_iters = m;
        }
        if let Some(t) = s.tol {
            fit.tol = t;
        }
        if let Some(r) = s.restarts {
            fit.restarts = r;
        }
        fit.validate().map_err(|e| Failure::usage(e.to_string()))?;
    }
    Ok(cfg)
}

fn ingest(input: &Path) -> Result<pipeline::RecordingSet, Failure> {
    if !input.exists() {
        return Err(Failure::usage(format!(
            "input {} does not exist",
            input.display()
        )));
    }
    Ok(io::ingest_csv(input)?)
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => io::write_json(value, p)?,
        None => print!("{}", io::to_json(value)?),
    }
    Ok(())
}
