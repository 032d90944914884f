//! `qelift` command-line harness.
//!
//! Exit codes: 0 success, 1 input error, 2 numerical failure, 3 a check
//! did not pass.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qelift::checks::{run_grad_suite, run_prox_suite, GradTolerances, SuiteReport};
use qelift::harness::{
    load_pgm, read_frequency_list, reconstruct_image, run_sweep, write_image_metrics, write_pgm,
    ExperimentConfig, ImageConfig,
};
use qelift::measurement::{expected_lifted_rank, lifted_fourier_rank, FrequencyGrid, DEFAULT_RANK_TOL};
use qelift::{Error, Method};

const EXIT_INPUT: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_CHECK: u8 = 3;

#[derive(Parser)]
#[command(name = "qelift", version, about = "Lifted Fourier phase retrieval experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a noise × trial × method sweep described by a JSON config.
    Sweep {
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Reconstruct a square grayscale PGM from simulated masked measurements.
    Image(ImageArgs),
    /// Numerical rank of the dense lifted Fourier operator.
    RankAnalysis(RankArgs),
    /// Compare the closed-form prox with an independent numerical minimizer.
    ProxCheck {
        #[arg(long, default_value_t = 1000)]
        cases: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Compare FFT and naive operator evaluations and finite differences.
    GradCheck {
        #[arg(long, default_value_t = 200)]
        cases: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct ImageArgs {
    input: PathBuf,
    output: PathBuf,
    /// JSON image config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Metrics CSV path; defaults to the output path with a `.csv` extension.
    #[arg(long)]
    metrics: Option<PathBuf>,
    #[arg(long)]
    masks: Option<usize>,
    /// Noise-to-signal ratio `‖ε‖/‖b‖`.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    method: Option<Method>,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Regular grid side(s), comma-separated.
    #[arg(long, value_delimiter = ',', required_unless_present = "freqs", conflicts_with = "freqs")]
    m: Vec<usize>,
    /// CSV of explicit frequencies, one per row with `d` columns.
    #[arg(long)]
    freqs: Option<PathBuf>,
    /// Relative singular-value cutoff.
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    tol: f64,
    /// Exit with status 3 unless the rank matches `min(|S|, (2n-1)^d)`
    /// (regular grids) or stays below `(2n-1)^d` (explicit lists).
    #[arg(long)]
    check: bool,
}

enum Failure {
    Error(Error),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(EXIT_CHECK)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_INPUT })
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Sweep { config, output_dir } => sweep(config, output_dir),
        Command::Image(args) => image(args),
        Command::RankAnalysis(args) => rank_analysis(args),
        Command::ProxCheck { cases, seed, tol } => {
            let report = run_prox_suite(cases, seed, tol)?;
            print_report("prox", &report);
            verdict(&[("prox", &report)])
        }
        Command::GradCheck { cases, seed } => {
            let [forward, gradient, fd] = run_grad_suite(cases, seed, GradTolerances::default())?;
            let named = [("forward", &forward), ("gradient", &gradient), ("finite-difference", &fd)];
            for (name, report) in named {
                print_report(name, report);
            }
            verdict(&named)
        }
    }
}

fn create(path: &PathBuf) -> Result<BufWriter<File>, Error> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Input(format!("cannot create {}: {e}", path.display())))
}

fn sweep(config: PathBuf, output_dir: Option<PathBuf>) -> Result<(), Failure> {
    let mut cfg = ExperimentConfig::load(&config)?;
    if let Some(dir) = output_dir {
        cfg.output_dir = dir;
    }
    let out = run_sweep(&cfg)?;
    let failed = out
        .records
        .iter()
        .filter(|r| !matches!(r.outcome, qelift::harness::sweep::Outcome::Ok(_)))
        .count();
    println!("{} solves, {failed} failed", out.records.len());
    println!("results: {}", out.results_path.display());
    println!("summary: {}", out.summary_path.display());
    println!("timings: {}", out.timings_path.display());
    Ok(())
}

fn image(args: ImageArgs) -> Result<(), Failure> {
    let mut cfg = match &args.config {
        Some(path) => ImageConfig::load(path)?,
        None => ImageConfig::default(),
    };
    if let Some(v) = args.masks {
        cfg.n_masks = v;
    }
    if let Some(v) = args.noise {
        cfg.noise_nsr = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.iterations {
        cfg.solver.iterations = v;
    }
    if let Some(v) = args.method {
        cfg.method = v;
    }
    let input = load_pgm(&args.input)?;
    let report = reconstruct_image(&input, &cfg)?;
    write_pgm(&report.image, create(&args.output)?)?;
    let metrics = args.metrics.unwrap_or_else(|| args.output.with_extension("csv"));
    write_image_metrics(&cfg, &report, create(&metrics)?)?;
    println!(
        "relative error {:.3e}, rank {}, phase distance {:.3e}",
        report.relative_error, report.rank_at_tol, report.phase_distance
    );
    Ok(())
}

fn rank_analysis(args: RankArgs) -> Result<(), Failure> {
    let bound = (2 * args.n).saturating_sub(1).pow(args.d as u32);
    let mut grids = Vec::new();
    if let Some(path) = &args.freqs {
        let file = File::open(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
        grids.push((path.display().to_string(), read_frequency_list(file, args.d)?, false));
    }
    for &m in &args.m {
        let grid = FrequencyGrid::regular(m, args.d).map_err(|e| Error::Input(e.to_string()))?;
        grids.push((m.to_string(), grid, true));
    }
    println!("n,d,grid,samples,rank,expected");
    let mut mismatches = Vec::new();
    for (label, grid, regular) in grids {
        let samples = grid.count();
        let rank = lifted_fourier_rank(args.n, args.d, grid, args.tol)?;
        let expected = expected_lifted_rank(args.n, args.d, samples);
        println!("{},{},{label},{samples},{rank},{expected}", args.n, args.d);
        let ok = if regular { rank == expected } else { rank <= bound };
        if !ok {
            mismatches.push(format!("grid {label}: rank {rank}, expected {expected}"));
        }
    }
    if args.check && !mismatches.is_empty() {
        return Err(Failure::Check(mismatches.join("; ")));
    }
    Ok(())
}

fn print_report(name: &str, r: &SuiteReport) {
    println!(
        "{name}: {} cases, {} failures, max error {:.3e}",
        r.cases, r.failures, r.max_error
    );
    if let Some(f) = &r.first_failure {
        println!("  first failure: {f}");
    }
}

fn verdict(reports: &[(&str, &SuiteReport)]) -> Result<(), Failure> {
    let failed: Vec<&str> = reports.iter().filter(|(_, r)| !r.passed()).map(|(n, _)| *n).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("{} suite(s) failed", failed.join(", "))))
    }
}
