//! Noise-level × trial × method sweeps with CSV output.
//!
//! Three files are written to the output directory:
//!
//! * `results.csv`: one row per solve;
//! * `summary.csv`: means over trials per (m, masks, method, noise level);
//! * `timings.csv`: wall-clock seconds per solve, kept apart so the other
//!   two files are byte-identical across re-runs with the same seed.
//!
//! Each file starts with a `schema_version,<v>` row, then the header.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::config::{ExperimentConfig, NoiseKind};
use super::data::{add_noise, derive_seed, generate_ground_truth, generate_masks};
use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;
use crate::measurement::MeasurementOperator;
use crate::metrics::{eigen_table, lifted_error, numerical_rank, phase_distance, TrialMetrics};
use crate::solver::{solve, Method};
use crate::tensor::ComplexTensor;

pub const SCHEMA_VERSION: u32 = 1;
pub const EIGEN_COLUMNS: usize = 10;

/// Stream tags for [`derive_seed`].
const TAG_SIGNAL: u64 = 1;
const TAG_MASKS: u64 = 2;
const TAG_NOISE: u64 = 3;

/// One point of the sweep enumeration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub m: usize,
    pub n_masks: usize,
    pub noise_index: usize,
    pub noise_level: f64,
    pub trial: usize,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Ok(TrialMetrics),
    /// The solver failed; the message is recorded in the row.
    Failed { kind: &'static str, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub job: Job,
    pub noise_norm: f64,
    pub data_norm: f64,
    pub iterations: usize,
    pub outcome: Outcome,
    pub wall_clock: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub m: usize,
    pub n_masks: usize,
    pub method: Method,
    pub noise_level: f64,
    pub trials: usize,
    pub succeeded: usize,
    pub mean_phase_distance: f64,
    pub mean_frob_err: f64,
    pub mean_residual: f64,
    pub mean_nsr: f64,
    pub mean_rank: f64,
    pub mean_eig_1: f64,
    pub mean_eig_2: f64,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub records: Vec<ResultRecord>,
    pub summary: Vec<SummaryRow>,
    pub results_path: PathBuf,
    pub summary_path: PathBuf,
    pub timings_path: PathBuf,
}

/// Jobs in output order: grid side, mask count, noise level, trial, method.
pub fn enumerate_jobs(cfg: &ExperimentConfig) -> Vec<Job> {
    let mut jobs = Vec::new();
    for m in cfg.grid_sides() {
        for n_masks in cfg.mask_counts() {
            for (noise_index, &noise_level) in cfg.noise.levels.iter().enumerate() {
                for trial in 0..cfg.trials {
                    for &method in &cfg.methods {
                        jobs.push(Job {
                            m,
                            n_masks,
                            noise_index,
                            noise_level,
                            trial,
                            method,
                        });
                    }
                }
            }
        }
    }
    jobs
}

/// Runs every job, in parallel when enabled, returning records in
/// enumeration order.
pub fn run_jobs(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    cfg.validate()?;
    let jobs = enumerate_jobs(cfg);
    #[cfg(feature = "parallel")]
    let records = jobs.par_iter().map(|job| run_job(cfg, job)).collect();
    #[cfg(not(feature = "parallel"))]
    let records = jobs.iter().map(|job| run_job(cfg, job)).collect();
    records
}

/// Generates the instance for `job`, solves and scores it. Solver failures
/// become [`Outcome::Failed`]; only instance construction errors propagate.
pub fn run_job(cfg: &ExperimentConfig, job: &Job) -> Result<ResultRecord> {
    let (n, d) = (cfg.n, cfg.d);
    let trial = job.trial as u64;
    let x0 = generate_ground_truth(n, d, derive_seed(cfg.seed, &[TAG_SIGNAL, trial]))?;
    let masks = generate_masks(n, d, job.n_masks, derive_seed(cfg.seed, &[TAG_MASKS, trial, job.n_masks as u64]))?;
    let op = MeasurementOperator::regular(n, d, job.m, masks)?;
    let clean = op.apply(&HermitianMatrix::outer(&x0.vectorize()?))?;
    let data_norm = clean.norm();
    let noise_norm = match cfg.noise.kind {
        NoiseKind::Absolute => job.noise_level,
        NoiseKind::Nsr => job.noise_level * data_norm,
    };
    let noise_seed = derive_seed(
        cfg.seed,
        &[TAG_NOISE, trial, job.noise_index as u64, job.m as u64, job.n_masks as u64],
    );
    let b = add_noise(&clean, noise_norm, noise_seed)?;
    let solver_cfg = cfg.solver.solver_config(job.method, noise_norm);

    let clock = Instant::now();
    let solved = solve(&op, &b, &solver_cfg);
    let wall_clock = clock.elapsed().as_secs_f64();

    let (iterations, outcome) = match solved.and_then(|r| {
        let metrics = score(&x0, &r.matrix, r.signal.as_ref(), &op, &b, noise_norm, job.method)?;
        Ok((r.log.len(), metrics))
    }) {
        Ok((it, metrics)) => (it, Outcome::Ok(metrics)),
        Err(e) => (0, Outcome::Failed { kind: failure_kind(&e), message: e.to_string() }),
    };
    Ok(ResultRecord {
        job: *job,
        noise_norm,
        data_norm,
        iterations,
        outcome,
        wall_clock,
    })
}

fn failure_kind(e: &Error) -> &'static str {
    match e {
        Error::Divergence { .. } => "diverged",
        Error::Numerical(_) => "numerical",
        Error::Parameter(_) | Error::Precondition(_) => "parameter",
        _ => "error",
    }
}

fn score(
    x0: &ComplexTensor,
    matrix: &HermitianMatrix,
    signal: Option<&ComplexTensor>,
    op: &MeasurementOperator,
    b: &crate::measurement::MeasurementVector,
    noise_norm: f64,
    method: Method,
) -> Result<TrialMetrics> {
    let zero = ComplexTensor::zeros(x0.shape().to_vec());
    let estimate = signal.unwrap_or(&zero);
    let count = EIGEN_COLUMNS.min(matrix.dim());
    let b_norm = b.norm();
    Ok(TrialMetrics {
        phase_distance: phase_distance(x0, estimate)?,
        frob_err: lifted_error(matrix, x0)?,
        residual: op.apply(matrix)?.distance(b),
        nsr: if b_norm > 0.0 { noise_norm / b_norm } else { 0.0 },
        rank_at_tol: numerical_rank(matrix, method.rank_tolerance())?,
        top_eigs: eigen_table(matrix, count)?,
    })
}

/// Means over trials, grouped in enumeration order.
pub fn summarize(cfg: &ExperimentConfig, records: &[ResultRecord]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for m in cfg.grid_sides() {
        for n_masks in cfg.mask_counts() {
            for (noise_index, &noise_level) in cfg.noise.levels.iter().enumerate() {
                for &method in &cfg.methods {
                    let group: Vec<&ResultRecord> = records
                        .iter()
                        .filter(|r| {
                            r.job.m == m
                                && r.job.n_masks == n_masks
                                && r.job.noise_index == noise_index
                                && r.job.method == method
                        })
                        .collect();
                    let ok: Vec<&TrialMetrics> = group
                        .iter()
                        .filter_map(|r| match &r.outcome {
                            Outcome::Ok(t) => Some(t),
                            Outcome::Failed { .. } => None,
                        })
                        .collect();
                    let mean = |f: &dyn Fn(&TrialMetrics) -> f64| {
                        if ok.is_empty() {
                            0.0
                        } else {
                            ok.iter().map(|t| f(t)).sum::<f64>() / ok.len() as f64
                        }
                    };
                    let eig = |i: usize| move |t: &TrialMetrics| t.top_eigs.get(i).copied().unwrap_or(0.0);
                    rows.push(SummaryRow {
                        m,
                        n_masks,
                        method,
                        noise_level,
                        trials: group.len(),
                        succeeded: ok.len(),
                        mean_phase_distance: mean(&|t| t.phase_distance),
                        mean_frob_err: mean(&|t| t.frob_err),
                        mean_residual: mean(&|t| t.residual),
                        mean_nsr: mean(&|t| t.nsr),
                        mean_rank: mean(&|t| t.rank_at_tol as f64),
                        mean_eig_1: mean(&eig(0)),
                        mean_eig_2: mean(&eig(1)),
                    });
                }
            }
        }
    }
    rows
}

fn csv_writer<W: Write>(sink: W) -> Result<csv::Writer<W>> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(sink);
    w.write_record(["schema_version", &SCHEMA_VERSION.to_string()])?;
    Ok(w)
}

fn job_columns(cfg: &ExperimentConfig, job: &Job) -> Vec<String> {
    vec![
        cfg.n.to_string(),
        cfg.d.to_string(),
        job.m.to_string(),
        job.n_masks.to_string(),
        job.method.name().to_string(),
        cfg.noise.kind.name().to_string(),
        job.noise_level.to_string(),
        job.trial.to_string(),
    ]
}

const JOB_HEADER: [&str; 8] = ["n", "d", "m", "n_masks", "method", "noise_kind", "noise_level", "trial"];

pub fn write_results<W: Write>(cfg: &ExperimentConfig, records: &[ResultRecord], sink: W) -> Result<()> {
    let mut w = csv_writer(sink)?;
    let mut header: Vec<String> = JOB_HEADER.iter().map(|s| s.to_string()).collect();
    header.extend(
        [
            "status", "message", "noise_norm", "data_norm", "iterations", "phase_distance", "frob_err",
            "residual", "nsr", "rank_at_tol", "rank_tol",
        ]
        .map(String::from),
    );
    header.extend((1..=EIGEN_COLUMNS).map(|i| format!("eig_{i}")));
    w.write_record(&header)?;
    for r in records {
        let mut row = job_columns(cfg, &r.job);
        match &r.outcome {
            Outcome::Ok(t) => {
                row.extend(["ok".to_string(), String::new()]);
                row.extend(
                    [r.noise_norm, r.data_norm]
                        .iter()
                        .map(f64::to_string)
                        .chain([r.iterations.to_string()])
                        .chain([t.phase_distance, t.frob_err, t.residual, t.nsr].iter().map(f64::to_string))
                        .chain([t.rank_at_tol.to_string(), r.job.method.rank_tolerance().to_string()]),
                );
                row.extend((0..EIGEN_COLUMNS).map(|i| t.top_eigs.get(i).map_or(String::new(), f64::to_string)));
            }
            Outcome::Failed { kind, message } => {
                row.extend([kind.to_string(), message.clone(), r.noise_norm.to_string(), r.data_norm.to_string()]);
                row.extend(std::iter::repeat_n(String::new(), 7 + EIGEN_COLUMNS));
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], sink: W) -> Result<()> {
    let mut w = csv_writer(sink)?;
    w.write_record([
        "m", "n_masks", "method", "noise_level", "trials", "succeeded", "mean_phase_distance", "mean_frob_err",
        "mean_residual", "mean_nsr", "mean_rank", "mean_eig_1", "mean_eig_2",
    ])?;
    for r in rows {
        let mut row = vec![
            r.m.to_string(),
            r.n_masks.to_string(),
            r.method.name().to_string(),
            r.noise_level.to_string(),
            r.trials.to_string(),
            r.succeeded.to_string(),
        ];
        row.extend(
            [
                r.mean_phase_distance,
                r.mean_frob_err,
                r.mean_residual,
                r.mean_nsr,
                r.mean_rank,
                r.mean_eig_1,
                r.mean_eig_2,
            ]
            .iter()
            .map(f64::to_string),
        );
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_timings<W: Write>(cfg: &ExperimentConfig, records: &[ResultRecord], sink: W) -> Result<()> {
    let mut w = csv_writer(sink)?;
    let mut header: Vec<&str> = JOB_HEADER.to_vec();
    header.push("wall_clock_s");
    w.write_record(&header)?;
    for r in records {
        let mut row = job_columns(cfg, &r.job);
        row.push(format!("{:.6}", r.wall_clock));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the sweep and writes the three CSV files.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    let records = run_jobs(cfg)?;
    let summary = summarize(cfg, &records);
    fs::create_dir_all(&cfg.output_dir)?;
    let results_path = cfg.output_dir.join("results.csv");
    let summary_path = cfg.output_dir.join("summary.csv");
    let timings_path = cfg.output_dir.join("timings.csv");
    write_results(cfg, &records, fs::File::create(&results_path)?)?;
    write_summary(&summary, fs::File::create(&summary_path)?)?;
    write_timings(cfg, &records, fs::File::create(&timings_path)?)?;
    Ok(SweepOutput {
        records,
        summary,
        results_path,
        summary_path,
        timings_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ExperimentConfig;

    fn small() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{"n": 4, "m": [4, 8], "n_masks": 2, "methods": ["qe", "nuclear"], "trials": 2,
                "noise": {"kind": "absolute", "levels": [0, 0.5]}, "seed": 3, "solver": {"iterations": 200}}"#,
        )
        .unwrap()
    }

    #[test]
    fn enumeration_order_and_size() {
        let jobs = enumerate_jobs(&small());
        assert_eq!(jobs.len(), 2 * 2 * 2 * 2);
        assert_eq!((jobs[0].m, jobs[0].method), (4, Method::Qe));
        assert_eq!(jobs[1].method, Method::Nuclear);
        assert_eq!(jobs[2].trial, 1);
        assert_eq!(jobs.last().unwrap().m, 8);
    }

    #[test]
    fn csv_is_deterministic_and_finite() {
        let cfg = small();
        let render = || {
            let records = run_jobs(&cfg).unwrap();
            let mut out = Vec::new();
            write_results(&cfg, &records, &mut out).unwrap();
            let mut summary = Vec::new();
            write_summary(&summarize(&cfg, &records), &mut summary).unwrap();
            (String::from_utf8(out).unwrap(), summary)
        };
        let (a, sa) = render();
        let (b, sb) = render();
        assert_eq!(a, b);
        assert_eq!(sa, sb);
        assert!(a.starts_with("schema_version,1\n"));
        assert_eq!(a.lines().count(), 2 + 16);
        assert!(!a.contains("NaN") && !a.contains("inf"));
    }

    #[test]
    fn single_noiseless_trial_gives_one_row() {
        let cfg = ExperimentConfig::from_json(r#"{"n": 3, "trials": 1, "solver": {"iterations": 50}}"#).unwrap();
        let records = run_jobs(&cfg).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].noise_norm, 0.0);
    }
}
