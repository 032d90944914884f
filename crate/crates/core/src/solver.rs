//! FISTA for `min_X R(X) + ½‖𝒜(X) − b‖²` over Hermitian matrices, with three
//! choices of regularizer `R`:
//!
//! * `Qe`: the quadratic envelope `Q_γ(ι_{R_K⁺})` of the fixed-rank PSD
//!   indicator;
//! * `Nuclear`: `λ‖X‖_* + ι_{X ⪰ 0}` (PhaseLift);
//! * `Reweighted`: a sequence of weighted nuclear-norm problems, warm
//!   started from each other.
//!
//! Iterations follow `θ_k = (k+1)/2`, starting from `X⁰ = X¹ = 0`.

use serde::{Deserialize, Serialize};

use crate::envelope::{prox_qe_hermitian, ProxParams};
use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;
use crate::measurement::{operator_norm_power, MeasurementOperator, MeasurementVector};
use crate::metrics::numerical_rank;
use crate::tensor::ComplexTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Qe,
    Nuclear,
    Reweighted,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Qe => "qe",
            Method::Nuclear => "nuclear",
            Method::Reweighted => "reweighted",
        }
    }

    /// Absolute eigenvalue cutoff used when reporting the rank of an output.
    pub fn rank_tolerance(&self) -> f64 {
        match self {
            Method::Qe => 1e-6,
            Method::Nuclear | Method::Reweighted => 1e-3,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qe" => Ok(Method::Qe),
            "nuclear" => Ok(Method::Nuclear),
            "reweighted" => Ok(Method::Reweighted),
            other => Err(Error::Argument(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    /// Target rank `K`.
    pub rank: usize,
    /// Envelope stiffness; `None` means `N²` (or `M²` in strict mode).
    pub gamma: Option<f64>,
    /// Step size; `None` means `1/(M² + 1)`.
    pub step: Option<f64>,
    pub iterations: usize,
    /// Nuclear-norm weight for the baselines.
    pub lambda: f64,
    /// Reweighting offset.
    pub delta: f64,
    pub outer_rounds: usize,
    /// Require `γ > ‖𝒜‖²`, estimating the norm by power iteration.
    pub strict_gamma: bool,
    /// Stop once the stationarity residual falls below this (relative to
    /// `‖X‖_F`). Checked every `early_exit_every` iterations.
    pub early_exit_tol: Option<f64>,
    pub early_exit_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::Qe,
            rank: 1,
            gamma: None,
            step: None,
            iterations: 10_000,
            lambda: 0.01,
            delta: 0.01,
            outer_rounds: 2,
            strict_gamma: false,
            early_exit_tol: None,
            early_exit_every: 100,
        }
    }
}

impl SolverConfig {
    pub fn qe(rank: usize) -> Self {
        Self {
            rank,
            ..Self::default()
        }
    }

    pub fn nuclear(lambda: f64) -> Self {
        Self {
            method: Method::Nuclear,
            lambda,
            ..Self::default()
        }
    }

    pub fn reweighted(lambda: f64, delta: f64, outer_rounds: usize) -> Self {
        Self {
            method: Method::Reweighted,
            lambda,
            delta,
            outer_rounds,
            ..Self::default()
        }
    }

    /// Baseline weights tuned to the noise level: `λ = 0.01 + 0.75‖ε‖`,
    /// `δ = 0.01 + 0.05‖ε‖`.
    pub fn noise_preset(method: Method, noise_norm: f64) -> Self {
        Self {
            method,
            lambda: 0.01 + 0.75 * noise_norm,
            delta: 0.01 + 0.05 * noise_norm,
            ..Self::default()
        }
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    /// Fills in `γ` and `t` for a given operator and validates them.
    pub fn resolve(&self, op: &MeasurementOperator) -> Result<ResolvedParams> {
        let n_sig = op.signal_len() as f64;
        let m_meas = op.measurement_count() as f64;
        let gamma = self.gamma.unwrap_or(if self.strict_gamma {
            m_meas * m_meas
        } else {
            n_sig * n_sig
        });
        let step = self.step.unwrap_or(1.0 / (m_meas * m_meas + 1.0));
        if self.iterations == 0 {
            return Err(Error::Parameter("iterations must be at least 1".into()));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::Parameter(format!("step must be positive, got {step}")));
        }
        match self.method {
            Method::Qe => {
                if !(gamma.is_finite() && gamma > 0.0) {
                    return Err(Error::Parameter(format!("γ must be positive, got {gamma}")));
                }
                if step * gamma >= 1.0 {
                    return Err(Error::Parameter(format!(
                        "t·γ = {} must be below 1 for a single-valued prox",
                        step * gamma
                    )));
                }
                if self.strict_gamma {
                    let norm = operator_norm_power(op, 1e-10, 500)?;
                    if gamma <= norm * norm {
                        return Err(Error::Parameter(format!(
                            "strict mode needs γ > ‖𝒜‖² = {:.6e}, got {gamma}",
                            norm * norm
                        )));
                    }
                }
            }
            Method::Nuclear | Method::Reweighted => {
                if !(self.lambda > 0.0) {
                    return Err(Error::Parameter(format!("λ must be positive, got {}", self.lambda)));
                }
                if self.method == Method::Reweighted {
                    if !(self.delta > 0.0) {
                        return Err(Error::Parameter(format!("δ must be positive, got {}", self.delta)));
                    }
                    if self.outer_rounds == 0 {
                        return Err(Error::Parameter("outer_rounds must be at least 1".into()));
                    }
                }
            }
        }
        if self.rank == 0 {
            return Err(Error::Parameter("rank must be at least 1".into()));
        }
        Ok(ResolvedParams { gamma, step })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedParams {
    pub gamma: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationLog {
    /// `½‖𝒜(X^k) − b‖²` after each iteration.
    pub objective: Vec<f64>,
    /// Seconds since the solver started, per iteration.
    pub elapsed: Vec<f64>,
}

impl IterationLog {
    pub fn len(&self) -> usize {
        self.objective.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objective.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub matrix: HermitianMatrix,
    /// Leading scaled eigenvector; `None` when the output has no positive
    /// eigenvalue.
    pub signal: Option<ComplexTensor>,
    pub log: IterationLog,
    pub final_rank: usize,
    pub params: ResolvedParams,
}

/// Wall clock for the iteration log. `wasm32-unknown-unknown` has no clock,
/// so elapsed times read as zero there.
#[derive(Debug, Clone, Copy)]
struct Stopwatch {
    #[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
    start: std::time::Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Self {
            #[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
            start: std::time::Instant::now(),
        }
    }

    fn seconds(&self) -> f64 {
        #[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
        return self.start.elapsed().as_secs_f64();
        #[cfg(all(target_arch = "wasm32", target_os = "unknown"))]
        return 0.0;
    }
}

/// θ_k = (k + 1) / 2.
pub fn theta(k: usize) -> f64 {
    (k as f64 + 1.0) / 2.0
}

pub fn solve(op: &MeasurementOperator, b: &MeasurementVector, cfg: &SolverConfig) -> Result<ReconstructionResult> {
    match cfg.method {
        Method::Qe => fista_qe(op, b, cfg),
        Method::Nuclear => fista_nuclear(op, b, cfg),
        Method::Reweighted => fista_reweighted(op, b, cfg),
    }
}

pub fn fista_qe(op: &MeasurementOperator, b: &MeasurementVector, cfg: &SolverConfig) -> Result<ReconstructionResult> {
    expect_method(cfg, Method::Qe)?;
    let params = cfg.resolve(op)?;
    let prox_params = ProxParams::new(cfg.rank, params.gamma, 1.0 / params.step)?;
    let prox = |y: &HermitianMatrix| prox_qe_hermitian(y, &prox_params);
    let mut log = IterationLog::default();
    let start = HermitianMatrix::zeros(op.signal_len());
    let x = fista(op, b, params.step, cfg, start, &prox, &mut log, Stopwatch::start())?;
    finish(op, x, cfg, log, params)
}

pub fn fista_nuclear(op: &MeasurementOperator, b: &MeasurementVector, cfg: &SolverConfig) -> Result<ReconstructionResult> {
    expect_method(cfg, Method::Nuclear)?;
    let params = cfg.resolve(op)?;
    let weights = vec![1.0; op.signal_len()];
    let threshold = params.step * cfg.lambda;
    let prox = |y: &HermitianMatrix| weighted_psd_shrink(y, threshold, &weights);
    let mut log = IterationLog::default();
    let start = HermitianMatrix::zeros(op.signal_len());
    let x = fista(op, b, params.step, cfg, start, &prox, &mut log, Stopwatch::start())?;
    finish(op, x, cfg, log, params)
}

pub fn fista_reweighted(op: &MeasurementOperator, b: &MeasurementVector, cfg: &SolverConfig) -> Result<ReconstructionResult> {
    expect_method(cfg, Method::Reweighted)?;
    let params = cfg.resolve(op)?;
    let threshold = params.step * cfg.lambda;
    let mut weights = vec![1.0; op.signal_len()];
    let mut log = IterationLog::default();
    let clock = Stopwatch::start();
    let mut x = HermitianMatrix::zeros(op.signal_len());
    for round in 0..cfg.outer_rounds {
        let prox = |y: &HermitianMatrix| weighted_psd_shrink(y, threshold, &weights);
        x = fista(op, b, params.step, cfg, x, &prox, &mut log, clock)?;
        if round + 1 < cfg.outer_rounds {
            weights = reweight(&x.eigenvalues()?, cfg.delta);
        }
    }
    finish(op, x, cfg, log, params)
}

/// `w_i = 1 / (σ_i + δ)` with `σ` the singular values (absolute eigenvalues)
/// in non-increasing order, so weights come out non-decreasing.
pub fn reweight(eigenvalues: &[f64], delta: f64) -> Vec<f64> {
    let mut sigma: Vec<f64> = eigenvalues.iter().map(|v| v.abs()).collect();
    sigma.sort_by(|a, b| b.total_cmp(a));
    sigma.into_iter().map(|s| 1.0 / (s + delta)).collect()
}

/// Prox of `Σ_i τ w_i λ_i(X) + ι_{X ⪰ 0}`: eigenvalues in non-increasing
/// order are shrunk by `τ w_i` and clipped at zero.
pub fn weighted_psd_shrink(y: &HermitianMatrix, threshold: f64, weights: &[f64]) -> Result<HermitianMatrix> {
    let eig = y.eigh()?;
    let values: Vec<f64> = eig
        .values
        .iter()
        .zip(weights)
        .map(|(&l, &w)| (l - threshold * w).max(0.0))
        .collect();
    Ok(HermitianMatrix::from_spectrum(&eig.vectors, &values))
}

#[allow(clippy::too_many_arguments)]
fn fista(
    op: &MeasurementOperator,
    b: &MeasurementVector,
    step: f64,
    cfg: &SolverConfig,
    start: HermitianMatrix,
    prox: &dyn Fn(&HermitianMatrix) -> Result<HermitianMatrix>,
    log: &mut IterationLog,
    clock: Stopwatch,
) -> Result<HermitianMatrix> {
    let offset = log.len();
    let mut prev = start.clone();
    let mut cur = start;
    for k in 1..=cfg.iterations {
        let momentum = (theta(k) - 1.0) / theta(k + 1);
        let interp = if momentum == 0.0 {
            cur.clone()
        } else {
            cur.add_scaled(&cur.sub(&prev), momentum)
        };
        let grad = op.gradient(&interp, b)?;
        let next = prox(&interp.add_scaled(&grad, -step))?;
        if !next.is_finite() {
            return Err(Error::Divergence { iteration: offset + k });
        }
        let fit = 0.5 * op.apply(&next)?.distance(b).powi(2);
        if !fit.is_finite() {
            return Err(Error::Divergence { iteration: offset + k });
        }
        log.objective.push(fit);
        log.elapsed.push(clock.seconds());
        prev = cur;
        cur = next;

        if let Some(tol) = cfg.early_exit_tol {
            if k % cfg.early_exit_every.max(1) == 0 {
                let res = stationarity_residual(op, b, &cur, step, prox)?;
                if res <= tol * cur.frobenius_norm().max(f64::MIN_POSITIVE) {
                    break;
                }
            }
        }
    }
    Ok(cur)
}

/// `‖X − prox(X − t∇g(X))‖_F`, zero exactly at fixed points of the
/// forward-backward map.
pub fn stationarity_residual(
    op: &MeasurementOperator,
    b: &MeasurementVector,
    x: &HermitianMatrix,
    step: f64,
    prox: &dyn Fn(&HermitianMatrix) -> Result<HermitianMatrix>,
) -> Result<f64> {
    let grad = op.gradient(x, b)?;
    let mapped = prox(&x.add_scaled(&grad, -step))?;
    Ok(x.sub(&mapped).frobenius_norm())
}

/// Stationarity residual of the quadratic-envelope problem.
pub fn qe_stationarity(
    op: &MeasurementOperator,
    b: &MeasurementVector,
    x: &HermitianMatrix,
    cfg: &SolverConfig,
) -> Result<f64> {
    let params = cfg.resolve(op)?;
    let prox_params = ProxParams::new(cfg.rank, params.gamma, 1.0 / params.step)?;
    stationarity_residual(op, b, x, params.step, &|y| prox_qe_hermitian(y, &prox_params))
}

fn expect_method(cfg: &SolverConfig, method: Method) -> Result<()> {
    if cfg.method != method {
        return Err(Error::Parameter(format!(
            "solver for '{}' called with method '{}'",
            method.name(),
            cfg.method.name()
        )));
    }
    Ok(())
}

fn finish(
    op: &MeasurementOperator,
    matrix: HermitianMatrix,
    cfg: &SolverConfig,
    log: IterationLog,
    params: ResolvedParams,
) -> Result<ReconstructionResult> {
    let final_rank = numerical_rank(&matrix, cfg.method.rank_tolerance())?;
    let signal = match extract_signal_flat(&matrix) {
        Ok(v) => Some(ComplexTensor::tensorize(op.side(), op.dim(), &v)?),
        Err(Error::Degenerate(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(ReconstructionResult {
        matrix,
        signal,
        log,
        final_rank,
        params,
    })
}

/// `√λ₁ u₁` of a Hermitian matrix, as a flat vector.
pub fn extract_signal_flat(x: &HermitianMatrix) -> Result<Vec<num_complex::Complex64>> {
    let eig = x.eigh()?;
    let top = eig.values.first().copied().unwrap_or(0.0);
    if !(top > 0.0) {
        return Err(Error::Degenerate(format!(
            "largest eigenvalue {top:e} is not positive"
        )));
    }
    let scale = top.sqrt();
    Ok(eig.vectors.column(0).iter().map(|z| z * scale).collect())
}

/// Signal estimate from a lifted matrix: `√λ₁ u₁` reshaped onto the
/// `n^d` grid. With `rank > 1` the leading `rank` scaled eigenvectors are
/// returned.
pub fn extract_signal(x: &HermitianMatrix, rank: usize, n: usize, d: usize) -> Result<Vec<ComplexTensor>> {
    if rank == 0 {
        return Err(Error::Argument("rank must be at least 1".into()));
    }
    let eig = x.eigh()?;
    if rank > eig.values.len() {
        return Err(Error::Argument(format!(
            "asked for {rank} eigenpairs of a {}x{} matrix",
            x.dim(),
            x.dim()
        )));
    }
    (0..rank)
        .map(|i| {
            let lambda = eig.values[i];
            if !(lambda > 0.0) {
                return Err(Error::Degenerate(format!(
                    "eigenvalue {} is {lambda:e}, not positive",
                    i + 1
                )));
            }
            let v: Vec<_> = eig.vectors.column(i).iter().map(|z| z * lambda.sqrt()).collect();
            ComplexTensor::tensorize(n, d, &v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::MaskSet;
    use num_complex::Complex64;

    #[test]
    fn theta_sequence() {
        assert_eq!(theta(1), 1.0);
        assert_eq!(theta(2), 1.5);
        assert_eq!(theta(3), 2.0);
    }

    #[test]
    fn zero_data_keeps_zero_iterate() {
        let op = MeasurementOperator::regular(4, 1, 4, MaskSet::unmasked(4, 1)).unwrap();
        let b = MeasurementVector::zeros(4, 1);
        for cfg in [
            SolverConfig::qe(1).with_iterations(20),
            SolverConfig::nuclear(0.1).with_iterations(20),
            SolverConfig::reweighted(0.1, 0.1, 2).with_iterations(20),
        ] {
            let res = solve(&op, &b, &cfg).unwrap();
            assert_eq!(res.matrix.frobenius_norm(), 0.0);
            assert!(res.signal.is_none());
            assert_eq!(res.final_rank, 0);
        }
    }

    #[test]
    fn soft_threshold_step() {
        let y = HermitianMatrix::from_real_diagonal(&[3.0, 1.0]);
        let out = weighted_psd_shrink(&y, 1.0, &[1.0, 1.0]).unwrap();
        assert_eq!(out.eigenvalues().unwrap(), vec![2.0, 0.0]);
        let killed = weighted_psd_shrink(&y, 1e12, &[1.0, 1.0]).unwrap();
        assert_eq!(killed.frobenius_norm(), 0.0);
    }

    #[test]
    fn reweight_formula() {
        let w = reweight(&[0.01, 0.99, 0.0], 0.16);
        let expected = [1.0 / 1.15, 1.0 / 0.17, 1.0 / 0.16];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_preset_values() {
        let cfg = SolverConfig::noise_preset(Method::Reweighted, 2.0);
        assert!((cfg.lambda - 1.51).abs() < 1e-15);
        assert!((cfg.delta - 0.11).abs() < 1e-15);
    }

    #[test]
    fn step_gamma_product_is_checked() {
        let op = MeasurementOperator::regular(4, 1, 4, MaskSet::unmasked(4, 1)).unwrap();
        let cfg = SolverConfig {
            gamma: Some(10.0),
            step: Some(0.1),
            ..SolverConfig::qe(1)
        };
        assert!(matches!(cfg.resolve(&op), Err(Error::Parameter(_))));
        let defaults = SolverConfig::qe(1).resolve(&op).unwrap();
        assert_eq!(defaults.gamma, 16.0);
        assert_eq!(defaults.step, 1.0 / 17.0);
    }

    #[test]
    fn extraction() {
        let x = HermitianMatrix::from_real_diagonal(&[4.0, 0.0]);
        let v = extract_signal_flat(&x).unwrap();
        assert!((v[0].norm() - 2.0).abs() < 1e-15 && v[1].norm() == 0.0);
        assert!(matches!(
            extract_signal_flat(&HermitianMatrix::zeros(2)),
            Err(Error::Degenerate(_))
        ));
        let sig = [Complex64::new(0.3, -0.4), Complex64::new(0.0, 0.5), Complex64::new(-0.2, 0.1), Complex64::new(0.6, 0.0)];
        let t = extract_signal(&HermitianMatrix::outer(&sig), 1, 2, 2).unwrap();
        assert_eq!(t[0].shape(), &[2, 2]);
        let inner: Complex64 = t[0].as_slice().iter().zip(&sig).map(|(a, b)| a.conj() * b).sum();
        let norm2: f64 = sig.iter().map(|z| z.norm_sqr()).sum();
        assert!((inner.norm() - norm2).abs() < 1e-12);
    }
}
