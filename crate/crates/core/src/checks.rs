//! Independent reference computations and the randomized suites that compare
//! the fast paths against them.
//!
//! Nothing here calls into the closed-form prox or the FFT operator path it
//! is used to check. The envelope value is computed from its variational
//! definition reduced to an isotonic projection; the prox reference
//! minimizes the strongly convex objective by projected gradient descent.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::envelope::{prox_qe_scalar, ProxParams};
use crate::error::Result;
use crate::hermitian::{hermitian_defect, HermitianMatrix};
use crate::measurement::{MaskSet, MeasurementOperator, MeasurementVector};

/// Euclidean projection onto the non-increasing cone (pool adjacent
/// violators).
pub fn pava_nonincreasing(t: &[f64]) -> Vec<f64> {
    // blocks of (sum, count)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(t.len());
    for &v in t {
        blocks.push((v, 1));
        while blocks.len() >= 2 {
            let (s1, c1) = blocks[blocks.len() - 2];
            let (s2, c2) = blocks[blocks.len() - 1];
            if s1 / c1 as f64 >= s2 / c2 as f64 {
                break;
            }
            blocks.pop();
            let last = blocks.len() - 1;
            blocks[last] = (s1 + s2, c1 + c2);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(s, c)| std::iter::repeat(s / c as f64).take(c))
        .collect()
}

/// `Q_γ(ι_K⁺)(x)`, the quadratic envelope of the sparse non-negative
/// indicator, from `Q = S_γ(S_γ(ι))`:
///
/// for `x ≥ 0` sorted non-increasingly, `Q(x) = (γ/2)(‖P(t)‖² − ‖x‖²)` with
/// `t = (x_1, …, x_{K-1}, Σ_{i≥K} x_i)` and `P` the projection onto the
/// non-increasing cone; `Q(x) = +∞` if any entry is negative.
pub fn envelope_value(x: &[f64], rank: usize, gamma: f64) -> f64 {
    if x.iter().any(|&v| v < 0.0) {
        return f64::INFINITY;
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let p = pava_nonincreasing(&head_tail(&sorted, rank));
    let proj: f64 = p.iter().map(|v| v * v).sum();
    let norm: f64 = sorted.iter().map(|v| v * v).sum();
    0.5 * gamma * (proj - norm)
}

fn head_tail(sorted: &[f64], rank: usize) -> Vec<f64> {
    let k = rank.min(sorted.len());
    let mut t = sorted[..k - 1].to_vec();
    t.push(sorted[k - 1..].iter().sum());
    t
}

/// Gradient of the envelope on the region `x_1 ≥ … ≥ x_n ≥ 0`.
fn envelope_gradient_sorted(x: &[f64], rank: usize, gamma: f64) -> Vec<f64> {
    let k = rank.min(x.len());
    let p = pava_nonincreasing(&head_tail(x, rank));
    x.iter()
        .enumerate()
        .map(|(i, &xi)| {
            let adj = if i < k - 1 { p[i] } else { p[k - 1] };
            gamma * (adj - xi)
        })
        .collect()
}

/// Reference for `prox_{Q_γ(ι_K⁺)/ρ}(y)`: projected gradient descent on
/// `Q(x) + (ρ/2)‖x − y‖²` over `{x_1 ≥ … ≥ x_n ≥ 0}` (after sorting `y`).
pub fn prox_oracle(y: &[f64], rank: usize, gamma: f64, rho: f64) -> Vec<f64> {
    let n = y.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[b].total_cmp(&y[a]));
    let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();

    let lipschitz = gamma * (n as f64 + 1.0) + rho;
    let step = 1.0 / lipschitz;
    let project = |v: Vec<f64>| -> Vec<f64> {
        pava_nonincreasing(&v).into_iter().map(|x| x.max(0.0)).collect()
    };
    let mut x = project(ys.clone());
    for _ in 0..20_000 {
        let g = envelope_gradient_sorted(&x, rank, gamma);
        let trial: Vec<f64> = x
            .iter()
            .zip(&g)
            .zip(&ys)
            .map(|((&xi, &gi), &yi)| xi - step * (gi + rho * (xi - yi)))
            .collect();
        let next = project(trial);
        let change = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        x = next;
        if change < 1e-16 {
            break;
        }
    }
    let mut out = vec![0.0; n];
    for (&i, &v) in order.iter().zip(&x) {
        out[i] = v;
    }
    out
}

/// Outcome of a randomized comparison suite.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteReport {
    pub cases: usize,
    pub failures: usize,
    /// Largest observed error (absolute for the prox suite, relative for
    /// the gradient suite).
    pub max_error: f64,
    pub first_failure: Option<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    fn record(&mut self, err: f64, tol: f64, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if err.is_nan() || err > tol {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(describe());
            }
        }
        if err.is_nan() {
            self.max_error = f64::NAN;
        } else if !self.max_error.is_nan() {
            self.max_error = self.max_error.max(err);
        }
    }
}

/// Compares [`prox_qe_scalar`] with [`prox_oracle`] on random vectors of
/// length 1..=6, `γ ∈ {0.5, 1, 2}`, `ρ ∈ {1.5γ, 3γ}`.
pub fn run_prox_suite(cases: usize, seed: u64, tol: f64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport::default();
    for _ in 0..cases {
        let len = rng.random_range(1..=6);
        let rank = rng.random_range(1..=len);
        let gamma = [0.5, 1.0, 2.0][rng.random_range(0..3)];
        let rho = gamma * [1.5, 3.0][rng.random_range(0..2)];
        let scale = [0.5, 2.0, 5.0][rng.random_range(0..3)];
        let y: Vec<f64> = (0..len).map(|_| scale * (2.0 * rng.random::<f64>() - 1.0)).collect();
        let got = prox_qe_scalar(&y, &ProxParams::new(rank, gamma, rho)?)?;
        let want = prox_oracle(&y, rank, gamma, rho);
        let err = got
            .iter()
            .zip(&want)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        report.record(err, tol, || {
            format!("y={y:?} K={rank} γ={gamma} ρ={rho}: got {got:?}, reference {want:?}")
        });
    }
    Ok(report)
}

/// Random instance for operator checks.
pub struct OperatorCase {
    pub op: MeasurementOperator,
    pub x: HermitianMatrix,
    pub b: MeasurementVector,
    pub description: String,
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> HermitianMatrix {
    let m = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    HermitianMatrix::new(m).expect("square")
}

/// `n ≤ 5`, `d ∈ {1, 2}`, `m ∈ {n..2n}`, up to three masks.
pub fn random_operator_case(rng: &mut impl Rng) -> Result<OperatorCase> {
    let d = rng.random_range(1..=2);
    let n: usize = if d == 1 { rng.random_range(1..=5) } else { rng.random_range(1..=4) };
    let m = rng.random_range(n..=2 * n);
    let n_masks = rng.random_range(0..=3);
    let big_n = n.pow(d as u32);
    let masks = (0..n_masks)
        .map(|_| (0..big_n).map(|_| rng.random::<bool>()).collect())
        .collect();
    let op = MeasurementOperator::regular(n, d, m, MaskSet::new(n, d, masks)?)?;
    let x = random_hermitian(rng, big_n);
    let data: Vec<Complex64> = (0..op.measurement_count())
        .map(|_| Complex64::new(rng.random::<f64>() * 2.0, rng.random::<f64>() - 0.5))
        .collect();
    let b = MeasurementVector::new(op.block_len(), data)?;
    let description = format!("n={n} d={d} m={m} masks={n_masks}");
    Ok(OperatorCase { op, x, b, description })
}

fn relative(diff: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        diff
    } else {
        diff / reference
    }
}

/// FFT vs naive forward evaluation, relative error.
pub fn forward_agreement(case: &OperatorCase) -> Result<f64> {
    let fast = case.op.forward_fft(&case.x)?;
    let slow = case.op.forward_naive(&case.x)?;
    Ok(relative(fast.distance(&slow), slow.norm()))
}

/// FFT vs naive gradient, relative error.
pub fn gradient_agreement(case: &OperatorCase) -> Result<f64> {
    let fast = case.op.residual_gradient_fft(&case.x, &case.b)?;
    let slow = case.op.gradient_naive(&case.x, &case.b)?;
    Ok(relative(fast.sub(&slow).frobenius_norm(), slow.frobenius_norm()))
}

/// Central-difference check of the gradient of `½‖𝒜(X) − b‖²` along a
/// random Hermitian direction; returns the relative discrepancy.
pub fn finite_difference_error(case: &OperatorCase, rng: &mut impl Rng, h: f64) -> Result<f64> {
    let dir = random_hermitian(rng, case.x.dim());
    let objective = |x: &HermitianMatrix| -> Result<f64> {
        let r = case.op.forward_naive(x)?;
        // the objective sees only the real part of the residual: 𝒜(X) is real
        // on Hermitian X and the imaginary part of b is a constant offset
        Ok(0.5 * r.distance(&case.b).powi(2))
    };
    let plus = objective(&case.x.add_scaled(&dir, h))?;
    let minus = objective(&case.x.add_scaled(&dir, -h))?;
    let numeric = (plus - minus) / (2.0 * h);
    let analytic = case.op.residual_gradient_fft(&case.x, &case.b)?.inner_product(&dir);
    Ok((numeric - analytic).abs() / analytic.abs().max(numeric.abs()).max(1e-12))
}

/// Hermitian defect of the FFT gradient before symmetrization, relative
/// to its norm.
pub fn gradient_hermitian_drift(case: &OperatorCase) -> Result<f64> {
    let residual: Vec<f64> = case
        .op
        .forward_fft(&case.x)?
        .as_slice()
        .iter()
        .zip(case.b.as_slice())
        .map(|(c, b)| (c - b).re)
        .collect();
    let raw = case.op.adjoint_unsymmetrized(&residual)?;
    let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok(relative(hermitian_defect(&raw), norm))
}

/// Tolerances of the operator suite.
#[derive(Debug, Clone, Copy)]
pub struct GradTolerances {
    pub agreement: f64,
    pub finite_difference: f64,
    pub fd_step: f64,
}

impl Default for GradTolerances {
    fn default() -> Self {
        Self {
            agreement: 1e-10,
            finite_difference: 1e-5,
            fd_step: 1e-4,
        }
    }
}

/// Forward, gradient and finite-difference reports over random cases.
pub fn run_grad_suite(cases: usize, seed: u64, tol: GradTolerances) -> Result<[SuiteReport; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut forward = SuiteReport::default();
    let mut gradient = SuiteReport::default();
    let mut fd = SuiteReport::default();
    for _ in 0..cases {
        let case = random_operator_case(&mut rng)?;
        let e = forward_agreement(&case)?;
        forward.record(e, tol.agreement, || format!("forward {}: rel err {e:e}", case.description));
        let e = gradient_agreement(&case)?;
        gradient.record(e, tol.agreement, || format!("gradient {}: rel err {e:e}", case.description));
        let e = finite_difference_error(&case, &mut rng, tol.fd_step)?;
        fd.record(e, tol.finite_difference, || {
            format!("finite difference {}: rel err {e:e}", case.description)
        });
    }
    Ok([forward, gradient, fd])
}
