//! Browser bindings for three small qelift operations: the envelope prox on
//! a short vector, a 1-D recovery run, and the rank of the lifted Fourier
//! operator as the grid side grows.

use wasm_bindgen::prelude::*;

use qelift::envelope::{prox_qe_scalar, ProxParams};
use qelift::harness::{add_noise, generate_ground_truth, generate_masks};
use qelift::measurement::{expected_lifted_rank, lifted_fourier_rank, FrequencyGrid, DEFAULT_RANK_TOL};
use qelift::metrics::{eigen_table, phase_distance};
use qelift::{solve, HermitianMatrix, MeasurementOperator, Method, SolverConfig};

fn js_err(e: qelift::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// `prox_{Q_γ(ι_K⁺)/ρ}(y)` for a vector `y`.
#[wasm_bindgen]
pub fn prox(y: Vec<f64>, rank: usize, gamma: f64, rho: f64) -> Result<Vec<f64>, JsError> {
    let params = ProxParams::new(rank, gamma, rho).map_err(js_err)?;
    prox_qe_scalar(&y, &params).map_err(js_err)
}

/// Second prox coordinate across `y₁ ∈ [lo, hi]` with `y₂` fixed, sampled
/// at `samples` points; returns interleaved `(x₁, x₂)` pairs.
#[wasm_bindgen]
pub fn prox_curve(y2: f64, lo: f64, hi: f64, samples: usize, gamma: f64, rho: f64) -> Result<Vec<f64>, JsError> {
    let params = ProxParams::new(1, gamma, rho).map_err(js_err)?;
    let mut out = Vec::with_capacity(2 * samples);
    for i in 0..samples {
        let y1 = lo + (hi - lo) * i as f64 / (samples.max(2) - 1) as f64;
        out.extend(prox_qe_scalar(&[y1, y2], &params).map_err(js_err)?);
    }
    Ok(out)
}

/// Outcome of [`recover`].
#[wasm_bindgen]
pub struct Recovery {
    truth: Vec<f64>,
    estimate: Vec<f64>,
    eigenvalues: Vec<f64>,
    objective: Vec<f64>,
    phase_distance: f64,
    rank: usize,
}

#[wasm_bindgen]
impl Recovery {
    /// `|x₀|` per sample.
    #[wasm_bindgen(getter)]
    pub fn truth(&self) -> Vec<f64> {
        self.truth.clone()
    }

    /// `|x̃|` per sample.
    #[wasm_bindgen(getter)]
    pub fn estimate(&self) -> Vec<f64> {
        self.estimate.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues.clone()
    }

    /// `½‖𝒜(X^k) − b‖²` per iteration.
    #[wasm_bindgen(getter)]
    pub fn objective(&self) -> Vec<f64> {
        self.objective.clone()
    }

    #[wasm_bindgen(getter, js_name = phaseDistance)]
    pub fn phase_distance(&self) -> f64 {
        self.phase_distance
    }

    #[wasm_bindgen(getter)]
    pub fn rank(&self) -> usize {
        self.rank
    }
}

/// Recovers a random unit-norm signal of length `n` from `m = n` masked
/// Fourier intensities with `‖ε‖ = noise`.
#[wasm_bindgen]
pub fn recover(
    n: usize,
    masks: usize,
    noise: f64,
    iterations: usize,
    method: &str,
    seed: u64,
) -> Result<Recovery, JsError> {
    let method: Method = method.parse().map_err(js_err)?;
    let x0 = generate_ground_truth(n, 1, seed).map_err(js_err)?;
    let mask_set = generate_masks(n, 1, masks, seed.wrapping_add(1)).map_err(js_err)?;
    let op = MeasurementOperator::regular(n, 1, n, mask_set).map_err(js_err)?;
    let clean = op.apply(&HermitianMatrix::outer(x0.as_slice())).map_err(js_err)?;
    let b = add_noise(&clean, noise, seed.wrapping_add(2)).map_err(js_err)?;
    let cfg = SolverConfig::noise_preset(method, noise).with_iterations(iterations);
    let result = solve(&op, &b, &cfg).map_err(js_err)?;
    let estimate = result.signal.unwrap_or_else(|| qelift::ComplexTensor::zeros(vec![n]));
    Ok(Recovery {
        truth: x0.as_slice().iter().map(|z| z.norm()).collect(),
        estimate: estimate.as_slice().iter().map(|z| z.norm()).collect(),
        eigenvalues: eigen_table(&result.matrix, n.min(10)).map_err(js_err)?,
        objective: result.log.objective,
        phase_distance: phase_distance(&x0, &estimate).map_err(js_err)?,
        rank: result.final_rank,
    })
}

/// Interleaved `(m, rank, min(m, 2n−1))` triples for `m = n..=m_max`, `d = 1`.
#[wasm_bindgen]
pub fn rank_table(n: usize, m_max: usize) -> Result<Vec<u32>, JsError> {
    let mut out = Vec::new();
    for m in n.max(1)..=m_max {
        let grid = FrequencyGrid::regular(m, 1).map_err(js_err)?;
        let rank = lifted_fourier_rank(n, 1, grid, DEFAULT_RANK_TOL).map_err(js_err)?;
        out.extend([m as u32, rank as u32, expected_lifted_rank(n, 1, m) as u32]);
    }
    Ok(out)
}
