//! Proximal operators of the quadratic envelope `Q_γ(ι_K⁺)`.
//!
//! `ι_K⁺` is the indicator of vectors with at most `K` non-zero entries, all
//! non-negative. Its quadratic envelope `Q_γ(ι_K⁺)` is the largest function
//! below `ι_K⁺` whose negative curvature is at most `γ`. The proximal map of
//! `Q_γ(ι_K⁺)/ρ` (for `ρ > γ`) is evaluated through the dual transform
//! `S_γ(ι_K⁺)(y) = -(γ/2) dist²(y, {x ≥ 0, ‖x‖₀ ≤ K})`:
//!
//! ```text
//! prox_{Q/ρ}(y) = (ρ y − γ z) / (ρ − γ),
//! z = argmin_x (ρ−γ)(Σ_{i≤K} max(x̂_i,0)² − ‖x‖²) + ρ‖x − y‖²
//! ```
//!
//! The inner problem reduces to a one-dimensional convex search over the
//! value `s = x_K`, solved exactly by scanning a sorted set of breakpoints.
//!
//! Matrices are handled spectrally: the envelope of `ι_{R_K⁺}` (PSD, rank at
//! most `K`) is the vector envelope applied to the eigenvalues.

use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;

/// Parameters of one proximal evaluation of `Q_γ(ι_K⁺)/ρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxParams {
    rank: usize,
    gamma: f64,
    rho: f64,
}

impl ProxParams {
    pub fn new(rank: usize, gamma: f64, rho: f64) -> Result<Self> {
        if rank == 0 {
            return Err(Error::Parameter("target rank K must be at least 1".into()));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::Parameter(format!("γ must be positive, got {gamma}")));
        }
        if !(rho.is_finite() && rho > gamma) {
            return Err(Error::Parameter(format!(
                "ρ must exceed γ for a single-valued prox, got ρ={rho}, γ={gamma}"
            )));
        }
        Ok(Self { rank, gamma, rho })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

/// A real vector in non-increasing order together with the permutation that
/// produced it: `values[i] = original[permutation[i]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedSpectrum {
    values: Vec<f64>,
    permutation: Vec<usize>,
}

impl SortedSpectrum {
    /// Stable non-increasing sort; equal entries keep their relative order.
    pub fn from_unsorted(y: &[f64]) -> Self {
        let mut permutation: Vec<usize> = (0..y.len()).collect();
        permutation.sort_by(|&a, &b| y[b].total_cmp(&y[a]));
        let values = permutation.iter().map(|&i| y[i]).collect();
        Self {
            values,
            permutation,
        }
    }

    /// Wraps an already sorted vector; fails on unsorted or NaN input.
    pub fn from_sorted(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Argument("spectrum contains NaN".into()));
        }
        if let Some(i) = values.windows(2).position(|w| w[0] < w[1]) {
            return Err(Error::Argument(format!(
                "spectrum not non-increasing at position {i}: {} < {}",
                values[i],
                values[i + 1]
            )));
        }
        let permutation = (0..values.len()).collect();
        Ok(Self {
            values,
            permutation,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Puts a vector given in sorted order back into the original order.
    pub fn unpermute(&self, sorted: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; sorted.len()];
        for (&orig, &v) in self.permutation.iter().zip(sorted) {
            out[orig] = v;
        }
        out
    }
}

/// `S_γ(ι_K⁺)(y) = (γ/2)[Σ_{j≤K} max(ŷ_j, 0)² − ‖y‖²]`, with `ŷ` the
/// decreasing rearrangement of `y`.
pub fn s_transform_iota_k_plus(y: &[f64], rank: usize, gamma: f64) -> Result<f64> {
    if rank > y.len() {
        return Err(Error::Argument(format!(
            "rank {rank} exceeds vector length {}",
            y.len()
        )));
    }
    let sorted = SortedSpectrum::from_unsorted(y);
    let kept: f64 = sorted.values()[..rank]
        .iter()
        .map(|&v| v.max(0.0).powi(2))
        .sum();
    let total: f64 = y.iter().map(|v| v * v).sum();
    Ok(0.5 * gamma * (kept - total))
}

/// Which closed form produced the inner solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerBranch {
    /// `x_i = y_i` for `i ≤ k̃(y)`, `x_i = (ρ/γ) y_i` beyond.
    Direct { kept: usize },
    /// `x_i = max(s, y_i)` for `i ≤ K`, `x_i = min(s, ρ y_i/γ)` beyond.
    Interval { s: f64 },
}

/// Solution of the inner problem, in the sorted order of its input.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolution {
    pub x: Vec<f64>,
    pub branch: InnerBranch,
}

/// Minimizer of `(ρ−γ)(Σ_{i≤K} max(x̂_i,0)² − ‖x‖²) + ρ‖x − y‖²` for sorted `y`.
pub fn prox_s_inner(y: &SortedSpectrum, p: &ProxParams) -> Vec<f64> {
    prox_s_inner_detailed(y, p).x
}

pub fn prox_s_inner_detailed(y: &SortedSpectrum, p: &ProxParams) -> InnerSolution {
    let y = y.values();
    let k = p.rank;
    let ratio = p.rho / p.gamma;
    let len = y.len();

    let direct = || {
        let nonneg = y.iter().take_while(|&&v| v >= 0.0).count();
        let kept = k.min(nonneg);
        let x = y
            .iter()
            .enumerate()
            .map(|(i, &v)| if i < kept { v } else { ratio * v })
            .collect();
        InnerSolution {
            x,
            branch: InnerBranch::Direct { kept },
        }
    };

    if k >= len {
        return direct();
    }
    let lo = y[k - 1];
    let hi = ratio * y[k];
    if lo < 0.0 || lo >= hi {
        return direct();
    }

    // lo >= 0 and hi > lo, so y[k] > 0. The optimal s = x_K lies in [lo, hi].
    let first_top = y.iter().position(|&v| v <= hi).unwrap_or(k - 1);
    let last_tail = (k..len).rev().find(|&i| ratio * y[i] >= lo).unwrap_or(k);

    let mut breaks: Vec<f64> = y[first_top..k]
        .iter()
        .copied()
        .chain(y[k..=last_tail].iter().map(|&v| ratio * v))
        .collect();
    breaks.push(hi);
    breaks.push(lo);
    breaks.sort_by(|a, b| b.total_cmp(a));
    breaks.dedup();

    let solve_on = |upper: f64, lower: f64| -> f64 {
        let mid = 0.5 * (upper + lower);
        // Entries pinned to s: the suffix of the head with y_i <= mid and
        // the prefix of the tail with ρ y_i / γ >= mid.
        let j = (0..k).find(|&i| y[i] <= mid).unwrap_or(k - 1);
        let l = (k..len).rev().find(|&i| ratio * y[i] >= mid).unwrap_or(k);
        let sum: f64 = y[j..=l].iter().sum();
        let denom = p.rho * (k - j) as f64 + p.gamma * (l + 1 - k) as f64;
        p.rho * sum / denom
    };

    let mut chosen = None;
    let mut best_miss = (f64::INFINITY, lo);
    for w in breaks.windows(2) {
        let (upper, lower) = (w[0], w[1]);
        let s = solve_on(upper, lower);
        if lower <= s && s <= upper {
            chosen = Some(s);
            break;
        }
        let miss = (lower - s).max(s - upper);
        if miss < best_miss.0 {
            best_miss = (miss, s.clamp(lower, upper));
        }
    }
    // Rounding can push s_I a few ulps outside every interval when it sits
    // on a breakpoint; fall back to the nearest clamped candidate.
    let s = chosen.unwrap_or(best_miss.1);

    let x = y
        .iter()
        .enumerate()
        .map(|(i, &v)| if i < k { s.max(v) } else { s.min(ratio * v) })
        .collect();
    InnerSolution {
        x,
        branch: InnerBranch::Interval { s },
    }
}

/// `prox_{Q_γ(ι_K⁺)/ρ}(y)`: the unique minimizer of
/// `Q_γ(ι_K⁺)(x) + (ρ/2)‖x − y‖²`.
pub fn prox_qe_scalar(y: &[f64], p: &ProxParams) -> Result<Vec<f64>> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("prox input contains non-finite values".into()));
    }
    let sorted = SortedSpectrum::from_unsorted(y);
    let out = prox_qe_sorted(&sorted, p);
    Ok(sorted.unpermute(&out))
}

/// The prox on an already sorted vector; the result is in the same order.
pub fn prox_qe_sorted(y: &SortedSpectrum, p: &ProxParams) -> Vec<f64> {
    let z = prox_s_inner(y, p);
    let scale = p.gamma / (p.rho - p.gamma);
    // (ρy − γz)/(ρ−γ) written as y + γ(y − z)/(ρ−γ): exact when z = y.
    y.values()
        .iter()
        .zip(&z)
        .map(|(&yi, &zi)| yi + scale * (yi - zi))
        .collect()
}

/// Spectral lift of [`prox_qe_scalar`] to Hermitian matrices: the prox of
/// `Q_γ(ι_{R_K⁺})/ρ` where `R_K⁺` is the PSD matrices of rank at most `K`.
pub fn prox_qe_hermitian(x: &HermitianMatrix, p: &ProxParams) -> Result<HermitianMatrix> {
    let eig = x.eigh()?;
    let sorted = SortedSpectrum::from_sorted(eig.values)?;
    let values = prox_qe_sorted(&sorted, p);
    Ok(HermitianMatrix::from_spectrum(&eig.vectors, &values))
}
