//! Dense matrix form of the lifted operator and its numerical rank.

use num_complex::Complex64;

use super::grid::FrequencyGrid;
use super::masks::MaskSet;
use super::operator::MeasurementOperator;
use crate::error::{Error, Result};
use crate::hermitian::CMatrix;

/// Upper bound on `M · N²` for materialized operators.
pub const DENSE_ENTRY_LIMIT: usize = 10_000_000;

/// Default relative singular-value cutoff for [`lifted_fourier_rank`].
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// The `M x N²` matrix `A` with `A · vec(X) = 𝒜(X)`, where `vec` stacks
/// columns. Row `k` holds `conj(a_k[i]) a_k[j]` at column `i + j N`.
pub fn build_dense_matrix(op: &MeasurementOperator) -> Result<CMatrix> {
    let big_n = op.signal_len();
    let rows = op.measurement_count();
    let entries = rows.saturating_mul(big_n * big_n);
    if entries > DENSE_ENTRY_LIMIT {
        return Err(Error::Capacity {
            entries,
            limit: DENSE_ENTRY_LIMIT,
        });
    }
    let mut dense = CMatrix::zeros(rows, big_n * big_n);
    for k in 0..rows {
        let a = op.measurement_vector(k);
        for j in 0..big_n {
            for i in 0..big_n {
                dense[(k, i + j * big_n)] = a[i].conj() * a[j];
            }
        }
    }
    Ok(dense)
}

/// Column-stacked `vec(X)`.
pub fn vectorize_matrix(x: &CMatrix) -> Vec<Complex64> {
    x.iter().copied().collect()
}

/// Count of singular values above `tol · σ_max`.
pub fn numerical_rank_relative(a: &CMatrix, tol: f64) -> Result<usize> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(0);
    }
    // the SVD of the shorter side is cheaper and has the same spectrum
    let sv = if a.nrows() <= a.ncols() {
        a.adjoint().svd(false, false).singular_values
    } else {
        a.clone().svd(false, false).singular_values
    };
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if !smax.is_finite() {
        return Err(Error::Numerical("singular values are not finite".into()));
    }
    if smax == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > tol * smax).count())
}

/// Numerical rank of the unmasked lifted Fourier operator on `{0..n-1}^d`.
pub fn lifted_fourier_rank(n: usize, d: usize, grid: FrequencyGrid, tol: f64) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(Error::Argument(format!("rank tolerance must be positive, got {tol}")));
    }
    let op = MeasurementOperator::new(n, d, grid, MaskSet::unmasked(n, d))?;
    let dense = build_dense_matrix(&op)?;
    numerical_rank_relative(&dense, tol)
}

/// `min(|S|, (2n-1)^d)`, the rank of the lifted operator for non-degenerate
/// frequencies.
pub fn expected_lifted_rank(n: usize, d: usize, samples: usize) -> usize {
    samples.min((2 * n - 1).pow(d as u32))
}
