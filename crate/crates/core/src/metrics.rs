//! Reconstruction quality metrics.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;
use crate::tensor::ComplexTensor;

/// Per-trial quality numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialMetrics {
    /// `min_{|c|=1} ‖c x₀ − x̃‖²`.
    pub phase_distance: f64,
    /// `‖X̃ − x₀x₀*‖_F`.
    pub frob_err: f64,
    /// `‖𝒜(X̃) − b‖`.
    pub residual: f64,
    /// `‖ε‖ / ‖b‖`.
    pub nsr: f64,
    pub rank_at_tol: usize,
    pub top_eigs: Vec<f64>,
}

/// `min_{|c|=1} ‖c x₀ − x̃‖² = ‖x₀‖² + ‖x̃‖² − 2|⟨x₀, x̃⟩|`.
pub fn phase_distance(x0: &ComplexTensor, xt: &ComplexTensor) -> Result<f64> {
    if x0.shape() != xt.shape() {
        return Err(Error::Dimension(format!(
            "shapes {:?} and {:?} differ",
            x0.shape(),
            xt.shape()
        )));
    }
    let cross: Complex64 = x0
        .as_slice()
        .iter()
        .zip(xt.as_slice())
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok((x0.norm_sqr() + xt.norm_sqr() - 2.0 * cross.norm()).max(0.0))
}

/// Count of eigenvalues with `|λ| > tol`.
pub fn numerical_rank(x: &HermitianMatrix, tol: f64) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(Error::Argument(format!("rank tolerance must be positive, got {tol}")));
    }
    if x.frobenius_norm() == 0.0 {
        return Ok(0);
    }
    Ok(x.eigenvalues()?.iter().filter(|v| v.abs() > tol).count())
}

/// Same as [`numerical_rank`] with the cutoff scaled by the largest
/// `|λ|`.
pub fn numerical_rank_relative_eigs(x: &HermitianMatrix, tol: f64) -> Result<usize> {
    let values = x.eigenvalues()?;
    let top = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if top == 0.0 {
        return Ok(0);
    }
    Ok(values.iter().filter(|v| v.abs() > tol * top).count())
}

/// The `count` leading eigenvalues, non-increasing.
pub fn eigen_table(x: &HermitianMatrix, count: usize) -> Result<Vec<f64>> {
    if count > x.dim() {
        return Err(Error::Argument(format!(
            "asked for {count} eigenvalues of a {0}x{0} matrix",
            x.dim()
        )));
    }
    let mut values = x.eigenvalues()?;
    values.truncate(count);
    Ok(values)
}

/// `‖X̃ − x₀x₀*‖_F`.
pub fn lifted_error(x: &HermitianMatrix, x0: &ComplexTensor) -> Result<f64> {
    let truth = HermitianMatrix::outer(&x0.vectorize()?);
    if truth.dim() != x.dim() {
        return Err(Error::Dimension(format!(
            "ground truth lifts to {0}x{0}, estimate is {1}x{1}",
            truth.dim(),
            x.dim()
        )));
    }
    Ok(x.sub(&truth).frobenius_norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: &[(f64, f64)]) -> ComplexTensor {
        ComplexTensor::new(vec![v.len()], v.iter().map(|&(r, i)| Complex64::new(r, i)).collect()).unwrap()
    }

    #[test]
    fn phase_distance_examples() {
        let x0 = t(&[(1.0, 0.0), (0.0, 0.0)]);
        let x1 = t(&[(0.0, 0.0), (1.0, 0.0)]);
        assert!((phase_distance(&x0, &x1).unwrap() - 2.0).abs() < 1e-15);
        let zero = t(&[(0.0, 0.0), (0.0, 0.0)]);
        assert_eq!(phase_distance(&x0, &zero).unwrap(), 1.0);
        let mut rotated = t(&[(0.3, -0.2), (0.5, 0.9)]);
        let base = rotated.clone();
        rotated.scale(Complex64::from_polar(1.0, 2.1));
        assert!(phase_distance(&base, &rotated).unwrap() < 1e-15);
        assert!(phase_distance(&base, &t(&[(1.0, 0.0)])).is_err());
    }

    #[test]
    fn rank_examples() {
        let r = |d: &[f64]| numerical_rank(&HermitianMatrix::from_real_diagonal(d), 1e-6).unwrap();
        assert_eq!(r(&[1.0, 1e-8]), 1);
        assert_eq!(r(&[0.0, 0.0]), 0);
        assert_eq!(r(&[1.0, 2e-6, 0.0]), 2);
        assert_eq!(r(&[1.0, -2e-6, 0.0]), 2);
    }

    #[test]
    fn eigen_table_examples() {
        let x = HermitianMatrix::from_real_diagonal(&[1.0, 3.0, 2.0]);
        assert_eq!(eigen_table(&x, 2).unwrap(), vec![3.0, 2.0]);
        assert!(eigen_table(&x, 4).is_err());
        let v = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8), Complex64::new(0.0, 0.0)];
        let table = eigen_table(&HermitianMatrix::outer(&v), 3).unwrap();
        assert!((table[0] - 1.0).abs() < 1e-14);
        assert!(table[1..].iter().all(|x| x.abs() < 1e-14));
    }
}
