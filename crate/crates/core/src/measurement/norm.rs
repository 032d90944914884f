use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::operator::{MeasurementOperator, MeasurementVector};
use crate::error::{Error, Result};
use crate::hermitian::{CMatrix, HermitianMatrix};

/// How to obtain `‖𝒜‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormMethod {
    /// The a-priori bracket `N ≤ ‖𝒜‖ ≤ M`, valid for `m = n`.
    Bound,
    /// Power iteration on `X ↦ 𝒜*𝒜 X`.
    PowerIteration { rel_tol: f64, max_iter: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormEstimate {
    Bounds { lower: f64, upper: f64 },
    Value(f64),
}

pub fn operator_norm(op: &MeasurementOperator, method: NormMethod) -> Result<NormEstimate> {
    match method {
        NormMethod::Bound => {
            let (lower, upper) = operator_norm_bounds(op)?;
            Ok(NormEstimate::Bounds { lower, upper })
        }
        NormMethod::PowerIteration { rel_tol, max_iter } => {
            operator_norm_power(op, rel_tol, max_iter).map(NormEstimate::Value)
        }
    }
}

/// `(N, M)` for an operator on an `m = n` regular grid.
pub fn operator_norm_bounds(op: &MeasurementOperator) -> Result<(f64, f64)> {
    match op.grid().regular_side() {
        Some(m) if m == op.side() => Ok((op.signal_len() as f64, op.measurement_count() as f64)),
        _ => Err(Error::Precondition(
            "the norm bracket N ≤ ‖𝒜‖ ≤ M is only established for regular grids with m = n".into(),
        )),
    }
}

/// `‖𝒜‖` over Hermitian matrices with the Frobenius norm, by power
/// iteration on the normal operator from a fixed pseudo-random start.
pub fn operator_norm_power(op: &MeasurementOperator, rel_tol: f64, max_iter: usize) -> Result<f64> {
    let big_n = op.signal_len();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6e6f726d);
    let start = CMatrix::from_fn(big_n, big_n, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    let mut x = HermitianMatrix::new(start)?;
    x = x.scaled(1.0 / x.frobenius_norm());

    let zero_data = MeasurementVector::zeros(op.block_len(), op.block_count());
    let mut estimate = 0.0;
    for _ in 0..max_iter.max(1) {
        // 𝒜*𝒜X is the gradient of ½‖𝒜X‖², i.e. the residual gradient with b = 0
        let y = op.gradient(&x, &zero_data)?;
        // Rayleigh quotient ⟨X, 𝒜*𝒜X⟩ = ‖𝒜X‖² for unit ‖X‖_F
        let next = x.inner_product(&y).max(0.0).sqrt();
        let norm_y = y.frobenius_norm();
        if norm_y == 0.0 {
            return Ok(0.0);
        }
        x = y.scaled(1.0 / norm_y);
        let converged = (next - estimate).abs() <= rel_tol * next;
        estimate = next;
        if converged {
            break;
        }
    }
    Ok(estimate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::MaskSet;

    #[test]
    fn pure_fourier_norm_is_n() {
        let op = MeasurementOperator::regular(10, 1, 10, MaskSet::unmasked(10, 1)).unwrap();
        let v = operator_norm_power(&op, 1e-14, 200).unwrap();
        assert!((v - 10.0).abs() < 1e-8 * 10.0, "{v}");
        assert_eq!(operator_norm_bounds(&op).unwrap(), (10.0, 10.0));
    }

    #[test]
    fn bound_needs_square_grid() {
        let op = MeasurementOperator::regular(4, 1, 6, MaskSet::unmasked(4, 1)).unwrap();
        assert!(matches!(operator_norm(&op, NormMethod::Bound), Err(Error::Precondition(_))));
    }
}
