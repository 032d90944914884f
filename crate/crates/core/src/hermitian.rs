//! Hermitian matrices and their spectral decomposition.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// An `N x N` Hermitian matrix. Construction symmetrizes, so the stored
/// matrix is exactly Hermitian up to the rounding of `(X + X*) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    inner: CMatrix,
}

/// Eigenpairs with eigenvalues in non-increasing order; column `i` of
/// `vectors` belongs to `values[i]`.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianMatrix {
    pub fn new(mut m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        symmetrize_in_place(&mut m);
        Ok(Self { inner: m })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            inner: CMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: CMatrix::identity(n, n),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        Self { inner: m }
    }

    /// The rank-one matrix `x x*`.
    pub fn outer(x: &[Complex64]) -> Self {
        let n = x.len();
        let m = CMatrix::from_fn(n, n, |i, j| x[i] * x[j].conj());
        Self { inner: m }
    }

    /// `U diag(values) U*`, skipping zero eigenvalues.
    pub fn from_spectrum(vectors: &CMatrix, values: &[f64]) -> Self {
        let n = vectors.nrows();
        let active: Vec<usize> = (0..values.len()).filter(|&i| values[i] != 0.0).collect();
        if active.is_empty() {
            return Self::zeros(n);
        }
        let mut scaled = CMatrix::zeros(n, active.len());
        let mut basis = CMatrix::zeros(n, active.len());
        for (c, &i) in active.iter().enumerate() {
            let col = vectors.column(i);
            basis.set_column(c, &col);
            scaled.set_column(c, &(col * Complex64::new(values[i], 0.0)));
        }
        let mut m = scaled * basis.adjoint();
        symmetrize_in_place(&mut m);
        Self { inner: m }
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.inner
    }

    pub fn into_matrix(self) -> CMatrix {
        self.inner
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.inner.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Real Frobenius inner product `Re tr(A* B)`.
    pub fn inner_product(&self, other: &Self) -> f64 {
        self.inner
            .iter()
            .zip(other.inner.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    pub fn add_scaled(&self, other: &Self, factor: f64) -> Self {
        let m = &self.inner + &other.inner * Complex64::new(factor, 0.0);
        Self { inner: m }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            inner: &self.inner * Complex64::new(factor, 0.0),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            inner: &self.inner - &other.inner,
        }
    }

    /// Conjugation `U X U*`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Self {
        let mut m = u * &self.inner * u.adjoint();
        symmetrize_in_place(&mut m);
        Self { inner: m }
    }

    /// Spectral decomposition with eigenvalues sorted non-increasingly.
    /// Ties keep the eigensolver's order (stable sort).
    pub fn eigh(&self) -> Result<Eigh> {
        let n = self.dim();
        if n == 0 {
            return Ok(Eigh {
                values: Vec::new(),
                vectors: CMatrix::zeros(0, 0),
            });
        }
        if !self.is_finite() {
            return Err(Error::Numerical(
                "eigendecomposition of a matrix with non-finite entries".into(),
            ));
        }
        let max_iter = 1000 * n.max(10);
        let eig = SymmetricEigen::try_new(self.inner.clone(), f64::EPSILON, max_iter)
            .ok_or_else(|| {
                Error::Numerical(format!(
                    "Hermitian eigensolver did not converge in {max_iter} sweeps (N={n}, |X|_F={:.3e})",
                    self.frobenius_norm()
                ))
            })?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = CMatrix::zeros(n, n);
        for (c, &i) in order.iter().enumerate() {
            vectors.set_column(c, &eig.eigenvectors.column(i));
        }
        Ok(Eigh { values, vectors })
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.eigh()?.values)
    }
}

pub(crate) fn symmetrize_in_place(m: &mut CMatrix) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)].im = 0.0;
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

/// `‖G - G*‖_F`, the Hermitian defect of a square matrix.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_symmetrizes() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.3),
                Complex64::new(2.0, 1.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(3.0, 0.0),
            ],
        );
        let h = HermitianMatrix::new(m).unwrap();
        assert_eq!(hermitian_defect(h.matrix()), 0.0);
        assert_eq!(h.matrix()[(0, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(h.matrix()[(0, 1)], Complex64::new(1.0, 0.5));
    }

    #[test]
    fn eigh_sorts_non_increasing_and_reconstructs() {
        let h = HermitianMatrix::from_real_diagonal(&[1.0, 3.0, -2.0, 0.5]);
        let e = h.eigh().unwrap();
        assert_eq!(e.values, vec![3.0, 1.0, 0.5, -2.0]);
        let back = HermitianMatrix::from_spectrum(&e.vectors, &e.values);
        assert!(back.sub(&h).frobenius_norm() < 1e-14);
    }

    #[test]
    fn outer_product_has_rank_one_spectrum() {
        let x = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
        let e = HermitianMatrix::outer(&x).eigh().unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!(e.values[1].abs() < 1e-14);
    }

    #[test]
    fn rejects_non_square() {
        assert!(HermitianMatrix::new(CMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn non_finite_input_is_a_numerical_error() {
        let h = HermitianMatrix::from_real_diagonal(&[f64::NAN, 1.0]);
        assert!(matches!(h.eigh(), Err(Error::Numerical(_))));
    }
}
