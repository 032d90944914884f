//! The lifted measurement operator `𝒜(X)_k = ⟨a_k a_k*, X⟩ = a_k* X a_k`.
//!
//! Two evaluation paths share one operator:
//!
//! * the naive path forms every `a_k` and evaluates the quadratic forms
//!   directly (`O(M N²)`), for any frequency set;
//! * the FFT path, for regular grids, sums `X` along its generalized
//!   diagonals `Y(p) = Σ_q X(q, q+p)`, folds `Y` modulo `m` and takes one
//!   `d`-dimensional DFT per mask block. The gradient reverses this: an
//!   inverse DFT of the residual fills a block-Toeplitz matrix
//!   `G(p, q) = g(q - p mod m)`, with rows and columns outside the mask
//!   support zeroed.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::FrequencyGrid;
use super::masks::MaskSet;
use crate::error::{Error, Result};
use crate::hermitian::{CMatrix, HermitianMatrix};
use crate::tensor::IndexBijection;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Measurements grouped in mask blocks of equal length, block 0 unmasked.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementVector {
    block_len: usize,
    data: Vec<Complex64>,
}

impl MeasurementVector {
    pub fn new(block_len: usize, data: Vec<Complex64>) -> Result<Self> {
        if block_len == 0 || data.len() % block_len != 0 {
            return Err(Error::Dimension(format!(
                "{} measurements do not split into blocks of {block_len}",
                data.len()
            )));
        }
        Ok(Self { block_len, data })
    }

    pub fn from_real(block_len: usize, data: &[f64]) -> Result<Self> {
        Self::new(block_len, data.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn zeros(block_len: usize, blocks: usize) -> Self {
        Self {
            block_len,
            data: vec![ZERO; block_len * blocks],
        }
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn block_count(&self) -> usize {
        self.data.len() / self.block_len
    }

    pub fn block(&self, b: usize) -> &[Complex64] {
        &self.data[b * self.block_len..(b + 1) * self.block_len]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }
}

/// Regular-grid FFT plans for one side length `m`.
#[derive(Clone)]
struct FftPlans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Fourier measurements with masks, lifted to Hermitian matrices.
#[derive(Clone)]
pub struct MeasurementOperator {
    object: IndexBijection,
    grid: FrequencyGrid,
    masks: MaskSet,
    plans: Option<FftPlans>,
}

impl fmt::Debug for MeasurementOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MeasurementOperator")
            .field("n", &self.object.side())
            .field("d", &self.object.dim())
            .field("grid", &self.grid)
            .field("masks", &self.masks.mask_count())
            .finish()
    }
}

impl MeasurementOperator {
    pub fn new(n: usize, d: usize, grid: FrequencyGrid, masks: MaskSet) -> Result<Self> {
        let object = IndexBijection::new(n, d)?;
        if grid.dim() != d {
            return Err(Error::Dimension(format!(
                "frequency grid has dimension {}, object grid {d}",
                grid.dim()
            )));
        }
        if masks.side() != n || masks.dim() != d {
            return Err(Error::Dimension(format!(
                "masks are on a {}^{} grid, object is {n}^{d}",
                masks.side(),
                masks.dim()
            )));
        }
        let plans = match grid {
            FrequencyGrid::Regular { m, .. } => {
                if m < n {
                    return Err(Error::Precondition(format!(
                        "measurement grid m={m} must be at least object grid n={n}"
                    )));
                }
                let mut planner = FftPlanner::new();
                Some(FftPlans {
                    forward: planner.plan_fft_forward(m),
                    inverse: planner.plan_fft_inverse(m),
                })
            }
            FrequencyGrid::Explicit { .. } => None,
        };
        Ok(Self {
            object,
            grid,
            masks,
            plans,
        })
    }

    /// Regular `m^d` grid with the given masks.
    pub fn regular(n: usize, d: usize, m: usize, masks: MaskSet) -> Result<Self> {
        Self::new(n, d, FrequencyGrid::regular(m, d)?, masks)
    }

    pub fn side(&self) -> usize {
        self.object.side()
    }

    pub fn dim(&self) -> usize {
        self.object.dim()
    }

    /// `N = n^d`, the side of the lifted matrix.
    pub fn signal_len(&self) -> usize {
        self.object.len()
    }

    pub fn object_grid(&self) -> &IndexBijection {
        &self.object
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn masks(&self) -> &MaskSet {
        &self.masks
    }

    pub fn block_len(&self) -> usize {
        self.grid.count()
    }

    pub fn block_count(&self) -> usize {
        self.masks.block_count()
    }

    /// `M = (N_m + 1) |S|`.
    pub fn measurement_count(&self) -> usize {
        self.block_len() * self.block_count()
    }

    /// The measurement vector `a_k` for flat measurement index `k`.
    pub fn measurement_vector(&self, k: usize) -> Vec<Complex64> {
        let block = k / self.block_len();
        let mut a = self.grid.sampling_vector(k % self.block_len(), &self.object);
        if let Some(support) = self.masks.block_support(block) {
            for (v, &keep) in a.iter_mut().zip(support) {
                if !keep {
                    *v = ZERO;
                }
            }
        }
        a
    }

    fn check_matrix(&self, x: &HermitianMatrix) -> Result<()> {
        if x.dim() != self.signal_len() {
            return Err(Error::Dimension(format!(
                "matrix is {0}x{0}, operator expects {1}x{1}",
                x.dim(),
                self.signal_len()
            )));
        }
        Ok(())
    }

    fn check_measurements(&self, b: &MeasurementVector) -> Result<()> {
        if b.block_len() != self.block_len() || b.block_count() != self.block_count() {
            return Err(Error::Dimension(format!(
                "measurements have {} blocks of {}, operator produces {} blocks of {}",
                b.block_count(),
                b.block_len(),
                self.block_count(),
                self.block_len()
            )));
        }
        Ok(())
    }

    fn fft_plans(&self) -> Result<(&FftPlans, usize)> {
        match (&self.plans, self.grid.regular_side()) {
            (Some(p), Some(m)) => Ok((p, m)),
            _ => Err(Error::Unsupported(
                "the FFT path needs a regular frequency grid; use the naive path".into(),
            )),
        }
    }

    /// `𝒜(X)` by explicit quadratic forms `a_k* X a_k`.
    pub fn forward_naive(&self, x: &HermitianMatrix) -> Result<MeasurementVector> {
        self.check_matrix(x)?;
        let data = (0..self.measurement_count())
            .map(|k| quadratic_form(x.matrix(), &self.measurement_vector(k)))
            .collect();
        MeasurementVector::new(self.block_len(), data)
    }

    /// `𝒜(X)` via diagonal sums, modular folding and a DFT per block.
    pub fn forward_fft(&self, x: &HermitianMatrix) -> Result<MeasurementVector> {
        self.check_matrix(x)?;
        let (plans, m) = self.fft_plans()?;
        let mut data = Vec::with_capacity(self.measurement_count());
        for b in 0..self.block_count() {
            let support = self.masks.block_support(b);
            let diag = self.diagonal_sums(x.matrix(), support);
            let mut folded = self.fold_modulo(&diag, m);
            fft_nd(&mut folded, m, self.dim(), &plans.forward);
            data.extend(folded);
        }
        MeasurementVector::new(self.block_len(), data)
    }

    /// `Y(p) = Σ_q X_w(q, q + p)` over `p ∈ {-n+1..n-1}^d`, stored on the
    /// `(2n-1)^d` grid with offset `n-1`. `X_w = I_w X I_w`.
    pub fn diagonal_sums(&self, x: &CMatrix, support: Option<&[bool]>) -> Vec<Complex64> {
        let n = self.side();
        let d = self.dim();
        let span = 2 * n - 1;
        let diff_grid = IndexBijection::new(span, d).expect("valid grid");
        let coords = self.coordinates();
        let big_n = self.signal_len();
        let mut y = vec![ZERO; diff_grid.len()];
        let mut pos = vec![0usize; d];
        for col in 0..big_n {
            if support.is_some_and(|s| !s[col]) {
                continue;
            }
            for row in 0..big_n {
                if support.is_some_and(|s| !s[row]) {
                    continue;
                }
                // p = col - row, shifted into 0..2n-1
                for i in 0..d {
                    pos[i] = coords[col * d + i] + (n - 1) - coords[row * d + i];
                }
                y[diff_grid.flat(&pos)] += x[(row, col)];
            }
        }
        y
    }

    /// `Y_mod(p) = Σ_{t ∈ Z^d} Y(p + m t)` on `{0..m-1}^d`.
    pub fn fold_modulo(&self, y: &[Complex64], m: usize) -> Vec<Complex64> {
        let n = self.side();
        let d = self.dim();
        let diff_grid = IndexBijection::new(2 * n - 1, d).expect("valid grid");
        let out_grid = IndexBijection::new(m, d).expect("valid grid");
        let mut out = vec![ZERO; out_grid.len()];
        let mut idx = vec![0usize; d];
        let mut target = vec![0usize; d];
        for (flat, &v) in y.iter().enumerate() {
            diff_grid.unflat_into(flat, &mut idx);
            for i in 0..d {
                let p = idx[i] as isize - (n as isize - 1);
                target[i] = p.rem_euclid(m as isize) as usize;
            }
            out[out_grid.flat(&target)] += v;
        }
        out
    }

    /// Gradient of `½‖𝒜(X) − b‖²` over Hermitian `X`, by explicit sums
    /// `Σ_k Re(⟨a_k a_k*, X⟩ − b_k) a_k a_k*`.
    pub fn gradient_naive(&self, x: &HermitianMatrix, b: &MeasurementVector) -> Result<HermitianMatrix> {
        self.check_matrix(x)?;
        self.check_measurements(b)?;
        let big_n = self.signal_len();
        let mut g = CMatrix::zeros(big_n, big_n);
        for (k, bk) in b.as_slice().iter().enumerate() {
            let a = self.measurement_vector(k);
            let r = (quadratic_form(x.matrix(), &a) - bk).re;
            if r == 0.0 {
                continue;
            }
            for col in 0..big_n {
                let ac = a[col].conj() * r;
                for row in 0..big_n {
                    g[(row, col)] += a[row] * ac;
                }
            }
        }
        HermitianMatrix::new(g)
    }

    /// Gradient of `½‖𝒜(X) − b‖²` through the FFT path.
    pub fn residual_gradient_fft(&self, x: &HermitianMatrix, b: &MeasurementVector) -> Result<HermitianMatrix> {
        self.check_measurements(b)?;
        let c = self.forward_fft(x)?;
        let residual: Vec<f64> = c
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(ck, bk)| (ck - bk).re)
            .collect();
        self.adjoint_fft(&residual)
    }

    /// `𝒜*(r) = Σ_k r_k a_k a_k*` for a real vector `r`, via inverse DFTs.
    pub fn adjoint_fft(&self, r: &[f64]) -> Result<HermitianMatrix> {
        HermitianMatrix::new(self.adjoint_unsymmetrized(r)?)
    }

    /// [`Self::adjoint_fft`] before the final Hermitian projection.
    pub fn adjoint_unsymmetrized(&self, r: &[f64]) -> Result<CMatrix> {
        if r.len() != self.measurement_count() {
            return Err(Error::Dimension(format!(
                "adjoint input has {} entries, expected {}",
                r.len(),
                self.measurement_count()
            )));
        }
        let (plans, m) = self.fft_plans()?;
        let d = self.dim();
        let big_n = self.signal_len();
        let coords = self.coordinates();
        let out_grid = IndexBijection::new(m, d).expect("valid grid");
        let block_len = self.block_len();

        let mut g = CMatrix::zeros(big_n, big_n);
        let mut pos = vec![0usize; d];
        for b in 0..self.block_count() {
            let block = &r[b * block_len..(b + 1) * block_len];
            if block.iter().all(|&v| v == 0.0) {
                continue;
            }
            // g(v) = Σ_k r_k exp(2πi k·v/m), unnormalized inverse DFT
            let mut kernel: Vec<Complex64> = block.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fft_nd(&mut kernel, m, d, &plans.inverse);
            let support = self.masks.block_support(b);
            for col in 0..big_n {
                if support.is_some_and(|s| !s[col]) {
                    continue;
                }
                for row in 0..big_n {
                    if support.is_some_and(|s| !s[row]) {
                        continue;
                    }
                    for i in 0..d {
                        let v = coords[col * d + i] as isize - coords[row * d + i] as isize;
                        pos[i] = v.rem_euclid(m as isize) as usize;
                    }
                    g[(row, col)] += kernel[out_grid.flat(&pos)];
                }
            }
        }
        Ok(g)
    }

    /// Flat coordinate table: entry `j * d + i` is coordinate `i` of grid
    /// point `j`.
    fn coordinates(&self) -> Vec<usize> {
        let d = self.dim();
        let mut out = vec![0usize; self.signal_len() * d];
        for (j, chunk) in out.chunks_mut(d).enumerate() {
            self.object.unflat_into(j, chunk);
        }
        out
    }

    /// Forward evaluation, picking the FFT path when available.
    pub fn apply(&self, x: &HermitianMatrix) -> Result<MeasurementVector> {
        if self.plans.is_some() {
            self.forward_fft(x)
        } else {
            self.forward_naive(x)
        }
    }

    /// Gradient of `½‖𝒜(X) − b‖²`, picking the FFT path when available.
    pub fn gradient(&self, x: &HermitianMatrix, b: &MeasurementVector) -> Result<HermitianMatrix> {
        if self.plans.is_some() {
            self.residual_gradient_fft(x, b)
        } else {
            self.gradient_naive(x, b)
        }
    }
}

/// `a* X a`.
pub(crate) fn quadratic_form(x: &CMatrix, a: &[Complex64]) -> Complex64 {
    let n = a.len();
    let mut acc = ZERO;
    for col in 0..n {
        if a[col] == ZERO {
            continue;
        }
        let mut inner = ZERO;
        for row in 0..n {
            inner += a[row].conj() * x[(row, col)];
        }
        acc += inner * a[col];
    }
    acc
}

/// In-place `d`-dimensional transform on an `m^d` array in flat order.
fn fft_nd(data: &mut [Complex64], m: usize, d: usize, plan: &Arc<dyn Fft<f64>>) {
    let mut line = vec![ZERO; m];
    let mut scratch = vec![ZERO; plan.get_inplace_scratch_len()];
    let total = data.len();
    let mut stride = 1;
    for _ in 0..d {
        let block = stride * m;
        for start in (0..total).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (t, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + t * stride];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for (t, v) in line.iter().enumerate() {
                    data[base + t * stride] = *v;
                }
            }
        }
        stride = block;
    }
}
