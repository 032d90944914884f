//! Multi-indices over the cubic grid `{0..n-1}^d`, the flat ordering that
//! identifies tensors with vectors of length `N = n^d`, and complex tensor
//! storage.
//!
//! The flat ordering is column stacking generalised to `d` dimensions: the
//! first coordinate varies fastest, so for `d = 2` the entry `(j1, j2)` lands
//! at flat position `j2 * n + j1` (0-based).

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A point of a `d`-dimensional integer grid.
///
/// Coordinates are signed so the same type serves both object-grid indices
/// and the difference indices `{-n+1..n-1}^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    coords: Vec<isize>,
}

impl MultiIndex {
    /// Builds an index, checking every coordinate against `lo..=hi`.
    pub fn new_in(coords: Vec<isize>, lo: isize, hi: isize) -> Result<Self> {
        if let Some(c) = coords.iter().find(|&&c| c < lo || c > hi) {
            return Err(Error::Argument(format!(
                "coordinate {c} outside [{lo}, {hi}]"
            )));
        }
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[isize] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// The bijection between `{0..n-1}^d` and `{0..n^d-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexBijection {
    n: usize,
    d: usize,
}

impl IndexBijection {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::Argument(format!(
                "grid needs n >= 1 and d >= 1, got n={n}, d={d}"
            )));
        }
        n.checked_pow(d as u32)
            .ok_or_else(|| Error::Argument(format!("n^d overflows for n={n}, d={d}")))?;
        Ok(Self { n, d })
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Number of grid points, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Tensor index to flat position.
    pub fn flat(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.d);
        idx.iter().rev().fold(0, |acc, &j| {
            debug_assert!(j < self.n);
            acc * self.n + j
        })
    }

    /// Flat position to tensor index, written into `out`.
    pub fn unflat_into(&self, mut flat: usize, out: &mut [usize]) {
        debug_assert_eq!(out.len(), self.d);
        for slot in out.iter_mut() {
            *slot = flat % self.n;
            flat /= self.n;
        }
    }

    pub fn unflat(&self, flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.d];
        self.unflat_into(flat, &mut out);
        out
    }

    /// The checked multi-index for a flat position.
    pub fn multi_index(&self, flat: usize) -> Result<MultiIndex> {
        if flat >= self.len() {
            return Err(Error::Argument(format!(
                "flat index {flat} out of range for {} points",
                self.len()
            )));
        }
        let coords = self.unflat(flat).into_iter().map(|c| c as isize).collect();
        MultiIndex::new_in(coords, 0, self.n as isize - 1)
    }
}

/// Iterates over the difference indices `{-n+1..n-1}^d`, first coordinate
/// fastest. Yields `(2n-1)^d` items.
pub fn difference_indices(n: usize, d: usize) -> impl Iterator<Item = MultiIndex> {
    let span = 2 * n.max(1) - 1;
    let total = span.pow(d as u32);
    let offset = n as isize - 1;
    (0..total).map(move |mut flat| {
        let mut coords = Vec::with_capacity(d);
        for _ in 0..d {
            coords.push((flat % span) as isize - offset);
            flat /= span;
        }
        MultiIndex { coords }
    })
}

/// A complex array on a `d`-dimensional box, stored in flat order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor {
    shape: Vec<usize>,
    data: Vec<Complex64>,
}

impl ComplexTensor {
    pub fn new(shape: Vec<usize>, data: Vec<Complex64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if shape.is_empty() || expected != data.len() {
            return Err(Error::Dimension(format!(
                "shape {shape:?} holds {expected} entries but {} were given",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            data: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    /// Inverse of [`ComplexTensor::vectorize`] on the cubic grid `n^d`.
    pub fn tensorize(n: usize, d: usize, flat: &[Complex64]) -> Result<Self> {
        let grid = IndexBijection::new(n, d)?;
        if flat.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "vector of length {} cannot fill a {n}^{d} grid",
                flat.len()
            )));
        }
        Ok(Self {
            shape: vec![n; d],
            data: flat.to_vec(),
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn get(&self, idx: &[usize]) -> Complex64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: Complex64) {
        let off = self.offset(idx);
        self.data[off] = value;
    }

    fn offset(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.shape.len(), "index rank mismatch");
        idx.iter()
            .zip(&self.shape)
            .rev()
            .fold(0, |acc, (&j, &ext)| {
                assert!(j < ext, "index {j} out of extent {ext}");
                acc * ext + j
            })
    }

    /// The side length when every extent is equal.
    pub fn cubic_side(&self) -> Option<usize> {
        let n = self.shape[0];
        self.shape.iter().all(|&e| e == n).then_some(n)
    }

    /// Flattens onto `C^N`. Requires all extents equal.
    pub fn vectorize(&self) -> Result<Vec<Complex64>> {
        self.cubic_side().ok_or_else(|| {
            Error::Dimension(format!("shape {:?} is not cubic", self.shape))
        })?;
        Ok(self.data.clone())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&mut self, factor: Complex64) {
        self.data.iter_mut().for_each(|z| *z *= factor);
    }
}
