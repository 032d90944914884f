use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::IndexBijection;

/// The set of Fourier sampling frequencies.
///
/// `Regular { m, d }` samples `f_k(j) = exp(-2πi k·j/m)` for
/// `k ∈ {0..m-1}^d`; `Explicit` holds arbitrary real frequency tuples `ζ_k`
/// with `f_k(j) = exp(i ζ_k·j)`.
#[derive(Debug, Clone, PartialEq)]
pub enum FrequencyGrid {
    Regular { m: usize, d: usize },
    Explicit { d: usize, freqs: Vec<Vec<f64>> },
}

impl FrequencyGrid {
    pub fn regular(m: usize, d: usize) -> Result<Self> {
        if m == 0 || d == 0 {
            return Err(Error::Argument(format!(
                "regular grid needs m >= 1 and d >= 1, got m={m}, d={d}"
            )));
        }
        Ok(Self::Regular { m, d })
    }

    pub fn explicit(d: usize, freqs: Vec<Vec<f64>>) -> Result<Self> {
        if d == 0 || freqs.is_empty() {
            return Err(Error::Argument("explicit grid needs d >= 1 and at least one frequency".into()));
        }
        for (k, z) in freqs.iter().enumerate() {
            if z.len() != d {
                return Err(Error::Dimension(format!(
                    "frequency {k} has {} components, expected {d}",
                    z.len()
                )));
            }
            if z.iter().any(|v| !v.is_finite()) {
                return Err(Error::Argument(format!("frequency {k} is not finite")));
            }
        }
        Ok(Self::Explicit { d, freqs })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Regular { d, .. } | Self::Explicit { d, .. } => *d,
        }
    }

    /// `|S|`, the number of frequencies.
    pub fn count(&self) -> usize {
        match self {
            Self::Regular { m, d } => m.pow(*d as u32),
            Self::Explicit { freqs, .. } => freqs.len(),
        }
    }

    pub fn regular_side(&self) -> Option<usize> {
        match self {
            Self::Regular { m, .. } => Some(*m),
            Self::Explicit { .. } => None,
        }
    }

    /// The frequency vector `ζ_k` of the `k`-th sample (flat order for
    /// regular grids).
    pub fn frequency(&self, k: usize) -> Vec<f64> {
        match self {
            Self::Regular { m, d } => {
                let idx = IndexBijection::new(*m, *d).expect("validated grid").unflat(k);
                idx.into_iter()
                    .map(|c| -2.0 * PI * c as f64 / *m as f64)
                    .collect()
            }
            Self::Explicit { freqs, .. } => freqs[k].clone(),
        }
    }

    /// The sampling vector `f_k` on the object grid `{0..n-1}^d`, flattened.
    pub fn sampling_vector(&self, k: usize, object: &IndexBijection) -> Vec<Complex64> {
        let mut idx = vec![0usize; object.dim()];
        match self {
            Self::Regular { m, d } => {
                let kk = IndexBijection::new(*m, *d).expect("validated grid").unflat(k);
                (0..object.len())
                    .map(|j| {
                        object.unflat_into(j, &mut idx);
                        // integer phase reduced mod m before scaling keeps it exact
                        let dot: usize = kk.iter().zip(&idx).map(|(a, b)| a * b).sum();
                        Complex64::from_polar(1.0, -2.0 * PI * (dot % m) as f64 / *m as f64)
                    })
                    .collect()
            }
            Self::Explicit { freqs, .. } => {
                let zeta = &freqs[k];
                (0..object.len())
                    .map(|j| {
                        object.unflat_into(j, &mut idx);
                        let phase: f64 = zeta.iter().zip(&idx).map(|(z, &j)| z * j as f64).sum();
                        Complex64::from_polar(1.0, phase)
                    })
                    .collect()
            }
        }
    }
}
