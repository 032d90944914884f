//! Fixed-rank PSD recovery for lifted Fourier phase retrieval.
//!
//! A signal `x ∈ ℂ^{n^d}` is observed through masked Fourier intensities
//! `|⟨a_k, x⟩|²`. The problem is lifted to `X = xx*`, where the
//! measurements become linear, and solved by FISTA with one of three
//! regularizers: the quadratic envelope of the rank-`K` PSD indicator, the
//! nuclear norm on the PSD cone, or its iteratively reweighted variant.

pub mod checks;
pub mod envelope;
pub mod error;
pub mod harness;
pub mod hermitian;
pub mod measurement;
pub mod metrics;
pub mod solver;
pub mod tensor;

pub use error::{Error, Result};
pub use hermitian::HermitianMatrix;
pub use measurement::{FrequencyGrid, MaskSet, MeasurementOperator, MeasurementVector};
pub use solver::{solve, Method, ReconstructionResult, SolverConfig};
pub use tensor::ComplexTensor;
