//! Lifted Fourier measurements with masks.

mod dense;
mod grid;
mod masks;
mod norm;
mod operator;

pub use dense::{
    build_dense_matrix, expected_lifted_rank, lifted_fourier_rank, numerical_rank_relative,
    vectorize_matrix, DEFAULT_RANK_TOL, DENSE_ENTRY_LIMIT,
};
pub use grid::FrequencyGrid;
pub use masks::MaskSet;
pub use norm::{operator_norm, operator_norm_bounds, operator_norm_power, NormEstimate, NormMethod};
pub use operator::{MeasurementOperator, MeasurementVector};
