//! Experiment harness: synthetic instances, sweeps, image reconstruction.

pub mod config;
pub mod data;
pub mod freqs;
pub mod image;
pub mod sweep;

pub use config::{ExperimentConfig, NoiseKind, NoiseSpec, OneOrMany, SolverOverrides};
pub use data::{add_noise, derive_seed, generate_ground_truth, generate_masks};
pub use freqs::read_frequency_list;
pub use image::{load_pgm, read_pgm, reconstruct_image, write_image_metrics, write_pgm, GrayImage, ImageConfig, ImageReport};
pub use sweep::{run_sweep, ResultRecord, SummaryRow, SweepOutput};
