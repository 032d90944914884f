//! Synthetic instances: ground truth, masks, noise.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::measurement::{MaskSet, MeasurementVector};
use crate::tensor::ComplexTensor;

/// Mixes a base seed with a sequence of tags (splitmix64 finalizer), so
/// each trial and noise level gets an independent stream.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    tags.iter().fold(mix(base), |acc, &t| mix(acc ^ mix(t)))
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Complex standard-Gaussian tensor on `{0..n-1}^d`, normalized to unit norm.
pub fn generate_ground_truth(n: usize, d: usize, seed: u64) -> Result<ComplexTensor> {
    if n == 0 || d == 0 {
        return Err(Error::Argument(format!("n and d must be positive, got n={n}, d={d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = n.pow(d as u32);
    let mut data: Vec<Complex64> = (0..len).map(|_| complex_gaussian(&mut rng)).collect();
    let norm = data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    data.iter_mut().for_each(|z| *z /= norm);
    ComplexTensor::tensorize(n, d, &data)
}

/// `n_masks` independent Bernoulli(1/2) masks; an all-zero draw is redrawn.
pub fn generate_masks(n: usize, d: usize, n_masks: usize, seed: u64) -> Result<MaskSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = n.pow(d as u32);
    let masks = (0..n_masks)
        .map(|_| loop {
            let mask: Vec<bool> = (0..len).map(|_| rng.random::<bool>()).collect();
            if mask.iter().any(|&v| v) {
                break mask;
            }
        })
        .collect();
    MaskSet::new(n, d, masks)
}

/// `b + ε` with `ε` complex Gaussian rescaled to `‖ε‖ = target_norm`.
pub fn add_noise(b: &MeasurementVector, target_norm: f64, seed: u64) -> Result<MeasurementVector> {
    if !(target_norm >= 0.0 && target_norm.is_finite()) {
        return Err(Error::Argument(format!("noise norm must be finite and non-negative, got {target_norm}")));
    }
    if target_norm == 0.0 {
        return Ok(b.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps: Vec<Complex64> = (0..b.len()).map(|_| complex_gaussian(&mut rng)).collect();
    let norm = eps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let scale = target_norm / norm;
    let mut out = b.clone();
    for (o, e) in out.as_mut_slice().iter_mut().zip(eps) {
        *o += e * scale;
    }
    Ok(out)
}
