//! Grayscale image reconstruction from simulated masked measurements.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::SolverOverrides;
use super::data::{add_noise, derive_seed, generate_masks};
use super::sweep::SCHEMA_VERSION;
use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;
use crate::measurement::MeasurementOperator;
use crate::metrics::{eigen_table, lifted_error, numerical_rank, phase_distance};
use crate::solver::{solve, Method};
use crate::tensor::ComplexTensor;

/// Largest accepted image side; the lifted matrix is `side² × side²`.
pub const MAX_IMAGE_SIDE: usize = 32;

/// Number of candidate global phases when rendering.
pub const PHASE_GRID: usize = 3600;

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Input(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }
}

/// Parses binary PGM (`P5`). Values are rescaled to `0..=255` if the file's
/// maxval is below 255.
pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&c| c != b'\n') {
                        pos += 1;
                    }
                }
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(Error::Input("truncated PGM header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|c| !c.is_ascii_whitespace()) {
            pos += 1;
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err(Error::Input("not a binary PGM (expected magic P5)".into()));
    }
    let mut number = |what: &str| -> Result<usize> {
        let t = token()?;
        t.parse().map_err(|_| Error::Input(format!("bad PGM {what} '{t}'")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if !(1..=255).contains(&maxval) {
        return Err(Error::Input(format!("unsupported PGM maxval {maxval}; expected 1..=255")));
    }
    // exactly one whitespace byte separates the header from the raster
    let start = pos + 1;
    let raster = bytes
        .get(start..start + width * height)
        .ok_or_else(|| Error::Input("PGM raster is shorter than width x height".into()))?;
    let pixels = raster
        .iter()
        .map(|&v| {
            if maxval == 255 {
                Ok(v)
            } else if usize::from(v) > maxval {
                Err(Error::Input(format!("pixel value {v} exceeds maxval {maxval}")))
            } else {
                Ok(((usize::from(v) * 255 + maxval / 2) / maxval) as u8)
            }
        })
        .collect::<Result<Vec<u8>>>()?;
    GrayImage::new(width, height, pixels)
}

pub fn write_pgm<W: Write>(image: &GrayImage, mut sink: W) -> Result<()> {
    write!(sink, "P5\n{} {}\n255\n", image.width, image.height)?;
    sink.write_all(&image.pixels)?;
    Ok(())
}

pub fn load_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    read_pgm(&bytes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImageConfig {
    pub n_masks: usize,
    /// `‖ε‖ / ‖b‖`.
    pub noise_nsr: f64,
    pub seed: u64,
    /// Fourier grid side; `None` means the image side.
    pub m: Option<usize>,
    pub method: Method,
    pub solver: SolverOverrides,
}

impl Default for ImageConfig {
    fn default() -> Self {
        Self {
            n_masks: 8,
            noise_nsr: 0.01,
            seed: 0,
            m: None,
            method: Method::Qe,
            solver: SolverOverrides::default(),
        }
    }
}

impl ImageConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Input(format!("cannot read config {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone)]
pub struct ImageReport {
    pub image: GrayImage,
    /// `‖rendered − original‖ / ‖original‖` on intensities before rounding.
    pub relative_error: f64,
    pub phase_distance: f64,
    pub frob_err: f64,
    pub residual: f64,
    pub nsr: f64,
    pub rank_at_tol: usize,
    pub top_eigs: Vec<f64>,
    pub iterations: usize,
}

/// `c = e^{iφ}` on a uniform grid of [`PHASE_GRID`] phases maximizing
/// `Σ_j Re(c x_j)`.
pub fn fix_global_phase(x: &[Complex64]) -> Complex64 {
    let total: Complex64 = x.iter().sum();
    let mut best = (f64::NEG_INFINITY, Complex64::new(1.0, 0.0));
    for k in 0..PHASE_GRID {
        let c = Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / PHASE_GRID as f64);
        let score = (c * total).re;
        if score > best.0 {
            best = (score, c);
        }
    }
    best.1
}

/// Simulates masked measurements of `image`, reconstructs it and renders the
/// estimate back to 8-bit grayscale.
pub fn reconstruct_image(image: &GrayImage, cfg: &ImageConfig) -> Result<ImageReport> {
    let n = image.width;
    if image.width != image.height {
        return Err(Error::Input(format!("image must be square, got {}x{}", image.width, image.height)));
    }
    if n == 0 || n > MAX_IMAGE_SIDE {
        return Err(Error::Input(format!("image side must be in 1..={MAX_IMAGE_SIDE}, got {n}")));
    }
    if !(cfg.noise_nsr.is_finite() && cfg.noise_nsr >= 0.0) {
        return Err(Error::Input(format!("noise_nsr must be finite and non-negative, got {}", cfg.noise_nsr)));
    }
    // tensor index (row, col) with the first coordinate fastest
    let mut intensities = vec![0.0; n * n];
    for row in 0..n {
        for col in 0..n {
            intensities[row + col * n] = f64::from(image.get(row, col));
        }
    }
    let scale = intensities.iter().map(|v| v * v).sum::<f64>().sqrt();
    if scale == 0.0 {
        return Err(Error::Input("image is entirely black".into()));
    }
    let flat: Vec<Complex64> = intensities.iter().map(|&v| Complex64::new(v / scale, 0.0)).collect();
    let x0 = ComplexTensor::tensorize(n, 2, &flat)?;

    let masks = generate_masks(n, 2, cfg.n_masks, derive_seed(cfg.seed, &[1]))?;
    let op = MeasurementOperator::regular(n, 2, cfg.m.unwrap_or(n), masks)?;
    let clean = op.apply(&HermitianMatrix::outer(&flat))?;
    let noise_norm = cfg.noise_nsr * clean.norm();
    let b = add_noise(&clean, noise_norm, derive_seed(cfg.seed, &[2]))?;

    let solver_cfg = cfg.solver.solver_config(cfg.method, noise_norm);
    let result = solve(&op, &b, &solver_cfg)?;
    let estimate = match &result.signal {
        Some(s) => s.clone(),
        None => ComplexTensor::zeros(vec![n, n]),
    };
    let flat_est = estimate.vectorize()?;
    let c = fix_global_phase(&flat_est);
    let rendered: Vec<f64> = flat_est.iter().map(|z| ((c * z).re * scale).clamp(0.0, 255.0)).collect();
    let diff = rendered.iter().zip(&intensities).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();

    let mut pixels = vec![0u8; n * n];
    for row in 0..n {
        for col in 0..n {
            pixels[row * n + col] = rendered[row + col * n].round() as u8;
        }
    }
    let b_norm = b.norm();
    Ok(ImageReport {
        image: GrayImage::new(n, n, pixels)?,
        relative_error: diff / scale,
        phase_distance: phase_distance(&x0, &estimate)?,
        frob_err: lifted_error(&result.matrix, &x0)?,
        residual: op.apply(&result.matrix)?.distance(&b),
        nsr: if b_norm > 0.0 { noise_norm / b_norm } else { 0.0 },
        rank_at_tol: numerical_rank(&result.matrix, cfg.method.rank_tolerance())?,
        top_eigs: eigen_table(&result.matrix, 10.min(n * n))?,
        iterations: result.log.len(),
    })
}

/// One-row metrics CSV for an image run.
pub fn write_image_metrics<W: Write>(cfg: &ImageConfig, report: &ImageReport, sink: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(sink);
    w.write_record(["schema_version", &SCHEMA_VERSION.to_string()])?;
    w.write_record([
        "side", "n_masks", "method", "noise_nsr", "seed", "iterations", "relative_error", "phase_distance",
        "frob_err", "residual", "nsr", "rank_at_tol", "eig_1", "eig_2",
    ])?;
    let eig = |i: usize| report.top_eigs.get(i).map_or(String::new(), f64::to_string);
    w.write_record([
        report.image.width.to_string(),
        cfg.n_masks.to_string(),
        cfg.method.name().to_string(),
        cfg.noise_nsr.to_string(),
        cfg.seed.to_string(),
        report.iterations.to_string(),
        report.relative_error.to_string(),
        report.phase_distance.to_string(),
        report.frob_err.to_string(),
        report.residual.to_string(),
        report.nsr.to_string(),
        report.rank_at_tol.to_string(),
        eig(0),
        eig(1),
    ])?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip_with_comments() {
        let img = GrayImage::new(3, 2, vec![0, 10, 20, 30, 40, 255]).unwrap();
        let mut bytes = Vec::new();
        write_pgm(&img, &mut bytes).unwrap();
        assert_eq!(read_pgm(&bytes).unwrap(), img);
        let commented = b"P5 # made by hand\n3 2\n# maxval next\n255\n\x00\x0a\x14\x1e\x28\xff";
        assert_eq!(read_pgm(commented).unwrap(), img);
    }

    #[test]
    fn pgm_rejections() {
        assert!(read_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(read_pgm(b"P5\n2 2\n255\n\x00").is_err());
        assert!(read_pgm(b"P5\n1 1\n65535\n\x00\x00").is_err());
        assert_eq!(read_pgm(b"P5\n1 1\n15\n\x0f").unwrap().pixels, vec![255]);
    }

    #[test]
    fn shape_guards() {
        let cfg = ImageConfig::default();
        let wide = GrayImage::new(3, 2, vec![1; 6]).unwrap();
        assert!(matches!(reconstruct_image(&wide, &cfg), Err(Error::Input(_))));
        let big = GrayImage::new(33, 33, vec![1; 33 * 33]).unwrap();
        assert!(matches!(reconstruct_image(&big, &cfg), Err(Error::Input(_))));
    }

    #[test]
    fn phase_fix_aligns_positive_signal() {
        let x: Vec<Complex64> = [1.0, 2.0, 0.5].iter().map(|&v| Complex64::from_polar(v, 1.3)).collect();
        let c = fix_global_phase(&x);
        for z in &x {
            let r = c * z;
            assert!(r.re > 0.0 && r.im.abs() < 2e-3 * z.norm());
        }
    }
}
