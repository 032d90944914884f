//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "n": 25, "d": 1,
//!   "m": [25, 50, 75],
//!   "n_masks": 2,
//!   "methods": ["qe", "reweighted"],
//!   "noise": { "kind": "nsr", "levels": [0.0, 0.1, 0.2] },
//!   "trials": 5,
//!   "seed": 1,
//!   "solver": { "iterations": 10000 },
//!   "output_dir": "results"
//! }
//! ```
//!
//! `m` and `n_masks` accept a single value or a list. Omitted fields take
//! the defaults of [`ExperimentConfig::default`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{Method, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// Levels are `‖ε‖`.
    Absolute,
    /// Levels are `‖ε‖ / ‖b‖` with `b` the noiseless data.
    Nsr,
}

impl NoiseKind {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseKind::Absolute => "absolute",
            NoiseKind::Nsr => "nsr",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub levels: Vec<f64>,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            kind: NoiseKind::Absolute,
            levels: vec![0.0],
        }
    }
}

/// Solver settings; unset weights fall back to the noise-level preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOverrides {
    pub rank: usize,
    pub iterations: usize,
    pub gamma: Option<f64>,
    pub step: Option<f64>,
    pub lambda: Option<f64>,
    pub delta: Option<f64>,
    pub outer_rounds: usize,
    pub strict_gamma: bool,
}

impl Default for SolverOverrides {
    fn default() -> Self {
        let base = SolverConfig::default();
        Self {
            rank: base.rank,
            iterations: base.iterations,
            gamma: None,
            step: None,
            lambda: None,
            delta: None,
            outer_rounds: base.outer_rounds,
            strict_gamma: false,
        }
    }
}

impl SolverOverrides {
    /// Full solver configuration for `method` at noise norm `‖ε‖`.
    pub fn solver_config(&self, method: Method, noise_norm: f64) -> SolverConfig {
        let preset = SolverConfig::noise_preset(method, noise_norm);
        SolverConfig {
            method,
            rank: self.rank,
            gamma: self.gamma,
            step: self.step,
            iterations: self.iterations,
            lambda: self.lambda.unwrap_or(preset.lambda),
            delta: self.delta.unwrap_or(preset.delta),
            outer_rounds: self.outer_rounds,
            strict_gamma: self.strict_gamma,
            ..preset
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub d: usize,
    /// Fourier grid side(s); `None` means `m = n`.
    pub m: Option<OneOrMany<usize>>,
    pub n_masks: OneOrMany<usize>,
    pub methods: Vec<Method>,
    pub noise: NoiseSpec,
    pub trials: usize,
    pub seed: u64,
    pub solver: SolverOverrides,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 100,
            d: 1,
            m: None,
            n_masks: OneOrMany::One(3),
            methods: vec![Method::Qe],
            noise: NoiseSpec::default(),
            trials: 5,
            seed: 0,
            solver: SolverOverrides::default(),
            output_dir: PathBuf::from("."),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Input(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn grid_sides(&self) -> Vec<usize> {
        self.m.as_ref().map_or_else(|| vec![self.n], OneOrMany::to_vec)
    }

    pub fn mask_counts(&self) -> Vec<usize> {
        self.n_masks.to_vec()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Input(msg));
        if self.n == 0 || self.d == 0 {
            return bad(format!("n and d must be positive, got n={}, d={}", self.n, self.d));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        let sides = self.grid_sides();
        if sides.is_empty() || self.mask_counts().is_empty() {
            return bad("m and n_masks must not be empty lists".into());
        }
        if let Some(&m) = sides.iter().find(|&&m| m < self.n) {
            return bad(format!("grid side m={m} is smaller than n={}", self.n));
        }
        if self.noise.levels.is_empty() {
            return bad("noise.levels must not be empty".into());
        }
        if let Some(l) = self.noise.levels.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return bad(format!("noise levels must be finite and non-negative, got {l}"));
        }
        if self.solver.iterations == 0 || self.solver.rank == 0 || self.solver.outer_rounds == 0 {
            return bad("solver iterations, rank and outer_rounds must be at least 1".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_scalars() {
        let cfg = ExperimentConfig::from_json(r#"{"n": 10, "trials": 1}"#).unwrap();
        assert_eq!(cfg.grid_sides(), vec![10]);
        assert_eq!(cfg.mask_counts(), vec![3]);
        assert_eq!(cfg.methods, vec![Method::Qe]);
        assert_eq!(cfg.solver.iterations, 10_000);

        let cfg = ExperimentConfig::from_json(
            r#"{"n": 5, "m": [5, 10], "n_masks": [2, 3], "methods": ["qe", "nuclear"],
                "noise": {"kind": "nsr", "levels": [0.1]}, "solver": {"iterations": 50, "lambda": 0.2}}"#,
        )
        .unwrap();
        assert_eq!(cfg.grid_sides(), vec![5, 10]);
        assert_eq!(cfg.noise.kind, NoiseKind::Nsr);
        let sc = cfg.solver.solver_config(Method::Nuclear, 2.0);
        assert_eq!(sc.lambda, 0.2);
        assert!((sc.delta - 0.11).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            r#"{"n": 0}"#,
            r#"{"n": 4, "trials": 0}"#,
            r#"{"n": 4, "m": 3}"#,
            r#"{"n": 4, "noise": {"kind": "absolute", "levels": [-1]}}"#,
            r#"{"n": 4, "methods": ["magic"]}"#,
            r#"{"n": 4, "unknown": 1}"#,
            r#"{"n": 4, "methods": []}"#,
        ] {
            assert!(ExperimentConfig::from_json(text).is_err(), "{text}");
        }
    }
}
