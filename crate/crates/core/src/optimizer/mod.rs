//! Multiresolution Gauss-Newton registration driven by a [`JointProducts`]
//! backend.

mod register;
mod sampling;
mod step;

pub use register::{evaluate, intensity_error, mi_joint_terms, register, register_clear, Evaluation, LevelContext};
pub use sampling::{gradient_weights, sample_coords, uniform_sample, weighted_sample, SampleCount, Sampling};
pub use step::{default_ridge, gauss_newton_step, norm, RIDGE_FACTOR};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::joint::{Backend, LevelSpec, Usage};
use crate::transform::Transform;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    Affine,
    /// Cubic B-spline with control spacing in full-resolution voxels.
    BSpline {
        spacing: f64,
    },
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::Affine => write!(f, "affine"),
            Model::BSpline { spacing } => write!(f, "bspline({spacing})"),
        }
    }
}

/// Accepts `affine` and `bspline(<spacing>)`.
impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "affine" {
            return Ok(Model::Affine);
        }
        if let Some(v) = s.strip_prefix("bspline(").and_then(|r| r.strip_suffix(')')) {
            let spacing: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::parse("model", format!("bad control spacing {v:?}")))?;
            if !(spacing > 0.0) {
                return Err(Error::parse("model", "control spacing must be positive"));
            }
            return Ok(Model::BSpline { spacing });
        }
        Err(Error::parse("model", format!("unknown model {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiConfig {
    pub bins_r: usize,
    pub bins_t: usize,
    /// Fraction of each level's voxels drawn once per level.
    pub sample_fraction: f64,
}

impl Default for MiConfig {
    fn default() -> Self {
        Self {
            bins_r: 16,
            bins_t: 16,
            sample_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostKind {
    Ssd,
    Mi(MiConfig),
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostKind::Ssd => write!(f, "ssd"),
            CostKind::Mi(_) => write!(f, "mi"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Convergence threshold on `‖Δθ‖`.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Coarse to fine.
    pub levels: Vec<LevelSpec>,
    pub sampling: Sampling,
    pub backend: Backend,
    pub seed: u64,
    /// Factor applied to every Gauss-Newton step, in `(0, 1]`.
    pub step_damping: f64,
    /// Public divisor applied to both images' intensities.
    pub intensity_scale: f64,
    pub max_halvings: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            max_iters: 50,
            levels: vec![LevelSpec::new(4, 2.0), LevelSpec::new(2, 1.0), LevelSpec::new(1, 0.0)],
            sampling: Sampling::Full,
            backend: Backend::Clear,
            seed: 0,
            step_damping: 1.0,
            intensity_scale: 255.0,
            max_halvings: 5,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.levels.is_empty() {
            return Err(Error::Config("at least one pyramid level is required".into()));
        }
        if self.levels.iter().any(|l| l.m == 0 || !(l.sigma >= 0.0)) {
            return Err(Error::Config("level factors must be >= 1 and sigmas >= 0".into()));
        }
        if self.levels.windows(2).any(|w| w[1].m > w[0].m) {
            return Err(Error::Config(
                "level factors must not increase from coarse to fine".into(),
            ));
        }
        if !(self.step_damping > 0.0 && self.step_damping <= 1.0) {
            return Err(Error::Config(format!(
                "step damping {} outside (0, 1]",
                self.step_damping
            )));
        }
        if !(self.intensity_scale > 0.0) {
            return Err(Error::Config("intensity scale must be positive".into()));
        }
        Ok(())
    }
}

/// One Gauss-Newton iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub level: usize,
    /// Cost before the step, as seen by party 1.
    pub cost: f64,
    pub step_norm: f64,
    pub halvings: usize,
    pub samples: usize,
    pub usage: Usage,
}

#[derive(Debug, Clone)]
pub struct RegistrationResult {
    /// Final transform at full resolution.
    pub transform: Transform,
    pub iterations: Vec<usize>,
    pub cost_trace: Vec<f64>,
    pub records: Vec<IterationRecord>,
    /// `W(x) - x` over the full-resolution grid, voxel-major.
    pub displacement: Vec<f64>,
    /// Set when a protocol failure cut the run short.
    pub aborted: Option<String>,
}

impl RegistrationResult {
    pub fn theta(&self) -> &[f64] {
        self.transform.params()
    }

    pub fn total_iterations(&self) -> usize {
        self.iterations.iter().sum()
    }

    pub fn total_usage(&self) -> Usage {
        self.records.iter().fold(Usage::default(), |acc, r| Usage {
            party1_seconds: acc.party1_seconds + r.usage.party1_seconds,
            party2_seconds: acc.party2_seconds + r.usage.party2_seconds,
            party1_bytes: acc.party1_bytes + r.usage.party1_bytes,
            party2_bytes: acc.party2_bytes + r.usage.party2_bytes,
            rotations: acc.rotations + r.usage.rotations,
            he_mults: acc.he_mults + r.usage.he_mults,
        })
    }
}
