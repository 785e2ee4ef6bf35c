//! The jointly computed products and their backends.
//!
//! Party 1 holds the moving image and every locally computable factor;
//! party 2 holds the target. The only cross-party quantities are
//! `lhs · J[samples]` (SSD) and `lhs · B[samples]` (MI), where `lhs`
//! belongs to party 1 and `B` is party 2's zero-order histogram matrix.

use std::fmt;
use std::str::FromStr;

use crate::cost::mi::{target_histogram, ParzenAxis};
use crate::error::{Error, Result};
use crate::image::{Image, PyramidLevel};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    Clear,
    Mpc,
    FheV1,
    FheV2,
}

impl Backend {
    pub fn code(self) -> u8 {
        match self {
            Backend::Clear => 0,
            Backend::Mpc => 1,
            Backend::FheV1 => 2,
            Backend::FheV2 => 3,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        [Backend::Clear, Backend::Mpc, Backend::FheV1, Backend::FheV2]
            .into_iter()
            .find(|b| b.code() == c)
    }

    pub fn is_secure(self) -> bool {
        self != Backend::Clear
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Clear => "clear",
            Backend::Mpc => "mpc",
            Backend::FheV1 => "fhe-v1",
            Backend::FheV2 => "fhe-v2",
        })
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "clear" => Ok(Backend::Clear),
            "mpc" => Ok(Backend::Mpc),
            "fhe-v1" | "fhev1" | "v1" => Ok(Backend::FheV1),
            "fhe-v2" | "fhev2" | "v2" => Ok(Backend::FheV2),
            other => Err(Error::parse("backend", format!("unknown backend {other:?}"))),
        }
    }
}

/// One entry of the public coarse-to-fine schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSpec {
    pub m: usize,
    pub sigma: f64,
}

impl LevelSpec {
    pub fn new(m: usize, sigma: f64) -> Self {
        Self { m, sigma }
    }
}

/// Builds the normalized pyramid both parties derive from the public schedule.
pub fn build_pyramid(img: &Image, schedule: &[LevelSpec], intensity_scale: f64) -> Result<Vec<Image>> {
    if schedule.is_empty() {
        return Err(Error::Config("empty level schedule".into()));
    }
    if !(intensity_scale > 0.0) {
        return Err(Error::Config(format!(
            "intensity scale must be positive, got {intensity_scale}"
        )));
    }
    let normalized = img.scaled(1.0 / intensity_scale);
    schedule
        .iter()
        .map(|l| PyramidLevel::build(&normalized, l.m, l.sigma).map(|p| p.image))
        .collect()
}

/// Party 2's private state: its target pyramid and histogram axes.
#[derive(Debug, Clone)]
pub struct TargetSide {
    levels: Vec<Image>,
    axes: Vec<Option<ParzenAxis>>,
}

impl TargetSide {
    pub fn new(target: &Image, schedule: &[LevelSpec], intensity_scale: f64, bins_t: usize) -> Result<Self> {
        let levels = build_pyramid(target, schedule, intensity_scale)?;
        let axes = levels
            .iter()
            .map(|img| {
                let (lo, hi) = img.intensity_range();
                ParzenAxis::boxed(bins_t, lo, hi).ok()
            })
            .collect();
        Ok(Self { levels, axes })
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, level: usize) -> Result<&Image> {
        self.levels
            .get(level)
            .ok_or_else(|| Error::arg(format!("level {level} outside schedule of {}", self.levels.len())))
    }

    pub fn values(&self, level: usize, samples: &[usize]) -> Result<Vec<f64>> {
        let img = self.level(level)?;
        samples
            .iter()
            .map(|&s| {
                img.data()
                    .get(s)
                    .copied()
                    .ok_or_else(|| Error::arg(format!("sample index {s} outside level {level}")))
            })
            .collect()
    }

    pub fn histogram(&self, level: usize, samples: &[usize]) -> Result<Matrix> {
        let axis = self
            .axes
            .get(level)
            .copied()
            .flatten()
            .ok_or_else(|| Error::Config(format!("target level {level} is constant; histogram undefined")))?;
        Ok(target_histogram(&self.values(level, samples)?, &axis))
    }
}

/// Cumulative time and traffic counters of a backend.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Usage {
    pub party1_seconds: f64,
    pub party2_seconds: f64,
    pub party1_bytes: u64,
    pub party2_bytes: u64,
    pub rotations: u64,
    pub he_mults: u64,
}

impl Usage {
    pub fn since(&self, earlier: &Usage) -> Usage {
        Usage {
            party1_seconds: self.party1_seconds - earlier.party1_seconds,
            party2_seconds: self.party2_seconds - earlier.party2_seconds,
            party1_bytes: self.party1_bytes - earlier.party1_bytes,
            party2_bytes: self.party2_bytes - earlier.party2_bytes,
            rotations: self.rotations - earlier.rotations,
            he_mults: self.he_mults - earlier.he_mults,
        }
    }
}

/// Source of the cross-party products, as seen by party 1.
pub trait JointProducts {
    fn backend(&self) -> Backend;

    /// `lhs · J[samples]`, `lhs` being `k × samples.len()`.
    fn matvec(&mut self, level: usize, samples: &[usize], lhs: &Matrix) -> Result<Vec<f64>>;

    /// `lhs · B[samples]`, `B` being the target's zero-order histogram matrix.
    fn matmul_hist(&mut self, level: usize, samples: &[usize], lhs: &Matrix) -> Result<Matrix>;

    fn usage(&self) -> Usage;

    /// Worst-case absolute error of each entry of `lhs · y` for any column
    /// `y` with entries in `[0, 1]`. Exact backends report zeros.
    fn error_bounds(&self, lhs: &Matrix) -> Vec<f64> {
        vec![0.0; lhs.rows()]
    }
}

pub(crate) fn check_lhs(lhs: &Matrix, samples: &[usize]) -> Result<()> {
    if lhs.cols() != samples.len() {
        return Err(Error::arg(format!(
            "operand has {} columns for {} samples",
            lhs.cols(),
            samples.len()
        )));
    }
    if samples.is_empty() {
        return Err(Error::arg("empty sample set"));
    }
    Ok(())
}

/// Reference backend evaluating the products in the clear.
#[derive(Debug, Clone)]
pub struct ClearJoint {
    target: TargetSide,
}

impl ClearJoint {
    pub fn new(target: TargetSide) -> Self {
        Self { target }
    }
}

impl JointProducts for ClearJoint {
    fn backend(&self) -> Backend {
        Backend::Clear
    }

    fn matvec(&mut self, level: usize, samples: &[usize], lhs: &Matrix) -> Result<Vec<f64>> {
        check_lhs(lhs, samples)?;
        Ok(lhs.matvec(&self.target.values(level, samples)?))
    }

    fn matmul_hist(&mut self, level: usize, samples: &[usize], lhs: &Matrix) -> Result<Matrix> {
        check_lhs(lhs, samples)?;
        Ok(lhs.matmul(&self.target.histogram(level, samples)?))
    }

    fn usage(&self) -> Usage {
        Usage::default()
    }
}
