//! Deterministic synthetic fixtures with known ground truth.
//!
//! Images are sums of Gaussian blobs evaluated analytically, so the target
//! is rendered exactly at the transformed coordinates instead of being
//! resampled from the moving grid. Intensities are rounded to integers in
//! `[0, 255]`, matching what the 8-bit image files hold.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::image::{save_image, Image, ImageFormat};
use crate::transform::{AffineParams, BSplineGrid, Transform};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureKind {
    Blob2d,
    WarpedPair,
    MiPair3d,
}

impl fmt::Display for FixtureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FixtureKind::Blob2d => "blob2d",
            FixtureKind::WarpedPair => "warped-pair",
            FixtureKind::MiPair3d => "mi-pair-3d",
        })
    }
}

impl FromStr for FixtureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "blob2d" => Ok(FixtureKind::Blob2d),
            "warped-pair" => Ok(FixtureKind::WarpedPair),
            "mi-pair-3d" => Ok(FixtureKind::MiPair3d),
            other => Err(Error::parse("fixture kind", format!("unknown kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Blob {
    center: [f64; 3],
    sigma: f64,
    amplitude: f64,
}

#[derive(Debug, Clone)]
struct BlobField {
    background: f64,
    blobs: Vec<Blob>,
}

impl BlobField {
    fn random(rng: &mut ChaCha20Rng, dims: &[usize], count: usize, sigma: (f64, f64), amp: (f64, f64)) -> Self {
        let blobs = (0..count)
            .map(|_| {
                let mut center = [0.0; 3];
                for (c, &d) in center.iter_mut().zip(dims) {
                    *c = rng.random_range(0.3 * d as f64..0.7 * d as f64);
                }
                Blob {
                    center,
                    sigma: rng.random_range(sigma.0..sigma.1),
                    amplitude: rng.random_range(amp.0..amp.1),
                }
            })
            .collect();
        Self { background: 0.0, blobs }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.background
            + self
                .blobs
                .iter()
                .map(|b| {
                    let r2: f64 = x.iter().zip(&b.center).map(|(xi, ci)| (xi - ci).powi(2)).sum();
                    b.amplitude * (-r2 / (2.0 * b.sigma * b.sigma)).exp()
                })
                .sum::<f64>()
    }
}

fn quantize(v: f64) -> f64 {
    v.round().clamp(0.0, 255.0)
}

fn render(dims: &[usize], mut f: impl FnMut(&[f64]) -> f64) -> Result<Image> {
    let spacing = vec![1.0; dims.len()];
    Image::from_fn(dims.to_vec(), spacing, |idx| {
        let x: Vec<f64> = idx.iter().map(|&i| i as f64).collect();
        quantize(f(&x))
    })
}

#[derive(Debug, Clone)]
pub enum GroundTruth {
    /// Maps target voxel coordinates to moving voxel coordinates.
    Affine(AffineParams),
    /// `W(x) - x` over the target grid, voxel-major.
    Displacement(Vec<f64>),
    /// Intensity remapping only; geometry given by the affine part.
    Multimodal(AffineParams),
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub kind: FixtureKind,
    pub seed: u64,
    pub moving: Image,
    pub target: Image,
    pub truth: GroundTruth,
}

impl Fixture {
    pub fn generate(kind: FixtureKind, seed: u64) -> Result<Self> {
        match kind {
            FixtureKind::Blob2d => blob2d(seed, 128, 2.0),
            FixtureKind::WarpedPair => warped_pair(seed, 64),
            FixtureKind::MiPair3d => mi_pair_3d(seed, 32),
        }
    }

    /// Ground-truth displacement field over the target grid.
    pub fn truth_displacement(&self) -> Vec<f64> {
        match &self.truth {
            GroundTruth::Affine(a) | GroundTruth::Multimodal(a) => {
                Transform::Affine(a.clone()).displacement_field(self.target.dims())
            }
            GroundTruth::Displacement(d) => d.clone(),
        }
    }

    fn extension(&self) -> &'static str {
        if self.moving.ndim() == 2 {
            "pgm"
        } else {
            "raw"
        }
    }

    pub fn moving_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("moving.{}", self.extension()))
    }

    pub fn target_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("target.{}", self.extension()))
    }

    /// Writes both images and a `truth.txt` sidecar (plus
    /// `truth_displacement.raw` for deformable fixtures).
    pub fn save(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mp = self.moving_path(dir);
        let tp = self.target_path(dir);
        let fmt = ImageFormat::from_path(&mp)?;
        save_image(&self.moving, &mp, fmt)?;
        save_image(&self.target, &tp, fmt)?;
        let mut sidecar = format!("kind={}\nseed={}\n", self.kind, self.seed);
        let mut written = vec![mp, tp];
        match &self.truth {
            GroundTruth::Affine(a) | GroundTruth::Multimodal(a) => {
                let theta: Vec<String> = a.theta().iter().map(|v| format!("{v:.17e}")).collect();
                sidecar.push_str(&format!("theta={}\n", theta.join(",")));
            }
            GroundTruth::Displacement(d) => {
                let path = dir.join("truth_displacement.raw");
                let bytes: Vec<u8> = d.iter().flat_map(|v| v.to_le_bytes()).collect();
                fs::write(&path, bytes)?;
                sidecar.push_str("displacement=truth_displacement.raw\n");
                written.push(path);
            }
        }
        let sp = dir.join("truth.txt");
        fs::write(&sp, sidecar)?;
        written.push(sp);
        Ok(written)
    }
}

/// Reads a `truth.txt` sidecar back into a displacement field over `dims`.
pub fn load_truth_displacement(path: &Path, dims: &[usize]) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    for line in text.lines() {
        if let Some(v) = line.strip_prefix("theta=") {
            let theta = v
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse("truth theta", e.to_string()))?;
            return Ok(Transform::Affine(AffineParams::new(theta)?).displacement_field(dims));
        }
        if let Some(v) = line.strip_prefix("displacement=") {
            let raw = fs::read(path.with_file_name(v.trim()))?;
            let n: usize = dims.iter().product::<usize>() * dims.len();
            if raw.len() != 8 * n {
                return Err(Error::Integrity(format!(
                    "displacement file holds {} bytes, expected {}",
                    raw.len(),
                    8 * n
                )));
            }
            return Ok(raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect());
        }
    }
    Err(Error::parse("truth sidecar", "no theta or displacement entry"))
}

/// Similarity about the image centre followed by a translation.
fn centred_affine(dims: &[usize], angle_deg: f64, scale: f64, shift: &[f64]) -> AffineParams {
    let d = dims.len();
    let c: Vec<f64> = dims.iter().map(|&n| (n as f64 - 1.0) / 2.0).collect();
    let (s, co) = angle_deg.to_radians().sin_cos();
    let mut a = vec![vec![0.0; d]; d];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = scale;
    }
    a[0][0] = scale * co;
    a[0][1] = -scale * s;
    a[1][0] = scale * s;
    a[1][1] = scale * co;
    let mut theta = Vec::with_capacity(d * (d + 1));
    for i in 0..d {
        theta.extend_from_slice(&a[i]);
        let ac: f64 = (0..d).map(|j| a[i][j] * c[j]).sum();
        theta.push(c[i] - ac + shift[i]);
    }
    AffineParams::new(theta).expect("2D or 3D")
}

/// Gaussian blobs and a noisy copy rendered under a known similarity.
pub fn blob2d(seed: u64, size: usize, noise_sigma: f64) -> Result<Fixture> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let dims = [size, size];
    let field = BlobField::random(
        &mut rng,
        &dims,
        7,
        (0.04 * size as f64, 0.08 * size as f64),
        (60.0, 110.0),
    );
    let truth = centred_affine(&dims, 2.0, 1.03, &[3.0, -2.0]);
    let noise = Normal::new(0.0, noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
    let moving = render(&dims, |x| field.eval(x))?;
    let target = render(&dims, |x| field.eval(&truth.apply(x)) + noise.sample(&mut rng))?;
    Ok(Fixture {
        kind: FixtureKind::Blob2d,
        seed,
        moving,
        target,
        truth: GroundTruth::Affine(truth),
    })
}

/// Blobs and a copy under a smooth cubic B-spline deformation.
pub fn warped_pair(seed: u64, size: usize) -> Result<Fixture> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let dims = [size, size];
    let field = BlobField::random(
        &mut rng,
        &dims,
        9,
        (0.05 * size as f64, 0.08 * size as f64),
        (60.0, 110.0),
    );
    let mut grid = BSplineGrid::new(&dims, &[16.0, 16.0])?;
    for c in grid.coefficients_mut() {
        *c = rng.random_range(-2.5..2.5);
    }
    let warp = Transform::BSpline(grid);
    let moving = render(&dims, |x| field.eval(x))?;
    let target = render(&dims, |x| field.eval(&warp.apply(x)))?;
    Ok(Fixture {
        kind: FixtureKind::WarpedPair,
        seed,
        moving,
        target,
        truth: GroundTruth::Displacement(warp.displacement_field(&dims)),
    })
}

/// One blob volume seen through two different monotone intensity maps,
/// the target additionally moved by a small rigid transform.
pub fn mi_pair_3d(seed: u64, size: usize) -> Result<Fixture> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let dims = [size, size, size];
    let field = BlobField::random(
        &mut rng,
        &dims,
        12,
        (0.08 * size as f64, 0.12 * size as f64),
        (40.0, 110.0),
    );
    let peak = Image::from_fn(dims.to_vec(), vec![1.0; 3], |idx| {
        let x: Vec<f64> = idx.iter().map(|&i| i as f64).collect();
        field.eval(&x)
    })?
    .intensity_range()
    .1;
    let norm = |v: f64| ((v - field.background) / (peak - field.background)).clamp(0.0, 1.0);
    // increasing gamma curve vs decreasing exponential saturation
    let map_moving = |v: f64| 250.0 * norm(v).powf(0.6);
    let map_target = |v: f64| 240.0 - 220.0 * (1.0 - (-4.0 * norm(v)).exp()) / (1.0 - (-4.0f64).exp());
    let truth = centred_affine(&dims, 3.0, 1.0, &[1.5, -1.0, 1.0]);
    let moving = render(&dims, |x| map_moving(field.eval(x)))?;
    let target = render(&dims, |x| map_target(field.eval(&truth.apply(x))))?;
    Ok(Fixture {
        kind: FixtureKind::MiPair3d,
        seed,
        moving,
        target,
        truth: GroundTruth::Multimodal(truth),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_deterministic() {
        let a = blob2d(4, 32, 2.0).unwrap();
        let b = blob2d(4, 32, 2.0).unwrap();
        assert_eq!(a.target.data(), b.target.data());
        assert_ne!(blob2d(5, 32, 2.0).unwrap().moving.data(), a.moving.data());
        assert!(a
            .moving
            .data()
            .iter()
            .all(|v| v.fract() == 0.0 && (0.0..=255.0).contains(v)));
    }

    #[test]
    fn truth_round_trips_through_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let f = blob2d(1, 24, 2.0).unwrap();
        f.save(dir.path()).unwrap();
        let d = load_truth_displacement(&dir.path().join("truth.txt"), f.target.dims()).unwrap();
        let want = f.truth_displacement();
        assert!(d.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-12));
    }
}
