//! Voxel subsets used to approximate the cost terms.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;

use crate::cost::MovingImage;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::transform::Transform;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleCount {
    Count(usize),
    /// Fraction of the level's voxels, in `(0, 1]`.
    Fraction(f64),
}

impl SampleCount {
    pub fn resolve(self, voxels: usize) -> Result<usize> {
        let l = match self {
            SampleCount::Count(c) => c,
            SampleCount::Fraction(f) => ((f * voxels as f64).round() as usize).max(1),
        };
        if l == 0 || l > voxels {
            return Err(Error::Config(format!("sample count {l} outside 1..={voxels}")));
        }
        Ok(l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampling {
    Full,
    /// Uniform random sampling without replacement, redrawn every iteration.
    Urs(SampleCount),
    /// Gradient-magnitude sampling, redrawn every iteration.
    Gms(SampleCount),
}

impl Sampling {
    /// Whether the sample set changes between iterations.
    pub fn is_stochastic(&self) -> bool {
        !matches!(self, Sampling::Full)
    }
}

impl fmt::Display for SampleCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleCount::Count(c) => write!(f, "{c}"),
            SampleCount::Fraction(x) => write!(f, "{}%", x * 100.0),
        }
    }
}

impl fmt::Display for Sampling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sampling::Full => write!(f, "full"),
            Sampling::Urs(c) => write!(f, "urs({c})"),
            Sampling::Gms(c) => write!(f, "gms({c})"),
        }
    }
}

impl FromStr for SampleCount {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::parse("sample count", format!("{s:?} is neither a count nor a percentage"));
        if let Some(p) = s.strip_suffix('%') {
            let v: f64 = p.trim().parse().map_err(|_| bad())?;
            if !(v > 0.0 && v <= 100.0) {
                return Err(bad());
            }
            Ok(SampleCount::Fraction(v / 100.0))
        } else {
            Ok(SampleCount::Count(s.parse().map_err(|_| bad())?))
        }
    }
}

/// Accepts `full`, `urs(<n>|<p>%)` and `gms(<n>|<p>%)`.
impl FromStr for Sampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "full" {
            return Ok(Sampling::Full);
        }
        let inner = |prefix: &str| {
            s.strip_prefix(prefix)
                .and_then(|r| r.strip_prefix('('))
                .and_then(|r| r.strip_suffix(')'))
                .map(str::parse::<SampleCount>)
        };
        if let Some(c) = inner("urs") {
            return Ok(Sampling::Urs(c?));
        }
        if let Some(c) = inner("gms") {
            return Ok(Sampling::Gms(c?));
        }
        Err(Error::parse("sampling", format!("unknown strategy {s:?}")))
    }
}

/// Uniform draw of `l` distinct offsets out of `n`, sorted.
pub fn uniform_sample<R: Rng + ?Sized>(n: usize, l: usize, rng: &mut R) -> Vec<usize> {
    let mut v = index::sample(rng, n, l).into_vec();
    v.sort_unstable();
    v
}

/// Weighted draw without replacement (weights renormalized after every
/// draw), sorted. `None` when fewer than `l` weights are positive.
pub fn weighted_sample<R: Rng + ?Sized>(weights: &[f64], l: usize, rng: &mut R) -> Option<Vec<usize>> {
    if weights.iter().filter(|&&w| w > 0.0).count() < l {
        return None;
    }
    let mut v = index::sample_weighted(rng, weights.len(), |i| weights[i], l)
        .ok()?
        .into_vec();
    v.sort_unstable();
    Some(v)
}

/// Gradient norm of the moving image at every warped voxel of `img`.
pub fn gradient_weights(moving: &MovingImage, transform: &Transform, img: &Image) -> Vec<f64> {
    (0..img.len())
        .map(|o| {
            let x: Vec<f64> = img.index_of(o).into_iter().map(|i| i as f64).collect();
            let g = moving.grad(&transform.apply(&x));
            g.iter().map(|v| v * v).sum::<f64>().sqrt()
        })
        .collect()
}

/// Offsets into `img` for one iteration.
pub fn sample_coords<R: Rng + ?Sized>(
    strategy: Sampling,
    img: &Image,
    moving: &MovingImage,
    transform: &Transform,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let n = img.len();
    match strategy {
        Sampling::Full => Ok((0..n).collect()),
        Sampling::Urs(c) => Ok(uniform_sample(n, c.resolve(n)?, rng)),
        Sampling::Gms(c) => {
            let l = c.resolve(n)?;
            let w = gradient_weights(moving, transform, img);
            match weighted_sample(&w, l, rng) {
                Some(v) => Ok(v),
                None => {
                    log::warn!("gradient mass covers fewer than {l} voxels; falling back to uniform sampling");
                    Ok(uniform_sample(n, l, rng))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn parse_strategies() {
        assert_eq!("full".parse::<Sampling>().unwrap(), Sampling::Full);
        assert_eq!(
            "urs(10%)".parse::<Sampling>().unwrap(),
            Sampling::Urs(SampleCount::Fraction(0.1))
        );
        assert_eq!(
            "GMS(500)".parse::<Sampling>().unwrap(),
            Sampling::Gms(SampleCount::Count(500))
        );
        assert!("urs(0%)".parse::<Sampling>().is_err());
        assert!("random".parse::<Sampling>().is_err());
        assert_eq!(Sampling::Urs(SampleCount::Fraction(0.1)).to_string(), "urs(10%)");
    }

    #[test]
    fn exhaustive_uniform_sample_is_a_permutation() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        assert_eq!(uniform_sample(16, 16, &mut rng), (0..16).collect::<Vec<_>>());
    }

    #[test]
    fn weighted_sample_respects_support() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let w = [0.0, 1.0, 0.0, 2.0, 5.0];
        assert_eq!(weighted_sample(&w, 3, &mut rng).unwrap(), vec![1, 3, 4]);
        assert!(weighted_sample(&w, 4, &mut rng).is_none());
    }
}
