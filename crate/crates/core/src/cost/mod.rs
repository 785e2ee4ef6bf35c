//! Registration cost functions and their Gauss-Newton terms.

pub mod mi;
pub mod ssd;

use crate::error::Result;
use crate::image::{sample, Image};
use crate::transform::Transform;

/// Moving image sampled at warped points, with the derivative of its
/// multilinear interpolant.
#[derive(Debug, Clone)]
pub struct MovingImage {
    image: Image,
}

impl MovingImage {
    pub fn new(image: Image) -> Result<Self> {
        Ok(Self { image })
    }

    pub fn image(&self) -> &Image {
        &self.image
    }

    /// Intensity at a (warped) voxel coordinate.
    pub fn value(&self, y: &[f64]) -> f64 {
        sample(&self.image, y)
    }

    /// Per-axis derivative of the interpolant with respect to voxel
    /// coordinates at `y`. On a grid node along an axis, where the
    /// interpolant has a kink, the two one-sided slopes are averaged.
    pub fn grad(&self, y: &[f64]) -> Vec<f64> {
        let mut p = y.to_vec();
        (0..y.len())
            .map(|a| {
                let f = y[a].floor();
                let (lo, hi, div) = if y[a] == f {
                    (f - 1.0, f + 1.0, 2.0)
                } else {
                    (f, f + 1.0, 1.0)
                };
                p[a] = hi;
                let up = sample(&self.image, &p);
                p[a] = lo;
                let down = sample(&self.image, &p);
                p[a] = y[a];
                (up - down) / div
            })
            .collect()
    }

    /// `I(W(x))` for every sample coordinate.
    pub fn warp_samples(&self, transform: &Transform, coords: &[Vec<f64>]) -> Vec<f64> {
        coords.iter().map(|x| self.value(&transform.apply(x))).collect()
    }
}

/// Voxel-index coordinates of linear offsets.
pub fn offsets_to_coords(img: &Image, offsets: &[usize]) -> Vec<Vec<f64>> {
    offsets
        .iter()
        .map(|&o| img.index_of(o).into_iter().map(|i| i as f64).collect())
        .collect()
}
