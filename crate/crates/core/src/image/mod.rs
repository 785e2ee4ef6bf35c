//! Scalar intensity grids in two or three dimensions.
//!
//! Axis 0 varies fastest in `data`, so a 2D image is stored row by row with
//! `dims = [width, height]`, which is the PGM byte order.

mod filter;
mod interp;
pub mod io;

pub use filter::{downsample, gaussian_blur, gaussian_kernel, gradient};
pub use interp::{interpolate, sample};
pub use io::{load_image, save_image, ImageFormat};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    dims: Vec<usize>,
    spacing: Vec<f64>,
    data: Vec<f64>,
    intensity_range: (f64, f64),
}

impl Image {
    pub fn new(dims: Vec<usize>, spacing: Vec<f64>, data: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.len() > 3 {
            return Err(Error::arg(format!("unsupported dimensionality {}", dims.len())));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::arg(format!("all dims must be >= 1, got {dims:?}")));
        }
        if spacing.len() != dims.len() {
            return Err(Error::arg("spacing and dims differ in length"));
        }
        if spacing.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::arg(format!("spacing must be positive, got {spacing:?}")));
        }
        let expected: usize = dims.iter().product();
        if data.len() != expected {
            return Err(Error::Integrity(format!(
                "data length {} does not match dims {:?} (expected {expected})",
                data.len(),
                dims
            )));
        }
        let intensity_range = range_of(&data);
        Ok(Self {
            dims,
            spacing,
            data,
            intensity_range,
        })
    }

    /// Unit-spacing image.
    pub fn from_vec(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let spacing = vec![1.0; dims.len()];
        Self::new(dims, spacing, data)
    }

    /// Builds an image by evaluating `f` at every voxel index.
    pub fn from_fn(dims: Vec<usize>, spacing: Vec<f64>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let n: usize = dims.iter().product();
        let mut data = Vec::with_capacity(n);
        let mut idx = vec![0usize; dims.len()];
        for _ in 0..n {
            data.push(f(&idx));
            for (a, i) in idx.iter_mut().enumerate() {
                *i += 1;
                if *i < dims[a] {
                    break;
                }
                *i = 0;
            }
        }
        Self::new(dims, spacing, data)
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn intensity_range(&self) -> (f64, f64) {
        self.intensity_range
    }

    /// Linear offset of a voxel index.
    pub fn offset(&self, idx: &[usize]) -> usize {
        let mut off = 0;
        let mut stride = 1;
        for (a, &i) in idx.iter().enumerate() {
            off += i * stride;
            stride *= self.dims[a];
        }
        off
    }

    /// Voxel index of a linear offset.
    pub fn index_of(&self, mut offset: usize) -> Vec<usize> {
        self.dims
            .iter()
            .map(|&d| {
                let i = offset % d;
                offset /= d;
                i
            })
            .collect()
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    /// Same geometry, new values.
    pub fn with_data(&self, data: Vec<f64>) -> Result<Self> {
        Self::new(self.dims.clone(), self.spacing.clone(), data)
    }

    /// Multiplies every intensity by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let data: Vec<f64> = self.data.iter().map(|v| v * factor).collect();
        let intensity_range = range_of(&data);
        Self {
            dims: self.dims.clone(),
            spacing: self.spacing.clone(),
            data,
            intensity_range,
        }
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

fn range_of(data: &[f64]) -> (f64, f64) {
    data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}

/// One level of a coarse-to-fine schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct PyramidLevel {
    pub image: Image,
    pub scale_factor: usize,
    pub blur_sigma: f64,
}

impl PyramidLevel {
    /// Blurs (in full-resolution voxel units) then block-averages by `m`.
    pub fn build(original: &Image, m: usize, blur_sigma: f64) -> Result<Self> {
        let blurred = gaussian_blur(original, blur_sigma)?;
        let image = downsample(&blurred, m)?;
        Ok(Self {
            image,
            scale_factor: m,
            blur_sigma,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_length_mismatch() {
        let err = Image::from_vec(vec![2, 2], vec![1.0; 3]).unwrap_err();
        assert!(matches!(err, Error::Integrity(_)));
    }

    #[test]
    fn rejects_zero_dim_and_bad_spacing() {
        assert!(Image::from_vec(vec![0, 2], vec![]).is_err());
        assert!(Image::new(vec![2], vec![0.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn offsets_round_trip() {
        let img = Image::from_vec(vec![3, 4, 2], vec![0.0; 24]).unwrap();
        for off in 0..24 {
            assert_eq!(img.offset(&img.index_of(off)), off);
        }
        assert_eq!(img.offset(&[1, 0, 0]), 1);
        assert_eq!(img.offset(&[0, 1, 0]), 3);
    }

    #[test]
    fn range_is_cached() {
        let img = Image::from_vec(vec![2, 2], vec![3.0, -1.0, 7.0, 0.0]).unwrap();
        assert_eq!(img.intensity_range(), (-1.0, 7.0));
    }

    #[test]
    fn pyramid_level_dims() {
        let img = Image::from_vec(vec![9, 5], vec![1.0; 45]).unwrap();
        let lvl = PyramidLevel::build(&img, 2, 1.0).unwrap();
        assert_eq!(lvl.image.dims(), &[5, 3]);
        assert_eq!(lvl.image.spacing(), &[2.0, 2.0]);
    }
}
