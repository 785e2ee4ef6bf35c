use super::Image;
use crate::error::{Error, Result};

/// Multilinear interpolation at a voxel-index coordinate.
///
/// Nodes outside the grid read as zero, so the interpolant decays linearly
/// to zero within one voxel of the border and is exactly zero beyond it.
pub fn interpolate(img: &Image, x: &[f64]) -> Result<f64> {
    if x.len() != img.ndim() {
        return Err(Error::arg(format!(
            "coordinate has {} axes, image has {}",
            x.len(),
            img.ndim()
        )));
    }
    if x.iter().any(|v| v.is_nan()) {
        return Err(Error::arg("NaN coordinate"));
    }
    Ok(sample(img, x))
}

/// Unchecked variant of [`interpolate`] for hot loops.
pub fn sample(img: &Image, x: &[f64]) -> f64 {
    let dims = img.dims();
    let nd = dims.len();
    let mut base = [0isize; 3];
    let mut frac = [0.0f64; 3];
    for a in 0..nd {
        let xa = x[a];
        if !(xa > -1.0 && xa < dims[a] as f64) {
            return 0.0;
        }
        let f = xa.floor();
        base[a] = f as isize;
        frac[a] = xa - f;
    }
    let data = img.data();
    let mut acc = 0.0;
    'corner: for corner in 0..(1usize << nd) {
        let mut w = 1.0;
        let mut off = 0usize;
        let mut stride = 1usize;
        for a in 0..nd {
            let bit = (corner >> a) & 1;
            let i = base[a] + bit as isize;
            if i < 0 || i >= dims[a] as isize {
                continue 'corner;
            }
            w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            off += i as usize * stride;
            stride *= dims[a];
        }
        acc += w * data[off];
    }
    acc
}
