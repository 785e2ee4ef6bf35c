use super::Image;
use crate::error::{Error, Result};

/// Block-mean downsampling; partial edge blocks average the voxels they hold.
pub fn downsample(img: &Image, m: usize) -> Result<Image> {
    if m == 0 {
        return Err(Error::arg("downsample factor must be >= 1"));
    }
    if m == 1 {
        return Ok(img.clone());
    }
    let dims: Vec<usize> = img.dims().iter().map(|&d| d.div_ceil(m)).collect();
    let spacing: Vec<f64> = img.spacing().iter().map(|&s| s * m as f64).collect();
    let n: usize = dims.iter().product();
    let mut sums = vec![0.0; n];
    let mut counts = vec![0u32; n];
    let src_dims = img.dims();
    for (off, &v) in img.data().iter().enumerate() {
        let mut rem = off;
        let mut dst = 0;
        let mut stride = 1;
        for (a, &d) in src_dims.iter().enumerate() {
            let i = rem % d;
            rem /= d;
            dst += (i / m) * stride;
            stride *= dims[a];
        }
        sums[dst] += v;
        counts[dst] += 1;
    }
    let data = sums.into_iter().zip(counts).map(|(s, c)| s / c as f64).collect();
    Image::new(dims, spacing, data)
}

/// Normalized 1-D Gaussian taps with radius `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= total);
    k
}

/// Separable Gaussian smoothing with edge replication. `sigma` is in voxels.
pub fn gaussian_blur(img: &Image, sigma: f64) -> Result<Image> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::arg(format!("sigma must be finite and >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as isize;
    let dims = img.dims().to_vec();
    let mut cur = img.data().to_vec();
    let mut stride = 1usize;
    for &extent in &dims {
        let mut next = vec![0.0; cur.len()];
        let len = extent as isize;
        for (off, out) in next.iter_mut().enumerate() {
            let pos = ((off / stride) % extent) as isize;
            let base = off - pos as usize * stride;
            let mut acc = 0.0;
            for (t, w) in kernel.iter().enumerate() {
                let p = (pos + t as isize - radius).clamp(0, len - 1) as usize;
                acc += w * cur[base + p * stride];
            }
            *out = acc;
        }
        cur = next;
        stride *= extent;
    }
    img.with_data(cur)
}

/// Per-axis spatial derivative in intensity per physical unit.
///
/// Central differences inside, one-sided differences on the borders.
pub fn gradient(img: &Image) -> Result<Vec<Image>> {
    let dims = img.dims();
    if let Some(a) = dims.iter().position(|&d| d < 2) {
        return Err(Error::arg(format!(
            "gradient needs extent >= 2 on every axis, axis {a} has {}",
            dims[a]
        )));
    }
    let data = img.data();
    let mut out = Vec::with_capacity(dims.len());
    let mut stride = 1usize;
    for (a, &extent) in dims.iter().enumerate() {
        let h = img.spacing()[a];
        let g: Vec<f64> = (0..data.len())
            .map(|off| {
                let pos = (off / stride) % extent;
                if pos == 0 {
                    (data[off + stride] - data[off]) / h
                } else if pos == extent - 1 {
                    (data[off] - data[off - stride]) / h
                } else {
                    (data[off + stride] - data[off - stride]) / (2.0 * h)
                }
            })
            .collect();
        out.push(img.with_data(g)?);
        stride *= extent;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn downsample_constant_and_identity() {
        let img = Image::from_vec(vec![5, 3], vec![7.0; 15]).unwrap();
        let d = downsample(&img, 2).unwrap();
        assert_eq!(d.dims(), &[3, 2]);
        assert!(d.data().iter().all(|&v| v == 7.0));
        assert_eq!(downsample(&img, 1).unwrap(), img);
        assert!(downsample(&img, 0).is_err());
    }

    #[test]
    fn downsample_ramp_block_means() {
        let img = Image::from_vec(vec![4, 4], (0..16).map(f64::from).collect()).unwrap();
        let d = downsample(&img, 2).unwrap();
        assert_eq!(d.data(), &[2.5, 4.5, 10.5, 12.5]);
    }

    #[test]
    fn downsample_partial_blocks() {
        let img = Image::from_vec(vec![3], vec![1.0, 3.0, 10.0]).unwrap();
        assert_eq!(downsample(&img, 2).unwrap().data(), &[2.0, 10.0]);
    }

    #[test]
    fn repeated_downsample_dims() {
        for d in 1..40usize {
            for m in 1..5usize {
                let img = Image::from_vec(vec![d, 3], vec![0.0; d * 3]).unwrap();
                let twice = downsample(&downsample(&img, m).unwrap(), m).unwrap();
                let once = downsample(&img, m * m).unwrap();
                assert_eq!(twice.dims(), once.dims());
            }
        }
    }

    #[test]
    fn blur_identity_and_constant() {
        let img = Image::from_vec(vec![6, 6], (0..36).map(f64::from).collect()).unwrap();
        assert_eq!(gaussian_blur(&img, 0.0).unwrap(), img);
        let c = Image::from_vec(vec![10, 7], vec![4.25; 70]).unwrap();
        let b = gaussian_blur(&c, 3.0).unwrap();
        assert!(b.data().iter().all(|v| (v - 4.25).abs() < 1e-9));
        assert!(gaussian_blur(&c, -1.0).is_err());
    }

    #[test]
    fn blur_impulse_is_outer_product_of_kernels() {
        let mut data = vec![0.0; 81];
        data[4 + 9 * 4] = 1.0;
        let img = Image::from_vec(vec![9, 9], data).unwrap();
        let b = gaussian_blur(&img, 1.0).unwrap();
        // independent kernel evaluation
        let raw: Vec<f64> = (-3i32..=3).map(|i| (-(i * i) as f64 / 2.0).exp()).collect();
        let z: f64 = raw.iter().sum();
        let k: Vec<f64> = raw.iter().map(|v| v / z).collect();
        for x in 0..9usize {
            let expected = if (1..=7).contains(&x) { k[3] * k[x - 1] } else { 0.0 };
            assert!((b.get(&[x, 4]) - expected).abs() < 1e-15, "x={x}");
        }
    }

    #[test]
    fn blur_preserves_mean_for_interior_mass() {
        let mut data = vec![0.0; 40 * 40];
        for y in 15..25 {
            for x in 15..25 {
                data[x + 40 * y] = 1.0 + (x * y) as f64 * 0.01;
            }
        }
        let img = Image::from_vec(vec![40, 40], data).unwrap();
        let b = gaussian_blur(&img, 2.0).unwrap();
        assert!(((b.mean() - img.mean()) / img.mean()).abs() < 1e-6);
    }

    #[test]
    fn gradient_constant_and_ramp() {
        let c = Image::from_vec(vec![5, 4], vec![2.0; 20]).unwrap();
        for g in gradient(&c).unwrap() {
            assert!(g.data().iter().all(|&v| v == 0.0));
        }
        let ramp = Image::from_fn(vec![6, 5], vec![1.0, 1.0], |i| 3.0 * i[0] as f64).unwrap();
        let g = gradient(&ramp).unwrap();
        assert!(g[0].data().iter().all(|&v| (v - 3.0).abs() < 1e-12));
        assert!(g[1].data().iter().all(|&v| v == 0.0));
        assert!(gradient(&Image::from_vec(vec![1, 5], vec![0.0; 5]).unwrap()).is_err());
    }

    #[test]
    fn gradient_affine_field_with_spacing() {
        let img = Image::from_fn(vec![7, 6, 5], vec![0.5, 2.0, 1.0], |i| {
            1.5 * i[0] as f64 * 0.5 - 2.0 * i[1] as f64 * 2.0 + 0.25 * i[2] as f64 + 4.0
        })
        .unwrap();
        let g = gradient(&img).unwrap();
        let a = [1.5, -2.0, 0.25];
        for (axis, gi) in g.iter().enumerate() {
            assert!(gi.data().iter().all(|v| (v - a[axis]).abs() < 1e-12));
        }
    }

    #[test]
    fn gradient_matches_stencil_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let data: Vec<f64> = (0..64).map(|_| rng.random::<f64>()).collect();
        let img = Image::from_vec(vec![8, 8], data.clone()).unwrap();
        let g = gradient(&img).unwrap();
        let at = |x: usize, y: usize| data[x + 8 * y];
        for y in 0..8 {
            for x in 0..8 {
                let gx = match x {
                    0 => at(1, y) - at(0, y),
                    7 => at(7, y) - at(6, y),
                    _ => (at(x + 1, y) - at(x - 1, y)) / 2.0,
                };
                let gy = match y {
                    0 => at(x, 1) - at(x, 0),
                    7 => at(x, 7) - at(x, 6),
                    _ => (at(x, y + 1) - at(x, y - 1)) / 2.0,
                };
                assert_eq!(g[0].get(&[x, y]), gx);
                assert_eq!(g[1].get(&[x, y]), gy);
            }
        }
    }
}
