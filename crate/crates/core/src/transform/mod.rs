//! Spatial transformation models W_θ acting on voxel-index coordinates.

mod affine;
mod bspline;

pub use affine::AffineParams;
pub use bspline::BSplineGrid;

use crate::error::{Error, Result};

/// Centre of a block-mean voxel at scale `m`, in full-resolution voxels.
pub(crate) fn level_offset(m: usize) -> f64 {
    (m as f64 - 1.0) / 2.0
}

#[derive(Debug, Clone, PartialEq)]
pub enum Transform {
    Affine(AffineParams),
    BSpline(BSplineGrid),
}

impl Transform {
    pub fn ndim(&self) -> usize {
        match self {
            Transform::Affine(a) => a.ndim(),
            Transform::BSpline(b) => b.ndim(),
        }
    }

    pub fn n_params(&self) -> usize {
        match self {
            Transform::Affine(a) => a.theta().len(),
            Transform::BSpline(b) => b.coefficients().len(),
        }
    }

    pub fn params(&self) -> &[f64] {
        match self {
            Transform::Affine(a) => a.theta(),
            Transform::BSpline(b) => b.coefficients(),
        }
    }

    pub fn set_params(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params() {
            return Err(Error::arg(format!(
                "expected {} parameters, got {}",
                self.n_params(),
                theta.len()
            )));
        }
        match self {
            Transform::Affine(a) => a.theta_mut().copy_from_slice(theta),
            Transform::BSpline(b) => b.coefficients_mut().copy_from_slice(theta),
        }
        Ok(())
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Transform::Affine(a) => a.apply(x),
            Transform::BSpline(b) => b.apply(x),
        }
    }

    /// Nonzero entries of `grad · ∂W/∂θ` at `x` as `(param index, value)`.
    pub fn jacobian_sparse(&self, x: &[f64], grad: &[f64]) -> Vec<(usize, f64)> {
        match self {
            Transform::Affine(a) => a.jacobian_row(x, grad).into_iter().enumerate().collect(),
            Transform::BSpline(b) => b.jacobian_sparse(x, grad),
        }
    }

    /// Dense `grad · ∂W/∂θ` row.
    pub fn transform_jacobian(&self, x: &[f64], grad: &[f64]) -> Vec<f64> {
        match self {
            Transform::Affine(a) => a.jacobian_row(x, grad),
            Transform::BSpline(b) => {
                let mut row = vec![0.0; b.coefficients().len()];
                for (i, v) in b.jacobian_sparse(x, grad) {
                    row[i] += v;
                }
                row
            }
        }
    }

    /// `W(x) - x` at every voxel of `dims`, flattened voxel-major.
    pub fn displacement_field(&self, dims: &[usize]) -> Vec<f64> {
        let nd = dims.len();
        let n: usize = dims.iter().product();
        let mut out = Vec::with_capacity(n * nd);
        let mut idx = vec![0usize; nd];
        let mut x = vec![0.0; nd];
        for _ in 0..n {
            for a in 0..nd {
                x[a] = idx[a] as f64;
            }
            let y = self.apply(&x);
            out.extend(y.iter().zip(&x).map(|(yi, xi)| yi - xi));
            for (a, i) in idx.iter_mut().enumerate() {
                *i += 1;
                if *i < dims[a] {
                    break;
                }
                *i = 0;
            }
        }
        out
    }

    /// Re-expresses the transform from pyramid scale `from_m` to `to_m`.
    ///
    /// `to_dims` are the image dims at the destination level.
    pub fn change_level(&self, from_m: usize, to_m: usize, to_dims: &[usize]) -> Transform {
        match self {
            Transform::Affine(a) => Transform::Affine(a.change_level(from_m, to_m)),
            Transform::BSpline(b) => Transform::BSpline(b.change_level(from_m, to_m, to_dims)),
        }
    }
}

/// Root-mean-square distance between two displacement fields, in physical units.
pub fn displacement_rmse(a: &[f64], b: &[f64], spacing: &[f64]) -> f64 {
    let nd = spacing.len();
    assert_eq!(a.len(), b.len());
    let n = a.len() / nd;
    let sum: f64 = a
        .chunks_exact(nd)
        .zip(b.chunks_exact(nd))
        .map(|(u, v)| {
            u.iter()
                .zip(v)
                .zip(spacing)
                .map(|((ui, vi), s)| ((ui - vi) * s).powi(2))
                .sum::<f64>()
        })
        .sum();
    (sum / n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fd_check(t: &Transform, rng: &mut ChaCha8Rng, lo: f64, hi: f64) {
        let nd = t.ndim();
        let h = 1e-5;
        for _ in 0..100 {
            let mut tt = t.clone();
            let theta: Vec<f64> = t.params().iter().map(|p| p + rng.random_range(-0.3..0.3)).collect();
            tt.set_params(&theta).unwrap();
            let x: Vec<f64> = (0..nd).map(|_| rng.random_range(lo..hi)).collect();
            let g: Vec<f64> = (0..nd).map(|_| rng.random_range(-2.0..2.0)).collect();
            let row = tt.transform_jacobian(&x, &g);
            let scale = row.iter().fold(1e-3f64, |m, v| m.max(v.abs()));
            for p in 0..theta.len() {
                let mut tp = theta.clone();
                tp[p] += h;
                let mut tm = theta.clone();
                tm[p] -= h;
                let mut t_plus = tt.clone();
                t_plus.set_params(&tp).unwrap();
                let mut t_minus = tt.clone();
                t_minus.set_params(&tm).unwrap();
                let yp = t_plus.apply(&x);
                let ym = t_minus.apply(&x);
                let fd: f64 = (0..nd).map(|a| g[a] * (yp[a] - ym[a]) / (2.0 * h)).sum();
                assert!((fd - row[p]).abs() <= 1e-6 * scale, "param {p}: fd {fd} vs {}", row[p]);
            }
        }
    }

    #[test]
    fn affine_jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        fd_check(&Transform::Affine(AffineParams::identity(2)), &mut rng, 0.0, 50.0);
        fd_check(&Transform::Affine(AffineParams::identity(3)), &mut rng, 0.0, 20.0);
    }

    #[test]
    fn bspline_jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = BSplineGrid::new(&[20, 17], &[5.0, 5.0]).unwrap();
        fd_check(&Transform::BSpline(g), &mut rng, 0.0, 16.0);
        let g3 = BSplineGrid::new(&[8, 8, 8], &[4.0, 4.0, 4.0]).unwrap();
        fd_check(&Transform::BSpline(g3), &mut rng, 0.0, 7.0);
    }

    #[test]
    fn zero_gradient_gives_zero_row() {
        let t = Transform::BSpline(BSplineGrid::new(&[10, 10], &[4.0, 4.0]).unwrap());
        assert!(t.transform_jacobian(&[3.3, 4.1], &[0.0, 0.0]).iter().all(|&v| v == 0.0));
        let a = Transform::Affine(AffineParams::identity(2));
        assert!(a.transform_jacobian(&[3.3, 4.1], &[0.0, 0.0]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn displacement_fields() {
        let id = Transform::Affine(AffineParams::identity(2));
        assert!(id.displacement_field(&[4, 3]).iter().all(|&v| v == 0.0));
        let tr = Transform::Affine(AffineParams::translation(&[1.0, 0.0]));
        let f = tr.displacement_field(&[4, 3]);
        assert!(f.chunks(2).all(|d| d == [1.0, 0.0]));
        assert_eq!(displacement_rmse(&f, &f, &[1.0, 1.0]), 0.0);
        assert!((displacement_rmse(&f, &id.displacement_field(&[4, 3]), &[2.0, 1.0]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bspline_displacement_matches_pointwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut g = BSplineGrid::new(&[30, 25], &[5.0, 5.0]).unwrap();
        for c in g.coefficients_mut() {
            *c = rng.random_range(-2.0..2.0);
        }
        let t = Transform::BSpline(g);
        let field = t.displacement_field(&[30, 25]);
        for _ in 0..100 {
            let x = rng.random_range(0..30usize);
            let y = rng.random_range(0..25usize);
            let w = t.apply(&[x as f64, y as f64]);
            let k = (x + 30 * y) * 2;
            assert_eq!(field[k], w[0] - x as f64);
            assert_eq!(field[k + 1], w[1] - y as f64);
        }
    }

    #[test]
    fn affine_level_round_trip() {
        let mut a = AffineParams::identity(2);
        a.theta_mut().copy_from_slice(&[1.05, 0.02, 3.0, -0.01, 0.97, -2.0]);
        let t = Transform::Affine(a);
        let down = t.change_level(1, 4, &[32, 32]);
        let back = down.change_level(4, 1, &[128, 128]);
        for (x, y) in back.params().iter().zip(t.params()) {
            assert!((x - y).abs() < 1e-12);
        }
        // a point maps consistently through both frames
        let xl = [5.0, 7.0];
        let c = level_offset(4);
        let xf = [4.0 * xl[0] + c, 4.0 * xl[1] + c];
        let yl = down.apply(&xl);
        let yf = t.apply(&xf);
        for k in 0..2 {
            assert!((4.0 * yl[k] + c - yf[k]).abs() < 1e-9);
        }
    }
}
