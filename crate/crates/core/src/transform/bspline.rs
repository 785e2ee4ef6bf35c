use super::level_offset;
use crate::error::{Error, Result};
use crate::spline::cubic_weights;

/// Cubic B-spline free-form deformation `W(x) = x + Σ β³ c`.
///
/// Control point `j` on axis `a` sits at voxel `(j - 1) * spacing[a]`; the
/// grid extends three knots past the image so every voxel has full support.
/// Coefficients are stored axis-major: all axis-0 displacements first.
#[derive(Debug, Clone, PartialEq)]
pub struct BSplineGrid {
    spacing: Vec<f64>,
    grid_dims: Vec<usize>,
    coefficients: Vec<f64>,
}

impl BSplineGrid {
    /// Zero-displacement grid covering an image of `image_dims` voxels.
    pub fn new(image_dims: &[usize], spacing: &[f64]) -> Result<Self> {
        if image_dims.len() != spacing.len() || !(2..=3).contains(&image_dims.len()) {
            return Err(Error::arg("B-spline grid needs matching 2D or 3D dims and spacing"));
        }
        if spacing.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::arg(format!("control spacing must be positive, got {spacing:?}")));
        }
        let grid_dims: Vec<usize> = image_dims
            .iter()
            .zip(spacing)
            .map(|(&d, &s)| (d as f64 / s).ceil() as usize + 3)
            .collect();
        let n = grid_dims.iter().product::<usize>() * image_dims.len();
        Ok(Self {
            spacing: spacing.to_vec(),
            grid_dims,
            coefficients: vec![0.0; n],
        })
    }

    pub fn ndim(&self) -> usize {
        self.grid_dims.len()
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn grid_dims(&self) -> &[usize] {
        &self.grid_dims
    }

    pub fn n_control_points(&self) -> usize {
        self.grid_dims.iter().product()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coefficients
    }

    /// Calls `f(control point offset, tensor weight)` for every supporting knot.
    fn for_each_support(&self, x: &[f64], mut f: impl FnMut(usize, f64)) {
        let nd = self.ndim();
        let mut starts = [0isize; 3];
        let mut weights = [[0.0; 4]; 3];
        for a in 0..nd {
            let (s, w) = cubic_weights(x[a] / self.spacing[a] + 1.0);
            starts[a] = s;
            weights[a] = w;
        }
        let combos = 1usize << (2 * nd);
        'combo: for c in 0..combos {
            let mut w = 1.0;
            let mut off = 0usize;
            let mut stride = 1usize;
            for a in 0..nd {
                let k = (c >> (2 * a)) & 3;
                let j = starts[a] + k as isize;
                if j < 0 || j >= self.grid_dims[a] as isize {
                    continue 'combo;
                }
                w *= weights[a][k];
                off += j as usize * stride;
                stride *= self.grid_dims[a];
            }
            f(off, w);
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let nd = self.ndim();
        let g = self.n_control_points();
        let mut y = x.to_vec();
        self.for_each_support(x, |off, w| {
            for (a, ya) in y.iter_mut().enumerate().take(nd) {
                *ya += w * self.coefficients[a * g + off];
            }
        });
        y
    }

    pub fn jacobian_sparse(&self, x: &[f64], grad: &[f64]) -> Vec<(usize, f64)> {
        let nd = self.ndim();
        let g = self.n_control_points();
        let mut out = Vec::with_capacity(nd << (2 * nd));
        self.for_each_support(x, |off, w| {
            for (a, ga) in grad.iter().enumerate().take(nd) {
                out.push((a * g + off, w * ga));
            }
        });
        out
    }

    /// Sum of the tensor weights at `x` (one inside the domain).
    pub fn weight_sum(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        self.for_each_support(x, |_, w| s += w);
        s
    }

    /// Nearest-knot copy onto the grid of another pyramid level.
    pub fn change_level(&self, from_m: usize, to_m: usize, to_dims: &[usize]) -> BSplineGrid {
        let nd = self.ndim();
        let ratio = from_m as f64 / to_m as f64;
        let to_spacing: Vec<f64> = self.spacing.iter().map(|s| s * ratio).collect();
        let mut out = BSplineGrid::new(to_dims, &to_spacing).expect("valid grid");
        let (c1, c2) = (level_offset(from_m), level_offset(to_m));
        let g_old = self.n_control_points();
        let g_new = out.n_control_points();
        for new_off in 0..g_new {
            let mut rem = new_off;
            let mut old_off = 0usize;
            let mut stride = 1usize;
            for a in 0..nd {
                let j_new = rem % out.grid_dims[a];
                rem /= out.grid_dims[a];
                let full = (j_new as f64 - 1.0) * to_spacing[a] * to_m as f64 + c2;
                let j_old = ((full - c1) / (from_m as f64 * self.spacing[a]) + 1.0).round();
                let j_old = j_old.clamp(0.0, (self.grid_dims[a] - 1) as f64) as usize;
                old_off += j_old * stride;
                stride *= self.grid_dims[a];
            }
            for a in 0..nd {
                out.coefficients[a * g_new + new_off] = self.coefficients[a * g_old + old_off] * ratio;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spline::beta3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_dims_are_padded() {
        let g = BSplineGrid::new(&[64, 64], &[5.0, 5.0]).unwrap();
        assert_eq!(g.grid_dims(), &[16, 16]);
        assert_eq!(g.coefficients().len(), 16 * 16 * 2);
        assert!(BSplineGrid::new(&[4, 4], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn zero_coefficients_are_identity() {
        let g = BSplineGrid::new(&[20, 20], &[4.0, 4.0]).unwrap();
        assert_eq!(g.apply(&[3.7, 12.2]), vec![3.7, 12.2]);
    }

    #[test]
    fn partition_of_unity_over_domain() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = BSplineGrid::new(&[33, 21, 9], &[5.0, 3.0, 2.5]).unwrap();
        for _ in 0..500 {
            let x = [
                rng.random_range(0.0..32.0),
                rng.random_range(0.0..20.0),
                rng.random_range(0.0..8.0),
            ];
            assert!((g.weight_sum(&x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn on_knot_entry_is_product_of_center_weights() {
        let g = BSplineGrid::new(&[20, 20], &[5.0, 5.0]).unwrap();
        // voxel (10, 5) is knot (3, 2)
        let entries = g.jacobian_sparse(&[10.0, 5.0], &[1.0, 0.0]);
        let knot = 3 + 2 * g.grid_dims()[0];
        let v: f64 = entries.iter().filter(|(i, _)| *i == knot).map(|(_, v)| v).sum();
        assert!((v - beta3(0.0) * beta3(0.0)).abs() < 1e-15);
        let neighbour = 4 + 2 * g.grid_dims()[0];
        let v: f64 = entries.iter().filter(|(i, _)| *i == neighbour).map(|(_, v)| v).sum();
        assert!((v - beta3(1.0) * beta3(0.0)).abs() < 1e-15);
        // y-gradient zero means no axis-1 entries carry weight
        let g_total = g.n_control_points();
        assert!(entries.iter().filter(|(i, _)| *i >= g_total).all(|(_, v)| *v == 0.0));
    }

    #[test]
    fn level_change_preserves_displacement_scale() {
        let mut g = BSplineGrid::new(&[64, 64], &[5.0, 5.0]).unwrap();
        g.coefficients_mut().iter_mut().for_each(|c| *c = 2.0);
        let coarse = g.change_level(1, 2, &[32, 32]);
        assert_eq!(coarse.grid_dims(), g.grid_dims());
        assert!(coarse.coefficients().iter().all(|&c| (c - 1.0).abs() < 1e-12));
    }
}
