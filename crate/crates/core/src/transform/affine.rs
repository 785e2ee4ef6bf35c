use super::level_offset;
use crate::error::{Error, Result};

/// Affine map `y = A x + t`.
///
/// `theta` is the `d x (d+1)` augmented matrix `[A | t]` in row-major order,
/// so in 2D the layout is `[a00, a01, t0, a10, a11, t1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineParams {
    theta: Vec<f64>,
}

impl AffineParams {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        match theta.len() {
            6 | 12 => Ok(Self { theta }),
            n => Err(Error::arg(format!(
                "affine parameter vector must have 6 or 12 entries, got {n}"
            ))),
        }
    }

    pub fn identity(ndim: usize) -> Self {
        let mut theta = vec![0.0; ndim * (ndim + 1)];
        for i in 0..ndim {
            theta[i * (ndim + 1) + i] = 1.0;
        }
        Self { theta }
    }

    pub fn translation(t: &[f64]) -> Self {
        let d = t.len();
        let mut p = Self::identity(d);
        for (i, ti) in t.iter().enumerate() {
            p.theta[i * (d + 1) + d] = *ti;
        }
        p
    }

    pub fn ndim(&self) -> usize {
        if self.theta.len() == 6 {
            2
        } else {
            3
        }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn linear(&self, i: usize, j: usize) -> f64 {
        self.theta[i * (self.ndim() + 1) + j]
    }

    pub fn offset(&self, i: usize) -> f64 {
        let d = self.ndim();
        self.theta[i * (d + 1) + d]
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let d = self.ndim();
        (0..d)
            .map(|i| {
                let row = &self.theta[i * (d + 1)..(i + 1) * (d + 1)];
                row[..d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + row[d]
            })
            .collect()
    }

    pub fn jacobian_row(&self, x: &[f64], grad: &[f64]) -> Vec<f64> {
        let d = self.ndim();
        let mut row = Vec::with_capacity(d * (d + 1));
        for &g in grad.iter().take(d) {
            row.extend(x.iter().map(|xj| g * xj));
            row.push(g);
        }
        row
    }

    /// `self ∘ inner`: apply `inner` first.
    pub fn compose(&self, inner: &AffineParams) -> AffineParams {
        let d = self.ndim();
        let mut out = AffineParams::identity(d);
        for i in 0..d {
            for j in 0..d {
                out.theta[i * (d + 1) + j] = (0..d).map(|k| self.linear(i, k) * inner.linear(k, j)).sum();
            }
            out.theta[i * (d + 1) + d] =
                (0..d).map(|k| self.linear(i, k) * inner.offset(k)).sum::<f64>() + self.offset(i);
        }
        out
    }

    /// Level `m` voxel `x_l` sits at full-resolution `m x_l + c`.
    pub fn change_level(&self, from_m: usize, to_m: usize) -> AffineParams {
        let d = self.ndim();
        let (c1, c2) = (level_offset(from_m), level_offset(to_m));
        let mut out = self.clone();
        for i in 0..d {
            let row_sum: f64 = (0..d).map(|j| self.linear(i, j)).sum();
            // translation in full-resolution units, then into the target frame
            let t_full = from_m as f64 * self.offset(i) + c1 - row_sum * c1;
            out.theta[i * (d + 1) + d] = (t_full + row_sum * c2 - c2) / to_m as f64;
        }
        out
    }
}
