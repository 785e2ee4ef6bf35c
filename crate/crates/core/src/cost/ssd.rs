//! Sum of squared differences.
//!
//! With residual `r = I(W(x)) - J(x)` the descent gradient is `G = Sᵀ r`
//! and the linearized Hessian `H = SᵀS`. The only factor needing both
//! images is `R = Sᵀ J`, so `G = Sᵀ w - R` with `w` the warped samples.

use super::MovingImage;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::transform::Transform;

/// Per-sample rows of `∇I(W(x)) ∂W/∂θ`.
#[derive(Debug, Clone)]
pub struct SteepestDescentMatrix {
    pub matrix: Matrix,
    pub coords: Vec<Vec<f64>>,
}

impl SteepestDescentMatrix {
    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }
}

#[derive(Debug, Clone)]
pub struct SsdGaussNewtonTerms {
    pub g: Vec<f64>,
    pub h: Matrix,
    pub value: f64,
}

pub fn ssd_value(warped: &[f64], target: &[f64]) -> Result<f64> {
    if warped.len() != target.len() {
        return Err(Error::arg(format!(
            "ssd_value: {} warped vs {} target samples",
            warped.len(),
            target.len()
        )));
    }
    Ok(warped.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum())
}

pub fn build_steepest_descent(
    moving: &MovingImage,
    transform: &Transform,
    coords: &[Vec<f64>],
) -> Result<SteepestDescentMatrix> {
    if coords.is_empty() {
        return Err(Error::arg("steepest-descent matrix needs at least one coordinate"));
    }
    let cols = transform.n_params();
    let mut matrix = Matrix::zeros(coords.len(), cols);
    for (k, x) in coords.iter().enumerate() {
        let y = transform.apply(x);
        let g = moving.grad(&y);
        let row = matrix.row_mut(k);
        for (p, v) in transform.jacobian_sparse(x, &g) {
            row[p] += v;
        }
    }
    Ok(SteepestDescentMatrix {
        matrix,
        coords: coords.to_vec(),
    })
}

fn check_dims(s: &SteepestDescentMatrix, warped: &[f64]) -> Result<()> {
    if warped.len() != s.rows() {
        return Err(Error::arg(format!(
            "steepest-descent matrix has {} rows, got {} samples",
            s.rows(),
            warped.len()
        )));
    }
    Ok(())
}

/// Cleartext reference path.
pub fn ssd_terms_clear(s: &SteepestDescentMatrix, warped: &[f64], target: &[f64]) -> Result<SsdGaussNewtonTerms> {
    check_dims(s, warped)?;
    let value = ssd_value(warped, target)?;
    let r = s.matrix.matvec_t(target);
    let mut terms = ssd_terms_from_product(s, warped, &r)?;
    terms.value = value;
    Ok(terms)
}

/// Assembles `G` and `H` from a jointly computed `R = Sᵀ J`.
///
/// `value` is left as `Σ w²`; callers holding `wᵀJ` subtract `2 wᵀJ`.
pub fn ssd_terms_from_product(s: &SteepestDescentMatrix, warped: &[f64], r: &[f64]) -> Result<SsdGaussNewtonTerms> {
    check_dims(s, warped)?;
    if r.len() != s.cols() {
        return Err(Error::arg("joint product length differs from parameter count"));
    }
    let sw = s.matrix.matvec_t(warped);
    let g = sw.iter().zip(r).map(|(a, b)| a - b).collect();
    Ok(SsdGaussNewtonTerms {
        g,
        h: s.matrix.gram(),
        value: warped.iter().map(|w| w * w).sum(),
    })
}

/// Party 1's operand for the joint product: `Sᵀ` with `wᵀ` appended, so one
/// product yields both `R` and `wᵀJ`.
pub fn augmented_operand(s: &SteepestDescentMatrix, warped: &[f64]) -> Matrix {
    let n = s.rows();
    let p = s.cols();
    let mut m = Matrix::zeros(p + 1, n);
    for k in 0..n {
        let row = s.matrix.row(k);
        for (j, &v) in row.iter().enumerate() {
            m.set(j, k, v);
        }
        m.set(p, k, warped[k]);
    }
    m
}

/// Terms through a joint product of [`augmented_operand`].
///
/// The reported value is `Σ w² - 2 wᵀJ`, which differs from the SSD by the
/// constant `Σ J²` that only party 2 holds.
pub fn ssd_terms_secure(s: &SteepestDescentMatrix, warped: &[f64], product: &[f64]) -> Result<SsdGaussNewtonTerms> {
    let p = s.cols();
    if product.len() != p + 1 {
        return Err(Error::arg("augmented product must have |θ|+1 entries"));
    }
    let mut terms = ssd_terms_from_product(s, warped, &product[..p])?;
    terms.value -= 2.0 * product[p];
    Ok(terms)
}
