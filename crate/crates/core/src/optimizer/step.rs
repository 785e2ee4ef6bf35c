//! Damped Gauss-Newton update.

use crate::error::Result;
use crate::linalg::{solve_symmetric, Matrix};

/// Ridge factor relative to the mean diagonal of `H`.
pub const RIDGE_FACTOR: f64 = 1e-6;

/// `λ = 1e-6 · trace(H) / |θ|`.
pub fn default_ridge(h: &Matrix) -> f64 {
    RIDGE_FACTOR * h.trace() / h.rows().max(1) as f64
}

/// Solves `(H + ridge·I) Δθ = -g_descent`, where `g_descent` is the
/// gradient of the cost being minimized.
pub fn gauss_newton_step(g_descent: &[f64], h: &Matrix, ridge: f64) -> Result<Vec<f64>> {
    let neg: Vec<f64> = g_descent.iter().map(|v| -v).collect();
    solve_symmetric(h, &neg, ridge)
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_systems() {
        let g = [0.5, -1.5, 2.0];
        assert_eq!(
            gauss_newton_step(&g, &Matrix::identity(3), 0.0).unwrap(),
            vec![-0.5, 1.5, -2.0]
        );
        let mut h = Matrix::identity(2);
        h.set(0, 0, 2.0);
        h.set(1, 1, 2.0);
        let d = gauss_newton_step(&[2.0, 4.0], &h, 0.0).unwrap();
        assert!((d[0] + 1.0).abs() < 1e-15 && (d[1] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn singular_system_needs_ridge() {
        let h = Matrix::zeros(2, 2);
        assert!(gauss_newton_step(&[1.0, 1.0], &h, 0.0).is_err());
        assert_eq!(gauss_newton_step(&[1.0, 1.0], &h, 1.0).unwrap(), vec![-1.0, -1.0]);
    }
}
