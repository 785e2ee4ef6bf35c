//! Centered uniform B-spline basis functions.

/// Zero-order box on the half-open interval `[-1/2, 1/2)`.
pub fn beta0(x: f64) -> f64 {
    if (-0.5..0.5).contains(&x) {
        1.0
    } else {
        0.0
    }
}

pub fn beta2(x: f64) -> f64 {
    let a = x.abs();
    if a < 0.5 {
        0.75 - a * a
    } else if a < 1.5 {
        let t = 1.5 - a;
        0.5 * t * t
    } else {
        0.0
    }
}

pub fn beta3(x: f64) -> f64 {
    let a = x.abs();
    if a < 1.0 {
        2.0 / 3.0 - a * a + 0.5 * a * a * a
    } else if a < 2.0 {
        let t = 2.0 - a;
        t * t * t / 6.0
    } else {
        0.0
    }
}

/// Derivative of [`beta3`] through the degree-lowering identity.
pub fn beta3_deriv(x: f64) -> f64 {
    beta2(x + 0.5) - beta2(x - 0.5)
}

/// The four cubic weights covering `u`, starting at knot `floor(u) - 1`.
pub fn cubic_weights(u: f64) -> (isize, [f64; 4]) {
    let f = u.floor();
    let t = u - f;
    let t2 = t * t;
    let t3 = t2 * t;
    let s = 1.0 - t;
    (
        f as isize - 1,
        [
            s * s * s / 6.0,
            (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
            (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
            t3 / 6.0,
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert!((beta3(0.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((beta3(1.0) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(beta3(2.0), 0.0);
        assert_eq!(beta3(-2.5), 0.0);
        assert_eq!(beta0(0.0), 1.0);
        assert_eq!(beta0(0.5), 0.0);
        assert_eq!(beta0(-0.5), 1.0);
        assert_eq!(beta3_deriv(0.0), 0.0);
    }

    #[test]
    fn cubic_weights_match_basis() {
        for k in 0..200 {
            let u = -3.0 + k as f64 * 0.0371;
            let (start, w) = cubic_weights(u);
            for (i, wi) in w.iter().enumerate() {
                let j = (start + i as isize) as f64;
                assert!((wi - beta3(u - j)).abs() < 1e-12);
            }
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_identity_matches_finite_difference() {
        let h = 1e-6;
        for k in 0..100 {
            let x = -2.2 + k as f64 * 0.0441;
            let fd = (beta3(x + h) - beta3(x - h)) / (2.0 * h);
            assert!((fd - beta3_deriv(x)).abs() < 1e-6, "x={x}");
        }
    }
}
