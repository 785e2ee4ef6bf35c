//! Mutual information from a Parzen-smoothed joint histogram.
//!
//! The moving image is binned with a cubic window (matrix `A`, `N_x × N_r`)
//! and the target with a zero-order window (matrix `B`, `N_x × N_t`), so the
//! joint PDF is `P = AᵀB / N_x`. Its parameter derivative
//! `P'[t, r, p] = (1/N_x) Σ_k B[k, t] C[k, r, p]` uses the derivative
//! tensor `C` built from the steepest-descent rows.

use super::ssd::SteepestDescentMatrix;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::spline::{beta0, beta2, beta3, beta3_deriv};

/// Probabilities below this are treated as empty bins.
pub const PDF_FLOOR: f64 = 1e-12;

/// Window order used by [`parzen_window`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowOrder {
    Zero,
    Quadratic,
    Cubic,
}

pub fn parzen_window(order: WindowOrder, eps: f64) -> f64 {
    match order {
        WindowOrder::Zero => beta0(eps),
        WindowOrder::Quadratic => beta2(eps),
        WindowOrder::Cubic => beta3(eps),
    }
}

/// Binning of one image's intensities: bin coordinate `(v - origin) / width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParzenAxis {
    pub bins: usize,
    pub width: f64,
    pub origin: f64,
}

impl ParzenAxis {
    /// Cubic binning: `[lo, hi]` lands on bin coordinates `[1, bins - 2]`.
    pub fn cubic(bins: usize, lo: f64, hi: f64) -> Result<Self> {
        if bins < 4 {
            return Err(Error::Config(format!("cubic histogram needs >= 4 bins, got {bins}")));
        }
        let width = (hi - lo) / (bins - 3) as f64;
        Self::checked(bins, width, lo - width)
    }

    /// Zero-order binning: `[lo, hi]` lands on bin coordinates `[0, bins - 1]`.
    pub fn boxed(bins: usize, lo: f64, hi: f64) -> Result<Self> {
        if bins < 2 {
            return Err(Error::Config(format!("histogram needs >= 2 bins, got {bins}")));
        }
        Self::checked(bins, (hi - lo) / (bins - 1) as f64, lo)
    }

    fn checked(bins: usize, width: f64, origin: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::Config(format!("zero-width histogram bins (width {width})")));
        }
        Ok(Self { bins, width, origin })
    }

    pub fn position(&self, v: f64) -> f64 {
        (v - self.origin) / self.width
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParzenConfig {
    pub moving: ParzenAxis,
    pub target: ParzenAxis,
}

impl ParzenConfig {
    pub fn new(bins_r: usize, bins_t: usize, moving_range: (f64, f64), target_range: (f64, f64)) -> Result<Self> {
        Ok(Self {
            moving: ParzenAxis::cubic(bins_r, moving_range.0, moving_range.1)?,
            target: ParzenAxis::boxed(bins_t, target_range.0, target_range.1)?,
        })
    }
}

/// `A[k, r] = β³(r - pos(warped[k]))`.
pub fn moving_histogram(warped: &[f64], axis: &ParzenAxis) -> Matrix {
    let mut a = Matrix::zeros(warped.len(), axis.bins);
    for (k, &w) in warped.iter().enumerate() {
        let p = axis.position(w);
        let lo = (p.floor() as isize - 1).max(0);
        let hi = (p.floor() as isize + 2).min(axis.bins as isize - 1);
        for r in lo..=hi {
            a.set(k, r as usize, beta3(r as f64 - p));
        }
    }
    a
}

/// `B[k, t] = β⁰(t - pos(target[k]))`, one unit entry per row.
pub fn target_histogram(target: &[f64], axis: &ParzenAxis) -> Matrix {
    let mut b = Matrix::zeros(target.len(), axis.bins);
    for (k, &v) in target.iter().enumerate() {
        let p = axis.position(v);
        let t = (p - 0.5).ceil();
        let t = t.clamp(0.0, (axis.bins - 1) as f64) as usize;
        b.set(k, t, 1.0);
    }
    b
}

pub fn build_histogram_matrices(warped: &[f64], target: &[f64], cfg: &ParzenConfig) -> Result<(Matrix, Matrix)> {
    if warped.len() != target.len() {
        return Err(Error::arg("histogram inputs differ in length"));
    }
    Ok((
        moving_histogram(warped, &cfg.moving),
        target_histogram(target, &cfg.target),
    ))
}

#[derive(Debug, Clone)]
pub struct JointPdf {
    /// `N_r × N_t`.
    pub p: Matrix,
    pub p_r: Vec<f64>,
    pub p_t: Vec<f64>,
}

impl JointPdf {
    /// Normalizes a joint count matrix `AᵀB` by the sample count.
    pub fn from_counts(counts: Matrix, n_x: usize) -> Result<Self> {
        if n_x == 0 {
            return Err(Error::arg("joint PDF over zero samples"));
        }
        let mut p = counts;
        let inv = 1.0 / n_x as f64;
        p.data_mut().iter_mut().for_each(|v| *v *= inv);
        let p_r = (0..p.rows()).map(|r| p.row(r).iter().sum()).collect();
        let p_t = (0..p.cols())
            .map(|t| (0..p.rows()).map(|r| p.get(r, t)).sum())
            .collect();
        Ok(Self { p, p_r, p_t })
    }

    pub fn total(&self) -> f64 {
        self.p.data().iter().sum()
    }
}

pub fn joint_pdf(a: &Matrix, b: &Matrix) -> Result<JointPdf> {
    if a.rows() != b.rows() {
        return Err(Error::arg("A and B have different sample counts"));
    }
    JointPdf::from_counts(a.transpose().matmul(b), a.rows())
}

/// `C[k, r, p]`, stored sample-major then bin then parameter.
#[derive(Debug, Clone)]
pub struct DerivativeTensorC {
    pub n_x: usize,
    pub n_r: usize,
    pub n_params: usize,
    pub data: Vec<f64>,
}

impl DerivativeTensorC {
    #[inline]
    pub fn get(&self, k: usize, r: usize, p: usize) -> f64 {
        self.data[(k * self.n_r + r) * self.n_params + p]
    }

    /// `C[·, ·, p]ᵀ` as an `N_r × N_x` matrix.
    pub fn slice_t(&self, p: usize) -> Matrix {
        let mut m = Matrix::zeros(self.n_r, self.n_x);
        for k in 0..self.n_x {
            for r in 0..self.n_r {
                m.set(r, k, self.get(k, r, p));
            }
        }
        m
    }
}

/// `C[k, r, p] = β³'(r - pos(w_k)) · (-1/Δb_r) · S[k, p]`.
pub fn derivative_tensor_from(
    s: &SteepestDescentMatrix,
    warped: &[f64],
    axis: &ParzenAxis,
) -> Result<DerivativeTensorC> {
    if warped.len() != s.rows() {
        return Err(Error::arg("warped samples and steepest-descent rows differ"));
    }
    let n_x = s.rows();
    let n_p = s.cols();
    let n_r = axis.bins;
    let mut data = vec![0.0; n_x * n_r * n_p];
    for (k, &w) in warped.iter().enumerate() {
        let pos = axis.position(w);
        let lo = (pos.floor() as isize - 1).max(0);
        let hi = (pos.floor() as isize + 2).min(n_r as isize - 1);
        let row = s.matrix.row(k);
        for r in lo..=hi {
            let d = beta3_deriv(r as f64 - pos) * (-1.0 / axis.width);
            if d == 0.0 {
                continue;
            }
            let base = (k * n_r + r as usize) * n_p;
            for (slot, sp) in data[base..base + n_p].iter_mut().zip(row) {
                *slot = d * sp;
            }
        }
    }
    Ok(DerivativeTensorC {
        n_x,
        n_r,
        n_params: n_p,
        data,
    })
}

/// `P'` stored as `[t][r][p]`.
#[derive(Debug, Clone)]
pub struct PdfDerivative {
    pub n_t: usize,
    pub n_r: usize,
    pub n_params: usize,
    pub data: Vec<f64>,
}

impl PdfDerivative {
    pub fn zeros(n_t: usize, n_r: usize, n_params: usize) -> Self {
        Self {
            n_t,
            n_r,
            n_params,
            data: vec![0.0; n_t * n_r * n_params],
        }
    }

    #[inline]
    pub fn get(&self, t: usize, r: usize, p: usize) -> f64 {
        self.data[(t * self.n_r + r) * self.n_params + p]
    }

    #[inline]
    pub fn set(&mut self, t: usize, r: usize, p: usize, v: f64) {
        self.data[(t * self.n_r + r) * self.n_params + p] = v;
    }

    /// Fills parameter slice `p` from a jointly computed `C_pᵀ B` (`N_r × N_t`).
    pub fn set_slice_from_product(&mut self, p: usize, ct_b: &Matrix, n_x: usize) {
        let scale = 1.0 / n_x as f64;
        for r in 0..self.n_r {
            for t in 0..self.n_t {
                self.set(t, r, p, scale * ct_b.get(r, t));
            }
        }
    }
}

pub fn joint_pdf_derivative(b: &Matrix, c: &DerivativeTensorC) -> Result<PdfDerivative> {
    if b.rows() != c.n_x {
        return Err(Error::arg(format!("B has {} samples, C has {}", b.rows(), c.n_x)));
    }
    let mut out = PdfDerivative::zeros(b.cols(), c.n_r, c.n_params);
    for p in 0..c.n_params {
        let prod = c.slice_t(p).matmul(b);
        out.set_slice_from_product(p, &prod, c.n_x);
    }
    Ok(out)
}

pub fn mi_value(pdf: &JointPdf) -> f64 {
    let mut mi = 0.0;
    for r in 0..pdf.p.rows() {
        for t in 0..pdf.p.cols() {
            let p = pdf.p.get(r, t);
            if p > PDF_FLOOR {
                mi += p * (p / (pdf.p_r[r] * pdf.p_t[t])).ln();
            }
        }
    }
    mi
}

/// Gradient of MI with respect to θ and its linearized curvature.
///
/// `G[p] = Σ P'[t,r,p] log(p(r,t)/p(r))`,
/// `H[p,q] = Σ P'[t,r,p] P'[t,r,q] (1/p(r,t) - 1/p(r))`; `H` is positive
/// semidefinite, so `θ + (H + λI)⁻¹ G` ascends MI.
pub fn mi_gauss_newton_terms(pdf: &JointPdf, dp: &PdfDerivative) -> Result<(Vec<f64>, Matrix)> {
    if dp.n_r != pdf.p.rows() || dp.n_t != pdf.p.cols() {
        return Err(Error::arg("P and P' shapes differ"));
    }
    let n = dp.n_params;
    let mut g = vec![0.0; n];
    let mut h = Matrix::zeros(n, n);
    for t in 0..dp.n_t {
        for r in 0..dp.n_r {
            let p = pdf.p.get(r, t);
            if p < PDF_FLOOR || pdf.p_r[r] < PDF_FLOOR {
                continue;
            }
            let log_term = (p / pdf.p_r[r]).ln();
            let w = 1.0 / p - 1.0 / pdf.p_r[r];
            let base = (t * dp.n_r + r) * n;
            let d = &dp.data[base..base + n];
            for i in 0..n {
                g[i] += d[i] * log_term;
                if d[i] == 0.0 {
                    continue;
                }
                for j in i..n {
                    let v = h.get(i, j) + d[i] * d[j] * w;
                    h.set(i, j, v);
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            let v = h.get(j, i);
            h.set(i, j, v);
        }
    }
    Ok((g, h))
}
