//! The registration loop.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::sampling::{sample_coords, uniform_sample, SampleCount};
use super::step::{default_ridge, gauss_newton_step, norm};
use super::{CostKind, IterationRecord, Model, OptimizerConfig, RegistrationResult};
use crate::cost::mi::{
    derivative_tensor_from, mi_gauss_newton_terms, mi_value, moving_histogram, JointPdf, ParzenAxis, PdfDerivative,
};
use crate::cost::ssd::{augmented_operand, build_steepest_descent, ssd_terms_secure, SteepestDescentMatrix};
use crate::cost::{offsets_to_coords, MovingImage};
use crate::error::{Error, Result};
use crate::image::{sample, Image};
use crate::joint::{build_pyramid, ClearJoint, JointProducts, TargetSide};
use crate::linalg::Matrix;
use crate::transform::{AffineParams, BSplineGrid, Transform};

/// Party 1's data for one pyramid level.
pub struct LevelContext {
    pub level: usize,
    pub moving: MovingImage,
    /// Moving-image binning for MI.
    pub axis: Option<ParzenAxis>,
}

impl LevelContext {
    pub fn new(level: usize, image: Image, cost: &CostKind) -> Result<Self> {
        let axis = match cost {
            CostKind::Mi(c) => {
                let (lo, hi) = image.intensity_range();
                Some(ParzenAxis::cubic(c.bins_r, lo, hi)?)
            }
            CostKind::Ssd => None,
        };
        Ok(Self {
            level,
            moving: MovingImage::new(image)?,
            axis,
        })
    }

    pub fn image(&self) -> &Image {
        self.moving.image()
    }
}

/// Cost and Gauss-Newton terms at one parameter vector. `value` is the
/// cost party 1 can compute: SSD offset by `-ΣJ²` per sample, or `-MI`.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: f64,
    pub g_descent: Vec<f64>,
    pub h: Matrix,
    /// Bound on the backend's error in `value`; steps are accepted when
    /// the cost does not rise by more than the combined bounds.
    pub value_noise: f64,
}

pub fn evaluate(
    joint: &mut dyn JointProducts,
    ctx: &LevelContext,
    cost: &CostKind,
    transform: &Transform,
    samples: &[usize],
) -> Result<Evaluation> {
    let coords = offsets_to_coords(ctx.image(), samples);
    let s = build_steepest_descent(&ctx.moving, transform, &coords)?;
    let w = ctx.moving.warp_samples(transform, &coords);
    let n = samples.len();
    let eval = match cost {
        CostKind::Ssd => {
            let lhs = augmented_operand(&s, &w);
            let prod = joint.matvec(ctx.level, samples, &lhs)?;
            let bounds = joint.error_bounds(&lhs);
            let terms = ssd_terms_secure(&s, &w, &prod)?;
            Evaluation {
                value: terms.value / n as f64,
                g_descent: terms.g,
                h: terms.h,
                value_noise: 2.0 * bounds[bounds.len() - 1] / n as f64,
            }
        }
        CostKind::Mi(_) => {
            let (pdf, dp) = mi_joint_terms(joint, ctx, &s, &w, samples)?;
            let (g, h) = mi_gauss_newton_terms(&pdf, &dp)?;
            Evaluation {
                value: -mi_value(&pdf),
                g_descent: g.into_iter().map(|v| -v).collect(),
                h,
                value_noise: 0.0,
            }
        }
    };
    if !eval.value.is_finite() || eval.g_descent.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite cost at level {}", ctx.level)));
    }
    Ok(eval)
}

/// Joint PDF and its parameter derivative from one stacked product
/// `[Aᵀ; C_1ᵀ; …; C_pᵀ] · B`.
pub fn mi_joint_terms(
    joint: &mut dyn JointProducts,
    ctx: &LevelContext,
    s: &SteepestDescentMatrix,
    warped: &[f64],
    samples: &[usize],
) -> Result<(JointPdf, PdfDerivative)> {
    let axis = ctx
        .axis
        .as_ref()
        .ok_or_else(|| Error::Config("MI level without binning".into()))?;
    let n = samples.len();
    let a = moving_histogram(warped, axis);
    let c = derivative_tensor_from(s, warped, axis)?;
    let (n_r, n_p) = (axis.bins, s.cols());
    let mut lhs = Matrix::zeros((1 + n_p) * n_r, n);
    for k in 0..n {
        for r in 0..n_r {
            lhs.set(r, k, a.get(k, r));
            for p in 0..n_p {
                let v = c.get(k, r, p);
                if v != 0.0 {
                    lhs.set((1 + p) * n_r + r, k, v);
                }
            }
        }
    }
    let prod = joint.matmul_hist(ctx.level, samples, &lhs)?;
    let n_t = prod.cols();
    let block = |b: usize| Matrix::from_vec(n_r, n_t, prod.data()[b * n_r * n_t..(b + 1) * n_r * n_t].to_vec());
    let pdf = JointPdf::from_counts(block(0)?, n)?;
    let mut dp = PdfDerivative::zeros(n_t, n_r, n_p);
    for p in 0..n_p {
        dp.set_slice_from_product(p, &block(1 + p)?, n);
    }
    Ok((pdf, dp))
}

fn initial_transform(model: Model, dims: &[usize], m: usize) -> Result<Transform> {
    Ok(match model {
        Model::Affine => Transform::Affine(AffineParams::identity(dims.len())),
        Model::BSpline { spacing } => {
            let s = vec![spacing / m as f64; dims.len()];
            Transform::BSpline(BSplineGrid::new(dims, &s)?)
        }
    })
}

fn is_session_failure(e: &Error) -> bool {
    matches!(e, Error::Protocol { .. } | Error::Transport(_) | Error::He(_))
}

/// Registers party 1's `moving` image against the target behind `joint`.
///
/// Sample sets stay fixed within a level under full sampling and for MI;
/// only then are steps checked for a cost decrease and halved.
pub fn register(
    moving: &Image,
    joint: &mut dyn JointProducts,
    model: Model,
    cost: CostKind,
    cfg: &OptimizerConfig,
) -> Result<RegistrationResult> {
    cfg.validate()?;
    if model == Model::Affine && !(2..=3).contains(&moving.ndim()) {
        return Err(Error::Config("affine registration needs a 2D or 3D image".into()));
    }
    let pyramid = build_pyramid(moving, &cfg.levels, cfg.intensity_scale)?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut transform = initial_transform(model, pyramid[0].dims(), cfg.levels[0].m)?;
    let mut result = RegistrationResult {
        transform: transform.clone(),
        iterations: Vec::new(),
        cost_trace: Vec::new(),
        records: Vec::new(),
        displacement: Vec::new(),
        aborted: None,
    };
    for (li, img) in pyramid.into_iter().enumerate() {
        if li > 0 {
            transform = transform.change_level(cfg.levels[li - 1].m, cfg.levels[li].m, img.dims());
        }
        let ctx = LevelContext::new(li, img, &cost)?;
        match run_level(joint, &ctx, &cost, cfg, &mut transform, &mut rng, &mut result) {
            Ok(iters) => result.iterations.push(iters),
            Err(e) if is_session_failure(&e) => {
                log::error!("registration aborted at level {li}: {e}");
                result
                    .iterations
                    .push(result.records.iter().filter(|r| r.level == li).count());
                result.aborted = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let last_m = cfg.levels[result.iterations.len() - 1].m;
    result.transform = if last_m == 1 {
        transform
    } else {
        transform.change_level(last_m, 1, moving.dims())
    };
    result.displacement = result.transform.displacement_field(moving.dims());
    Ok(result)
}

fn run_level(
    joint: &mut dyn JointProducts,
    ctx: &LevelContext,
    cost: &CostKind,
    cfg: &OptimizerConfig,
    transform: &mut Transform,
    rng: &mut ChaCha20Rng,
    result: &mut RegistrationResult,
) -> Result<usize> {
    let n = ctx.image().len();
    let fixed: Option<Vec<usize>> = match cost {
        CostKind::Mi(c) => Some(uniform_sample(
            n,
            SampleCount::Fraction(c.sample_fraction).resolve(n)?,
            rng,
        )),
        CostKind::Ssd if !cfg.sampling.is_stochastic() => Some((0..n).collect()),
        CostKind::Ssd => None,
    };
    let mut pending = None;
    let mut iters = 0;
    while iters < cfg.max_iters {
        let before = joint.usage();
        let samples = match &fixed {
            Some(s) => s.clone(),
            None => sample_coords(cfg.sampling, ctx.image(), &ctx.moving, transform, rng)?,
        };
        let eval = match pending.take() {
            Some(e) => e,
            None => evaluate(joint, ctx, cost, transform, &samples)?,
        };
        let mut delta = gauss_newton_step(&eval.g_descent, &eval.h, default_ridge(&eval.h))?;
        delta.iter_mut().for_each(|d| *d *= cfg.step_damping);
        let theta: Vec<f64> = transform.params().to_vec();
        let mut halvings = 0;
        let mut accepted = true;
        if fixed.is_none() {
            transform.set_params(&add(&theta, &delta))?;
        } else {
            loop {
                let mut cand = transform.clone();
                cand.set_params(&add(&theta, &delta))?;
                let e = evaluate(joint, ctx, cost, &cand, &samples)?;
                if e.value <= eval.value + eval.value_noise + e.value_noise {
                    *transform = cand;
                    pending = Some(e);
                    break;
                }
                if halvings == cfg.max_halvings {
                    accepted = false;
                    break;
                }
                halvings += 1;
                delta.iter_mut().for_each(|d| *d *= 0.5);
            }
        }
        let step_norm = if accepted { norm(&delta) } else { 0.0 };
        result.cost_trace.push(eval.value);
        result.records.push(IterationRecord {
            level: ctx.level,
            cost: eval.value,
            step_norm,
            halvings,
            samples: samples.len(),
            usage: joint.usage().since(&before),
        });
        iters += 1;
        log::debug!(
            "level {} iter {iters}: cost {:.6e} step {step_norm:.3e}",
            ctx.level,
            eval.value
        );
        if !accepted || step_norm <= cfg.epsilon {
            break;
        }
    }
    Ok(iters)
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Registration against a target held in the clear.
pub fn register_clear(
    moving: &Image,
    target: &Image,
    model: Model,
    cost: CostKind,
    cfg: &OptimizerConfig,
) -> Result<RegistrationResult> {
    let bins_t = match cost {
        CostKind::Mi(c) => c.bins_t,
        CostKind::Ssd => 16,
    };
    let side = TargetSide::new(target, &cfg.levels, cfg.intensity_scale, bins_t)?;
    register(moving, &mut ClearJoint::new(side), model, cost, cfg)
}

/// Mean squared intensity difference over the full grid, in original units.
pub fn intensity_error(moving: &Image, target: &Image, transform: &Transform) -> Result<f64> {
    if moving.dims() != target.dims() {
        return Err(Error::arg("intensity error needs images on the same grid"));
    }
    let n = target.len();
    let sum: f64 = (0..n)
        .map(|o| {
            let x: Vec<f64> = target.index_of(o).into_iter().map(|i| i as f64).collect();
            let d = sample(moving, &transform.apply(&x)) - target.data()[o];
            d * d
        })
        .sum();
    Ok(sum / n as f64)
}
