//! Python bindings: images, fixtures, clear and secure registration, and
//! the simulated MPC product.

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use ppir_core::bench::{run_secure, Fixture as CoreFixture, ImagePair, RunConfig};
use ppir_core::error::Error;
use ppir_core::image::Image as CoreImage;
use ppir_core::joint::Backend;
use ppir_core::linalg::Matrix;
use ppir_core::mpc::{simulate_product, FixedPointCodec, ProductShape};
use ppir_core::optimizer::{self, CostKind, MiConfig, RegistrationResult};
use ppir_core::protocol::{row_scales, MPC_ROW_L1_CAP};
use ppir_core::transform::{displacement_rmse as core_rmse, Transform};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyOSError::new_err(e.to_string()),
        e @ (Error::Config(_) | Error::Parse { .. } | Error::Argument(_)) => PyValueError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

/// An image on a regular grid; the first axis varies fastest in `data`.
#[pyclass(module = "ppir", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Image {
    inner: CoreImage,
}

#[pymethods]
impl Image {
    #[new]
    #[pyo3(signature = (dims, data, spacing=None))]
    fn new(dims: Vec<usize>, data: Vec<f64>, spacing: Option<Vec<f64>>) -> PyResult<Self> {
        let spacing = spacing.unwrap_or_else(|| vec![1.0; dims.len()]);
        Ok(Self {
            inner: CoreImage::new(dims, spacing, data).map_err(py_err)?,
        })
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.inner.dims().to_vec()
    }

    #[getter]
    fn spacing(&self) -> Vec<f64> {
        self.inner.spacing().to_vec()
    }

    #[getter]
    fn data(&self) -> Vec<f64> {
        self.inner.data().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Image(dims={:?})", self.inner.dims())
    }
}

/// Synthetic moving/target pair with known ground truth.
#[pyclass(module = "ppir", frozen)]
struct Fixture {
    inner: CoreFixture,
}

#[pymethods]
impl Fixture {
    /// `kind` is `blob2d`, `warped-pair` or `mi-pair-3d`.
    #[new]
    #[pyo3(signature = (kind, seed=0))]
    fn new(kind: &str, seed: u64) -> PyResult<Self> {
        let kind = kind.parse().map_err(py_err)?;
        Ok(Self {
            inner: CoreFixture::generate(kind, seed).map_err(py_err)?,
        })
    }

    #[getter]
    fn kind(&self) -> String {
        self.inner.kind.to_string()
    }

    #[getter]
    fn moving(&self) -> Image {
        Image {
            inner: self.inner.moving.clone(),
        }
    }

    #[getter]
    fn target(&self) -> Image {
        Image {
            inner: self.inner.target.clone(),
        }
    }

    /// `W(x) - x` over the target grid, interleaved per voxel.
    fn truth_displacement(&self) -> Vec<f64> {
        self.inner.truth_displacement()
    }

    /// Writes images and truth files; returns the written paths.
    fn save(&self, dir: std::path::PathBuf) -> PyResult<Vec<std::path::PathBuf>> {
        self.inner.save(&dir).map_err(py_err)
    }
}

#[pyclass(module = "ppir", frozen)]
struct Registration {
    result: RegistrationResult,
    #[pyo3(get)]
    backend: String,
    #[pyo3(get)]
    party1_bytes: u64,
    #[pyo3(get)]
    party2_bytes: u64,
}

#[pymethods]
impl Registration {
    #[getter]
    fn theta(&self) -> Vec<f64> {
        self.result.theta().to_vec()
    }

    #[getter]
    fn iterations(&self) -> Vec<usize> {
        self.result.iterations.clone()
    }

    #[getter]
    fn cost_trace(&self) -> Vec<f64> {
        self.result.cost_trace.clone()
    }

    #[getter]
    fn displacement(&self) -> Vec<f64> {
        self.result.displacement.clone()
    }

    /// Root mean squared intensity difference after warping `moving`.
    fn intensity_error(&self, moving: &Image, target: &Image) -> PyResult<f64> {
        optimizer::intensity_error(&moving.inner, &target.inner, &self.result.transform).map_err(py_err)
    }

    /// Applies the final transform to a point in target voxel coordinates.
    fn apply(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        if x.len() != self.result.transform.ndim() {
            return Err(PyValueError::new_err("point dimension differs from the transform"));
        }
        Ok(self.result.transform.apply(&x))
    }

    fn __repr__(&self) -> String {
        let model = match self.result.transform {
            Transform::Affine(_) => "affine",
            Transform::BSpline(_) => "bspline",
        };
        format!(
            "Registration(backend={}, model={model}, iterations={:?})",
            self.backend, self.result.iterations
        )
    }
}

/// Registers `moving` to `target`.
///
/// `backend` is `clear`, `mpc`, `fhe-v1` or `fhe-v2`; secure backends run
/// both parties in-process over a loopback transport.
#[pyfunction]
#[pyo3(signature = (
    moving, target, *, model="affine", cost="ssd", backend="clear", sampling="full",
    levels="4:2,2:1,1:0", max_iters=50, epsilon=1e-4, bins=16, mi_fraction=0.1,
    seed=0, crypto_seed=1,
))]
#[allow(clippy::too_many_arguments)]
fn register(
    py: Python<'_>,
    moving: &Image,
    target: &Image,
    model: &str,
    cost: &str,
    backend: &str,
    sampling: &str,
    levels: &str,
    max_iters: usize,
    epsilon: f64,
    bins: usize,
    mi_fraction: f64,
    seed: u64,
    crypto_seed: u64,
) -> PyResult<Registration> {
    let mut cfg = RunConfig::default();
    cfg.model = model.parse().map_err(py_err)?;
    cfg.cost = match cost {
        "ssd" => CostKind::Ssd,
        "mi" => CostKind::Mi(MiConfig {
            bins_r: bins,
            bins_t: bins,
            sample_fraction: mi_fraction,
        }),
        other => return Err(PyValueError::new_err(format!("unknown cost {other:?}"))),
    };
    let o = &mut cfg.optimizer;
    o.backend = backend.parse().map_err(py_err)?;
    o.sampling = sampling.parse().map_err(py_err)?;
    o.levels = ppir_core::bench::parse_levels(levels).map_err(py_err)?;
    o.max_iters = max_iters;
    o.epsilon = epsilon;
    o.seed = seed;
    cfg.crypto_seed = crypto_seed;
    cfg.validate().map_err(py_err)?;
    let pair = ImagePair {
        moving: moving.inner.clone(),
        target: target.inner.clone(),
        truth: None,
    };
    let backend = cfg.optimizer.backend;
    py.detach(move || {
        if backend == Backend::Clear {
            let result = optimizer::register_clear(&pair.moving, &pair.target, cfg.model, cfg.cost, &cfg.optimizer)?;
            Ok(Registration {
                result,
                backend: backend.to_string(),
                party1_bytes: 0,
                party2_bytes: 0,
            })
        } else {
            let run = run_secure(&cfg, &cfg.optimizer, &pair, cfg.crypto_seed)?;
            Ok(Registration {
                party1_bytes: run.party1.bytes_sent(),
                party2_bytes: run.party2.bytes_sent(),
                result: run.result,
                backend: backend.to_string(),
            })
        }
    })
    .map_err(py_err)
}

/// `lhs · column` through the two-party fixed-point protocol, both parties
/// simulated in-process.
#[pyfunction]
#[pyo3(signature = (lhs, column, seed=0))]
fn mpc_product(lhs: Vec<Vec<f64>>, column: Vec<f64>, seed: u64) -> PyResult<Vec<f64>> {
    let k = lhs.len();
    let n = column.len();
    if k == 0 || lhs.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("lhs rows must match the column length"));
    }
    let m = Matrix::from_vec(k, n, lhs.concat()).map_err(py_err)?;
    let scales = row_scales(&m, MPC_ROW_L1_CAP);
    let scaled: Vec<f64> = (0..k)
        .flat_map(|r| m.row(r).iter().map(|v| v * scales[r]).collect::<Vec<_>>())
        .collect();
    let codec = FixedPointCodec::default();
    let mut r1 = ChaCha20Rng::seed_from_u64(seed);
    let mut r2 = ChaCha20Rng::seed_from_u64(seed.wrapping_add(1));
    let out = simulate_product(
        &codec.encode_all(&scaled).map_err(py_err)?,
        &codec.encode_all(&column).map_err(py_err)?,
        ProductShape::new(k, n, 1),
        &codec,
        seed,
        &mut r1,
        &mut r2,
    )
    .map_err(py_err)?;
    Ok(out.result.iter().zip(&scales).map(|(v, s)| v / s).collect())
}

/// Worst-case error of one [`mpc_product`] entry for `|column| <= 1`.
#[pyfunction]
#[pyo3(signature = (row, column_l1, frac_bits=16))]
fn mpc_error_bound(row: Vec<f64>, column_l1: f64, frac_bits: u32) -> f64 {
    ppir_core::protocol::mpc_error_bound(&row, column_l1, frac_bits)
}

#[pyfunction]
fn displacement_rmse(a: Vec<f64>, b: Vec<f64>, spacing: Vec<f64>) -> PyResult<f64> {
    if a.len() != b.len() || spacing.is_empty() || a.len() % spacing.len() != 0 {
        return Err(PyValueError::new_err("displacement fields differ in shape"));
    }
    Ok(core_rmse(&a, &b, &spacing))
}

#[pymodule]
fn ppir(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Image>()?;
    m.add_class::<Fixture>()?;
    m.add_class::<Registration>()?;
    m.add_function(wrap_pyfunction!(register, m)?)?;
    m.add_function(wrap_pyfunction!(mpc_product, m)?)?;
    m.add_function(wrap_pyfunction!(mpc_error_bound, m)?)?;
    m.add_function(wrap_pyfunction!(displacement_rmse, m)?)?;
    Ok(())
}
