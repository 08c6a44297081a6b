//! Python bindings: grids, wavelet transforms, sequence norms, heat lifts, tent norms and the
//! verification harness.

use std::path::PathBuf;

use num_complex::Complex64;
use oscillet::harness::{self, Suite};
use oscillet::norms::{oscillation_norm, tl_norm, tlm_wavelet_norm, OscillationOptions, SpaceParams};
use oscillet::operators::riesz_apply;
use oscillet::semigroup::{evolve_coefficients, pi_phi_field, CalibratedFamily, SemigroupSpec, TimeGrid};
use oscillet::tent::{tent_norms, TentOptions, TentParams};
use oscillet::{io, OscilletError};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn err(e: OscilletError) -> PyErr {
    match e {
        OscilletError::Io(e) => PyIOError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

/// Dyadic grid with `2^J` samples per axis on `[0,1)^n`.
#[pyclass(name = "GridSpec", frozen, eq, from_py_object)]
#[derive(Clone, Copy, PartialEq)]
struct PyGridSpec(oscillet::GridSpec);

#[pymethods]
impl PyGridSpec {
    #[new]
    #[pyo3(signature = (n, resolution, j_min = 0))]
    fn new(n: usize, resolution: u32, j_min: u32) -> PyResult<Self> {
        oscillet::GridSpec::new(n, resolution, j_min).map(PyGridSpec).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn resolution(&self) -> u32 {
        self.0.resolution()
    }

    #[getter]
    fn j_min(&self) -> u32 {
        self.0.j_min()
    }

    #[getter]
    fn side(&self) -> usize {
        self.0.side()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("GridSpec(n={}, J={}, j_min={})", self.0.n(), self.0.resolution(), self.0.j_min())
    }
}

/// Complex samples in row-major order.
#[pyclass(name = "GridFunction", from_py_object)]
#[derive(Clone)]
struct PyGridFunction(oscillet::GridFunction);

#[pymethods]
impl PyGridFunction {
    #[new]
    fn new(spec: PyGridSpec, values: Vec<Complex64>) -> PyResult<Self> {
        oscillet::GridFunction::new(spec.0, values).map(PyGridFunction).map_err(err)
    }

    #[staticmethod]
    fn from_real(spec: PyGridSpec, values: Vec<f64>) -> PyResult<Self> {
        oscillet::GridFunction::from_real(spec.0, &values).map(PyGridFunction).map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        io::load_grid_function(&path).map(PyGridFunction).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        io::save_grid_function(&path, &self.0).map_err(err)
    }

    #[getter]
    fn spec(&self) -> PyGridSpec {
        PyGridSpec(*self.0.spec())
    }

    fn values(&self) -> Vec<Complex64> {
        self.0.values().to_vec()
    }

    fn lp_norm(&self, p: f64) -> PyResult<f64> {
        self.0.lp_norm(p).map_err(err)
    }

    fn max_abs_diff(&self, other: &PyGridFunction) -> PyResult<f64> {
        self.0.max_abs_diff(&other.0).map_err(err)
    }
}

/// Wavelet coefficients, scaling block first.
#[pyclass(name = "CoeffField", from_py_object)]
#[derive(Clone)]
struct PyCoeffField(oscillet::CoeffField);

#[pymethods]
impl PyCoeffField {
    #[staticmethod]
    fn load_json(path: PathBuf) -> PyResult<Self> {
        io::load_coeff_json(&path).map(PyCoeffField).map_err(err)
    }

    fn save_json(&self, path: PathBuf) -> PyResult<()> {
        io::save_coeff_json(&path, &self.0).map_err(err)
    }

    #[getter]
    fn spec(&self) -> PyGridSpec {
        PyGridSpec(*self.0.spec())
    }

    #[getter]
    fn family(&self) -> String {
        self.0.family().name()
    }

    fn data(&self) -> Vec<Complex64> {
        self.0.data().to_vec()
    }

    /// Coefficient of type `eps` (bit `d` set for a wavelet factor on axis `d`) at `(j, k)`.
    fn get(&self, eps: u8, level: u32, position: Vec<usize>) -> PyResult<Complex64> {
        self.0.get(&oscillet::WaveletIndex::new(eps, level, position)).map_err(err)
    }

    fn energy(&self) -> f64 {
        self.0.energy()
    }

    fn __len__(&self) -> usize {
        self.0.data().len()
    }
}

/// Orthonormal periodic basis; `family` is `"meyer"` or `"db<N>"`.
#[pyclass(name = "WaveletBasis")]
struct PyWaveletBasis(oscillet::WaveletBasis);

#[pymethods]
impl PyWaveletBasis {
    #[new]
    #[pyo3(signature = (spec, family = "meyer"))]
    fn new(spec: PyGridSpec, family: &str) -> PyResult<Self> {
        let family = harness::parse_family(family).map_err(err)?;
        oscillet::WaveletBasis::new(spec.0, family).map(PyWaveletBasis).map_err(err)
    }

    fn analyze(&self, f: &PyGridFunction) -> PyResult<PyCoeffField> {
        self.0.analyze(&f.0).map(PyCoeffField).map_err(err)
    }

    fn synthesize(&self, c: &PyCoeffField) -> PyResult<PyGridFunction> {
        self.0.synthesize(&c.0).map(PyGridFunction).map_err(err)
    }
}

/// Wavelet coefficients of the heat lift at each node of a log-spaced time grid.
#[pyclass(name = "TimeCoeffField")]
struct PyTimeCoeffField(oscillet::semigroup::TimeCoeffField);

#[pymethods]
impl PyTimeCoeffField {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        io::load_time_field(&path).map(PyTimeCoeffField).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        io::save_time_field(&path, &self.0).map_err(err)
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta
    }

    fn nodes(&self) -> Vec<f64> {
        self.0.grid.nodes()
    }

    /// Parts I to IV of the tent norm.
    #[pyo3(signature = (gamma1, gamma2, p, q, m = 3.0, m_prime = 1.0, tau = 1.0))]
    #[allow(clippy::too_many_arguments)]
    fn tent_norms(&self, gamma1: f64, gamma2: f64, p: f64, q: f64, m: f64, m_prime: f64, tau: f64) -> PyResult<[f64; 4]> {
        let sp = SpaceParams::new(gamma1, gamma2, p, q).map_err(err)?;
        let tp = TentParams::new(sp, m, m_prime, self.0.beta, tau).map_err(err)?;
        tent_norms(&self.0, &tp, &TentOptions::default()).map(|r| r.values()).map_err(err)
    }

    /// Calibrated reconstruction `π_φ` of the lift.
    fn reconstruct(&self) -> PyResult<PyGridFunction> {
        let spec = *self.0.spec();
        let basis = oscillet::WaveletBasis::new(spec, self.0.family()).map_err(err)?;
        let cf = CalibratedFamily::standard(self.0.beta, &spec).map_err(err)?;
        pi_phi_field(&cf, &basis, &self.0).map(|r| PyGridFunction(r.f)).map_err(err)
    }
}

#[pyfunction]
fn tl(c: &PyCoeffField, gamma1: f64, p: f64, q: f64) -> PyResult<f64> {
    tl_norm(&c.0, gamma1, p, q).map_err(err)
}

#[pyfunction]
fn tlm(c: &PyCoeffField, gamma1: f64, gamma2: f64, p: f64, q: f64) -> PyResult<f64> {
    let sp = SpaceParams::new(gamma1, gamma2, p, q).map_err(err)?;
    tlm_wavelet_norm(&c.0, &sp).map(|e| e.value).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (f, basis, gamma1, gamma2, p, q, m0 = 3))]
fn oscillation(f: &PyGridFunction, basis: &PyWaveletBasis, gamma1: f64, gamma2: f64, p: f64, q: f64, m0: usize) -> PyResult<f64> {
    let sp = SpaceParams::new(gamma1, gamma2, p, q).map_err(err)?;
    let opts = OscillationOptions { moment_order: m0, ..OscillationOptions::standard(f.0.spec().n()) };
    oscillation_norm(&f.0, &sp, &basis.0, &opts).map(|e| e.value).map_err(err)
}

/// Heat lift of `f` in a Meyer basis; the time grid defaults to `[2^{−2β(J+1)}, 4]` with 256 nodes.
#[pyfunction]
#[pyo3(signature = (f, beta = 1.0, t_min = None, t_max = None, nodes = None))]
fn heat_lift(f: &PyGridFunction, beta: f64, t_min: Option<f64>, t_max: Option<f64>, nodes: Option<usize>) -> PyResult<PyTimeCoeffField> {
    let spec = *f.0.spec();
    let standard = TimeGrid::standard(&spec, beta);
    let tg = TimeGrid::new(t_min.unwrap_or(standard.t_min), t_max.unwrap_or(standard.t_max), nodes.unwrap_or(standard.len)).map_err(err)?;
    let sg = SemigroupSpec::new(beta, spec).map_err(err)?;
    evolve_coefficients(&sg, &oscillet::WaveletBasis::meyer(spec), &f.0, &tg).map(PyTimeCoeffField).map_err(err)
}

#[pyfunction]
fn riesz(f: &PyGridFunction, l: usize) -> PyResult<PyGridFunction> {
    riesz_apply(&f.0, l).map(PyGridFunction).map_err(err)
}

/// Runs the named suite (`"default"` or `"quick"`) and returns the summary as JSON text;
/// reports are written when `out` is given.
#[pyfunction]
#[pyo3(signature = (name = "quick", seed = 42, out = None))]
fn run_suite(name: &str, seed: u64, out: Option<PathBuf>) -> PyResult<String> {
    let result = harness::run_all(&Suite::named(name, seed).map_err(err)?);
    if let Some(dir) = out {
        harness::write_reports(&result, &dir).map_err(err)?;
    }
    serde_json::to_string(&result.summary).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
#[pyo3(name = "oscillet")]
fn oscillet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGridSpec>()?;
    m.add_class::<PyGridFunction>()?;
    m.add_class::<PyCoeffField>()?;
    m.add_class::<PyWaveletBasis>()?;
    m.add_class::<PyTimeCoeffField>()?;
    m.add_function(wrap_pyfunction!(tl, m)?)?;
    m.add_function(wrap_pyfunction!(tlm, m)?)?;
    m.add_function(wrap_pyfunction!(oscillation, m)?)?;
    m.add_function(wrap_pyfunction!(heat_lift, m)?)?;
    m.add_function(wrap_pyfunction!(riesz, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    Ok(())
}
