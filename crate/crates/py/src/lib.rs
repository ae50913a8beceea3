//! Python bindings for `chdim`.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use chdim::cli::{run, sanity, ExperimentConfig};
use chdim::dimension::{self as dim, FitPolicy, MetricTag};
use chdim::heisenberg as heis;
use chdim::hermitian::{self as herm, CMat, HPoint};
use chdim::hyperbolic as hyp;
use chdim::schottky::{self as sch, BuildParams, LimitMode};

fn py_err(e: chdim::Error) -> PyErr {
    match e {
        chdim::Error::Input(_) | chdim::Error::Parse(_) | chdim::Error::Domain(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr>(s: &str, what: &str) -> PyResult<T> {
    s.parse().map_err(|_| PyValueError::new_err(format!("unknown {what}: {s}")))
}

fn json<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Element `(v, t)` of the Heisenberg group.
#[pyclass(name = "HeisPoint", frozen, from_py_object)]
#[derive(Clone)]
struct PyHeisPoint(heis::HeisPoint);

#[pymethods]
impl PyHeisPoint {
    #[new]
    fn new(v: Vec<Complex64>, t: f64) -> Self {
        Self(heis::HeisPoint::new(v, t))
    }

    #[getter]
    fn v(&self) -> Vec<Complex64> {
        self.0.v().to_vec()
    }

    #[getter]
    fn t(&self) -> f64 {
        self.0.t()
    }

    fn __mul__(&self, other: &Self) -> Self {
        Self(heis::heis_mul(&self.0, &other.0))
    }

    fn inverse(&self) -> Self {
        Self(self.0.inverse())
    }

    fn norm(&self) -> f64 {
        heis::heis_norm(&self.0)
    }

    /// Right-invariant gauge distance.
    fn dist(&self, other: &Self) -> PyResult<f64> {
        heis::heis_dist(&self.0, &other.0).map_err(py_err)
    }

    fn euclid_dist(&self, other: &Self) -> PyResult<f64> {
        heis::euclid_dist(&self.0, &other.0).map_err(py_err)
    }

    fn dilate(&self, lambda: Complex64) -> PyResult<Self> {
        heis::dilate(lambda, &self.0).map(Self).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("HeisPoint(v={:?}, t={})", self.0.v(), self.0.t())
    }
}

#[pyfunction]
fn omega(v: Vec<Complex64>, w: Vec<Complex64>) -> f64 {
    heis::omega(&v, &w)
}

/// Element of PU(1, n) in the ball model.
#[pyclass(name = "GroupElement", frozen, from_py_object)]
#[derive(Clone)]
struct PyGroupElement(herm::GroupElement);

#[pymethods]
impl PyGroupElement {
    #[new]
    fn new(rows: Vec<Vec<Complex64>>) -> PyResult<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(PyValueError::new_err("matrix must be square"));
        }
        herm::GroupElement::new(CMat::from_fn(d, d, |i, j| rows[i][j])).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn identity(n: usize) -> Self {
        Self(herm::GroupElement::identity(n))
    }

    #[staticmethod]
    #[pyo3(signature = (n, seed, max_t = 2.0))]
    fn random(n: usize, seed: u64, max_t: f64) -> Self {
        Self(herm::GroupElement::random(n, max_t, &mut ChaCha8Rng::seed_from_u64(seed)))
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    fn matrix(&self) -> Vec<Vec<Complex64>> {
        let m = self.0.matrix();
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
    }

    fn __mul__(&self, other: &Self) -> Self {
        Self(self.0.mul(&other.0))
    }

    fn inverse(&self) -> Self {
        Self(self.0.inverse())
    }

    /// `elliptic`, `parabolic` or `hyperbolic`.
    fn kind(&self) -> PyResult<String> {
        herm::classify(&self.0).map(|k| format!("{k:?}").to_lowercase()).map_err(py_err)
    }

    /// Attracting and repelling fixed points of a hyperbolic element, in sphere coordinates.
    fn fixed_points(&self) -> PyResult<(Vec<Complex64>, Vec<Complex64>)> {
        let (a, r) = herm::fixed_boundary_points(&self.0).map_err(py_err)?;
        Ok((a.sphere_coords(), r.sphere_coords()))
    }

    /// Image of a ball point.
    fn act(&self, ball: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
        Ok(self.0.act_point(&HPoint::from_ball(&ball).map_err(py_err)?).ball_coords())
    }
}

/// Hyperbolic distance between two points of the unit ball.
#[pyfunction]
fn dist(x: Vec<Complex64>, y: Vec<Complex64>) -> PyResult<f64> {
    let x = HPoint::from_ball(&x).map_err(py_err)?;
    let y = HPoint::from_ball(&y).map_err(py_err)?;
    Ok(hyp::dist(&x, &y))
}

/// Verified Schottky system in good position.
#[pyclass(name = "Schottky", frozen)]
struct PySchottky(sch::SchottkyDescriptor);

#[pymethods]
impl PySchottky {
    #[staticmethod]
    fn bundled() -> Self {
        Self(sch::bundled())
    }

    #[staticmethod]
    #[pyo3(signature = (seed, n = 2, generators = 2, t0 = None, forced_shared_chain = false))]
    fn build(seed: u64, n: usize, generators: usize, t0: Option<f64>, forced_shared_chain: bool) -> PyResult<Self> {
        let d = BuildParams::default();
        let p = BuildParams { n, k: generators, t0: t0.unwrap_or(d.t0), forced_shared_chain, ..d };
        sch::build_good_position(&p, seed).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        sch::SchottkyDescriptor::from_toml(text).map(Self).map_err(py_err)
    }

    fn to_toml(&self) -> String {
        self.0.to_toml()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }

    #[getter]
    fn power(&self) -> u32 {
        self.0.power
    }

    fn generators(&self) -> Vec<PyGroupElement> {
        self.0.gens.iter().cloned().map(PyGroupElement).collect()
    }

    /// Re-runs the four checks; returns `(passed, witness or None)`.
    #[pyo3(signature = (resolution = 24, margin = 1e-3))]
    fn verify(&self, resolution: usize, margin: f64) -> (bool, Option<String>) {
        let pp = sch::verify_ping_pong(&self.0, resolution);
        if !pp.passed() {
            return (false, Some(pp.describe()));
        }
        let tc = sch::verify_no_triple_chain(&self.0, resolution, margin);
        (tc.passed, (!tc.passed).then(|| tc.describe()))
    }

    /// Limit points of words of length `length` as rows `(Re v, Im v, ..., t)`
    /// in a chart that keeps the limit set bounded.
    #[pyo3(signature = (length, mode = "word-fixed-points"))]
    fn limit_points(&self, length: usize, mode: &str) -> PyResult<Vec<Vec<f64>>> {
        let mode: LimitMode = parse(mode, "limit mode")?;
        let cloud = sch::limit_points(&self.0, length, mode).map_err(py_err)?;
        Ok(cloud.with_chart(&sch::chart_rotation(&self.0)).map_err(py_err)?.heis_real())
    }

    /// Critical-exponent estimate as a JSON object.
    fn exponent(&self, length: usize) -> PyResult<String> {
        let samples = sch::orbit_distances_by_length(&self.0, length, &HPoint::origin(self.0.n)).map_err(py_err)?;
        json(&dim::critical_exponent(&samples, length).map_err(py_err)?)
    }

    /// Box-counting dimension of the limit set at word length `length`.
    #[pyo3(signature = (length, metric = "heisenberg", hi = 2.0, lo = 1e-5, count = 40))]
    fn box_dimension(&self, length: usize, metric: &str, hi: f64, lo: f64, count: usize) -> PyResult<(f64, f64)> {
        let metric: MetricTag = parse(metric, "metric")?;
        let cloud = sch::limit_points(&self.0, length, LimitMode::WordFixedPoints)
            .and_then(|c| c.with_chart(&sch::chart_rotation(&self.0)))
            .map_err(py_err)?;
        let e = dim::box_count(&cloud, metric, &dim::geometric_scales(hi, lo, count), &FitPolicy::default())
            .map_err(py_err)?;
        Ok((e.slope, e.stderr))
    }
}

/// Box-counting slope and stderr of Heisenberg rows `(Re v, Im v, ..., t)`.
#[pyfunction]
#[pyo3(signature = (rows, metric = "heisenberg", hi = 1.0, lo = 1e-5, count = 40))]
fn box_count(rows: Vec<Vec<f64>>, metric: &str, hi: f64, lo: f64, count: usize) -> PyResult<(f64, f64)> {
    let metric: MetricTag = parse(metric, "metric")?;
    let e = dim::box_count_real(&rows, metric, &dim::geometric_scales(hi, lo, count), &FitPolicy::default())
        .map_err(py_err)?;
    Ok((e.slope, e.stderr))
}

#[pyfunction]
#[pyo3(signature = (alpha, beta, n, tolerance = 0.1))]
fn balogh_check(alpha: f64, beta: f64, n: usize, tolerance: f64) -> bool {
    dim::balogh_check(alpha, beta, n, tolerance).pass
}

/// Invariant battery; JSON list of checks.
#[pyfunction]
#[pyo3(signature = (seed = 7, instances = 1000))]
fn sanity_battery(seed: u64, instances: usize) -> PyResult<String> {
    json(&sanity::run_battery(seed, instances))
}

/// Full dimension experiment on the bundled system (or a descriptor file);
/// writes its files to `output_dir` and returns the summary as JSON.
#[pyfunction]
#[pyo3(signature = (output_dir, word_length = 10, descriptor = "bundled", seed = 7))]
fn dimension_run(output_dir: std::path::PathBuf, word_length: usize, descriptor: &str, seed: u64) -> PyResult<String> {
    let config = ExperimentConfig { word_length, seed, output_dir, ..ExperimentConfig::default() };
    config.validate().map_err(py_err)?;
    std::fs::create_dir_all(&config.output_dir).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let summary = run::dimension_run(&config, descriptor).map_err(|f| PyRuntimeError::new_err(f.message))?;
    json(&summary)
}

#[pymodule]
fn chdim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", sch::LIBRARY_VERSION)?;
    m.add_class::<PyHeisPoint>()?;
    m.add_class::<PyGroupElement>()?;
    m.add_class::<PySchottky>()?;
    m.add_function(wrap_pyfunction!(omega, m)?)?;
    m.add_function(wrap_pyfunction!(dist, m)?)?;
    m.add_function(wrap_pyfunction!(box_count, m)?)?;
    m.add_function(wrap_pyfunction!(balogh_check, m)?)?;
    m.add_function(wrap_pyfunction!(sanity_battery, m)?)?;
    m.add_function(wrap_pyfunction!(dimension_run, m)?)?;
    Ok(())
}
