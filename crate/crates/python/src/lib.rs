//! Python bindings. Models cross the boundary as the engine's JSON format;
//! structured results come back as plain Python objects.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;
use trivine::estimate::{
    all_candidates, fit_nonsimplified_binned, fit_simplified_vine, simplified_approx, BinnedOptions, FitOptions,
};
use trivine::field::{bundle, sample_density, GridSpec, DEFAULT_LEVELS};
use trivine::kde::rank_transform;
use trivine::{scenarios, BivariateCopula, Family, Rotation, VineSpec3D};

create_exception!(pytrivine, TrivineError, PyValueError);

fn err(e: impl std::fmt::Display) -> PyErr {
    TrivineError::new_err(e.to_string())
}

/// Converts through JSON into Python lists, dicts and numbers.
fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let s = serde_json::to_string(v).map_err(err)?;
    py.import("json")?.call_method1("loads", (s,))
}

fn parse_family(name: &str) -> PyResult<Family> {
    serde_json::from_value(serde_json::Value::String(name.into())).map_err(|_| err(format!("unknown family '{name}'")))
}

fn candidates(families: Option<Vec<String>>) -> PyResult<Vec<(Family, Rotation)>> {
    let Some(names) = families else {
        return Ok(all_candidates());
    };
    let fs = names.iter().map(|n| parse_family(n)).collect::<PyResult<Vec<_>>>()?;
    Ok(all_candidates().into_iter().filter(|(f, _)| fs.contains(f)).collect())
}

/// A bivariate pair-copula.
#[pyclass(name = "Copula", frozen, skip_from_py_object, module = "pytrivine")]
#[derive(Clone)]
struct PyCopula(BivariateCopula);

#[pymethods]
impl PyCopula {
    #[new]
    #[pyo3(signature = (family, rotation = 0, params = Vec::new()))]
    fn new(family: &str, rotation: i64, params: Vec<f64>) -> PyResult<Self> {
        let r = Rotation::from_degrees(rotation).ok_or_else(|| err(format!("rotation {rotation} is not 0, 90, 180 or 270")))?;
        Ok(PyCopula(BivariateCopula::new(parse_family(family)?, r, &params).map_err(err)?))
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.0.family().name()
    }

    #[getter]
    fn rotation(&self) -> u16 {
        self.0.rotation().degrees()
    }

    #[getter]
    fn params(&self) -> Vec<f64> {
        self.0.params().to_vec()
    }

    fn tau(&self) -> f64 {
        self.0.tau()
    }

    fn pdf(&self, u1: f64, u2: f64) -> PyResult<f64> {
        self.0.pdf(u1, u2).map_err(err)
    }

    fn cdf(&self, u1: f64, u2: f64) -> PyResult<f64> {
        self.0.cdf(u1, u2).map_err(err)
    }

    /// `C(u1 | u2)`.
    fn h2(&self, u1: f64, u2: f64) -> PyResult<f64> {
        self.0.hfunc2(u1, u2).map_err(err)
    }

    /// `C(u2 | u1)`.
    fn h1(&self, u1: f64, u2: f64) -> PyResult<f64> {
        self.0.hfunc1(u1, u2).map_err(err)
    }

    fn hinv2(&self, p: f64, u2: f64) -> PyResult<f64> {
        self.0.hinv2(p, u2).map_err(err)
    }

    fn hinv1(&self, p: f64, u1: f64) -> PyResult<f64> {
        self.0.hinv1(p, u1).map_err(err)
    }

    fn loglik(&self, data: Vec<[f64; 2]>) -> f64 {
        self.0.loglik(&data)
    }

    fn __repr__(&self) -> String {
        format!("Copula({})", self.0)
    }
}

/// A trivariate vine: two unconditional pairs and a conditional pair whose
/// parameters may vary with `u2`.
#[pyclass(name = "Vine", frozen, skip_from_py_object, module = "pytrivine")]
#[derive(Clone)]
struct PyVine(VineSpec3D);

#[pymethods]
impl PyVine {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyVine(serde_json::from_str(text).map_err(err)?))
    }

    #[staticmethod]
    fn scenario(id: &str) -> PyResult<Self> {
        Ok(PyVine(scenarios::get(id).map_err(err)?.spec))
    }

    /// A simplified vine from three pair-copulas.
    #[staticmethod]
    fn simplified(c12: &PyCopula, c23: &PyCopula, c13_2: &PyCopula) -> Self {
        PyVine(VineSpec3D::simplified(c12.0.clone(), c23.0.clone(), &c13_2.0))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(err)
    }

    fn is_simplified(&self) -> bool {
        self.0.is_simplified()
    }

    fn density_u(&self, u1: f64, u2: f64, u3: f64) -> PyResult<f64> {
        self.0.density_u(u1, u2, u3).map_err(err)
    }

    fn density_z(&self, z1: f64, z2: f64, z3: f64) -> PyResult<f64> {
        self.0.density_z(z1, z2, z3).map_err(err)
    }

    /// The conditional pair-copula at `u2`.
    fn conditional_at(&self, u2: f64) -> PyResult<PyCopula> {
        Ok(PyCopula(self.0.conditional_at(u2).map_err(err)?))
    }

    fn tau_curve(&self, u2: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.tau_curve(&u2).map_err(err)
    }

    /// `n` rows on the copula scale.
    #[pyo3(signature = (n, seed = 0))]
    fn simulate(&self, py: Python<'_>, n: usize, seed: u64) -> PyResult<Vec<[f64; 3]>> {
        let spec = self.0.clone();
        let s = py.detach(move || spec.simulate(n, seed)).map_err(err)?;
        Ok(s.rows)
    }

    /// Iso-surfaces of the density on a cube grid, as the bundle dict the
    /// HTTP service returns.
    #[pyo3(signature = (levels = None, n = 96, lo = -3.0, hi = 3.0))]
    fn mesh<'py>(&self, py: Python<'py>, levels: Option<Vec<f64>>, n: usize, lo: f64, hi: f64) -> PyResult<Bound<'py, PyAny>> {
        let spec = self.0.clone();
        let levels = levels.unwrap_or_else(|| DEFAULT_LEVELS.to_vec());
        let b = py
            .detach(move || {
                let f = sample_density(&spec, &GridSpec::cube(lo, hi, n))?;
                bundle(&f, &levels, Some(&spec))
            })
            .map_err(err)?;
        to_py(py, &b)
    }

    fn __repr__(&self) -> String {
        format!("Vine({})", serde_json::to_string(&self.0).unwrap_or_default())
    }
}

#[pyfunction]
fn families<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &Family::ALL.iter().map(|f| f.info()).collect::<Vec<_>>())
}

#[pyfunction]
fn scenario_ids() -> Vec<&'static str> {
    scenarios::IDS.to_vec()
}

/// Kendall's tau of two equally long samples.
#[pyfunction]
fn kendall_tau(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    if x.len() != y.len() {
        return Err(err("samples differ in length"));
    }
    Ok(trivine::stats::kendall_tau(&x, &y))
}

/// Fits a vine to `rows`, rank-transforming them unless `uniform`. With
/// `bins` the conditional pair is estimated per `u2` bin.
#[pyfunction]
#[pyo3(signature = (rows, uniform = false, families = None, bins = None, bootstrap = 200, seed = 0))]
fn fit<'py>(
    py: Python<'py>,
    rows: Vec<[f64; 3]>,
    uniform: bool,
    families: Option<Vec<String>>,
    bins: Option<usize>,
    bootstrap: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = FitOptions {
        candidates: candidates(families)?,
        ..FitOptions::default()
    };
    let data = if uniform { rows } else { rank_transform(&rows) };
    match bins {
        None => {
            let f = py.detach(|| fit_simplified_vine(&data, &opts)).map_err(err)?;
            to_py(py, &f)
        }
        Some(bins) => {
            let o = BinnedOptions {
                bins,
                bootstrap,
                seed,
                fit: opts,
                ..BinnedOptions::default()
            };
            let f = py.detach(|| fit_nonsimplified_binned(&data, &o)).map_err(err)?;
            to_py(py, &f)
        }
    }
}

/// Best constant conditional pair for `vine`, from a sample of size `n`:
/// `(approximating vine, fitted pair, AIC)`.
#[pyfunction]
#[pyo3(signature = (vine, n = 100_000, seed = 0, families = None))]
fn approx(py: Python<'_>, vine: &PyVine, n: usize, seed: u64, families: Option<Vec<String>>) -> PyResult<(PyVine, PyCopula, f64)> {
    let cands = candidates(families)?;
    let spec = vine.0.clone();
    let (a, f) = py.detach(move || simplified_approx(&spec, n, seed, &cands)).map_err(err)?;
    Ok((PyVine(a), PyCopula(f.copula), f.aic))
}

#[pymodule]
fn pytrivine(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("TrivineError", m.py().get_type::<TrivineError>())?;
    m.add_class::<PyCopula>()?;
    m.add_class::<PyVine>()?;
    m.add_function(wrap_pyfunction!(families, m)?)?;
    m.add_function(wrap_pyfunction!(scenario_ids, m)?)?;
    m.add_function(wrap_pyfunction!(kendall_tau, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(approx, m)?)?;
    Ok(())
}

/// Registers the module with an embedded interpreter; call before the
/// interpreter starts.
pub fn register_embedded() {
    pyo3::append_to_inittab!(pytrivine);
}
