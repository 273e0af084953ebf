//! Python bindings. Reports cross the boundary as JSON text; polynomials and
//! pencils are wrapped objects.

use num_complex::Complex64 as C64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use detrep::construct;
use detrep::hyper;
use detrep::sos::{self, SosCertificate, SosOptions};
use detrep::{fixtures, suite, uniroots, Config, Error};

create_exception!(detrep_py, DetrepError, PyException);

fn err(e: Error) -> PyErr {
    DetrepError::new_err(e.to_string())
}

fn config(text: Option<&str>) -> PyResult<Config> {
    match text {
        Some(t) => Config::from_json(t).map_err(err),
        None => Ok(Config::default()),
    }
}

#[pyclass(name = "Polynomial", module = "detrep_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPolynomial {
    inner: detrep::Polynomial,
}

#[pymethods]
impl PyPolynomial {
    #[new]
    fn new(text: &str, vars: Vec<String>) -> PyResult<Self> {
        detrep::parse_poly(text, &vars)
            .map(|inner| PyPolynomial { inner })
            .map_err(err)
    }

    #[getter]
    fn vars(&self) -> Vec<String> {
        self.inner.var_names().to_vec()
    }

    #[getter]
    fn degrees(&self) -> Vec<u32> {
        self.inner.degrees()
    }

    fn eval(&self, point: Vec<C64>) -> PyResult<C64> {
        self.inner.eval(&point).map_err(err)
    }

    /// `(exponents, coefficient)` pairs in the crate's term order.
    fn terms(&self) -> Vec<(Vec<u32>, C64)> {
        self.inner.terms().map(|(e, c)| (e.clone(), *c)).collect()
    }

    fn max_abs_diff(&self, other: &PyPolynomial) -> f64 {
        self.inner.max_abs_diff(&other.inner)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Polynomial({:?}, {:?})", self.inner.to_string(), self.inner.var_names())
    }
}

#[pyclass(name = "Pencil", module = "detrep_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPencil {
    inner: detrep::Pencil,
}

#[pymethods]
impl PyPencil {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| err(e.into()))?;
        detrep::Pencil::from_json(&v)
            .map(|inner| PyPencil { inner })
            .map_err(err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn c(&self) -> C64 {
        self.inner.c
    }

    /// Row-major entries of each matrix.
    fn matrices(&self) -> Vec<Vec<Vec<C64>>> {
        self.inner
            .mats
            .iter()
            .map(|m| (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect())
            .collect()
    }

    fn eval_det(&self, point: Vec<C64>) -> PyResult<C64> {
        self.inner.eval_det(&point).map_err(err)
    }

    #[pyo3(signature = (vars=None))]
    fn to_poly(&self, vars: Option<Vec<String>>) -> PyResult<PyPolynomial> {
        let inner = match vars {
            Some(v) => self.inner.to_poly_named(&v),
            None => self.inner.to_poly(),
        }
        .map_err(err)?;
        Ok(PyPolynomial { inner })
    }
}

#[pyfunction]
fn cubic_poly() -> PyPolynomial {
    PyPolynomial {
        inner: fixtures::cubic_poly(),
    }
}

#[pyfunction]
fn cubic_pencil() -> PyPencil {
    PyPencil {
        inner: fixtures::cubic_pencil(),
    }
}

fn verdict_json(v: &hyper::Verdict) -> String {
    serde_json::to_string(v).expect("verdict serializes")
}

#[pyfunction]
#[pyo3(signature = (p, e, n_samples=200, seed=0, real_tol=1e-7))]
fn is_semi_hyperbolic(p: &PyPolynomial, e: Vec<f64>, n_samples: usize, seed: u64, real_tol: f64) -> PyResult<String> {
    hyper::is_semi_hyperbolic(&p.inner, &e, n_samples, seed, real_tol)
        .map(|v| verdict_json(&v))
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (p, e, n_samples=200, seed=0, real_tol=1e-7))]
fn is_hyperbolic(p: &PyPolynomial, e: Vec<f64>, n_samples: usize, seed: u64, real_tol: f64) -> PyResult<String> {
    hyper::is_hyperbolic(&p.inner, &e, n_samples, seed, real_tol)
        .map(|v| verdict_json(&v))
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (p, seed_point, budget=2000, seed=0))]
fn nonconvexity_certificate(p: &PyPolynomial, seed_point: Vec<f64>, budget: usize, seed: u64) -> PyResult<Option<String>> {
    let cert = hyper::nonconvexity_certificate(&p.inner, &seed_point, budget, seed).map_err(err)?;
    Ok(cert.map(|c| serde_json::to_string(&c).expect("certificate serializes")))
}

#[pyfunction]
#[pyo3(signature = (p, pencil, tol=1e-8, config_json=None))]
fn verify_representation(p: &PyPolynomial, pencil: &PyPencil, tol: f64, config_json: Option<&str>) -> PyResult<String> {
    let cfg = config(config_json)?;
    Ok(detrep::pencil::verify_representation(&p.inner, &pencil.inner, tol, &cfg).to_json())
}

#[pyfunction]
#[pyo3(signature = (p, pencil, config_json=None))]
fn theorem1_invariants(p: &PyPolynomial, pencil: &PyPencil, config_json: Option<&str>) -> PyResult<String> {
    let cfg = config(config_json)?;
    detrep::pencil::theorem1_invariants(&p.inner, &pencil.inner, &cfg)
        .map(|r| r.to_json())
        .map_err(err)
}

/// Returns `(pencil, report_json)`.
#[pyfunction]
#[pyo3(signature = (p, config_json=None))]
fn theorem1_construct(p: &PyPolynomial, config_json: Option<&str>) -> PyResult<(PyPencil, String)> {
    let cfg = config(config_json)?;
    let out = construct::theorem1_construct(&p.inner, None, &cfg).map_err(err)?;
    Ok((PyPencil { inner: out.pencil }, out.report.to_json()))
}

#[pyfunction]
#[pyo3(signature = (p, cone_gens=None, config_json=None))]
fn corollary_construct(p: &PyPolynomial, cone_gens: Option<Vec<Vec<f64>>>, config_json: Option<&str>) -> PyResult<(PyPencil, String)> {
    let cfg = config(config_json)?;
    let gens = cone_gens.unwrap_or_else(construct::corollary_cone);
    let out = construct::corollary_construct(&p.inner, &gens, &cfg).map_err(err)?;
    Ok((PyPencil { inner: out.pencil }, out.report.to_json()))
}

/// Returns `(pencil, cofactor, report_json)`.
#[pyfunction]
#[pyo3(signature = (p, certificate_json=None, config_json=None))]
fn theorem2_construct(
    p: &PyPolynomial,
    certificate_json: Option<&str>,
    config_json: Option<&str>,
) -> PyResult<(PyPencil, Option<PyPolynomial>, String)> {
    let cfg = config(config_json)?;
    let cert = match certificate_json {
        Some(t) => {
            let v: serde_json::Value = serde_json::from_str(t).map_err(|e| err(e.into()))?;
            Some(SosCertificate::from_json(&v).map_err(err)?)
        }
        None => None,
    };
    let out = construct::theorem2_construct(&p.inner, cert.as_ref(), &cfg).map_err(err)?;
    Ok((
        PyPencil { inner: out.pencil },
        out.cofactor.map(|inner| PyPolynomial { inner }),
        out.report.to_json(),
    ))
}

#[pyfunction]
#[pyo3(signature = (pencil, config_json=None))]
fn lift_to_four(pencil: &PyPencil, config_json: Option<&str>) -> PyResult<(PyPolynomial, String)> {
    let cfg = config(config_json)?;
    let (inner, report) = construct::lift_to_four(&pencil.inner, &cfg).map_err(err)?;
    Ok((PyPolynomial { inner }, report.to_json()))
}

/// Returns the certificate JSON and its torus-grid residual.
#[pyfunction]
#[pyo3(signature = (p, n, config_json=None))]
fn find_sos_tridisk(p: &PyPolynomial, n: u32, config_json: Option<&str>) -> PyResult<(String, f64)> {
    let cfg = config(config_json)?;
    let cert = sos::find_sos_tridisk(&p.inner, n, &SosOptions::from_config(&cfg)).map_err(err)?;
    let res = sos::sos_residual(&cert, &p.inner, cfg.grid_size).map_err(err)?;
    Ok((cert.to_json().to_string(), res))
}

/// Roots of `sum_k coeffs[k] t^k`.
#[pyfunction]
#[pyo3(signature = (coeffs, tol=1e-8))]
fn roots(coeffs: Vec<C64>, tol: f64) -> PyResult<Vec<C64>> {
    uniroots::roots_of_coeffs(&coeffs, tol)
        .map(|rs| rs.roots)
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (config_json=None))]
fn cubic_suite(config_json: Option<&str>) -> PyResult<String> {
    let cfg = config(config_json)?;
    suite::cubic_suite(&cfg).map(|r| r.to_json()).map_err(err)
}

#[pymodule]
fn detrep_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DetrepError", m.py().get_type::<DetrepError>())?;
    m.add_class::<PyPolynomial>()?;
    m.add_class::<PyPencil>()?;
    m.add_function(wrap_pyfunction!(cubic_poly, m)?)?;
    m.add_function(wrap_pyfunction!(cubic_pencil, m)?)?;
    m.add_function(wrap_pyfunction!(is_semi_hyperbolic, m)?)?;
    m.add_function(wrap_pyfunction!(is_hyperbolic, m)?)?;
    m.add_function(wrap_pyfunction!(nonconvexity_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(verify_representation, m)?)?;
    m.add_function(wrap_pyfunction!(theorem1_invariants, m)?)?;
    m.add_function(wrap_pyfunction!(theorem1_construct, m)?)?;
    m.add_function(wrap_pyfunction!(corollary_construct, m)?)?;
    m.add_function(wrap_pyfunction!(theorem2_construct, m)?)?;
    m.add_function(wrap_pyfunction!(lift_to_four, m)?)?;
    m.add_function(wrap_pyfunction!(find_sos_tridisk, m)?)?;
    m.add_function(wrap_pyfunction!(roots, m)?)?;
    m.add_function(wrap_pyfunction!(cubic_suite, m)?)?;
    Ok(())
}
