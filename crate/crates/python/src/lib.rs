//! Python bindings. Reports are returned as JSON strings.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use freelat::convexity;
use freelat::expr::{self, LatticeExpr, NormalForm};
use freelat::geometry::{fixtures, PreorderedSpace};
use freelat::norms::{self, Exponent, SearchParams};
use freelat::universal::{self, PositiveContraction};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// `float('inf')` selects p = ∞.
fn exponent(p: f64) -> PyResult<Exponent> {
    if p == f64::INFINITY {
        Ok(Exponent::Infinity)
    } else {
        Exponent::finite(p).map_err(err)
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(err)
}

#[pyclass(name = "Space", frozen)]
struct PySpace {
    inner: PreorderedSpace,
}

#[pymethods]
impl PySpace {
    #[new]
    #[pyo3(signature = (ball_vertices, cone_generators=Vec::new()))]
    fn new(ball_vertices: Vec<Vec<f64>>, cone_generators: Vec<Vec<f64>>) -> PyResult<Self> {
        let dim = ball_vertices.first().map_or(0, Vec::len);
        let inner = PreorderedSpace::new(dim, ball_vertices, cone_generators).map_err(err)?;
        Ok(Self { inner })
    }

    /// One of SPACE-A, SPACE-B, SPACE-C, SPACE-E, CUBE-3.
    #[staticmethod]
    fn fixture(name: &str) -> PyResult<Self> {
        let inner = fixtures::by_name(name).ok_or_else(|| err(format!("unknown fixture `{name}`")))?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: PreorderedSpace::from_json_str(text).map_err(err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn ball_vertices(&self) -> Vec<Vec<f64>> {
        self.inner.ball_vertices().to_vec()
    }

    #[getter]
    fn cone_generators(&self) -> Vec<Vec<f64>> {
        self.inner.cone_generators().to_vec()
    }

    #[getter]
    fn polar_vertices(&self) -> Vec<Vec<f64>> {
        self.inner.polar_ball().vertices().to_vec()
    }

    #[getter]
    fn positive_part_vertices(&self) -> Vec<Vec<f64>> {
        self.inner.dual_positive_part().vertices().to_vec()
    }

    fn space_norm(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.space_norm(&x).map_err(err)
    }

    fn dual_norm(&self, xstar: Vec<f64>) -> f64 {
        self.inner.dual_norm(&xstar)
    }

    fn cone_membership(&self, x: Vec<f64>) -> PyResult<bool> {
        self.inner.cone_membership(&x).map_err(err)
    }

    fn cone_membership_dual(&self, x: Vec<f64>) -> PyResult<bool> {
        self.inner.cone_membership_dual(&x).map_err(err)
    }

    fn separates_points(&self) -> bool {
        self.inner.separates_points()
    }

    fn is_norming(&self) -> PyResult<bool> {
        self.inner.is_norming().map_err(err)
    }

    fn is_cone(&self) -> PyResult<bool> {
        self.inner.is_cone().map_err(err)
    }

    #[pyo3(signature = (seed=0))]
    fn diagnostics(&self, seed: u64) -> PyResult<String> {
        to_json(&universal::diagnostics(&self.inner, seed).map_err(err)?)
    }

    fn __repr__(&self) -> String {
        format!(
            "Space(dim={}, ball_vertices={}, cone_generators={})",
            self.inner.dim(),
            self.inner.ball_vertices().len(),
            self.inner.cone_generators().len()
        )
    }
}

#[pyclass(name = "NormalForm", frozen)]
struct PyNormalForm {
    inner: NormalForm,
}

#[pymethods]
impl PyNormalForm {
    /// Rows of generators; the element is the sup over rows of the inf over each row.
    #[new]
    fn new(rows: Vec<Vec<Vec<f64>>>) -> PyResult<Self> {
        Ok(Self {
            inner: NormalForm::new(rows).map_err(err)?,
        })
    }

    /// Normalises an expression given as JSON.
    #[staticmethod]
    fn from_expr(text: &str) -> PyResult<Self> {
        let e = LatticeExpr::from_json_str(text).map_err(err)?;
        Ok(Self {
            inner: expr::normalize_with_limit(&e, convexity::NORMALIZE_BUDGET).map_err(err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn rows(&self) -> Vec<Vec<Vec<f64>>> {
        self.inner.rows().to_vec()
    }

    fn evaluate(&self, xstar: Vec<f64>) -> PyResult<f64> {
        self.inner.evaluate(&xstar).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("NormalForm(m={}, n={}, dim={})", self.inner.m(), self.inner.n(), self.inner.dim())
    }
}

#[pyfunction]
fn norm_inf(space: &PySpace, nf: &PyNormalForm) -> PyResult<f64> {
    Ok(norms::norm_inf_exact(&space.inner, &nf.inner).map_err(err)?.value)
}

#[pyfunction]
#[pyo3(signature = (space, nf, p, seed=0, restarts=64, tuple_size=None))]
fn norm_p_lower(
    space: &PySpace,
    nf: &PyNormalForm,
    p: f64,
    seed: u64,
    restarts: usize,
    tuple_size: Option<usize>,
) -> PyResult<String> {
    let params = SearchParams {
        restarts,
        tuple_size,
        ..SearchParams::with_seed(seed)
    };
    to_json(&norms::norm_p_lower(&space.inner, &nf.inner, p, &params).map_err(err)?)
}

/// Grid oracle for p = ∞ (`p=float('inf')`) or finite p.
#[pyfunction]
#[pyo3(signature = (space, nf, p, grid_step=0.05))]
fn norm_oracle(space: &PySpace, nf: &PyNormalForm, p: f64, grid_step: f64) -> PyResult<f64> {
    let est = match exponent(p)? {
        Exponent::Infinity => norms::norm_inf_oracle(&space.inner, &nf.inner, grid_step),
        Exponent::Finite(p) => norms::norm_p_oracle(&space.inner, &nf.inner, p, grid_step),
    };
    Ok(est.map_err(err)?.value)
}

#[pyfunction]
fn factor(space: &PySpace, p: f64, functionals: Vec<Vec<f64>>, nf: &PyNormalForm) -> PyResult<Vec<f64>> {
    let phi = PositiveContraction::new(&space.inner, exponent(p)?, functionals).map_err(err)?;
    universal::factor(&space.inner, &phi, &nf.inner).map_err(err)
}

/// Expressions are JSON strings.
#[pyfunction]
#[pyo3(signature = (space, p, exprs, seed=0, tol=5e-3))]
fn p_convexity_check(space: &PySpace, p: f64, exprs: Vec<String>, seed: u64, tol: f64) -> PyResult<String> {
    let fs = exprs
        .iter()
        .map(|e| LatticeExpr::from_json_str(e))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let r = convexity::p_convexity_check(&space.inner, exponent(p)?, &fs, &SearchParams::with_seed(seed), tol)
        .map_err(err)?;
    to_json(&r)
}

#[pymodule]
fn freelat_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpace>()?;
    m.add_class::<PyNormalForm>()?;
    m.add_function(wrap_pyfunction!(norm_inf, m)?)?;
    m.add_function(wrap_pyfunction!(norm_p_lower, m)?)?;
    m.add_function(wrap_pyfunction!(norm_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(factor, m)?)?;
    m.add_function(wrap_pyfunction!(p_convexity_check, m)?)?;
    Ok(())
}
