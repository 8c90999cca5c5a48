//! Python bindings. Matrices cross the boundary as lists of rows of Python
//! `complex` (real numbers are accepted on input); structured results come
//! back as dictionaries decoded from the canonical JSON, so non-finite values
//! appear as the strings `"inf"`, `"-inf"` and `"nan"`.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;
use serde::Serialize;

use krein::dichotomy::{self as dich, DichotomyResult, SectorContour};
use krein::dissipativity::{self as dis, GenerateKind, GenerateParams, OperatorSpec};
use krein::error::Error;
use krein::interpolation::{self as interp, HilbertCouple, Identity};
use krein::krein::KreinSpace;
use krein::linalg::{CMat, CVec};
use krein::report::{self, json::to_canonical_string, AnalyzeOptions, Family, OperatorDocument};
use krein::semigroup;

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(m) => PyIOError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_mat(rows: Vec<Vec<Complex64>>) -> PyResult<CMat> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("ragged matrix rows"));
    }
    Ok(CMat::from_fn(n, m, |i, j| rows[i][j]))
}

fn from_mat(m: &CMat) -> Vec<Vec<Complex64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn to_vec(v: Vec<Complex64>) -> CVec {
    CVec::from_vec(v)
}

fn to_dict<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = to_canonical_string(value).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A J-dissipative candidate `L` on a Krein space with fundamental symmetry `J`.
#[pyclass(name = "Operator", module = "pykrein", from_py_object)]
#[derive(Clone)]
struct PyOperator {
    inner: OperatorSpec,
}

#[pymethods]
impl PyOperator {
    /// `J` is given either as `signature=(p, q)` or as a matrix `j`.
    #[new]
    #[pyo3(signature = (l, signature=None, j=None, label=String::new()))]
    fn new(
        l: Vec<Vec<Complex64>>,
        signature: Option<(usize, usize)>,
        j: Option<Vec<Vec<Complex64>>>,
        label: String,
    ) -> PyResult<Self> {
        let space = match (signature, j) {
            (Some((p, q)), None) => KreinSpace::from_signature(p, q),
            (None, Some(j)) => KreinSpace::from_matrix(to_mat(j)?),
            _ => return Err(PyValueError::new_err("give exactly one of signature or j")),
        }
        .map_err(err)?;
        let inner = OperatorSpec::new(to_mat(l)?, space, label).map_err(err)?;
        Ok(PyOperator { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyOperator { inner: report::load_operator(&path).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyOperator { inner: report::parse_operator(text).map_err(err)?.op })
    }

    fn to_json(&self) -> PyResult<String> {
        report::operator_to_string(&OperatorDocument::new(self.inner.clone())).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        report::save_operator(&OperatorDocument::new(self.inner.clone()), &path).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn signature(&self) -> (usize, usize) {
        self.inner.space.signature()
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label.clone()
    }

    #[getter]
    fn l(&self) -> Vec<Vec<Complex64>> {
        from_mat(&self.inner.l)
    }

    #[getter]
    fn j(&self) -> Vec<Vec<Complex64>> {
        from_mat(self.inner.space.j())
    }

    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    fn __repr__(&self) -> String {
        let (p, q) = self.inner.space.signature();
        format!("Operator(dim={}, signature=({p}, {q}), label={:?})", self.inner.dim(), self.inner.label)
    }
}

/// Spectral projections onto `M+` (spectrum in `Re < 0`) and `M-`.
#[pyclass(name = "Dichotomy", module = "pykrein")]
struct PyDichotomy {
    inner: DichotomyResult,
}

#[pymethods]
impl PyDichotomy {
    #[getter]
    fn method(&self) -> &'static str {
        match self.inner.method {
            dich::Method::Schur => "schur",
            dich::Method::Contour => "contour",
        }
    }

    #[getter]
    fn p_plus(&self) -> Vec<Vec<Complex64>> {
        from_mat(&self.inner.p_plus)
    }

    #[getter]
    fn p_minus(&self) -> Vec<Vec<Complex64>> {
        from_mat(&self.inner.p_minus)
    }

    /// Orthonormal basis of `M+` as columns.
    #[getter]
    fn basis_plus(&self) -> Vec<Vec<Complex64>> {
        from_mat(self.inner.m_plus.basis())
    }

    #[getter]
    fn basis_minus(&self) -> Vec<Vec<Complex64>> {
        from_mat(self.inner.m_minus.basis())
    }

    #[getter]
    fn dim_plus(&self) -> usize {
        self.inner.m_plus.dim()
    }

    #[getter]
    fn dim_minus(&self) -> usize {
        self.inner.m_minus.dim()
    }

    #[getter]
    fn spectrum_plus(&self) -> Vec<Complex64> {
        self.inner.spectrum_plus.clone()
    }

    #[getter]
    fn spectrum_minus(&self) -> Vec<Complex64> {
        self.inner.spectrum_minus.clone()
    }

    /// `(delta+, delta-)`; zero for a degenerate side.
    fn definiteness(&self) -> (f64, f64) {
        let d = |s: &krein::krein::SignClass| if s.degenerate { 0.0 } else { s.definiteness_constant };
        (d(&self.inner.sign_class_plus), d(&self.inner.sign_class_minus))
    }

    fn residuals<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &self.inner.residuals)
    }

    /// Invariance, semidefiniteness, maximality and spectral clauses.
    #[pyo3(signature = (op, tol=1e-8))]
    fn verify<'py>(&self, py: Python<'py>, op: &PyOperator, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &dich::verify_theorem_3_2(&op.inner, &self.inner, tol))
    }
}

#[pyfunction]
#[pyo3(signature = (kind, signature=None, n=None, seed=0, delta=0.1, c12=0.3, c21=0.3, coupling=1.0))]
#[allow(clippy::too_many_arguments)]
fn generate(
    kind: &str,
    signature: Option<(usize, usize)>,
    n: Option<usize>,
    seed: u64,
    delta: f64,
    c12: f64,
    c21: f64,
    coupling: f64,
) -> PyResult<PyOperator> {
    let sig =
        || signature.or_else(|| n.map(|n| (n.div_ceil(2), n / 2))).ok_or_else(|| PyValueError::new_err("give signature or n"));
    let (k, s) = match kind {
        "random-j-dissipative" => (GenerateKind::RandomJDissipative, sig()?),
        "uniform" => (GenerateKind::Uniform { delta }, sig()?),
        "block" => (GenerateKind::Block { c12, c21 }, sig()?),
        "discretized" => {
            let n = n.ok_or_else(|| PyValueError::new_err("the discretized family needs n"))?;
            (GenerateKind::DiscretizedFamily { n, coupling }, (0, 0))
        }
        other => return Err(PyValueError::new_err(format!("unknown kind {other:?}"))),
    };
    Ok(PyOperator { inner: dis::generate(&GenerateParams::new(k, s, seed)).map_err(err)? })
}

#[pyfunction]
fn classify<'py>(py: Python<'py>, op: &PyOperator) -> PyResult<Bound<'py, PyAny>> {
    to_dict(py, &dis::classify(&op.inner))
}

/// `(c_2_4, c_2_5, m_2_16)`.
#[pyfunction]
fn conditions(op: &PyOperator) -> PyResult<(f64, f64, f64)> {
    let g = dis::f_grams(&op.inner).map_err(err)?;
    Ok((dis::condition_2_4(&op.inner, &g), dis::condition_2_5(&op.inner, &g), dis::condition_2_16(&op.inner, &g)))
}

#[pyfunction]
fn resolvent_scan<'py>(py: Python<'py>, op: &PyOperator) -> PyResult<Bound<'py, PyAny>> {
    let s = dis::resolvent_scan(&op.inner, dis::ScanOptions::default()).map_err(err)?;
    to_dict(py, &report::ResolventSummary::from(&s))
}

#[pyfunction]
#[pyo3(signature = (op, tol=None))]
fn schur_dichotomy(op: &PyOperator, tol: Option<f64>) -> PyResult<PyDichotomy> {
    let tol = tol.unwrap_or_else(|| op.inner.default_tol());
    Ok(PyDichotomy { inner: dich::schur_dichotomy(&op.inner, tol).map_err(err)? })
}

#[pyfunction]
#[pyo3(signature = (op, nodes_per_segment=None))]
fn contour_dichotomy(op: &PyOperator, nodes_per_segment: Option<usize>) -> PyResult<PyDichotomy> {
    let mut c = SectorContour::for_operator(&op.inner).map_err(err)?;
    if let Some(k) = nodes_per_segment {
        c = c.with_nodes(k);
    }
    Ok(PyDichotomy { inner: dich::contour_projections(&op.inner, &c).map_err(err)? })
}

/// Removes the spectrum within `tol` of the imaginary axis; returns the
/// deflated operator and the rank of the removed spectral subspace.
#[pyfunction]
#[pyo3(signature = (op, tol=1e-8))]
fn riesz_deflate(op: &PyOperator, tol: f64) -> PyResult<(PyOperator, usize)> {
    let d = dich::riesz_deflate(&op.inner, tol).map_err(err)?;
    Ok((PyOperator { inner: d.op }, d.rank))
}

#[pyfunction]
fn theorem_3_8_constants<'py>(py: Python<'py>, op: &PyOperator) -> PyResult<Bound<'py, PyAny>> {
    to_dict(py, &dich::theorem_3_8_constants(&op.inner).map_err(err)?)
}

#[pyfunction]
fn theorem_3_7_check<'py>(py: Python<'py>, op: &PyOperator, lam: Complex64, mu: Complex64) -> PyResult<Bound<'py, PyAny>> {
    to_dict(py, &dich::theorem_3_7_check(&op.inner, lam, mu).map_err(err)?)
}

/// Equivalence constants `(lower, upper)` for identity `"2.6"`, `"2.9"` or `"2.10"`.
#[pyfunction]
fn identity_check(op: &PyOperator, identity: &str) -> PyResult<(f64, f64)> {
    let which = Identity::from_tag(identity).ok_or_else(|| PyValueError::new_err(format!("unknown identity {identity:?}")))?;
    let r = interp::identity_check(&op.inner, which).map_err(err)?;
    Ok((r.equivalence_lower, r.equivalence_upper))
}

fn couple(g0: Vec<Vec<Complex64>>, g1: Vec<Vec<Complex64>>) -> PyResult<HilbertCouple> {
    HilbertCouple::new(to_mat(g0)?, to_mat(g1)?).map_err(err)
}

#[pyfunction]
fn k_quadratic(g0: Vec<Vec<Complex64>>, g1: Vec<Vec<Complex64>>, a: Vec<Complex64>, t: f64) -> PyResult<f64> {
    interp::k_quadratic(&couple(g0, g1)?, &to_vec(a), t).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (g0, g1, a, t, opt_tol=1e-8))]
fn k_exact(g0: Vec<Vec<Complex64>>, g1: Vec<Vec<Complex64>>, a: Vec<Complex64>, t: f64, opt_tol: f64) -> PyResult<f64> {
    interp::k_exact(&couple(g0, g1)?, &to_vec(a), t, opt_tol).map_err(err)
}

/// `(closed_form, quadrature)` for the `(1/2, 2)` norm.
#[pyfunction]
#[pyo3(signature = (g0, g1, a, rel_tol=1e-8))]
fn interp_half_norm(g0: Vec<Vec<Complex64>>, g1: Vec<Vec<Complex64>>, a: Vec<Complex64>, rel_tol: f64) -> PyResult<(f64, f64)> {
    let h = interp::interp_half_norm(&couple(g0, g1)?, &to_vec(a), rel_tol).map_err(err)?;
    Ok((h.closed_form, h.quadrature))
}

#[pyfunction]
fn geometric_mean(g0: Vec<Vec<Complex64>>, g1: Vec<Vec<Complex64>>) -> PyResult<Vec<Vec<Complex64>>> {
    Ok(from_mat(&interp::geometric_mean(&to_mat(g0)?, &to_mat(g1)?).map_err(err)?))
}

#[pyfunction]
fn expm(a: Vec<Vec<Complex64>>, t: f64) -> PyResult<Vec<Vec<Complex64>>> {
    Ok(from_mat(&semigroup::expm_action(&to_mat(a)?, t).map_err(err)?))
}

/// Energy identity along the flow started at `u0` inside `M+` (`plus=True`) or `M-`.
#[pyfunction]
#[pyo3(signature = (op, u0, plus=true, horizon=None, quad_tol=1e-9))]
fn energy_identity<'py>(
    py: Python<'py>,
    op: &PyOperator,
    u0: Vec<Complex64>,
    plus: bool,
    horizon: Option<f64>,
    quad_tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let d = dich::schur_dichotomy(&op.inner, op.inner.default_tol()).map_err(err)?;
    let m = if plus { &d.m_plus } else { &d.m_minus };
    to_dict(py, &semigroup::energy_identity(&op.inner, m, &to_vec(u0), horizon, quad_tol).map_err(err)?)
}

/// Full pipeline; returns the canonical JSON report.
#[pyfunction]
#[pyo3(signature = (op, deflate=false, tol=None, contour_nodes=None, strict=false))]
fn analyze(op: &PyOperator, deflate: bool, tol: Option<f64>, contour_nodes: Option<usize>, strict: bool) -> PyResult<String> {
    let opts = AnalyzeOptions { tol, deflate, contour_nodes, strict, ..AnalyzeOptions::default() };
    report::analyze(&op.inner, &opts).to_json().map_err(err)
}

/// Parameter sweep; returns CSV text.
#[pyfunction]
#[pyo3(signature = (family, grid, seed=0))]
fn sweep(family: &str, grid: Vec<f64>, seed: u64) -> PyResult<String> {
    let fam = Family::parse(family).ok_or_else(|| PyValueError::new_err(format!("unknown family {family:?}")))?;
    let res = report::sweep(fam, &grid, seed, &AnalyzeOptions::default()).map_err(err)?;
    report::sweep_to_csv(&res).map_err(err)
}

#[pymodule]
fn pykrein(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyOperator>()?;
    m.add_class::<PyDichotomy>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(conditions, m)?)?;
    m.add_function(wrap_pyfunction!(resolvent_scan, m)?)?;
    m.add_function(wrap_pyfunction!(schur_dichotomy, m)?)?;
    m.add_function(wrap_pyfunction!(contour_dichotomy, m)?)?;
    m.add_function(wrap_pyfunction!(riesz_deflate, m)?)?;
    m.add_function(wrap_pyfunction!(theorem_3_8_constants, m)?)?;
    m.add_function(wrap_pyfunction!(theorem_3_7_check, m)?)?;
    m.add_function(wrap_pyfunction!(identity_check, m)?)?;
    m.add_function(wrap_pyfunction!(k_quadratic, m)?)?;
    m.add_function(wrap_pyfunction!(k_exact, m)?)?;
    m.add_function(wrap_pyfunction!(interp_half_norm, m)?)?;
    m.add_function(wrap_pyfunction!(geometric_mean, m)?)?;
    m.add_function(wrap_pyfunction!(expm, m)?)?;
    m.add_function(wrap_pyfunction!(energy_identity, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add("REPORT_SCHEMA_VERSION", report::REPORT_SCHEMA_VERSION)?;
    Ok(())
}
