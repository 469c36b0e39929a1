//! Python bindings for the lieflow core crate.
//!
//! The module exposes the same surface the CLI drives: structure-constant
//! Lie algebras, additive decompositions of derivations into hyperbolic,
//! elliptic, and nilpotent parts, eigenvalue gradings, and the scenario
//! harness with its JSON reports. Matrices cross the boundary as nested
//! lists of floats in row-major order.

use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use lieflow::algebra::LieAlgebra as CoreAlgebra;
use lieflow::grading::{bracket_grading_defect, layer_decomposition, tri_decomposition};
use lieflow::harness::{self, Overrides};
use lieflow::jordan;

fn err(e: lieflow::LieFlowError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err("matrix rows must have equal length"));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn square_matrix(rows: &[Vec<f64>], dim: usize) -> PyResult<DMatrix<f64>> {
    let m = to_matrix(rows)?;
    if m.nrows() != dim || m.ncols() != dim {
        return Err(PyValueError::new_err(format!(
            "expected a {dim}x{dim} matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m)
}

fn from_matrix(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn to_vector(v: Vec<f64>, dim: usize) -> PyResult<DVector<f64>> {
    if v.len() != dim {
        return Err(PyValueError::new_err(format!(
            "expected a vector of length {dim}, got {}",
            v.len()
        )));
    }
    Ok(DVector::from_vec(v))
}

/// Structure-constant Lie algebra with a labeled basis.
#[pyclass(name = "LieAlgebra", frozen)]
struct PyLieAlgebra {
    inner: CoreAlgebra,
}

#[pymethods]
impl PyLieAlgebra {
    /// Build an algebra from basis labels and structure constants
    /// `c[i][j][k]` so that `[e_i, e_j] = sum_k c[i][j][k] e_k`.
    #[new]
    fn new(labels: Vec<String>, c: Vec<Vec<Vec<f64>>>) -> PyResult<Self> {
        Ok(Self {
            inner: CoreAlgebra::new(labels, c).map_err(err)?,
        })
    }

    #[staticmethod]
    fn abelian(dim: usize) -> Self {
        Self {
            inner: CoreAlgebra::abelian(dim),
        }
    }

    #[staticmethod]
    fn heisenberg() -> Self {
        Self {
            inner: CoreAlgebra::heisenberg(),
        }
    }

    #[staticmethod]
    fn sl2() -> Self {
        Self {
            inner: CoreAlgebra::sl2(),
        }
    }

    #[staticmethod]
    fn so3() -> Self {
        Self {
            inner: CoreAlgebra::so3(),
        }
    }

    /// Parse the `.alg` definition format used by the CLI.
    #[staticmethod]
    fn from_definition(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: CoreAlgebra::from_definition_str(text).map_err(err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    fn bracket(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<f64>> {
        let n = self.inner.dim();
        let u = to_vector(x, n)?;
        let v = to_vector(y, n)?;
        Ok(self.inner.bracket(&u, &v).iter().copied().collect())
    }

    /// Matrix of `ad(x) = [x, .]` in the chosen basis.
    fn ad(&self, x: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let u = to_vector(x, self.inner.dim())?;
        Ok(from_matrix(&self.inner.ad(&u)))
    }

    fn is_derivation(&self, m: Vec<Vec<f64>>) -> PyResult<bool> {
        let d = square_matrix(&m, self.inner.dim())?;
        Ok(self.inner.is_derivation(&d))
    }

    /// Worst Leibniz-rule violation of `m` over all basis pairs.
    fn leibniz_defect(&self, m: Vec<Vec<f64>>) -> PyResult<f64> {
        let d = square_matrix(&m, self.inner.dim())?;
        Ok(self.inner.leibniz_defect(&d))
    }

    fn jacobi_defect(&self) -> f64 {
        self.inner.jacobi_defect()
    }

    fn killing_form(&self) -> Vec<Vec<f64>> {
        from_matrix(&self.inner.killing_form())
    }

    fn is_solvable(&self) -> bool {
        self.inner.is_solvable()
    }

    fn nilpotency_step(&self) -> Option<usize> {
        self.inner.nilpotency_step()
    }

    /// Grade the algebra by the eigenvalues of the hyperbolic part of a
    /// derivation. Fails when `m` is not a derivation.
    fn grade(&self, m: Vec<Vec<f64>>) -> PyResult<PyGrading> {
        let d = square_matrix(&m, self.inner.dim())?;
        self.inner.check_derivation(&d).map_err(err)?;
        let jd = jordan::jordan_additive(&d).map_err(err)?;
        let layers = layer_decomposition(&self.inner, &jd).map_err(err)?;
        let tri = tri_decomposition(&self.inner, &jd, &layers).map_err(err)?;
        let defect = bracket_grading_defect(&self.inner, &layers);
        let (plus_dim, zero_dim, minus_dim) = tri.dims();
        Ok(PyGrading {
            layers: layers
                .iter()
                .map(|l| PyLayer {
                    lambda_: l.lambda,
                    dim: l.dim(),
                    basis: from_matrix(&l.basis),
                })
                .collect(),
            plus: from_matrix(&tri.plus),
            zero: from_matrix(&tri.zero),
            minus: from_matrix(&tri.minus),
            plus_dim,
            zero_dim,
            minus_dim,
            defect,
            sign_ambiguous: tri.sign_ambiguous,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "LieAlgebra(dim={}, labels=[{}])",
            self.inner.dim(),
            self.inner.labels().join(", ")
        )
    }
}

/// One spectral cluster of a decomposed derivation.
#[pyclass(name = "Cluster", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCluster {
    #[pyo3(get)]
    re: f64,
    #[pyo3(get)]
    im: f64,
    #[pyo3(get)]
    multiplicity: usize,
    /// Orthonormal basis of the invariant subspace, one column per list.
    #[pyo3(get)]
    basis: Vec<Vec<f64>>,
}

#[pymethods]
impl PyCluster {
    fn __repr__(&self) -> String {
        format!(
            "Cluster(re={}, im={}, multiplicity={})",
            self.re, self.im, self.multiplicity
        )
    }
}

/// Additive decomposition of a matrix into commuting hyperbolic,
/// elliptic, and nilpotent parts.
#[pyclass(name = "Jordan", frozen)]
struct PyJordan {
    #[pyo3(get)]
    hyperbolic: Vec<Vec<f64>>,
    #[pyo3(get)]
    elliptic: Vec<Vec<f64>>,
    #[pyo3(get)]
    nilpotent: Vec<Vec<f64>>,
    /// One of "hyperbolic", "elliptic", "nilpotent", "mixed".
    #[pyo3(get)]
    classification: String,
    #[pyo3(get)]
    clusters: Vec<PyCluster>,
    /// Set when two clusters sit close enough that their separation is
    /// fragile at working precision.
    #[pyo3(get)]
    ambiguous: bool,
}

#[pymethods]
impl PyJordan {
    fn __repr__(&self) -> String {
        format!(
            "Jordan(classification={:?}, clusters={})",
            self.classification,
            self.clusters.len()
        )
    }
}

/// One eigenvalue layer of a graded algebra.
#[pyclass(name = "Layer", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyLayer {
    #[pyo3(get)]
    lambda_: f64,
    #[pyo3(get)]
    dim: usize,
    #[pyo3(get)]
    basis: Vec<Vec<f64>>,
}

#[pymethods]
impl PyLayer {
    fn __repr__(&self) -> String {
        format!("Layer(lambda_={}, dim={})", self.lambda_, self.dim)
    }
}

/// Eigenvalue grading of an algebra under the hyperbolic part of a
/// derivation, with the unstable, central, and stable subalgebras.
#[pyclass(name = "Grading", frozen)]
struct PyGrading {
    #[pyo3(get)]
    layers: Vec<PyLayer>,
    #[pyo3(get)]
    plus: Vec<Vec<f64>>,
    #[pyo3(get)]
    zero: Vec<Vec<f64>>,
    #[pyo3(get)]
    minus: Vec<Vec<f64>>,
    #[pyo3(get)]
    plus_dim: usize,
    #[pyo3(get)]
    zero_dim: usize,
    #[pyo3(get)]
    minus_dim: usize,
    /// Worst bracket leakage outside the layer sum rule.
    #[pyo3(get)]
    defect: f64,
    #[pyo3(get)]
    sign_ambiguous: bool,
}

#[pymethods]
impl PyGrading {
    fn __repr__(&self) -> String {
        format!(
            "Grading(dims=({}, {}, {}), layers={})",
            self.plus_dim,
            self.zero_dim,
            self.minus_dim,
            self.layers.len()
        )
    }
}

fn build_jordan(d: &DMatrix<f64>) -> PyResult<PyJordan> {
    let jd = jordan::jordan_additive(d).map_err(err)?;
    let class = jordan::classify(d).map_err(err)?;
    Ok(PyJordan {
        hyperbolic: from_matrix(&jd.hyperbolic),
        elliptic: from_matrix(&jd.elliptic),
        nilpotent: from_matrix(&jd.nilpotent),
        classification: class.to_string(),
        clusters: jd
            .spectral
            .clusters
            .iter()
            .map(|c| PyCluster {
                re: c.re,
                im: c.im,
                multiplicity: c.multiplicity,
                basis: from_matrix(&c.basis),
            })
            .collect(),
        ambiguous: jd.spectral.ambiguous,
    })
}

/// Additive Jordan decomposition of a square matrix.
#[pyfunction]
fn decompose(m: Vec<Vec<f64>>) -> PyResult<PyJordan> {
    let d = to_matrix(&m)?;
    if d.nrows() != d.ncols() {
        return Err(PyValueError::new_err("decompose needs a square matrix"));
    }
    build_jordan(&d)
}

/// Classify a square matrix as hyperbolic, elliptic, nilpotent, or mixed.
#[pyfunction]
fn classify(m: Vec<Vec<f64>>) -> PyResult<String> {
    let d = to_matrix(&m)?;
    if d.nrows() != d.ncols() {
        return Err(PyValueError::new_err("classify needs a square matrix"));
    }
    Ok(jordan::classify(&d).map_err(err)?.to_string())
}

/// Names of the built-in scenarios, in catalog order.
#[pyfunction]
fn catalog() -> PyResult<Vec<String>> {
    Ok(harness::catalog()
        .map_err(err)?
        .into_iter()
        .map(|s| s.name)
        .collect())
}

/// Run one built-in scenario and return its JSON report, the same
/// document `lieflow run --json` writes.
#[pyfunction]
#[pyo3(signature = (name, eps=None, tau=None, spacing=None, seed=None))]
fn run_scenario(
    name: &str,
    eps: Option<f64>,
    tau: Option<f64>,
    spacing: Option<f64>,
    seed: Option<u64>,
) -> PyResult<String> {
    let scenario = harness::find_scenario(name).map_err(err)?;
    let overrides = Overrides {
        eps,
        tau,
        spacing,
        window: None,
        seed,
    };
    let out = harness::run_scenario(&scenario, &overrides).map_err(err)?;
    harness::report_json(&out.report).map_err(err)
}

#[pymodule]
fn lieflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLieAlgebra>()?;
    m.add_class::<PyJordan>()?;
    m.add_class::<PyCluster>()?;
    m.add_class::<PyGrading>()?;
    m.add_class::<PyLayer>()?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(catalog, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
