//! Python module `mpforest`.

use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use mondrian_polya::eval::{gen_synthetic, SyntheticSet};
use mondrian_polya::{Error, LeafKind, Matrix, ModelKind, RngState, TreeConfig};

fn err(e: Error) -> PyErr {
    match e {
        Error::NotFound(id) => PyKeyError::new_err(format!("point id {id} is not stored")),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    Matrix::from_rows(&rows).map_err(err)
}

fn tree_config(max_depth: usize, lifetime: f64, gamma: f64, seed: u64) -> PyResult<TreeConfig> {
    let cfg = TreeConfig {
        lifetime,
        max_depth,
        gamma,
        seed,
    };
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

/// Ensemble of batch or streaming trees.
#[pyclass(module = "mpforest")]
struct Forest {
    inner: mondrian_polya::Forest,
}

#[pymethods]
impl Forest {
    #[new]
    #[allow(clippy::too_many_arguments)]
    #[pyo3(signature = (data, kind = "streaming", n_trees = 100, max_depth = 10, lifetime = f64::INFINITY, gamma = 1.0, seed = 0))]
    fn new(
        py: Python<'_>,
        data: Vec<Vec<f64>>,
        kind: &str,
        n_trees: usize,
        max_depth: usize,
        lifetime: f64,
        gamma: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let kind: ModelKind = kind.parse().map_err(err)?;
        let cfg = tree_config(max_depth, lifetime, gamma, seed)?;
        let data = matrix(data)?;
        let inner = py
            .detach(|| mondrian_polya::Forest::fit(&data, &cfg, kind, n_trees))
            .map_err(err)?;
        Ok(Forest { inner })
    }

    /// Streaming forest with no points.
    #[staticmethod]
    #[pyo3(signature = (dim, n_trees = 100, max_depth = 10, lifetime = f64::INFINITY, gamma = 1.0, seed = 0))]
    fn empty(dim: usize, n_trees: usize, max_depth: usize, lifetime: f64, gamma: f64, seed: u64) -> PyResult<Self> {
        let cfg = tree_config(max_depth, lifetime, gamma, seed)?;
        let inner = mondrian_polya::Forest::empty_streaming(dim, &cfg, n_trees).map_err(err)?;
        Ok(Forest { inner })
    }

    #[getter]
    fn kind(&self) -> String {
        self.inner.kind().to_string()
    }

    #[getter]
    fn n_trees(&self) -> usize {
        self.inner.n_trees()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn mass_score(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.mass_score(&x).map_err(err)
    }

    fn density(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.density(&x).map_err(err)
    }

    /// Mean leaf mass for each row.
    fn mass_scores(&self, py: Python<'_>, data: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        let data = matrix(data)?;
        py.detach(|| self.inner.mass_scores(&data)).map_err(err)
    }

    /// `{mass_score, density, anomaly_count, flag}` for one point.
    fn score<'py>(&self, py: Python<'py>, x: Vec<f64>, epsilon: f64, phi: f64) -> PyResult<Bound<'py, PyDict>> {
        let r = self.inner.eps_phi_anomaly(&x, epsilon, phi).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("mass_score", r.mass_score)?;
        d.set_item("density", r.density)?;
        d.set_item("anomaly_count", r.anomaly_count)?;
        d.set_item("flag", r.flag)?;
        Ok(d)
    }

    /// Adds a point to every tree and returns its id.
    fn insert(&mut self, x: Vec<f64>) -> PyResult<usize> {
        self.inner.insert(&x).map_err(err)
    }

    fn delete(&mut self, id: usize) -> PyResult<()> {
        self.inner.delete(id).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Forest { inner })
    }

    fn __repr__(&self) -> String {
        format!("Forest(kind='{}', n_trees={}, dim={})", self.inner.kind(), self.inner.n_trees(), self.inner.dim())
    }
}

/// Single streaming tree.
#[pyclass(module = "mpforest")]
struct Tree {
    inner: mondrian_polya::MpTree,
}

#[pymethods]
impl Tree {
    #[new]
    #[pyo3(signature = (data, max_depth = 10, lifetime = f64::INFINITY, gamma = 1.0, seed = 0))]
    fn new(data: Vec<Vec<f64>>, max_depth: usize, lifetime: f64, gamma: f64, seed: u64) -> PyResult<Self> {
        let cfg = tree_config(max_depth, lifetime, gamma, seed)?;
        let inner = mondrian_polya::MpTree::sample(&matrix(data)?, &cfg, RngState::new(seed)).map_err(err)?;
        Ok(Tree { inner })
    }

    #[getter]
    fn n_points(&self) -> usize {
        self.inner.n_points()
    }

    fn leaf_mass(&self, x: Vec<f64>) -> PyResult<f64> {
        Ok(self.inner.leaf_mass(&x).map_err(err)?.0)
    }

    fn density(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.density(&x).map_err(err)
    }

    fn insert(&mut self, x: Vec<f64>) -> PyResult<usize> {
        self.inner.insert(&x).map_err(err)
    }

    fn delete(&mut self, id: usize) -> PyResult<()> {
        self.inner.delete(id).map_err(err)
    }

    /// `(encoding, kind, mass, volume)` for every leaf.
    fn leaves(&self) -> Vec<(String, &'static str, f64, f64)> {
        self.inner
            .leaves()
            .into_iter()
            .map(|l| {
                let kind = match l.kind {
                    LeafKind::ObservedTypeI => "observed_type_i",
                    LeafKind::ObservedTypeII => "observed_type_ii",
                    LeafKind::Complementary => "complementary",
                };
                (l.encoding.clone(), kind, l.mass, l.volume())
            })
            .collect()
    }
}

/// Mann–Whitney ROC-AUC with lower scores treated as more anomalous.
#[pyfunction]
fn roc_auc(scores: Vec<f64>, labels: Vec<u8>) -> PyResult<f64> {
    mondrian_polya::eval::roc_auc(&scores, &labels).map_err(err)
}

/// `(rows, labels)` for a named synthetic set.
#[pyfunction]
#[pyo3(signature = (name, n_inliers, n_outliers = 0, seed = 0))]
fn synthetic(name: &str, n_inliers: usize, n_outliers: usize, seed: u64) -> PyResult<(Vec<Vec<f64>>, Vec<u8>)> {
    let set: SyntheticSet = name.parse().map_err(err)?;
    let ds = gen_synthetic(set, n_inliers, n_outliers, seed).map_err(err)?;
    let labels = ds.labels.clone().unwrap_or_default();
    Ok((ds.rows.to_rows(), labels))
}

#[pymodule]
fn mpforest(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Forest>()?;
    m.add_class::<Tree>()?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic, m)?)?;
    Ok(())
}
