//! Python bindings: datasets, forests, explainers, stability reports,
//! selection, metrics and the trade-vetoing helpers.
//!
//! Matrices cross the boundary as lists of rows. Reports that are plain
//! records come back as dicts.

use ndarray::Array2;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;
use serde::Serialize;

use instab_core::data::{self as core_data, LabeledDataset, Task};
use instab_core::explain::{self as core_explain, Algorithm, ExplainerConfig, ImportanceMatrix};
use instab_core::forest::{self as core_forest, ForestConfig, ForestModel, MaxFeatures};
use instab_core::metalabel::{self, TradeSeries};
use instab_core::select_eval;
use instab_core::stability::{self as core_stability, RankMatrix};
use instab_core::{Error, ErrorKind};

fn to_py(e: Error) -> PyErr {
    let mut source: Option<&dyn std::error::Error> = Some(&e);
    while let Some(err) = source {
        if err.is::<std::io::Error>() {
            return PyOSError::new_err(e.to_string());
        }
        source = err.source();
    }
    match e.kind() {
        ErrorKind::Numeric => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn or_py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for instab_core::Result<T> {
    fn or_py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn matrix(rows: Vec<Vec<f64>>, n_cols: Option<usize>) -> PyResult<Array2<f64>> {
    let m = n_cols.or_else(|| rows.first().map(Vec::len)).unwrap_or(0);
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != m) {
        return Err(PyValueError::new_err(format!(
            "row {i} has {} values, expected {m}",
            r.len()
        )));
    }
    let n = rows.len();
    Array2::from_shape_vec((n, m), rows.into_iter().flatten().collect())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

fn rows_of(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// Round-trip a serde record into Python objects through `json`.
fn record<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(PyModule::import(py, "json")?
        .call_method1("loads", (text,))?
        .unbind())
}

fn parse_task(task: &str) -> PyResult<Task> {
    task.parse().or_py()
}

fn parse_algorithm(name: &str) -> PyResult<Algorithm> {
    name.parse().or_py()
}

#[pyclass(name = "Dataset", module = "instab", frozen)]
pub struct PyDataset {
    inner: LabeledDataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    #[pyo3(signature = (features, target, feature_names=None, task="classification"))]
    fn new(
        features: Vec<Vec<f64>>,
        target: Vec<f64>,
        feature_names: Option<Vec<String>>,
        task: &str,
    ) -> PyResult<Self> {
        let x = matrix(features, feature_names.as_ref().map(Vec::len))?;
        let names =
            feature_names.unwrap_or_else(|| (0..x.ncols()).map(|j| format!("x{j}")).collect());
        let inner = LabeledDataset::new(x, names, target, parse_task(task)?).or_py()?;
        Ok(Self { inner })
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.inner.n_rows()
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names().to_vec()
    }

    #[getter]
    fn task(&self) -> String {
        self.inner.task().to_string()
    }

    #[getter]
    fn features(&self) -> Vec<Vec<f64>> {
        rows_of(self.inner.features())
    }

    #[getter]
    fn target(&self) -> Vec<f64> {
        self.inner.target().to_vec()
    }

    fn select_rows(&self, rows: Vec<usize>) -> PyResult<Self> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.inner.n_rows()) {
            return Err(PyValueError::new_err(format!("row {bad} out of range")));
        }
        Ok(Self {
            inner: self.inner.select_rows(&rows),
        })
    }

    fn select_features(&self, names: Vec<String>) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.select_named(&names).or_py()?,
        })
    }

    #[pyo3(signature = (path, label="label"))]
    fn write_csv(&self, path: &str, label: &str) -> PyResult<()> {
        self.inner.write_csv(path, label).or_py()
    }

    fn __len__(&self) -> usize {
        self.inner.n_rows()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(n_rows={}, n_features={}, task='{}')",
            self.inner.n_rows(),
            self.inner.n_features(),
            self.inner.task()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (path, label, task="classification"))]
fn load_csv(path: &str, label: &str, task: &str) -> PyResult<PyDataset> {
    let inner = core_data::load_csv(path, label, parse_task(task)?).or_py()?;
    Ok(PyDataset { inner })
}

/// Returns the dataset and each column's provenance (`informative`, `redundant` or `noise`).
#[pyfunction]
#[pyo3(signature = (n=1000, informative=10, redundant=10, noise=20, seed=0))]
fn synth_classification(
    n: usize,
    informative: usize,
    redundant: usize,
    noise: usize,
    seed: u64,
) -> PyResult<(PyDataset, Vec<String>)> {
    let (inner, prov) =
        core_data::synth_classification(n, informative, redundant, noise, seed).or_py()?;
    Ok((PyDataset { inner }, provenance(&prov)))
}

#[pyfunction]
#[pyo3(signature = (n=1000, informative=10, redundant=10, noise=20, noise_sd=10.0, seed=0))]
fn synth_regression(
    n: usize,
    informative: usize,
    redundant: usize,
    noise: usize,
    noise_sd: f64,
    seed: u64,
) -> PyResult<(PyDataset, Vec<String>)> {
    let (inner, prov) =
        core_data::synth_regression(n, informative, redundant, noise, noise_sd, seed).or_py()?;
    Ok((PyDataset { inner }, provenance(&prov)))
}

fn provenance(p: &core_data::FeatureProvenance) -> Vec<String> {
    p.0.iter()
        .map(|v| format!("{v:?}").to_lowercase())
        .collect()
}

/// Train, validation and test row indices.
#[pyfunction]
#[pyo3(signature = (dataset, seed=0))]
fn split(dataset: &PyDataset, seed: u64) -> PyResult<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let s = core_data::split(&dataset.inner, seed).or_py()?;
    Ok((s.train, s.valid, s.test))
}

#[pyclass(name = "Forest", module = "instab", frozen)]
pub struct PyForest {
    inner: ForestModel,
}

#[pymethods]
impl PyForest {
    #[staticmethod]
    #[pyo3(signature = (dataset, seed=0, n_trees=None, max_features=None, min_samples_leaf=None, max_depth=None, bootstrap=None))]
    #[allow(clippy::too_many_arguments)]
    fn fit(
        py: Python<'_>,
        dataset: &PyDataset,
        seed: u64,
        n_trees: Option<usize>,
        max_features: Option<&str>,
        min_samples_leaf: Option<usize>,
        max_depth: Option<usize>,
        bootstrap: Option<bool>,
    ) -> PyResult<Self> {
        let mut cfg = ForestConfig::for_task(dataset.inner.task(), seed);
        if let Some(v) = n_trees {
            cfg.n_trees = v;
        }
        if let Some(v) = max_features {
            cfg.max_features = v.parse::<MaxFeatures>().or_py()?;
        }
        if let Some(v) = min_samples_leaf {
            cfg.min_samples_leaf = v;
        }
        if max_depth.is_some() {
            cfg.max_depth = max_depth;
        }
        if let Some(v) = bootstrap {
            cfg.bootstrap = v;
        }
        let inner = py
            .detach(|| core_forest::fit(&dataset.inner, &cfg))
            .or_py()?;
        Ok(Self { inner })
    }

    fn predict(&self, py: Python<'_>, rows: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        let x = matrix(rows, Some(self.inner.n_features()))?;
        py.detach(|| self.inner.predict(x.view())).or_py()
    }

    fn predict_proba(&self, py: Python<'_>, rows: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let x = matrix(rows, Some(self.inner.n_features()))?;
        let p = py.detach(|| self.inner.predict_proba(x.view())).or_py()?;
        Ok(rows_of(&p))
    }

    /// Test-split style scores of this forest on `dataset`, as a dict.
    fn score(&self, py: Python<'_>, dataset: &PyDataset) -> PyResult<Py<PyAny>> {
        let scores = select_eval::score_model(&self.inner, &dataset.inner).or_py()?;
        record(py, &scores)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().or_py()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: ForestModel::from_json(text).or_py()?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).or_py()
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: ForestModel::load(path).or_py()?,
        })
    }

    #[getter]
    fn n_trees(&self) -> usize {
        self.inner.trees().len()
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names().to_vec()
    }

    #[getter]
    fn task(&self) -> String {
        self.inner.task().to_string()
    }

    fn __repr__(&self) -> String {
        format!(
            "Forest(task='{}', n_trees={}, n_features={})",
            self.inner.task(),
            self.inner.trees().len(),
            self.inner.n_features()
        )
    }
}

/// Importance scores, one row per iteration.
#[pyclass(name = "Importance", module = "instab", frozen)]
pub struct PyImportance {
    inner: ImportanceMatrix,
}

#[pymethods]
impl PyImportance {
    #[new]
    #[pyo3(signature = (scores, feature_names=None))]
    fn new(scores: Vec<Vec<f64>>, feature_names: Option<Vec<String>>) -> PyResult<Self> {
        let x = matrix(scores, feature_names.as_ref().map(Vec::len))?;
        let names =
            feature_names.unwrap_or_else(|| (0..x.ncols()).map(|j| format!("x{j}")).collect());
        Ok(Self {
            inner: ImportanceMatrix::new(x, names, None, 0).or_py()?,
        })
    }

    #[getter]
    fn scores(&self) -> Vec<Vec<f64>> {
        rows_of(self.inner.scores())
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names().to_vec()
    }

    #[getter]
    fn algorithm(&self) -> Option<String> {
        self.inner.algorithm().map(|a| a.to_string())
    }

    #[getter]
    fn n_iterations(&self) -> usize {
        self.inner.n_iterations()
    }

    /// Per-iteration ranks, 1 = most important.
    fn ranks(&self) -> PyResult<Vec<Vec<usize>>> {
        let r = core_stability::rank_scores(&self.inner).or_py()?;
        Ok(r.ranks()
            .rows()
            .into_iter()
            .map(|row| row.to_vec())
            .collect())
    }

    fn head(&self, n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.head(n).or_py()?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Importance(algorithm={:?}, n_iterations={}, n_features={})",
            self.inner.algorithm().map(|a| a.to_string()),
            self.inner.n_iterations(),
            self.inner.n_features()
        )
    }
}

/// Score the features of `forest` on `valid` with MDA, LIME or SHAP.
#[pyfunction]
#[pyo3(signature = (forest, train, valid, algorithm, n_repeat=None, seed=0, subsample=None, perturbations=None, background=None))]
#[allow(clippy::too_many_arguments)]
fn explain(
    py: Python<'_>,
    forest: &PyForest,
    train: &PyDataset,
    valid: &PyDataset,
    algorithm: &str,
    n_repeat: Option<usize>,
    seed: u64,
    subsample: Option<usize>,
    perturbations: Option<usize>,
    background: Option<usize>,
) -> PyResult<PyImportance> {
    let alg = parse_algorithm(algorithm)?;
    let mut cfg = ExplainerConfig::new(
        alg,
        n_repeat.unwrap_or_else(|| alg.default_n_repeat()),
        seed,
    );
    cfg.subsample = subsample;
    if let Some(p) = perturbations {
        cfg.lime.perturbations = p;
    }
    if let Some(b) = background {
        cfg.shap.background_size = b;
    }
    let inner = py
        .detach(|| core_explain::explain(&forest.inner, &train.inner, &valid.inner, &cfg))
        .or_py()?;
    Ok(PyImportance { inner })
}

/// Average ranks, normalized importance, rank variances and the index for every k.
#[pyfunction]
fn stability_report(py: Python<'_>, importance: &PyImportance) -> PyResult<Py<PyAny>> {
    let report = core_stability::stability_report(&importance.inner).or_py()?;
    record(py, &report)
}

/// Instability index over the top `k` features of a rank matrix (rows = iterations).
#[pyfunction]
fn instability_index(ranks: Vec<Vec<usize>>, k: usize) -> PyResult<f64> {
    let r = RankMatrix::from_rows(&ranks).or_py()?;
    core_stability::instability_index(&r, k).or_py()
}

/// Features whose normalized importance is above the mean `1/m`.
#[pyfunction]
fn select_features(py: Python<'_>, importance: &PyImportance) -> PyResult<Py<PyAny>> {
    let report = core_stability::stability_report(&importance.inner).or_py()?;
    record(py, &select_eval::select_features(&report))
}

/// Retrain on `train_rows` with `features` only and score on `eval_rows`.
#[pyfunction]
#[pyo3(signature = (dataset, train_rows, eval_rows, features, seed=0))]
fn evaluate(
    py: Python<'_>,
    dataset: &PyDataset,
    train_rows: Vec<usize>,
    eval_rows: Vec<usize>,
    features: Vec<String>,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let n = dataset.inner.n_rows();
    if let Some(&bad) = train_rows.iter().chain(&eval_rows).find(|&&r| r >= n) {
        return Err(PyValueError::new_err(format!("row {bad} out of range")));
    }
    let cfg = ForestConfig::for_task(dataset.inner.task(), seed);
    let report = py
        .detach(|| {
            select_eval::evaluate_on(&dataset.inner, &train_rows, &eval_rows, &features, &cfg)
        })
        .or_py()?;
    record(py, &report)
}

#[pyfunction]
#[pyo3(signature = (returns, annualization=1.0))]
fn sharpe(returns: Vec<f64>, annualization: f64) -> PyResult<f64> {
    metalabel::sharpe(&returns, annualization).or_py()
}

#[pyfunction]
fn cumulative_return(returns: Vec<f64>) -> PyResult<f64> {
    metalabel::cumulative_return(&returns).or_py()
}

#[pyclass(name = "Trades", module = "instab", frozen)]
pub struct PyTrades {
    inner: TradeSeries,
}

#[pymethods]
impl PyTrades {
    #[getter]
    fn timestamps(&self) -> Vec<String> {
        self.inner
            .timestamps()
            .iter()
            .map(|t| t.format("%Y-%m-%dT%H:%M:%S").to_string())
            .collect()
    }

    #[getter]
    fn returns(&self) -> Vec<f64> {
        self.inner.returns().to_vec()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names().to_vec()
    }

    /// Binary meta-labels: 1 where the trade made money.
    fn labels(&self) -> Vec<f64> {
        self.inner.labels()
    }

    fn to_dataset(&self) -> PyResult<PyDataset> {
        Ok(PyDataset {
            inner: self.inner.to_dataset().or_py()?,
        })
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        self.inner.write_csv(path).or_py()
    }

    /// Veto trades `forest` predicts as losers; returns the backtest record.
    #[pyo3(signature = (forest, annualization=1.0))]
    fn veto(&self, py: Python<'_>, forest: &PyForest, annualization: f64) -> PyResult<Py<PyAny>> {
        let report = metalabel::veto_backtest(&forest.inner, &self.inner, annualization).or_py()?;
        record(py, &report)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Trades(n={}, n_features={})",
            self.inner.len(),
            self.inner.feature_names().len()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (n=500, n_features=20, signal=2.0, seed=0))]
fn synth_trades(n: usize, n_features: usize, signal: f64, seed: u64) -> PyResult<PyTrades> {
    Ok(PyTrades {
        inner: metalabel::synth_trades(n, n_features, signal, seed).or_py()?,
    })
}

#[pyfunction]
fn load_trades(path: &str) -> PyResult<PyTrades> {
    Ok(PyTrades {
        inner: metalabel::load_trades(path).or_py()?,
    })
}

#[pymodule]
pub fn instab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyForest>()?;
    m.add_class::<PyImportance>()?;
    m.add_class::<PyTrades>()?;
    m.add_function(wrap_pyfunction!(load_csv, m)?)?;
    m.add_function(wrap_pyfunction!(synth_classification, m)?)?;
    m.add_function(wrap_pyfunction!(synth_regression, m)?)?;
    m.add_function(wrap_pyfunction!(split, m)?)?;
    m.add_function(wrap_pyfunction!(explain, m)?)?;
    m.add_function(wrap_pyfunction!(stability_report, m)?)?;
    m.add_function(wrap_pyfunction!(instability_index, m)?)?;
    m.add_function(wrap_pyfunction!(select_features, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(sharpe, m)?)?;
    m.add_function(wrap_pyfunction!(cumulative_return, m)?)?;
    m.add_function(wrap_pyfunction!(synth_trades, m)?)?;
    m.add_function(wrap_pyfunction!(load_trades, m)?)?;
    Ok(())
}
