//! Python bindings: corpus loading, the method catalog, experiment runs and
//! ranking, driven in-process from Python.
//!
//! Usage from Python:
//!
//!     import keydyn_py as kd
//!     corpus = kd.generate_drift_corpus(users=10, sessions=5, reps=8,
//!                                       dimension=4, drift=0.2, noise=0.1,
//!                                       seed=7)
//!     result = kd.run_experiment(corpus, "Parallel both", runs=5, seed=1)
//!     table = kd.rank_methods({m: kd.run_experiment(corpus, m, runs=5,
//!                              seed=1)["criteria"] for m in kd.method_names()})

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use keydyn::adaptation;
use keydyn::corpus;
use keydyn::evaluation;
use keydyn::evaluation::experiment::{Pooling, RunConfig};
use keydyn::evaluation::METRIC_NAMES;
use keydyn::harness;

fn to_py_err(error: keydyn::Error) -> PyErr {
    match &error {
        keydyn::Error::Io(_) => PyIOError::new_err(error.to_string()),
        _ => PyValueError::new_err(error.to_string()),
    }
}

/// An immutable keystroke-timing dataset indexed by user and session.
#[pyclass(name = "Corpus", from_py_object)]
#[derive(Clone)]
struct PyCorpus {
    inner: corpus::Corpus,
}

#[pymethods]
impl PyCorpus {
    /// Parse DSL2009-layout CSV text (subject,sessionIndex,rep,<timings>).
    #[staticmethod]
    fn parse_dsl2009(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: corpus::parse_dsl2009(text).map_err(to_py_err)?,
        })
    }

    /// Parse long-form CSV text with named identity columns.
    #[staticmethod]
    #[pyo3(signature = (text, user_col="user", session_col="session", rep_col="rep"))]
    fn parse_generic(text: &str, user_col: &str, session_col: &str, rep_col: &str) -> PyResult<Self> {
        Ok(Self {
            inner: corpus::parse_generic_csv(text, user_col, session_col, rep_col)
                .map_err(to_py_err)?,
        })
    }

    /// Load a dataset file. `format` is "dsl2009" or "generic".
    #[staticmethod]
    #[pyo3(signature = (path, format="dsl2009", user_col="user", session_col="session", rep_col="rep"))]
    fn load(
        path: &str,
        format: &str,
        user_col: &str,
        session_col: &str,
        rep_col: &str,
    ) -> PyResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        match format {
            "dsl2009" => Self::parse_dsl2009(&text),
            "generic" => Self::parse_generic(&text, user_col, session_col, rep_col),
            other => Err(PyValueError::new_err(format!("unknown format '{other}'"))),
        }
    }

    fn user_ids(&self) -> Vec<String> {
        self.inner.user_ids().map(str::to_string).collect()
    }

    fn user_count(&self) -> usize {
        self.inner.user_count()
    }

    fn session_count(&self) -> u32 {
        self.inner.session_count()
    }

    fn dimension(&self) -> usize {
        self.inner.schema().dimension()
    }

    fn feature_names(&self) -> Vec<String> {
        self.inner.schema().feature_names().to_vec()
    }

    fn total_samples(&self) -> usize {
        self.inner.total_samples()
    }

    fn is_ragged(&self) -> bool {
        self.inner.is_ragged()
    }

    /// Shape report: users, sessions, reps range, dimension, ragged flag.
    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = self.inner.summary();
        let dict = PyDict::new(py);
        dict.set_item("users", s.users)?;
        dict.set_item("sessions", s.sessions)?;
        dict.set_item("reps_min", s.reps_min)?;
        dict.set_item("reps_max", s.reps_max)?;
        dict.set_item("dimension", s.dimension)?;
        dict.set_item("ragged", s.ragged)?;
        Ok(dict)
    }

    /// Serialize to the generic long-form CSV layout.
    fn to_csv(&self) -> String {
        self.inner.to_generic_csv()
    }

    fn __repr__(&self) -> String {
        let s = self.inner.summary();
        format!(
            "Corpus(users={}, sessions={}, dimension={})",
            s.users, s.sessions, s.dimension
        )
    }
}

/// The nine update-method names, in catalog order.
#[pyfunction]
fn method_names() -> Vec<String> {
    adaptation::catalog_specs()
        .into_iter()
        .map(|m| m.name)
        .collect()
}

/// Synthetic corpus with per-session drift; deterministic under `seed`.
#[pyfunction]
#[pyo3(signature = (users, sessions, reps, dimension, drift=0.02, noise=0.02, seed=1))]
fn generate_drift_corpus(
    users: usize,
    sessions: u32,
    reps: usize,
    dimension: usize,
    drift: f64,
    noise: f64,
    seed: u64,
) -> PyResult<PyCorpus> {
    Ok(PyCorpus {
        inner: evaluation::generate_drift_corpus(users, sessions, reps, dimension, drift, noise, seed)
            .map_err(to_py_err)?,
    })
}

/// Interpolated equal error rate for dissimilarity scores.
#[pyfunction]
fn eer(genuine_scores: Vec<f64>, impostor_scores: Vec<f64>) -> PyResult<f64> {
    evaluation::eer(&genuine_scores, &impostor_scores).map_err(to_py_err)
}

/// Double-threshold decision: "reject", "accept" or "accept_and_update".
#[pyfunction]
fn decide(fused_score: f64, accept_threshold: f64, update_threshold: f64) -> PyResult<&'static str> {
    let decision = adaptation::decide(fused_score, accept_threshold, update_threshold)
        .map_err(to_py_err)?;
    Ok(match decision {
        adaptation::Decision::Reject => "reject",
        adaptation::Decision::Accept => "accept",
        adaptation::Decision::AcceptAndUpdate => "accept_and_update",
    })
}

/// Fuse sub-reference scores with "mean" or "min".
#[pyfunction]
fn fuse(scores: Vec<f64>, rule: &str) -> PyResult<f64> {
    let rule = match rule {
        "mean" => keydyn::recognizer::FusionRule::Mean,
        "min" => keydyn::recognizer::FusionRule::Min,
        other => return Err(PyValueError::new_err(format!("unknown fusion rule '{other}'"))),
    };
    keydyn::recognizer::fuse(&scores, rule).map_err(to_py_err)
}

fn rates_dict<'py>(py: Python<'py>, values: &[Option<f64>; 5]) -> PyResult<Bound<'py, PyDict>> {
    let dict = PyDict::new(py);
    for (name, value) in METRIC_NAMES.iter().zip(values) {
        dict.set_item(name, value)?;
    }
    Ok(dict)
}

/// Replay one method over a corpus.
///
/// Returns a dict with per-session means/stds across runs ("summary"), the
/// raw per-run rates ("per_run") and the session-averaged criterion vector
/// used for ranking ("criteria"). Undefined rates come back as None.
#[pyfunction]
#[pyo3(signature = (corpus, method, accept_threshold=0.0, update_threshold=-0.1,
                    impostor_ratio=0.3, runs=10, seed=1, pooling="pooled",
                    impostor_with_replacement=false))]
#[allow(clippy::too_many_arguments)]
fn run_experiment<'py>(
    py: Python<'py>,
    corpus: &PyCorpus,
    method: &str,
    accept_threshold: f64,
    update_threshold: f64,
    impostor_ratio: f64,
    runs: usize,
    seed: u64,
    pooling: &str,
    impostor_with_replacement: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = adaptation::find_method(method)
        .ok_or_else(|| PyValueError::new_err(format!("unknown method '{method}'")))?;
    let pooling = match pooling {
        "pooled" => Pooling::Pooled,
        "per-user" => Pooling::PerUser,
        other => return Err(PyValueError::new_err(format!("unknown pooling '{other}'"))),
    };
    let config = RunConfig {
        accept_threshold,
        update_threshold,
        impostor_ratio,
        runs,
        pooling,
        impostor_with_replacement,
        score_method: Default::default(),
    };
    let result = evaluation::experiment::run_experiment(&corpus.inner, &spec, &config, seed)
        .map_err(to_py_err)?;

    let out = PyDict::new(py);
    out.set_item("method", &result.method)?;

    let summary = PyList::empty(py);
    for session in &result.summary {
        let row = PyDict::new(py);
        row.set_item("session", session.session)?;
        row.set_item("mean", rates_dict(py, &session.mean)?)?;
        row.set_item("std", rates_dict(py, &session.std)?)?;
        summary.append(row)?;
    }
    out.set_item("summary", summary)?;

    let per_run = PyList::empty(py);
    for record in &result.per_run {
        let row = PyDict::new(py);
        row.set_item("run", record.run)?;
        let sessions = PyList::empty(py);
        for (session, values) in &record.sessions {
            let entry = PyDict::new(py);
            entry.set_item("session", session)?;
            entry.set_item("rates", rates_dict(py, values)?)?;
            sessions.append(entry)?;
        }
        row.set_item("sessions", sessions)?;
        per_run.append(row)?;
    }
    out.set_item("per_run", per_run)?;
    out.set_item("criteria", rates_dict(py, &result.session_averaged_criteria())?)?;
    Ok(out)
}

/// Rank methods from their criterion dicts (fmr, fnmr, eer, iusr, gumr;
/// lower is better). Returns the rows sorted by final rank.
#[pyfunction]
fn rank_methods<'py>(
    py: Python<'py>,
    criteria: std::collections::BTreeMap<String, std::collections::BTreeMap<String, Option<f64>>>,
) -> PyResult<Bound<'py, PyList>> {
    let mut map = std::collections::BTreeMap::new();
    for (method, values) in criteria {
        let mut row = [None; 5];
        for (m, name) in METRIC_NAMES.iter().enumerate() {
            row[m] = values.get(*name).copied().flatten();
        }
        map.insert(method, row);
    }
    let table = evaluation::ranking::rank_methods(&map).map_err(to_py_err)?;
    let rows = PyList::empty(py);
    for row in &table.rows {
        let entry = PyDict::new(py);
        entry.set_item("method", &row.method)?;
        let ranks = PyDict::new(py);
        for (name, rank) in METRIC_NAMES.iter().zip(row.criterion_ranks) {
            ranks.set_item(name, rank)?;
        }
        entry.set_item("criterion_ranks", ranks)?;
        entry.set_item("rank_sum", row.rank_sum)?;
        entry.set_item("rank_sum_without_eer", row.rank_sum_without_eer)?;
        entry.set_item("final_rank", row.final_rank)?;
        entry.set_item("final_rank_without_eer", row.final_rank_without_eer)?;
        rows.append(entry)?;
    }
    Ok(rows)
}

/// Derive the eer-half update threshold from session 1 of a corpus.
#[pyfunction]
fn eer_half_update_threshold(corpus: &PyCorpus) -> PyResult<f64> {
    harness::derive_eer_half_update_threshold(&corpus.inner).map_err(to_py_err)
}

#[pymodule]
fn keydyn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("METRICS", METRIC_NAMES.to_vec())?;
    m.add_class::<PyCorpus>()?;
    m.add_function(wrap_pyfunction!(method_names, m)?)?;
    m.add_function(wrap_pyfunction!(generate_drift_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(eer, m)?)?;
    m.add_function(wrap_pyfunction!(decide, m)?)?;
    m.add_function(wrap_pyfunction!(fuse, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(rank_methods, m)?)?;
    m.add_function(wrap_pyfunction!(eer_half_update_threshold, m)?)?;
    Ok(())
}
