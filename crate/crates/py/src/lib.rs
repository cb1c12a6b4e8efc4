//! Python bindings: `import permap`.

use std::path::PathBuf;

use permap_core::docaudit::{annotation_gap, doc_gap, ingest_doc_dump};
use permap_core::evolution::{diff_versions, distribution, overlap_report, parse_baseline, OverlapScope};
use permap_core::extract::{ScanOptions, SourceCorpus};
use permap_core::llm::{analyze_store, default_demonstrations, AnalysisOptions, MockProvider, RetryPolicy, Role};
use permap_core::store::QueryFilter;
use permap_core::verifier::{load_snippet_corpus, verify_store, PermissionOracle, VerifyOptions};
use permap_core::{MappingStore, Provenance};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Hands a serializable value to Python as plain dicts and lists.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyfunction]
fn canonicalize_permission(name: &str) -> PyResult<String> {
    permap_core::canonicalize_permission(name).map(String::from).map_err(value_err)
}

#[pyfunction]
fn parse_security_exception(message: &str) -> Vec<String> {
    permap_core::verifier::parse_security_exception(message).into_iter().map(String::from).collect()
}

/// `role` is `"detector"` or `"analyst"`.
#[pyfunction]
#[pyo3(signature = (raw, role = "detector"))]
fn parse_verdict<'py>(py: Python<'py>, raw: &str, role: &str) -> PyResult<Bound<'py, PyAny>> {
    let role = match role {
        "detector" => Role::Detector,
        "analyst" => Role::Analyst,
        other => return Err(value_err(format!("unknown role {other:?}"))),
    };
    to_py(py, &permap_core::llm::parse_verdict(raw, role))
}

#[pyclass(name = "Store", module = "permap")]
struct PyStore {
    inner: MappingStore,
}

#[pymethods]
impl PyStore {
    /// Scans the corpus described by a `corpus.json` manifest.
    #[staticmethod]
    fn scan(manifest: PathBuf) -> PyResult<Self> {
        let corpus = SourceCorpus::from_manifest(&manifest).map_err(value_err)?;
        let report = permap_core::extract::scan_corpus(&corpus, &ScanOptions::new()).map_err(value_err)?;
        Ok(Self { inner: MappingStore::from_records(corpus.corpus_id.clone(), corpus.sdk_version, report.records) })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        MappingStore::load(&path).map(|inner| Self { inner }).map_err(|e| PyOSError::new_err(e.to_string()))
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(|e| PyOSError::new_err(e.to_string()))
    }

    #[getter]
    fn corpus_id(&self) -> &str {
        &self.inner.corpus_id
    }

    #[getter]
    fn sdk_version(&self) -> u32 {
        self.inner.sdk_version
    }

    fn covered_count(&self) -> usize {
        self.inner.covered_count()
    }

    fn permission_required_count(&self) -> usize {
        self.inner.permission_required_count()
    }

    fn __len__(&self) -> usize {
        self.inner.covered_count()
    }

    /// Records as dicts, in api_id order.
    fn records<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.records.values().collect::<Vec<_>>())
    }

    /// Mappings matching every given filter, each with its `signature` key.
    #[pyo3(signature = (package_prefix = None, permission = None, provenance = None, jni_only = false))]
    fn query<'py>(
        &self,
        py: Python<'py>,
        package_prefix: Option<String>,
        permission: Option<&str>,
        provenance: Option<&str>,
        jni_only: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let filter = QueryFilter {
            package_prefix,
            permission: permission.map(permap_core::canonicalize_permission).transpose().map_err(value_err)?,
            provenance: provenance
                .map(|p| serde_json::from_value::<Provenance>(serde_json::Value::String(p.into())))
                .transpose()
                .map_err(value_err)?,
            jni_only,
        };
        let rows: Vec<serde_json::Value> = self
            .inner
            .query(&filter)
            .into_iter()
            .map(|m| {
                let mut v = serde_json::to_value(m).expect("mapping serializes");
                v["signature"] = self.inner.records[&m.api_id].key().to_string().into();
                v
            })
            .collect();
        to_py(py, &rows)
    }

    fn distribution<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &distribution(&self.inner))
    }

    fn annotation_gap<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &annotation_gap(&self.inner))
    }

    fn doc_gap<'py>(&self, py: Python<'py>, docs_dir: PathBuf) -> PyResult<Bound<'py, PyAny>> {
        let ingest = ingest_doc_dump(&docs_dir).map_err(|e| PyOSError::new_err(e.to_string()))?;
        to_py(py, &doc_gap(&self.inner, &ingest.records))
    }

    #[pyo3(signature = (baseline, jni_only = false))]
    fn overlap<'py>(&self, py: Python<'py>, baseline: PathBuf, jni_only: bool) -> PyResult<Bound<'py, PyAny>> {
        let text = std::fs::read_to_string(&baseline).map_err(|e| PyOSError::new_err(e.to_string()))?;
        let keys = parse_baseline(&text).map_err(value_err)?;
        let scope = if jni_only { OverlapScope::JniOnly } else { OverlapScope::All };
        to_py(py, &overlap_report(&self.inner, &keys, scope))
    }

    fn diff<'py>(&self, py: Python<'py>, other: &PyStore) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &diff_versions(&self.inner, &other.inner))
    }

    /// Runs both analysis roles against a mock oracle file; returns the
    /// number of permission-required APIs.
    fn analyze_with_mock(&mut self, mock: PathBuf) -> PyResult<usize> {
        let provider = MockProvider::from_path(&mock).map_err(value_err)?;
        let summary = analyze_store(&mut self.inner, &provider, &default_demonstrations(), &AnalysisOptions::default()).map_err(value_err)?;
        if let Some(e) = summary.failed.first() {
            return Err(value_err(e));
        }
        Ok(self.inner.permission_required_count())
    }

    /// Verifies candidate mappings; returns `{verified, rejected, unverifiable}`.
    #[pyo3(signature = (mock, oracle, snippets = None))]
    fn verify_with_mock<'py>(&mut self, py: Python<'py>, mock: PathBuf, oracle: PathBuf, snippets: Option<PathBuf>) -> PyResult<Bound<'py, PyAny>> {
        let provider = MockProvider::from_path(&mock).map_err(value_err)?;
        let oracle = PermissionOracle::load(&oracle).map_err(value_err)?;
        let snippets = snippets.map(|d| load_snippet_corpus(&d)).transpose().map_err(value_err)?.unwrap_or_default();
        let options = VerifyOptions { retry: RetryPolicy::immediate(0), ..VerifyOptions::default() };
        let report = verify_store(&mut self.inner, &provider, &snippets, &oracle, &options).map_err(value_err)?;
        let summary = serde_json::json!({
            "verified": report.verified,
            "rejected": report.rejected,
            "unverifiable": report.unverifiable,
        });
        to_py(py, &summary)
    }

    fn to_jsonl(&self) -> String {
        self.inner.to_jsonl()
    }

    fn __repr__(&self) -> String {
        format!("Store({:?}, sdk={}, covered={})", self.inner.corpus_id, self.inner.sdk_version, self.inner.covered_count())
    }
}

#[pymodule]
fn permap(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(canonicalize_permission, m)?)?;
    m.add_function(wrap_pyfunction!(parse_security_exception, m)?)?;
    m.add_function(wrap_pyfunction!(parse_verdict, m)?)?;
    m.add_class::<PyStore>()?;
    Ok(())
}
