//! Standalone bundles for running validated probes on real tooling.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

use super::case::{CaseStatus, TestCase};
use super::template::PROBE_CLASS;
use crate::store::MappingStore;

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    case_id: &'a str,
    api_id: &'a str,
    target: String,
    sdk_version: u32,
    grant: Vec<&'a str>,
    expected_exception_substring: &'static str,
    expected_permissions: Vec<String>,
    source: String,
}

#[derive(Debug, Serialize)]
struct BundleIndex<'a> {
    corpus_id: &'a str,
    sdk_version: u32,
    cases: Vec<&'a str>,
}

/// Writes `<dest>/<case_id>/PermissionProbe.java` and `run.json` for every
/// validated case, plus `<dest>/bundle.json`. Returns the exported case ids.
pub fn export_device_bundle(cases: &[TestCase], store: &MappingStore, dest: &Path) -> io::Result<Vec<String>> {
    fs::create_dir_all(dest)?;
    let mut exported = Vec::new();
    for tc in cases.iter().filter(|c| c.status == CaseStatus::Validated) {
        let dir = dest.join(&tc.case_id);
        fs::create_dir_all(&dir)?;
        let source = format!("{PROBE_CLASS}.java");
        fs::write(dir.join(&source), &tc.code)?;
        let expected = store
            .mappings
            .get(&tc.api_id)
            .map(|m| m.permission_set().into_iter().map(String::from).collect())
            .unwrap_or_default();
        let manifest = RunManifest {
            case_id: &tc.case_id,
            api_id: &tc.api_id,
            target: tc.target().to_string(),
            sdk_version: tc.sdk_version,
            grant: tc.manifest_permissions.iter().map(|p| p.as_str()).collect(),
            expected_exception_substring: "SecurityException",
            expected_permissions: expected,
            source,
        };
        fs::write(dir.join("run.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
        exported.push(tc.case_id.clone());
    }
    let index = BundleIndex { corpus_id: &store.corpus_id, sdk_version: store.sdk_version, cases: exported.iter().map(String::as_str).collect() };
    fs::write(dest.join("bundle.json"), serde_json::to_string_pretty(&index)? + "\n")?;
    Ok(exported)
}
