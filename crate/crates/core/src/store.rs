//! Versioned line-oriented database of extracted APIs and their permission mappings.
//!
//! File layout (`.pmdb.jsonl`): one JSON object per line. The first line is the
//! header, followed by every `api` line and then every `map` line, each group
//! sorted by `api_id`. Sets are written as sorted arrays, so two stores with
//! equal contents serialize to identical bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::{ApiRecord, SignatureKey};
use crate::permission::{Permission, PermissionSet};

pub const FORMAT_VERSION: u32 = 1;
pub const STORE_EXTENSION: &str = "pmdb.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Annotation,
    Detector,
    Analyst,
    Doc,
    Verified,
}

impl Provenance {
    /// The confidence a mapping reaches once this source has contributed.
    pub fn confidence(self) -> Confidence {
        match self {
            Self::Annotation | Self::Doc => Confidence::Declared,
            Self::Detector | Self::Analyst => Confidence::Predicted,
            Self::Verified => Confidence::Verified,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Annotation => "annotation",
            Self::Detector => "detector",
            Self::Analyst => "analyst",
            Self::Doc => "doc",
            Self::Verified => "verified",
        }
    }
}

/// Ordered: declared < predicted < verified. Never downgraded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Confidence {
    Declared,
    Predicted,
    Verified,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermissionMapping {
    pub api_id: String,
    /// Each permission with the sources that asserted it.
    pub permissions: BTreeMap<Permission, BTreeSet<Provenance>>,
    pub confidence: Confidence,
    pub sdk_version: u32,
    /// Set when verification was attempted and produced no evidence.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unverifiable: bool,
}

impl PermissionMapping {
    pub fn new(api_id: impl Into<String>, sdk_version: u32) -> Self {
        Self {
            api_id: api_id.into(),
            permissions: BTreeMap::new(),
            confidence: Confidence::Declared,
            sdk_version,
            unverifiable: false,
        }
    }

    pub fn add(&mut self, permission: Permission, source: Provenance) {
        self.permissions.entry(permission).or_default().insert(source);
        self.confidence = self.confidence.max(source.confidence());
    }

    pub fn add_all<'a>(&mut self, permissions: impl IntoIterator<Item = &'a Permission>, source: Provenance) {
        for p in permissions {
            self.add(p.clone(), source);
        }
    }

    pub fn permission_set(&self) -> PermissionSet {
        self.permissions.keys().cloned().collect()
    }

    pub fn provenance(&self) -> BTreeSet<Provenance> {
        self.permissions.values().flatten().copied().collect()
    }

    /// Permissions carrying `verified` provenance.
    pub fn verified_permissions(&self) -> PermissionSet {
        self.permissions
            .iter()
            .filter(|(_, s)| s.contains(&Provenance::Verified))
            .map(|(p, _)| p.clone())
            .collect()
    }

    pub fn is_permission_required(&self) -> bool {
        !self.permissions.is_empty()
    }

    /// Unions `other` into `self`; confidence only moves upwards.
    pub fn merge(&mut self, other: &PermissionMapping) {
        for (p, sources) in &other.permissions {
            self.permissions.entry(p.clone()).or_default().extend(sources.iter().copied());
        }
        self.confidence = self.confidence.max(other.confidence);
        self.unverifiable = if self.confidence == Confidence::Verified { false } else { self.unverifiable || other.unverifiable };
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown api_id {0}")]
    UnknownApi(String),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("cannot access store file {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingStore {
    pub corpus_id: String,
    pub sdk_version: u32,
    pub records: BTreeMap<String, ApiRecord>,
    pub mappings: BTreeMap<String, PermissionMapping>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Line {
    Header { format_version: u32, corpus_id: String, sdk_version: u32 },
    Api(Box<ApiRecord>),
    Map(PermissionMapping),
}

/// All supplied predicates must hold. `None`/`false` fields are unconstrained.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryFilter {
    /// Dotted-segment prefix of `fq_class`: `android` matches `android.os.X`, not `androidx.Y`.
    pub package_prefix: Option<String>,
    pub permission: Option<Permission>,
    pub provenance: Option<Provenance>,
    pub jni_only: bool,
}

pub fn package_matches(fq_class: &str, prefix: &str) -> bool {
    let prefix = prefix.trim_end_matches('.');
    prefix.is_empty() || fq_class == prefix || fq_class.strip_prefix(prefix).is_some_and(|rest| rest.starts_with('.'))
}

impl MappingStore {
    pub fn new(corpus_id: impl Into<String>, sdk_version: u32) -> Self {
        Self { corpus_id: corpus_id.into(), sdk_version, records: BTreeMap::new(), mappings: BTreeMap::new() }
    }

    pub fn from_records(corpus_id: impl Into<String>, sdk_version: u32, records: Vec<ApiRecord>) -> Self {
        let mut store = Self::new(corpus_id, sdk_version);
        for r in records {
            store.records.insert(r.api_id.clone(), r);
        }
        store
    }

    pub fn insert_record(&mut self, record: ApiRecord) {
        self.records.insert(record.api_id.clone(), record);
    }

    pub fn covered_count(&self) -> usize {
        self.records.len()
    }

    pub fn permission_required_count(&self) -> usize {
        self.mappings.values().filter(|m| m.is_permission_required()).count()
    }

    /// Unions `perms` into the mapping for `api_id` under `source`. An empty
    /// set never creates a mapping.
    pub fn upsert_mapping(&mut self, api_id: &str, perms: &PermissionSet, source: Provenance) -> Result<(), StoreError> {
        if !self.records.contains_key(api_id) {
            return Err(StoreError::UnknownApi(api_id.to_string()));
        }
        if perms.is_empty() {
            return Ok(());
        }
        let sdk_version = self.sdk_version;
        self.mappings
            .entry(api_id.to_string())
            .or_insert_with(|| PermissionMapping::new(api_id, sdk_version))
            .add_all(perms, source);
        Ok(())
    }

    /// Unions a whole candidate mapping into the store.
    pub fn merge_mapping(&mut self, mapping: &PermissionMapping) -> Result<(), StoreError> {
        if !self.records.contains_key(&mapping.api_id) {
            return Err(StoreError::UnknownApi(mapping.api_id.clone()));
        }
        if !mapping.is_permission_required() {
            return Ok(());
        }
        match self.mappings.get_mut(&mapping.api_id) {
            Some(existing) => existing.merge(mapping),
            None => {
                self.mappings.insert(mapping.api_id.clone(), mapping.clone());
            }
        }
        Ok(())
    }

    /// Replaces the mapping for its api_id, e.g. after verification.
    pub fn replace_mapping(&mut self, mapping: PermissionMapping) -> Result<(), StoreError> {
        if !self.records.contains_key(&mapping.api_id) {
            return Err(StoreError::UnknownApi(mapping.api_id.clone()));
        }
        if mapping.is_permission_required() {
            self.mappings.insert(mapping.api_id.clone(), mapping);
        } else {
            self.mappings.remove(&mapping.api_id);
        }
        Ok(())
    }

    pub fn record_by_key(&self, key: &SignatureKey) -> Option<&ApiRecord> {
        self.records.values().find(|r| {
            r.signature.fq_class == key.fq_class && r.signature.name == key.name && r.signature.param_types == key.param_types
        })
    }

    pub fn key_index(&self) -> BTreeMap<SignatureKey, String> {
        self.records.values().map(|r| (r.key(), r.api_id.clone())).collect()
    }

    pub fn query(&self, filter: &QueryFilter) -> Vec<&PermissionMapping> {
        self.mappings
            .values()
            .filter(|m| {
                let Some(record) = self.records.get(&m.api_id) else { return false };
                filter.package_prefix.as_deref().is_none_or(|p| package_matches(&record.signature.fq_class, p))
                    && filter.permission.as_ref().is_none_or(|p| m.permissions.contains_key(p))
                    && filter.provenance.is_none_or(|src| m.provenance().contains(&src))
                    && (!filter.jni_only || record.is_jni)
            })
            .collect()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let header = Line::Header {
            format_version: FORMAT_VERSION,
            corpus_id: self.corpus_id.clone(),
            sdk_version: self.sdk_version,
        };
        push_line(&mut out, &header);
        for r in self.records.values() {
            push_line(&mut out, &Line::Api(Box::new(r.clone())));
        }
        for m in self.mappings.values() {
            push_line(&mut out, &Line::Map(m.clone()));
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, StoreError> {
        let malformed = |line: usize, message: String| StoreError::Malformed { line, message };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, first) = lines.next().ok_or_else(|| malformed(1, "missing header line".into()))?;
        let mut store = match serde_json::from_str::<Line>(first) {
            Ok(Line::Header { format_version, corpus_id, sdk_version }) => {
                if format_version != FORMAT_VERSION {
                    return Err(malformed(1, format!("unsupported format_version {format_version}")));
                }
                Self::new(corpus_id, sdk_version)
            }
            Ok(_) => return Err(malformed(1, "first line must be the header".into())),
            Err(e) => return Err(malformed(1, e.to_string())),
        };
        for (no, line) in lines {
            match serde_json::from_str::<Line>(line).map_err(|e| malformed(no, e.to_string()))? {
                Line::Header { .. } => return Err(malformed(no, "duplicate header".into())),
                Line::Api(record) => {
                    if !store.mappings.is_empty() {
                        return Err(malformed(no, "api line after map lines".into()));
                    }
                    if store.records.contains_key(&record.api_id) {
                        return Err(malformed(no, format!("duplicate api_id {}", record.api_id)));
                    }
                    store.insert_record(*record);
                }
                Line::Map(mapping) => {
                    if !store.records.contains_key(&mapping.api_id) {
                        return Err(malformed(no, format!("mapping for unknown api_id {}", mapping.api_id)));
                    }
                    if mapping.permissions.is_empty() || mapping.permissions.values().any(BTreeSet::is_empty) {
                        return Err(malformed(no, "mapping without permissions or provenance".into()));
                    }
                    if store.mappings.insert(mapping.api_id.clone(), mapping).is_some() {
                        return Err(malformed(no, "duplicate mapping".into()));
                    }
                }
            }
        }
        Ok(store)
    }

    pub fn save(&self, path: &Path) -> Result<(), StoreError> {
        let io = |source| StoreError::Io { path: path.to_path_buf(), source };
        let mut file = fs::File::create(path).map_err(io)?;
        file.write_all(self.to_jsonl().as_bytes()).map_err(io)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, StoreError> {
        let text = fs::read_to_string(path).map_err(|source| StoreError::Io { path: path.to_path_buf(), source })?;
        Self::from_jsonl(&text)
    }
}

fn push_line(out: &mut String, line: &Line) {
    out.push_str(&serde_json::to_string(line).expect("store lines always serialize"));
    out.push('\n');
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::{ExtractionSource, Location, MethodSignature};
    use crate::permission::canonicalize_permission;

    fn perm(s: &str) -> Permission {
        canonicalize_permission(s).unwrap()
    }

    fn set(names: &[&str]) -> PermissionSet {
        names.iter().map(|n| perm(n)).collect()
    }

    pub(crate) fn record(id: &str, fq_class: &str, name: &str) -> ApiRecord {
        ApiRecord {
            api_id: id.into(),
            signature: MethodSignature {
                fq_class: fq_class.into(),
                name: name.into(),
                param_types: vec![],
                return_type: "void".into(),
                modifiers: Default::default(),
            },
            location: Location { path: "X.java".into(), line: 1 },
            top_package: crate::extract::record::top_package(fq_class).into(),
            api_level: 7,
            deprecated: false,
            doc_comment: String::new(),
            body_text: String::new(),
            declared_permissions: Default::default(),
            is_jni: false,
            extraction_source: ExtractionSource::Parser,
        }
    }

    fn store3() -> MappingStore {
        MappingStore::from_records(
            "c",
            7,
            vec![record("a1", "android.hardware.Camera", "open"), record("b2", "androidx.x.Y", "f"), record("c3", "com.vendor.Pay", "pay")],
        )
    }

    #[test]
    fn empty_upsert_creates_nothing() {
        let mut s = store3();
        s.upsert_mapping("a1", &PermissionSet::new(), Provenance::Analyst).unwrap();
        assert!(s.mappings.is_empty());
    }

    #[test]
    fn upserts_union_and_track_provenance() {
        let mut s = store3();
        s.upsert_mapping("a1", &set(&["CAMERA"]), Provenance::Annotation).unwrap();
        s.upsert_mapping("a1", &set(&["CAMERA", "RECORD_AUDIO"]), Provenance::Analyst).unwrap();
        let m = &s.mappings["a1"];
        assert_eq!(m.permission_set(), set(&["CAMERA", "RECORD_AUDIO"]));
        assert_eq!(m.provenance(), BTreeSet::from([Provenance::Annotation, Provenance::Analyst]));
        assert_eq!(m.confidence, Confidence::Predicted);
    }

    #[test]
    fn confidence_never_downgrades() {
        let mut s = store3();
        s.upsert_mapping("a1", &set(&["CAMERA"]), Provenance::Analyst).unwrap();
        s.upsert_mapping("a1", &set(&["CAMERA"]), Provenance::Verified).unwrap();
        assert_eq!(s.mappings["a1"].confidence, Confidence::Verified);
        s.upsert_mapping("a1", &set(&["CAMERA"]), Provenance::Annotation).unwrap();
        assert_eq!(s.mappings["a1"].confidence, Confidence::Verified);
    }

    #[test]
    fn unknown_api_is_an_integrity_error() {
        let mut s = store3();
        assert!(matches!(s.upsert_mapping("zz", &set(&["CAMERA"]), Provenance::Analyst), Err(StoreError::UnknownApi(_))));
    }

    #[test]
    fn empty_store_is_just_a_header() {
        let s = MappingStore::new("empty", 15);
        let text = s.to_jsonl();
        assert_eq!(text, "{\"kind\":\"header\",\"format_version\":1,\"corpus_id\":\"empty\",\"sdk_version\":15}\n");
        assert_eq!(MappingStore::from_jsonl(&text).unwrap(), s);
    }

    #[test]
    fn three_record_store_round_trips() {
        let mut s = store3();
        s.upsert_mapping("c3", &set(&["com.vendor.permission.PAY"]), Provenance::Detector).unwrap();
        s.upsert_mapping("a1", &set(&["CAMERA"]), Provenance::Annotation).unwrap();
        let text = s.to_jsonl();
        let kinds: Vec<_> = text.lines().map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["kind"].as_str().unwrap().to_string()).collect();
        assert_eq!(kinds, ["header", "api", "api", "api", "map", "map"]);
        let ids: Vec<_> = text.lines().skip(1).map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["api_id"].as_str().unwrap().to_string()).collect();
        assert_eq!(ids, ["a1", "b2", "c3", "a1", "c3"]);
        assert_eq!(MappingStore::from_jsonl(&text).unwrap(), s);
    }

    #[test]
    fn truncated_file_names_the_line() {
        let mut s = store3();
        s.upsert_mapping("a1", &set(&["CAMERA"]), Provenance::Annotation).unwrap();
        let text = s.to_jsonl();
        let cut = &text[..text.len() - 20];
        match MappingStore::from_jsonl(cut) {
            Err(StoreError::Malformed { line, .. }) => assert_eq!(line, 5),
            other => panic!("expected malformed error, got {other:?}"),
        }
        assert!(matches!(MappingStore::from_jsonl(""), Err(StoreError::Malformed { line: 1, .. })));
    }

    #[test]
    fn query_predicates() {
        let mut s = store3();
        s.records.get_mut("a1").unwrap().is_jni = true;
        s.upsert_mapping("a1", &set(&["CAMERA"]), Provenance::Annotation).unwrap();
        s.upsert_mapping("b2", &set(&["INTERNET"]), Provenance::Analyst).unwrap();
        s.upsert_mapping("c3", &set(&["INTERNET"]), Provenance::Detector).unwrap();
        let ids = |f: &QueryFilter| s.query(f).iter().map(|m| m.api_id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&QueryFilter { package_prefix: Some("android".into()), ..Default::default() }), ["a1"]);
        assert_eq!(ids(&QueryFilter { permission: Some(perm("INTERNET")), ..Default::default() }), ["b2", "c3"]);
        assert!(ids(&QueryFilter { permission: Some(perm("NOPE_NOT_HERE")), ..Default::default() }).is_empty());
        assert_eq!(ids(&QueryFilter { provenance: Some(Provenance::Detector), ..Default::default() }), ["c3"]);
        assert_eq!(ids(&QueryFilter { jni_only: true, ..Default::default() }), ["a1"]);
    }
}
