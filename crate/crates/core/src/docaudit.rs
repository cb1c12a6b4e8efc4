//! Comparison of discovered mappings against source annotations and
//! reference-documentation dumps.
//!
//! HTML pages are read loosely: the first `<h1>` names the class, each
//! `<h3 id="name(types)">` opens a method entry that runs to the next `<h3>`.
//! Inside an entry, a block whose text starts with `RequiresPermission` is the
//! standardized marker; permission tokens elsewhere in the entry are prose.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::LazyLock;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::permission::{scan_permission_tokens, scan_prose_mentions, PermissionSet};
use crate::store::MappingStore;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DocKey {
    pub fq_class: String,
    pub name: String,
    pub arity: usize,
}

impl std::fmt::Display for DocKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}#{}/{}", self.fq_class, self.name, self.arity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeclarationKind {
    Standardized,
    NonStandardized,
    Absent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocRecord {
    pub signature_key: DocKey,
    pub declaration_kind: DeclarationKind,
    pub permissions_mentioned: PermissionSet,
    pub source_page: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocWarning {
    pub page: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DocIngest {
    pub records: Vec<DocRecord>,
    pub warnings: Vec<DocWarning>,
}

static H1: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?is)<h1[^>]*>(.*?)</h1>").unwrap());
static H3: LazyLock<Regex> = LazyLock::new(|| Regex::new(r#"(?is)<h3[^>]*\bid\s*=\s*"([^"]*)"[^>]*>"#).unwrap());
static TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)<[^>]*>").unwrap());
/// A text node opening with the marker, up to the end of its block element.
static MARKER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?is)>\s*RequiresPermission\b(.*?)(?:</(?:div|p|dd|dl|pre|li|td)>|<h\d|$)").unwrap());
static ENTRY_ID: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*([A-Za-z_$][\w$]*)\s*\(([^)]*)\)\s*$").unwrap());

fn strip_tags(html: &str) -> String {
    let text = TAG.replace_all(html, " ");
    text.replace("&nbsp;", " ").replace("&lt;", "<").replace("&gt;", ">").replace("&quot;", "\"").replace("&amp;", "&")
}

fn arity_of(params: &str) -> usize {
    let params = params.trim();
    if params.is_empty() {
        return 0;
    }
    let mut depth = 0i32;
    let mut n = 1;
    for c in params.chars() {
        match c {
            '<' => depth += 1,
            '>' => depth -= 1,
            ',' if depth == 0 => n += 1,
            _ => {}
        }
    }
    n
}

/// Classifies one method entry from its HTML.
pub fn classify_entry(entry_html: &str) -> (DeclarationKind, PermissionSet) {
    let mut marker = PermissionSet::new();
    let mut has_marker = false;
    let mut prose_html = entry_html.to_string();
    for cap in MARKER.captures_iter(entry_html) {
        has_marker = true;
        let text = strip_tags(&cap[1]);
        marker.extend(scan_permission_tokens(&text));
        marker.extend(
            text.trim_start_matches([':', ' '])
                .split([',', ' ', '\n', '\t'])
                .filter(|t| !t.is_empty() && t.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_'))
                .filter_map(|t| crate::permission::canonicalize_permission(t).ok()),
        );
        prose_html = prose_html.replacen(&cap[0], ">", 1);
    }
    if has_marker && !marker.is_empty() {
        return (DeclarationKind::Standardized, marker);
    }
    let prose = scan_prose_mentions(&strip_tags(&prose_html));
    if prose.is_empty() {
        (DeclarationKind::Absent, prose)
    } else {
        (DeclarationKind::NonStandardized, prose)
    }
}

pub fn parse_html_page(html: &str, page: &str) -> Result<Vec<DocRecord>, String> {
    let h1 = H1.captures(html).ok_or("no <h1> class title")?;
    let fq_class = strip_tags(&h1[1]).split_whitespace().collect::<Vec<_>>().join("");
    if fq_class.is_empty() {
        return Err("empty class title".into());
    }
    let heads: Vec<_> = H3.captures_iter(html).collect();
    let mut out = Vec::new();
    for (i, cap) in heads.iter().enumerate() {
        let whole = cap.get(0).unwrap();
        let end = heads.get(i + 1).map_or(html.len(), |n| n.get(0).unwrap().start());
        let id = &cap[1];
        let Some(m) = ENTRY_ID.captures(id) else {
            continue;
        };
        let (kind, perms) = classify_entry(&html[whole.end()..end]);
        out.push(DocRecord {
            signature_key: DocKey { fq_class: fq_class.clone(), name: m[1].to_string(), arity: arity_of(&m[2]) },
            declaration_kind: kind,
            permissions_mentioned: perms,
            source_page: page.to_string(),
        });
    }
    Ok(out)
}

fn check_record(r: &DocRecord) -> Result<(), String> {
    match (r.declaration_kind, r.permissions_mentioned.is_empty()) {
        (DeclarationKind::Standardized, true) => Err(format!("{}: standardized entry without permissions", r.signature_key)),
        (DeclarationKind::Absent, false) => Err(format!("{}: absent entry with permissions", r.signature_key)),
        _ => Ok(()),
    }
}

fn parse_json_page(text: &str) -> Result<Vec<DocRecord>, String> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let records: Vec<DocRecord> = if value.is_array() {
        serde_json::from_value(value).map_err(|e| e.to_string())?
    } else {
        vec![serde_json::from_value(value).map_err(|e| e.to_string())?]
    };
    records.iter().try_for_each(check_record)?;
    Ok(records)
}

/// Reads every `.html` and `.docrec.json` file under `dir`. Pages that cannot
/// be read or understood are skipped with a warning.
pub fn ingest_doc_dump(dir: &Path) -> std::io::Result<DocIngest> {
    let mut paths: Vec<_> = walkdir::WalkDir::new(dir)
        .sort_by_file_name()
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .map(|e| e.into_path())
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            name.ends_with(".html") || name.ends_with(".htm") || name.ends_with(".docrec.json")
        })
        .collect();
    if !dir.is_dir() {
        return Err(std::io::Error::new(std::io::ErrorKind::NotFound, format!("{} is not a directory", dir.display())));
    }
    paths.sort();
    let parsed: Vec<(String, Result<Vec<DocRecord>, String>)> = paths
        .par_iter()
        .map(|p| {
            let page = p.strip_prefix(dir).unwrap_or(p).to_string_lossy().replace('\\', "/");
            let result = std::fs::read_to_string(p).map_err(|e| e.to_string()).and_then(|text| {
                if page.ends_with(".docrec.json") {
                    parse_json_page(&text)
                } else {
                    parse_html_page(&text, &page)
                }
            });
            (page, result)
        })
        .collect();
    let mut ingest = DocIngest::default();
    for (page, result) in parsed {
        match result {
            Ok(records) => ingest.records.extend(records),
            Err(message) => {
                log::warn!("skipping doc page {page}: {message}");
                ingest.warnings.push(DocWarning { page, message });
            }
        }
    }
    ingest.records.sort_by(|a, b| (&a.signature_key, &a.source_page).cmp(&(&b.signature_key, &b.source_page)));
    Ok(ingest)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapStatus {
    AnnotatedAndDiscovered,
    AnnotatedOnly,
    NewDiscovery,
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapItem {
    /// An api_id, or `doc:<key>` for documentation entries without a record.
    pub id: String,
    pub signature: String,
    pub status: GapStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonStandardizedItem {
    pub id: String,
    pub signature: String,
    pub permissions: PermissionSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapReport {
    pub kind: String,
    pub corpus_id: String,
    pub sdk_version: u32,
    pub discovered_total: usize,
    pub annotated_total: usize,
    pub annotated_and_discovered: usize,
    pub annotated_only: usize,
    pub new_discoveries: usize,
    pub ambiguous: usize,
    pub itemized: Vec<GapItem>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub non_standardized: Vec<NonStandardizedItem>,
}

/// Set accounting over string ids. `signatures` labels ids for itemization.
pub fn gap_accounting(
    kind: &str,
    store: &MappingStore,
    discovered: &BTreeSet<String>,
    annotated: &BTreeSet<String>,
    signatures: &BTreeMap<String, String>,
) -> GapReport {
    let label = |id: &String| signatures.get(id).cloned().unwrap_or_default();
    let mut itemized = Vec::new();
    for id in discovered.union(annotated) {
        let status = match (discovered.contains(id), annotated.contains(id)) {
            (true, true) => GapStatus::AnnotatedAndDiscovered,
            (false, true) => GapStatus::AnnotatedOnly,
            _ => GapStatus::NewDiscovery,
        };
        itemized.push(GapItem { id: id.clone(), signature: label(id), status });
    }
    let both = discovered.intersection(annotated).count();
    GapReport {
        kind: kind.into(),
        corpus_id: store.corpus_id.clone(),
        sdk_version: store.sdk_version,
        discovered_total: discovered.len(),
        annotated_total: annotated.len(),
        annotated_and_discovered: both,
        annotated_only: annotated.len() - both,
        new_discoveries: discovered.difference(annotated).count(),
        ambiguous: 0,
        itemized,
        non_standardized: Vec::new(),
    }
}

fn discovered_ids(store: &MappingStore) -> BTreeSet<String> {
    store.mappings.values().filter(|m| m.is_permission_required()).map(|m| m.api_id.clone()).collect()
}

fn signature_labels(store: &MappingStore) -> BTreeMap<String, String> {
    store.records.values().map(|r| (r.api_id.clone(), r.key().to_string())).collect()
}

/// Discovered mappings against records carrying declared permissions.
pub fn annotation_gap(store: &MappingStore) -> GapReport {
    let annotated = store.records.values().filter(|r| !r.declared_permissions.is_empty()).map(|r| r.api_id.clone()).collect();
    gap_accounting("annotation", store, &discovered_ids(store), &annotated, &signature_labels(store))
}

/// Discovered mappings against standardized documentation entries, joined on
/// (class, name, arity). Entries matching several records are ambiguous and
/// left out of the counts.
pub fn doc_gap(store: &MappingStore, docs: &[DocRecord]) -> GapReport {
    let mut by_key: BTreeMap<DocKey, Vec<&str>> = BTreeMap::new();
    for r in store.records.values() {
        let key = DocKey { fq_class: r.signature.fq_class.clone(), name: r.signature.name.clone(), arity: r.signature.param_types.len() };
        by_key.entry(key).or_default().push(&r.api_id);
    }
    let mut labels = signature_labels(store);
    let mut annotated = BTreeSet::new();
    let mut ambiguous = BTreeMap::new();
    let mut non_standardized = BTreeMap::new();
    for doc in docs {
        let joined = by_key.get(&doc.signature_key).map(Vec::as_slice).unwrap_or_default();
        let id = match joined {
            [] => {
                let id = format!("doc:{}", doc.signature_key);
                labels.insert(id.clone(), doc.signature_key.to_string());
                id
            }
            [one] => one.to_string(),
            _ => {
                if doc.declaration_kind != DeclarationKind::Absent {
                    ambiguous.insert(doc.signature_key.to_string(), doc.signature_key.to_string());
                }
                continue;
            }
        };
        match doc.declaration_kind {
            DeclarationKind::Standardized => {
                annotated.insert(id);
            }
            DeclarationKind::NonStandardized => {
                let label = labels.get(&id).cloned().unwrap_or_default();
                non_standardized.insert(id.clone(), NonStandardizedItem { id, signature: label, permissions: doc.permissions_mentioned.clone() });
            }
            DeclarationKind::Absent => {}
        }
    }
    let mut report = gap_accounting("doc", store, &discovered_ids(store), &annotated, &labels);
    report.ambiguous = ambiguous.len();
    for key in ambiguous.into_keys() {
        report.itemized.push(GapItem { id: format!("doc:{key}"), signature: key, status: GapStatus::Ambiguous });
    }
    report.non_standardized = non_standardized.into_values().collect();
    report
}

impl GapReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let rows = [
            ("report", format!("{}-gap", self.kind)),
            ("corpus", self.corpus_id.clone()),
            ("sdk_version", self.sdk_version.to_string()),
            ("discovered_total", self.discovered_total.to_string()),
            ("annotated_total", self.annotated_total.to_string()),
            ("annotated_and_discovered", self.annotated_and_discovered.to_string()),
            ("annotated_only", self.annotated_only.to_string()),
            ("new_discoveries", self.new_discoveries.to_string()),
            ("ambiguous", self.ambiguous.to_string()),
        ];
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<26}{v:>10}");
        }
        if !self.itemized.is_empty() {
            let width = self.itemized.iter().map(|i| i.signature.len()).max().unwrap_or(0).max(9);
            let _ = writeln!(out, "\n{:<width$}  status", "signature");
            for item in &self.itemized {
                let status = serde_json::to_value(item.status).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
                let _ = writeln!(out, "{:<width$}  {status}", item.signature);
            }
        }
        if !self.non_standardized.is_empty() {
            let _ = writeln!(out, "\nnon-standardized documentation");
            for item in &self.non_standardized {
                let perms: Vec<&str> = item.permissions.iter().map(|p| p.as_str()).collect();
                let _ = writeln!(out, "{}  {}", item.signature, perms.join(", "));
            }
        }
        out
    }
}
