//! Baseline overlap, per-package distribution and cross-version diffs.
//!
//! Cross-version identity is the signature key with simple parameter type
//! names, so the same method matches across SDK versions and across tools
//! that print types differently.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::SignatureKey;
use crate::store::{package_matches, MappingStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OverlapReport {
    pub our_total: usize,
    pub baseline_total: usize,
    pub same: usize,
    pub ours_only: usize,
    pub baseline_only: usize,
}

/// Exact set accounting between two key sets.
pub fn overlap_counts<K: Ord>(ours: &BTreeSet<K>, baseline: &BTreeSet<K>) -> OverlapReport {
    let same = ours.intersection(baseline).count();
    OverlapReport {
        our_total: ours.len(),
        baseline_total: baseline.len(),
        same,
        ours_only: ours.len() - same,
        baseline_only: baseline.len() - same,
    }
}

/// Which of our mappings take part in an overlap comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OverlapScope {
    #[default]
    All,
    /// Only cross-language (JNI) records.
    JniOnly,
}

/// Keys of permission-required mappings, simplified.
pub fn mapped_keys(store: &MappingStore, scope: OverlapScope) -> BTreeSet<SignatureKey> {
    store
        .mappings
        .values()
        .filter(|m| m.is_permission_required())
        .filter_map(|m| store.records.get(&m.api_id))
        .filter(|r| scope == OverlapScope::All || r.is_jni)
        .map(|r| r.key().simplified())
        .collect()
}

pub fn overlap_report(store: &MappingStore, baseline: &BTreeSet<SignatureKey>, scope: OverlapScope) -> OverlapReport {
    let baseline: BTreeSet<SignatureKey> = baseline.iter().map(SignatureKey::simplified).collect();
    overlap_counts(&mapped_keys(store, scope), &baseline)
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PackageDistribution {
    pub per_package: BTreeMap<String, usize>,
    pub total: usize,
}

/// Permission-required mappings grouped by the top package of their class.
pub fn distribution(store: &MappingStore) -> PackageDistribution {
    let mut dist = PackageDistribution::default();
    for m in store.mappings.values().filter(|m| m.is_permission_required()) {
        if let Some(r) = store.records.get(&m.api_id) {
            *dist.per_package.entry(r.top_package.clone()).or_default() += 1;
            dist.total += 1;
        }
    }
    dist
}

/// Permission-required mappings whose class lies under `prefix`. Accepts
/// dotted (`com.android.server`) or slash (`/com/android/server`) forms.
pub fn package_count(store: &MappingStore, prefix: &str) -> usize {
    let dotted = prefix.trim_matches('/').replace('/', ".");
    store
        .mappings
        .values()
        .filter(|m| m.is_permission_required())
        .filter_map(|m| store.records.get(&m.api_id))
        .filter(|r| package_matches(&r.signature.fq_class, &dotted))
        .count()
}

/// Mapping-count change under `prefix` from `a` to `b`.
pub fn prefix_delta(a: &MappingStore, b: &MappingStore, prefix: &str) -> i64 {
    package_count(b, prefix) as i64 - package_count(a, prefix) as i64
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VersionDiff {
    pub from_corpus: String,
    pub to_corpus: String,
    pub from_sdk: u32,
    pub to_sdk: u32,
    pub added: BTreeSet<SignatureKey>,
    pub removed: BTreeSet<SignatureKey>,
    pub retained: BTreeSet<SignatureKey>,
    /// Per top package: mapping count in `b` minus count in `a`.
    pub package_deltas: BTreeMap<String, i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

pub fn diff_versions(a: &MappingStore, b: &MappingStore) -> VersionDiff {
    let ka = mapped_keys(a, OverlapScope::All);
    let kb = mapped_keys(b, OverlapScope::All);
    let (da, db) = (distribution(a), distribution(b));
    let mut package_deltas = BTreeMap::new();
    for pkg in da.per_package.keys().chain(db.per_package.keys()) {
        let before = da.per_package.get(pkg).copied().unwrap_or(0) as i64;
        let after = db.per_package.get(pkg).copied().unwrap_or(0) as i64;
        package_deltas.insert(pkg.clone(), after - before);
    }
    let warning = (a.sdk_version >= b.sdk_version && a.corpus_id != b.corpus_id).then(|| {
        format!("comparing sdk {} to sdk {}: versions are not ascending, diff is keyed on signatures only", a.sdk_version, b.sdk_version)
    });
    VersionDiff {
        from_corpus: a.corpus_id.clone(),
        to_corpus: b.corpus_id.clone(),
        from_sdk: a.sdk_version,
        to_sdk: b.sdk_version,
        added: kb.difference(&ka).cloned().collect(),
        removed: ka.difference(&kb).cloned().collect(),
        retained: ka.intersection(&kb).cloned().collect(),
        package_deltas,
        warning,
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("baseline line {line}: {message}")]
pub struct BaselineError {
    pub line: usize,
    pub message: String,
}

/// One `fq_class#name(params)` per line; blank lines and `#` comments skipped.
pub fn parse_baseline(text: &str) -> Result<BTreeSet<SignatureKey>, BaselineError> {
    let mut out = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') && !line.contains('(') {
            continue;
        }
        let key = line.parse::<SignatureKey>().map_err(|e| BaselineError { line: i + 1, message: e.to_string() })?;
        out.insert(key);
    }
    Ok(out)
}

static SOOT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"<\s*([\w.$]+)\s*:\s*[\w.$\[\]<>]+\s+([\w$<>]+)\s*\(([^)]*)\)\s*>").unwrap());
static DOTTED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*([\w$]+(?:\.[\w$]+)+)\.([\w$]+)\s*\(([^)]*)\)").unwrap());
static GENERIC: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[^<>]*>").unwrap());

fn normalize_params(params: &str) -> Vec<String> {
    let mut p = params.to_string();
    while GENERIC.is_match(&p) {
        p = GENERIC.replace_all(&p, "").into_owned();
    }
    p.split(',').map(|t| t.trim().replace("...", "[]").replace(' ', "")).filter(|t| !t.is_empty()).collect()
}

/// Converts one line of a published mapping file into a signature key.
/// Understands Soot-style `<cls: ret name(params)>` (anywhere in the line),
/// dotted `pkg.Cls.name(params)`, and the native key form. Other lines
/// (headers, permission lists, caller counts) give `None`.
pub fn normalize_baseline_line(line: &str) -> Option<SignatureKey> {
    let line = line.trim();
    if let Some(c) = SOOT.captures(line) {
        let name = &c[2];
        if name.starts_with('<') {
            return None;
        }
        return Some(SignatureKey { fq_class: c[1].to_string(), name: name.to_string(), param_types: normalize_params(&c[3]) });
    }
    if line.contains('#') {
        return line.split_whitespace().next()?.parse().ok().map(|k: SignatureKey| SignatureKey {
            param_types: normalize_params(&k.param_types.join(",")),
            ..k
        });
    }
    let c = DOTTED.captures(line)?;
    Some(SignatureKey { fq_class: c[1].to_string(), name: c[2].to_string(), param_types: normalize_params(&c[3]) })
}

/// Normalizes a whole file into sorted, de-duplicated baseline text.
pub fn normalize_baseline(text: &str) -> String {
    let keys: BTreeSet<SignatureKey> = text.lines().filter_map(normalize_baseline_line).collect();
    keys.iter().map(|k| format!("{k}\n")).collect()
}

impl OverlapReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in [
            ("our_total", self.our_total),
            ("baseline_total", self.baseline_total),
            ("same", self.same),
            ("ours_only", self.ours_only),
            ("baseline_only", self.baseline_only),
        ] {
            let _ = writeln!(out, "{k:<16}{v:>10}");
        }
        out
    }
}

impl PackageDistribution {
    pub fn to_text(&self) -> String {
        let width = self.per_package.keys().map(String::len).max().unwrap_or(0).max(7);
        let mut out = format!("{:<width$}  {:>10}\n", "package", "mappings");
        for (pkg, n) in &self.per_package {
            let _ = writeln!(out, "{pkg:<width$}  {n:>10}");
        }
        let _ = writeln!(out, "{:<width$}  {:>10}", "total", self.total);
        out
    }
}

impl VersionDiff {
    pub fn to_text(&self) -> String {
        let mut out = format!("{} (sdk {}) -> {} (sdk {})\n", self.from_corpus, self.from_sdk, self.to_corpus, self.to_sdk);
        if let Some(w) = &self.warning {
            let _ = writeln!(out, "warning: {w}");
        }
        for (k, v) in [("added", self.added.len()), ("removed", self.removed.len()), ("retained", self.retained.len())] {
            let _ = writeln!(out, "{k:<10}{v:>10}");
        }
        if !self.package_deltas.is_empty() {
            let width = self.package_deltas.keys().map(String::len).max().unwrap_or(0).max(7);
            let _ = writeln!(out, "\n{:<width$}  {:>8}", "package", "delta");
            for (pkg, d) in &self.package_deltas {
                let _ = writeln!(out, "{pkg:<width$}  {d:>+8}");
            }
        }
        for (label, set) in [("added", &self.added), ("removed", &self.removed)] {
            for k in set {
                let _ = writeln!(out, "{label:<8}  {k}");
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn disjoint_sets_share_nothing() {
        let a: BTreeSet<u32> = (0..5).collect();
        let b: BTreeSet<u32> = (5..9).collect();
        let r = overlap_counts(&a, &b);
        assert_eq!((r.same, r.ours_only, r.baseline_only), (0, 5, 4));
    }

    #[test]
    fn soot_and_dotted_lines() {
        let k = normalize_baseline_line("<android.net.wifi.WifiManager: boolean setWifiEnabled(boolean)> (1)").unwrap();
        assert_eq!(k.to_string(), "android.net.wifi.WifiManager#setWifiEnabled(boolean)");
        let k = normalize_baseline_line("android.location.LocationManager.getLastKnownLocation(java.lang.String)").unwrap();
        assert_eq!(k.to_string(), "android.location.LocationManager#getLastKnownLocation(java.lang.String)");
        let k = normalize_baseline_line("<a.B: void f(java.util.List<java.lang.String>,int)>").unwrap();
        assert_eq!(k.param_types, ["java.util.List", "int"]);
        assert!(normalize_baseline_line("Permission:android.permission.CAMERA").is_none());
        assert!(normalize_baseline_line("12 Callers:").is_none());
        assert!(normalize_baseline_line("<a.B: void <init>()>").is_none());
    }

    #[test]
    fn baseline_errors_name_the_line() {
        assert_eq!(parse_baseline("a.B#f()\n\nnot-a-key\n").unwrap_err().line, 3);
        assert_eq!(parse_baseline("# header\na.B#f()\na.B#f()\n").unwrap().len(), 1);
    }

    proptest! {
        #[test]
        fn overlap_partition(a in proptest::collection::btree_set(0u16..300, 0..200), b in proptest::collection::btree_set(0u16..300, 0..200)) {
            let r = overlap_counts(&a, &b);
            prop_assert_eq!(r.same + r.ours_only, r.our_total);
            prop_assert_eq!(r.same + r.baseline_only, r.baseline_total);
            prop_assert_eq!(r.same, a.iter().filter(|x| b.contains(x)).count());
        }
    }
}
