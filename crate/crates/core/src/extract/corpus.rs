use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::{debug, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use super::annotations::extract_declared_permissions;
use super::keyword::{default_keywords, keyword_scan_with};
use super::parser::parse_file_methods;
use super::record::{api_id, top_package, ApiRecord, ExtractionSource, Location, MethodSignature, Modifier};

pub const DEFAULT_CORE_JNI_PATH: &str = "frameworks/base/core/java/";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus root {path} is not a readable directory")]
    UnreadableRoot { path: PathBuf },
    #[error("sdk_version must be positive")]
    InvalidVersion,
    #[error("corpus_id must not be empty")]
    EmptyId,
    #[error("cannot read corpus manifest {path}: {source}")]
    Manifest { path: PathBuf, source: std::io::Error },
    #[error("malformed corpus manifest {path}: {source}")]
    ManifestFormat { path: PathBuf, source: serde_json::Error },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub corpus_id: String,
    pub sdk_version: u32,
    pub root: PathBuf,
    #[serde(default = "default_core_path")]
    pub core_jni_path: String,
}

fn default_core_path() -> String {
    DEFAULT_CORE_JNI_PATH.to_string()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceCorpus {
    pub root_path: PathBuf,
    pub sdk_version: u32,
    pub corpus_id: String,
    pub core_jni_path: String,
}

impl SourceCorpus {
    pub fn new(root_path: impl Into<PathBuf>, sdk_version: u32, corpus_id: impl Into<String>) -> Result<Self, CorpusError> {
        let corpus = Self {
            root_path: root_path.into(),
            sdk_version,
            corpus_id: corpus_id.into(),
            core_jni_path: default_core_path(),
        };
        corpus.validate()?;
        Ok(corpus)
    }

    /// Loads `corpus.json`; a relative `root` resolves against the manifest's directory.
    pub fn from_manifest(path: &Path) -> Result<Self, CorpusError> {
        let text = fs::read_to_string(path).map_err(|source| CorpusError::Manifest { path: path.to_path_buf(), source })?;
        let manifest: CorpusManifest = serde_json::from_str(&text)
            .map_err(|source| CorpusError::ManifestFormat { path: path.to_path_buf(), source })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let root = if manifest.root.is_absolute() { manifest.root.clone() } else { base.join(&manifest.root) };
        let corpus = Self {
            root_path: root,
            sdk_version: manifest.sdk_version,
            corpus_id: manifest.corpus_id,
            core_jni_path: manifest.core_jni_path,
        };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn with_core_jni_path(mut self, path: impl Into<String>) -> Self {
        self.core_jni_path = path.into();
        self
    }

    fn validate(&self) -> Result<(), CorpusError> {
        if self.sdk_version == 0 {
            return Err(CorpusError::InvalidVersion);
        }
        if self.corpus_id.trim().is_empty() {
            return Err(CorpusError::EmptyId);
        }
        if !self.root_path.is_dir() || fs::read_dir(&self.root_path).is_err() {
            return Err(CorpusError::UnreadableRoot { path: self.root_path.clone() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScanWarning {
    pub path: String,
    pub line: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ScanOptions {
    pub keywords: Vec<String>,
}

impl ScanOptions {
    pub fn new() -> Self {
        Self { keywords: default_keywords() }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ScanReport {
    pub records: Vec<ApiRecord>,
    pub warnings: Vec<ScanWarning>,
    pub files_scanned: usize,
    pub files_failed_parse: usize,
}

/// True iff the method is `native` and its file sits under the core sub-path
/// (matched against the corpus-relative path).
pub fn detect_jni(record: &ApiRecord, core_path: &str) -> bool {
    record.signature.modifiers.contains(&Modifier::Native) && under_core_path(&record.location.path, core_path)
}

fn under_core_path(rel_path: &str, core_path: &str) -> bool {
    let core = core_path.trim_matches('/');
    if core.is_empty() {
        return true;
    }
    let rooted = format!("/{}", rel_path.trim_start_matches('/'));
    rooted.contains(&format!("/{core}/"))
}

struct Candidate {
    signature: MethodSignature,
    location: Location,
    doc_comment: String,
    body_text: String,
    annotations: Vec<String>,
    source: ExtractionSource,
}

struct FileResult {
    candidates: Vec<Candidate>,
    warnings: Vec<ScanWarning>,
    parse_failed: bool,
}

fn scan_file(rel: &str, text: &str, options: &ScanOptions) -> FileResult {
    let mut warnings = Vec::new();
    let mut candidates = Vec::new();
    let keyword_hits = keyword_scan_with(text, &options.keywords);
    let parse_failed = match parse_file_methods(text) {
        Ok(parsed) => {
            let spans: Vec<(usize, usize)> = parsed.methods.iter().map(|m| m.span).collect();
            for m in parsed.methods {
                candidates.push(Candidate {
                    signature: m.signature,
                    location: Location { path: rel.to_string(), line: m.line },
                    doc_comment: m.doc_comment,
                    body_text: m.body_text,
                    annotations: m.annotations,
                    source: ExtractionSource::Parser,
                });
            }
            let uncovered = keyword_hits
                .into_iter()
                .filter(|k| !spans.iter().any(|(a, b)| (*a..=*b).contains(&k.line)));
            for k in uncovered {
                debug!("{rel}:{}: keyword fallback found {}", k.line, k.signature.name);
                candidates.push(keyword_candidate(rel, k));
            }
            false
        }
        Err(failure) => {
            warn!("{rel}: parse failed ({failure}); using keyword fallback");
            warnings.push(ScanWarning {
                path: rel.to_string(),
                line: Some(failure.line),
                message: format!("parse failed: {}", failure.message),
            });
            candidates.extend(keyword_hits.into_iter().map(|k| keyword_candidate(rel, k)));
            true
        }
    };
    FileResult { candidates, warnings, parse_failed }
}

fn keyword_candidate(rel: &str, k: super::keyword::KeywordMatch) -> Candidate {
    Candidate {
        signature: k.signature,
        location: Location { path: rel.to_string(), line: k.line },
        doc_comment: k.doc_comment,
        body_text: String::new(),
        annotations: k.annotations,
        source: ExtractionSource::Keyword,
    }
}

fn java_files(root: &Path) -> Vec<(String, PathBuf)> {
    let mut files: Vec<(String, PathBuf)> = WalkDir::new(root)
        .follow_links(false)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file() && e.path().extension().is_some_and(|x| x == "java"))
        .filter_map(|e| {
            let rel = e.path().strip_prefix(root).ok()?;
            let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            Some((rel, e.path().to_path_buf()))
        })
        .collect();
    files.sort();
    files
}

/// Extracts one record per distinct `(fq_class, name, param_types)`, sorted by
/// `(path, line)`. Parser results win over keyword matches for the same method.
pub fn scan_corpus(corpus: &SourceCorpus, options: &ScanOptions) -> Result<ScanReport, CorpusError> {
    if fs::read_dir(&corpus.root_path).is_err() {
        return Err(CorpusError::UnreadableRoot { path: corpus.root_path.clone() });
    }
    let files = java_files(&corpus.root_path);
    if files.is_empty() {
        warn!("{}: no .java files under corpus root", corpus.root_path.display());
    }

    let results: Vec<Result<FileResult, ScanWarning>> = files
        .par_iter()
        .map(|(rel, path)| {
            let bytes = fs::read(path).map_err(|e| ScanWarning { path: rel.clone(), line: None, message: format!("unreadable: {e}") })?;
            let text = String::from_utf8(bytes)
                .map_err(|_| ScanWarning { path: rel.clone(), line: None, message: "not valid UTF-8".into() })?;
            Ok(scan_file(rel, &text, options))
        })
        .collect();

    let mut report = ScanReport { files_scanned: files.len(), ..Default::default() };
    let mut candidates = Vec::new();
    for result in results {
        match result {
            Ok(file) => {
                report.files_failed_parse += usize::from(file.parse_failed);
                report.warnings.extend(file.warnings);
                candidates.extend(file.candidates);
            }
            Err(w) => {
                warn!("{}: skipped ({})", w.path, w.message);
                report.warnings.push(w);
            }
        }
    }

    // parser before keyword, then earliest location
    candidates.sort_by(|a, b| (a.source, &a.location).cmp(&(b.source, &b.location)));
    let mut chosen: BTreeMap<(String, String, Vec<String>), Candidate> = BTreeMap::new();
    for c in candidates {
        let key = (c.signature.fq_class.clone(), c.signature.name.clone(), c.signature.param_types.clone());
        chosen.entry(key).or_insert(c);
    }

    let mut records: Vec<ApiRecord> = chosen
        .into_values()
        .map(|c| {
            let declared = extract_declared_permissions(&c.doc_comment, &c.annotations);
            for w in &declared.warnings {
                report.warnings.push(ScanWarning {
                    path: c.location.path.clone(),
                    line: Some(c.location.line),
                    message: format!("{}: {}", w.reason, w.annotation),
                });
            }
            let deprecated = c.annotations.iter().any(|a| {
                let name = a.split('(').next().unwrap_or_default().trim();
                name == "@Deprecated" || name == "@java.lang.Deprecated"
            }) || c.doc_comment.contains("@deprecated");
            let mut record = ApiRecord {
                api_id: api_id(&corpus.corpus_id, &c.signature.fq_class, &c.signature.name, &c.signature.param_types),
                top_package: top_package(&c.signature.fq_class).to_string(),
                signature: c.signature,
                location: c.location,
                api_level: corpus.sdk_version,
                deprecated,
                doc_comment: c.doc_comment,
                body_text: c.body_text,
                declared_permissions: declared.permissions,
                is_jni: false,
                extraction_source: c.source,
            };
            record.is_jni = detect_jni(&record, &corpus.core_jni_path);
            record
        })
        .collect();
    records.sort_by(|a, b| (&a.location, &a.api_id).cmp(&(&b.location, &b.api_id)));
    report.warnings.sort_by(|a, b| (&a.path, a.line, &a.message).cmp(&(&b.path, b.line, &b.message)));
    report.records = records;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn record(path: &str, modifiers: &[Modifier]) -> ApiRecord {
        ApiRecord {
            api_id: "x".into(),
            signature: MethodSignature {
                fq_class: "android.os.Binder".into(),
                name: "f".into(),
                param_types: vec![],
                return_type: "void".into(),
                modifiers: modifiers.iter().copied().collect::<BTreeSet<_>>(),
            },
            location: Location { path: path.into(), line: 1 },
            top_package: "android".into(),
            api_level: 10,
            deprecated: false,
            doc_comment: String::new(),
            body_text: String::new(),
            declared_permissions: Default::default(),
            is_jni: false,
            extraction_source: ExtractionSource::Parser,
        }
    }

    #[test]
    fn jni_needs_native_and_core_path() {
        let core = DEFAULT_CORE_JNI_PATH;
        assert!(detect_jni(&record("frameworks/base/core/java/android/os/Binder.java", &[Modifier::Native]), core));
        assert!(!detect_jni(&record("frameworks/base/services/Binder.java", &[Modifier::Native]), core));
        assert!(!detect_jni(&record("frameworks/base/core/java/android/os/Binder.java", &[Modifier::Public]), core));
    }

    #[test]
    fn empty_directory_scans_to_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = SourceCorpus::new(dir.path(), 7, "empty").unwrap();
        let report = scan_corpus(&corpus, &ScanOptions::new()).unwrap();
        assert!(report.records.is_empty());
    }

    #[test]
    fn missing_root_is_a_corpus_error() {
        assert!(matches!(
            SourceCorpus::new("/definitely/not/here", 7, "x"),
            Err(CorpusError::UnreadableRoot { .. })
        ));
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(SourceCorpus::new(dir.path(), 0, "x"), Err(CorpusError::InvalidVersion)));
    }

    #[test]
    fn non_utf8_files_are_skipped_not_fatal() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("Bad.java"), [0xff, 0xfe, 0x00, 0x80]).unwrap();
        fs::write(dir.path().join("Good.java"), "class Good { void f() {} }").unwrap();
        let corpus = SourceCorpus::new(dir.path(), 7, "mixed").unwrap();
        let report = scan_corpus(&corpus, &ScanOptions::new()).unwrap();
        assert_eq!(report.records.len(), 1);
        assert_eq!(report.warnings.len(), 1);
        assert_eq!(report.warnings[0].path, "Bad.java");
    }

    #[test]
    fn parser_beats_keyword_for_the_same_method() {
        let dir = tempfile::tempdir().unwrap();
        // the same method appears in a clean file and in a broken copy
        fs::write(dir.path().join("A.java"), "package p;\nclass A {\n  public void getX() {}\n}\n").unwrap();
        fs::write(dir.path().join("B.java"), "package p;\nclass A {\n  public void getX() {\n").unwrap();
        let corpus = SourceCorpus::new(dir.path(), 7, "dup").unwrap();
        let report = scan_corpus(&corpus, &ScanOptions::new()).unwrap();
        assert_eq!(report.records.len(), 1);
        assert_eq!(report.records[0].extraction_source, ExtractionSource::Parser);
        assert_eq!(report.records[0].location.path, "A.java");
    }

    #[test]
    fn anonymous_class_methods_in_parsed_files_fall_back_to_keywords() {
        let dir = tempfile::tempdir().unwrap();
        let src = "package p;\nclass A {\n  Runnable r = new Runnable() {\n    public void run() {}\n  };\n  public void own() {}\n}\n";
        fs::write(dir.path().join("A.java"), src).unwrap();
        let corpus = SourceCorpus::new(dir.path(), 7, "anon").unwrap();
        let report = scan_corpus(&corpus, &ScanOptions::new()).unwrap();
        let names: Vec<_> = report.records.iter().map(|r| (r.signature.name.as_str(), r.extraction_source)).collect();
        assert_eq!(names, [("run", ExtractionSource::Keyword), ("own", ExtractionSource::Parser)]);
    }
}
