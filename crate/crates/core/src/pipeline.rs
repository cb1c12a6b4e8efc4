//! End-to-end stages over store files, shared by the command line and the
//! Python bindings.
//!
//! Layout: every `extract` creates `<out>/<corpus_id>-<stamp>/` holding the
//! store `<corpus_id>.pmdb.jsonl`, and rewrites `<out>/latest` with that
//! directory's name. Later stages default to the latest run and write their
//! outputs next to the store.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::ConfigError;
use crate::docaudit::{annotation_gap, doc_gap, ingest_doc_dump};
use crate::evolution::{diff_versions, distribution, overlap_report, parse_baseline, BaselineError, OverlapScope};
use crate::extract::{scan_corpus, CorpusError, ScanOptions, ScanWarning, SourceCorpus};
use crate::llm::{analyze_store, AnalysisError, AnalysisOptions, Demonstration, Provider};
use crate::store::{MappingStore, StoreError, STORE_EXTENSION};
use crate::verifier::{export_device_bundle, verify_store, OracleError, PermissionOracle, SnippetCorpusEntry, SnippetError, TestCase, VerifyOptions, VerifyReport};

pub const LATEST: &str = "latest";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Snippets(#[from] SnippetError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("no run found under {0}; run extract first")]
    NoRun(PathBuf),
    #[error("{0}")]
    Other(String),
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

pub fn store_file_name(corpus_id: &str) -> String {
    format!("{corpus_id}.{STORE_EXTENSION}")
}

/// Creates a fresh run directory and points `latest` at it.
pub fn create_run_dir(out: &Path, corpus_id: &str, stamp: &str) -> Result<PathBuf, PipelineError> {
    fs::create_dir_all(out).map_err(io_at(out))?;
    let mut name = format!("{corpus_id}-{stamp}");
    let mut n = 1;
    while out.join(&name).exists() {
        n += 1;
        name = format!("{corpus_id}-{stamp}-{n}");
    }
    let dir = out.join(&name);
    fs::create_dir(&dir).map_err(io_at(&dir))?;
    let latest = out.join(LATEST);
    fs::write(&latest, format!("{name}\n")).map_err(io_at(&latest))?;
    Ok(dir)
}

pub fn latest_run_dir(out: &Path) -> Result<PathBuf, PipelineError> {
    let pointer = out.join(LATEST);
    let name = fs::read_to_string(&pointer).map_err(|_| PipelineError::NoRun(out.to_path_buf()))?;
    let dir = out.join(name.trim());
    if dir.is_dir() {
        Ok(dir)
    } else {
        Err(PipelineError::NoRun(out.to_path_buf()))
    }
}

/// `explicit` if given, otherwise the single store in the latest run.
pub fn resolve_store(out: &Path, explicit: Option<&Path>) -> Result<PathBuf, PipelineError> {
    if let Some(p) = explicit {
        return if p.is_file() {
            Ok(p.to_path_buf())
        } else {
            Err(PipelineError::Io { path: p.to_path_buf(), source: io::Error::new(io::ErrorKind::NotFound, "store file not found") })
        };
    }
    let dir = latest_run_dir(out)?;
    let suffix = format!(".{STORE_EXTENSION}");
    let mut stores: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(io_at(&dir))?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(&suffix)))
        .collect();
    stores.sort();
    match stores.len() {
        1 => Ok(stores.remove(0)),
        0 => Err(PipelineError::NoRun(out.to_path_buf())),
        _ => Err(PipelineError::Other(format!("several stores in {}; pass one explicitly", dir.display()))),
    }
}

fn sibling(store_path: &Path, corpus_id: &str, suffix: &str) -> PathBuf {
    store_path.with_file_name(format!("{corpus_id}.{suffix}"))
}

fn write(path: &Path, text: &str) -> Result<(), PipelineError> {
    fs::write(path, text).map_err(io_at(path))
}

#[derive(Debug, Clone)]
pub struct ExtractOutcome {
    pub store_path: PathBuf,
    pub covered: usize,
    pub keyword_records: usize,
    pub warnings: Vec<ScanWarning>,
}

pub fn run_extract(corpus: &SourceCorpus, keywords: &[String], out: &Path, stamp: &str) -> Result<ExtractOutcome, PipelineError> {
    let report = scan_corpus(corpus, &ScanOptions { keywords: keywords.to_vec() })?;
    let keyword_records = report.records.iter().filter(|r| r.extraction_source == crate::extract::ExtractionSource::Keyword).count();
    let store = MappingStore::from_records(corpus.corpus_id.clone(), corpus.sdk_version, report.records);
    let dir = create_run_dir(out, &corpus.corpus_id, stamp)?;
    let store_path = dir.join(store_file_name(&corpus.corpus_id));
    store.save(&store_path)?;
    Ok(ExtractOutcome { store_path, covered: store.covered_count(), keyword_records, warnings: report.warnings })
}

#[derive(Debug, Clone)]
pub struct AnalyzeOutcome {
    pub analyzed: usize,
    pub permission_required: usize,
    pub failed: Vec<AnalysisError>,
}

pub fn run_analyze(store_path: &Path, provider: &dyn Provider, demos: &[Demonstration], options: &AnalysisOptions) -> Result<AnalyzeOutcome, PipelineError> {
    let mut store = MappingStore::load(store_path)?;
    let summary = analyze_store(&mut store, provider, demos, options).map_err(|e| PipelineError::Other(e.to_string()))?;
    store.save(store_path)?;
    Ok(AnalyzeOutcome { analyzed: summary.analyzed, permission_required: store.permission_required_count(), failed: summary.failed })
}

pub fn testcases_path(store_path: &Path, corpus_id: &str) -> PathBuf {
    sibling(store_path, corpus_id, "testcases.jsonl")
}

pub fn run_verify(
    store_path: &Path,
    provider: &dyn Provider,
    snippets: &[SnippetCorpusEntry],
    oracle: &PermissionOracle,
    options: &VerifyOptions,
) -> Result<VerifyReport, PipelineError> {
    let mut store = MappingStore::load(store_path)?;
    let report = verify_store(&mut store, provider, snippets, oracle, options).map_err(|e| PipelineError::Other(e.to_string()))?;
    store.save(store_path)?;
    let mut lines = String::new();
    for tc in &report.cases {
        lines.push_str(&serde_json::to_string(tc).expect("test case serializes"));
        lines.push('\n');
    }
    write(&testcases_path(store_path, &store.corpus_id), &lines)?;
    Ok(report)
}

pub fn load_test_cases(path: &Path) -> Result<Vec<TestCase>, PipelineError> {
    let text = fs::read_to_string(path).map_err(io_at(path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| PipelineError::Other(format!("{} line {}: {e}", path.display(), i + 1))))
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct ReportInputs {
    pub against: Option<PathBuf>,
    pub baseline: Option<PathBuf>,
    pub jni_only: bool,
    pub docs: Option<PathBuf>,
}

#[derive(Debug, Clone, Default)]
pub struct ReportOutcome {
    pub files: Vec<PathBuf>,
    pub notices: Vec<String>,
    pub distribution_total: usize,
}

/// Writes the annotation-gap and distribution reports, plus doc-gap,
/// overlap and diff reports when their inputs are supplied.
pub fn run_report(store_path: &Path, inputs: &ReportInputs) -> Result<ReportOutcome, PipelineError> {
    let store = MappingStore::load(store_path)?;
    let id = store.corpus_id.clone();
    let mut outcome = ReportOutcome::default();
    let emit = |suffix: &str, json: String, text: String, outcome: &mut ReportOutcome| -> Result<(), PipelineError> {
        for (ext, body) in [("json", json), ("txt", text)] {
            let path = sibling(store_path, &id, &format!("{suffix}.{ext}"));
            write(&path, &body)?;
            outcome.files.push(path);
        }
        Ok(())
    };
    let ann = annotation_gap(&store);
    emit("anngap", ann.to_json(), ann.to_text(), &mut outcome)?;

    match &inputs.docs {
        Some(dir) => {
            let ingest = ingest_doc_dump(dir).map_err(io_at(dir))?;
            for w in &ingest.warnings {
                outcome.notices.push(format!("skipped doc page {}: {}", w.page, w.message));
            }
            let gap = doc_gap(&store, &ingest.records);
            emit("docgap", gap.to_json(), gap.to_text(), &mut outcome)?;
        }
        None => outcome.notices.push("no doc dump supplied; docgap skipped".into()),
    }

    let dist = distribution(&store);
    outcome.distribution_total = dist.total;
    emit("distribution", pretty(&dist), dist.to_text(), &mut outcome)?;

    if let Some(path) = &inputs.baseline {
        let text = fs::read_to_string(path).map_err(io_at(path))?;
        let baseline = parse_baseline(&text)?;
        let scope = if inputs.jni_only { OverlapScope::JniOnly } else { OverlapScope::All };
        let overlap = overlap_report(&store, &baseline, scope);
        emit("overlap", pretty(&overlap), overlap.to_text(), &mut outcome)?;
    }

    if let Some(path) = &inputs.against {
        let other = MappingStore::load(path)?;
        let diff = diff_versions(&store, &other);
        if let Some(w) = &diff.warning {
            outcome.notices.push(format!("warning: {w}"));
        }
        emit("diff", pretty(&diff), diff.to_text(), &mut outcome)?;
    }
    Ok(outcome)
}

fn pretty<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

pub fn run_export(store_path: &Path, dest: &Path) -> Result<Vec<String>, PipelineError> {
    let store = MappingStore::load(store_path)?;
    let cases_path = testcases_path(store_path, &store.corpus_id);
    if !cases_path.is_file() {
        return Err(PipelineError::Other(format!("{} not found; run verify first", cases_path.display())));
    }
    let cases = load_test_cases(&cases_path)?;
    export_device_bundle(&cases, &store, dest).map_err(io_at(dest))
}
