mod common;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use common::*;
use permap_core::extract::{scan_corpus, ScanOptions};
use permap_core::llm::{
    analyze_store, default_demonstrations, AnalysisOptions, CompletionRequest, MockProvider, Provider, ProviderError, RetryPolicy, Role, Task,
};
use permap_core::{MappingStore, Provenance};

fn fixture_store() -> MappingStore {
    let corpus = fixture_corpus();
    let report = scan_corpus(&corpus, &ScanOptions::new()).unwrap();
    MappingStore::from_records(corpus.corpus_id.clone(), corpus.sdk_version, report.records)
}

#[derive(Default)]
struct Counting {
    calls: Mutex<Vec<(Role, String)>>,
}

impl Provider for Counting {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        let Task::Analyze(role) = request.task else { panic!("unexpected task {:?}", request.task) };
        assert!(request.prompt.contains(&request.signature.name), "prompt omits the target");
        self.calls.lock().unwrap().push((role, request.api_id.clone()));
        Ok(r#"{"requires_permission": false, "permissions": [], "rationale": "none"}"#.into())
    }
}

#[test]
fn each_record_gets_one_call_per_role() {
    let mut store = fixture_store();
    let provider = Counting::default();
    let summary = analyze_store(&mut store, &provider, &default_demonstrations(), &AnalysisOptions::default()).unwrap();
    let calls = provider.calls.into_inner().unwrap();
    assert_eq!(summary.analyzed, 40);
    assert_eq!(calls.len(), 2 * 40);
    for id in store.records.keys() {
        for role in Role::BOTH {
            assert_eq!(calls.iter().filter(|(r, a)| *r == role && a == id).count(), 1, "{id} {role:?}");
        }
    }
    // permission-free verdicts leave only what the source already declared
    let declared = store.records.values().filter(|r| !r.declared_permissions.is_empty()).count();
    assert_eq!(store.permission_required_count(), declared);
    assert!(store.mappings.values().all(|m| m.provenance() == [Provenance::Annotation].into()));
}

#[test]
fn analysis_is_independent_of_concurrency() {
    let mock = MockProvider::from_path(&fixtures().join("mock-roles.json")).unwrap();
    let run = |in_flight| {
        let mut store = fixture_store();
        let opts = AnalysisOptions { max_in_flight: in_flight, ..Default::default() };
        analyze_store(&mut store, &mock, &default_demonstrations(), &opts).unwrap();
        store.to_jsonl()
    };
    let serial = run(1);
    assert_eq!(run(8), serial);
    assert_eq!(run(3), serial);
}

#[test]
fn glob_patterns_select_methods() {
    let mock = MockProvider::from_json(r#"{"*.request*": ["android.permission.INTERNET"]}"#).unwrap();
    let mut store = MappingStore::from_records("sdk-mini", 10, {
        let corpus = fixture_corpus();
        let mut records = scan_corpus(&corpus, &ScanOptions::new()).unwrap().records;
        for r in &mut records {
            r.declared_permissions.clear();
        }
        records
    });
    analyze_store(&mut store, &mock, &default_demonstrations(), &AnalysisOptions::default()).unwrap();
    let mut hit: Vec<String> = store
        .mappings
        .values()
        .filter(|m| m.is_permission_required())
        .map(|m| store.records[&m.api_id].signature.name.clone())
        .collect();
    hit.sort();
    // requestPayment and requestFocus; createRequestId does not start with "request"
    assert_eq!(hit, ["requestFocus", "requestPayment"]);
    assert!(store.mappings.values().all(|m| m.permission_set() == perms(&["INTERNET"])));
}

struct Flaky {
    failures_left: AtomicUsize,
}

impl Provider for Flaky {
    fn complete(&self, _: &CompletionRequest) -> Result<String, ProviderError> {
        if self.failures_left.fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1)).is_ok() {
            return Err(ProviderError::Timeout);
        }
        Ok(r#"{"requires_permission": true, "permissions": ["CAMERA"]}"#.into())
    }
}

#[test]
fn transient_failures_are_retried() {
    let mut store = MappingStore::new("c", 30);
    store.insert_record(record("c", 30, "android.hardware.Cam", "open", &["int"]));
    let flaky = Flaky { failures_left: AtomicUsize::new(2) };
    let opts = AnalysisOptions { retry: RetryPolicy::immediate(2), max_in_flight: 1, ..Default::default() };
    let summary = analyze_store(&mut store, &flaky, &default_demonstrations(), &opts).unwrap();
    assert!(summary.failed.is_empty());
    assert_eq!(store.permission_required_count(), 1);

    let mut store2 = MappingStore::new("c", 30);
    store2.insert_record(record("c", 30, "android.hardware.Cam", "open", &["int"]));
    let flaky = Flaky { failures_left: AtomicUsize::new(usize::MAX) };
    let summary = analyze_store(&mut store2, &flaky, &default_demonstrations(), &opts).unwrap();
    assert_eq!(summary.failed.len(), 1);
    assert_eq!(store2.permission_required_count(), 0);
}

#[test]
fn mock_logs_calls() {
    let mock = MockProvider::from_path(&fixtures().join("oracle.json")).unwrap();
    let mut store = fixture_store();
    analyze_store(&mut store, &mock, &default_demonstrations(), &AnalysisOptions::default()).unwrap();
    assert_eq!(mock.call_count(), 80);
    assert_eq!(store.permission_required_count(), 7);
}
