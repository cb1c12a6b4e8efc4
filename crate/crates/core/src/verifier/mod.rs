//! Verification of candidate mappings through generated probe programs.

pub mod case;
pub mod export;
pub mod runtime;
pub mod snippets;
pub mod template;

use rayon::prelude::*;

pub use case::{generate_test_case, refine_loop, validate_test_case, CaseStatus, Refinement, Rule, TestCase, ValidationContext, Violation, DEFAULT_MAX_ITERATIONS};
pub use export::export_device_bundle;
pub use runtime::{execute_simulated, parse_security_exception, verify_mapping, ExecutionOutcome, ExecutionResult, OracleError, PermissionOracle, Verification};
pub use snippets::{load_snippet_corpus, retrieve_snippet, SnippetCorpusEntry, SnippetError};

use crate::llm::{Provider, RetryPolicy};
use crate::store::{Confidence, MappingStore};

pub const DEFAULT_SIMILARITY_THRESHOLD: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub similarity_threshold: f64,
    pub max_iterations: usize,
    pub retry: RetryPolicy,
    /// Verify only the first N candidates in api_id order.
    pub max_cases: Option<usize>,
    pub max_in_flight: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            similarity_threshold: DEFAULT_SIMILARITY_THRESHOLD,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            retry: RetryPolicy::default(),
            max_cases: None,
            max_in_flight: 4,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub cases: Vec<TestCase>,
    pub outcomes: Vec<ExecutionOutcome>,
    /// api_ids whose mapping reached verified confidence.
    pub verified: Vec<String>,
    /// case_ids that exhausted refinement or were blocked.
    pub rejected: Vec<String>,
    pub unverifiable: Vec<String>,
}

/// Retrieve, generate, validate, refine, execute and verify every candidate
/// mapping in the store, then write the updated mappings back.
pub fn verify_store(
    store: &mut MappingStore,
    provider: &dyn Provider,
    snippets: &[SnippetCorpusEntry],
    oracle: &PermissionOracle,
    options: &VerifyOptions,
) -> Result<VerifyReport, rayon::ThreadPoolBuildError> {
    let ctx = ValidationContext::from_store(store);
    let limit = options.max_cases.unwrap_or(usize::MAX);
    let candidates: Vec<_> = store.mappings.values().take(limit).cloned().collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(options.max_in_flight.max(1)).build()?;
    let records = &store.records;
    let results: Vec<(TestCase, Verification)> = pool.install(|| {
        candidates
            .par_iter()
            .map(|candidate| {
                let record = &records[&candidate.api_id];
                let retrieved = retrieve_snippet(&record.key(), snippets, options.similarity_threshold);
                let draft = generate_test_case(record, provider, retrieved.map(|r| r.entry), options.retry);
                let tc = refine_loop(draft, provider, &ctx, options.max_iterations, options.retry);
                let verification = verify_mapping(candidate, &tc, oracle);
                (tc, verification)
            })
            .collect()
    });
    let mut report = VerifyReport::default();
    for (tc, verification) in results {
        if tc.status == CaseStatus::Rejected {
            report.rejected.push(tc.case_id.clone());
        }
        let mapping = verification.mapping;
        if mapping.confidence == Confidence::Verified {
            report.verified.push(mapping.api_id.clone());
        }
        if mapping.unverifiable {
            report.unverifiable.push(mapping.api_id.clone());
        }
        if let Some(o) = verification.outcome {
            report.outcomes.push(o);
        }
        report.cases.push(tc);
        store.replace_mapping(mapping).expect("candidate came from the store");
    }
    Ok(report)
}
