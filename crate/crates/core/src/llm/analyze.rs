//! Dual-role analysis of records and merging of the role verdicts.

use rayon::prelude::*;
use thiserror::Error;

use super::prompt::{build_prompt, Demonstration, PromptError, PromptLimits, Role, RoleProfile};
use super::provider::{complete_with_retry, CompletionRequest, Provider, ProviderError, RetryPolicy, Task};
use super::verdict::{parse_verdict, AnalysisVerdict};
use crate::extract::ApiRecord;
use crate::permission::PermissionSet;
use crate::store::{MappingStore, PermissionMapping, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalysisOptions {
    pub limits: PromptLimits,
    pub retry: RetryPolicy,
    pub max_in_flight: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self { limits: PromptLimits::default(), retry: RetryPolicy::default(), max_in_flight: 4 }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("analysis failed for {api_id} ({role}): {error}")]
    Provider { api_id: String, role: &'static str, error: ProviderError },
    #[error("cannot build prompt for {api_id}: {message}")]
    Prompt { api_id: String, message: String },
}

fn prompt_for(role: Role, demos: &[Demonstration], record: &ApiRecord, limits: PromptLimits) -> Result<String, AnalysisError> {
    let profile = RoleProfile::for_role(role);
    let bundle = match build_prompt(&profile, demos, record, limits) {
        Err(PromptError::TooLong { .. }) => build_prompt(&profile, demos, record, PromptLimits { body_budget: 0, ..limits }),
        other => other,
    };
    bundle
        .map(|b| b.render())
        .map_err(|e| AnalysisError::Prompt { api_id: record.api_id.clone(), message: e.to_string() })
}

/// One detector call and one analyst call, each retried on transport failure.
pub fn analyze_record(
    record: &ApiRecord,
    provider: &dyn Provider,
    demos: &[Demonstration],
    options: &AnalysisOptions,
) -> Result<(AnalysisVerdict, AnalysisVerdict), AnalysisError> {
    let mut verdicts = Vec::with_capacity(2);
    for role in Role::BOTH {
        let request = CompletionRequest {
            task: Task::Analyze(role),
            api_id: record.api_id.clone(),
            signature: record.signature.clone(),
            prompt: prompt_for(role, demos, record, options.limits)?,
            context: None,
        };
        let raw = complete_with_retry(provider, &request, options.retry)
            .map_err(|error| AnalysisError::Provider { api_id: record.api_id.clone(), role: role.as_str(), error })?;
        verdicts.push(parse_verdict(&raw, role));
    }
    let analyst = verdicts.pop().expect("two verdicts");
    let detector = verdicts.pop().expect("two verdicts");
    Ok((detector, analyst))
}

fn provenance_of(role: Role) -> Provenance {
    match role {
        Role::Detector => Provenance::Detector,
        Role::Analyst => Provenance::Analyst,
    }
}

/// Union of declared permissions and both role verdicts. Provenance follows
/// each verdict's own role tag, so argument order does not matter.
pub fn merge_verdicts(
    api_id: &str,
    sdk_version: u32,
    a: &AnalysisVerdict,
    b: &AnalysisVerdict,
    declared: &PermissionSet,
) -> Option<PermissionMapping> {
    let mut mapping = PermissionMapping::new(api_id, sdk_version);
    mapping.add_all(declared, Provenance::Annotation);
    for v in [a, b] {
        mapping.add_all(&v.permissions, provenance_of(v.role));
    }
    mapping.is_permission_required().then_some(mapping)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnalyzeSummary {
    pub analyzed: usize,
    pub failed: Vec<AnalysisError>,
}

/// Analyzes every record with at most `max_in_flight` concurrent requests
/// and merges the candidates into the store in api_id order. Records whose
/// analysis fails still contribute their declared permissions.
pub fn analyze_store(
    store: &mut MappingStore,
    provider: &dyn Provider,
    demos: &[Demonstration],
    options: &AnalysisOptions,
) -> Result<AnalyzeSummary, rayon::ThreadPoolBuildError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(options.max_in_flight.max(1)).build()?;
    let records: Vec<&ApiRecord> = store.records.values().collect();
    let results: Vec<(String, PermissionSet, Result<_, AnalysisError>)> = pool.install(|| {
        records
            .par_iter()
            .map(|r| (r.api_id.clone(), r.declared_permissions.clone(), analyze_record(r, provider, demos, options)))
            .collect()
    });
    let mut summary = AnalyzeSummary::default();
    let sdk_version = store.sdk_version;
    for (api_id, declared, outcome) in results {
        summary.analyzed += 1;
        let candidate = match outcome {
            Ok((d, a)) => merge_verdicts(&api_id, sdk_version, &d, &a, &declared),
            Err(e) => {
                log::warn!("{e}");
                summary.failed.push(e);
                let none = AnalysisVerdict::permission_free(Role::Detector);
                merge_verdicts(&api_id, sdk_version, &none, &AnalysisVerdict::permission_free(Role::Analyst), &declared)
            }
        };
        if let Some(m) = candidate {
            store.merge_mapping(&m).expect("records come from the store");
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::permission::canonicalize_permission;
    use crate::store::Confidence;
    use std::collections::BTreeSet;

    fn verdict(role: Role, perms: &[&str]) -> AnalysisVerdict {
        let mut v = AnalysisVerdict::permission_free(role);
        v.permissions = perms.iter().map(|p| canonicalize_permission(p).unwrap()).collect();
        v.requires_permission = !v.permissions.is_empty();
        v
    }

    fn set(perms: &[&str]) -> PermissionSet {
        perms.iter().map(|p| canonicalize_permission(p).unwrap()).collect()
    }

    #[test]
    fn declared_plus_analyst() {
        let m = merge_verdicts("x", 7, &verdict(Role::Detector, &[]), &verdict(Role::Analyst, &["CAMERA"]), &set(&["CAMERA"])).unwrap();
        assert_eq!(m.permission_set(), set(&["CAMERA"]));
        assert_eq!(m.provenance(), BTreeSet::from([Provenance::Annotation, Provenance::Analyst]));
        assert_eq!(m.confidence, Confidence::Predicted);
    }

    #[test]
    fn nothing_anywhere_is_permission_free() {
        assert!(merge_verdicts("x", 7, &verdict(Role::Detector, &[]), &verdict(Role::Analyst, &[]), &PermissionSet::new()).is_none());
    }

    #[test]
    fn disagreeing_roles_union() {
        let m = merge_verdicts("x", 7, &verdict(Role::Detector, &["INTERNET"]), &verdict(Role::Analyst, &["ACCESS_NETWORK_STATE"]), &PermissionSet::new()).unwrap();
        assert_eq!(m.permission_set(), set(&["INTERNET", "ACCESS_NETWORK_STATE"]));
        assert_eq!(m.provenance(), BTreeSet::from([Provenance::Detector, Provenance::Analyst]));
    }

    #[test]
    fn annotations_alone_stay_declared() {
        let m = merge_verdicts("x", 7, &verdict(Role::Detector, &[]), &verdict(Role::Analyst, &[]), &set(&["CAMERA"])).unwrap();
        assert_eq!(m.confidence, Confidence::Declared);
    }

    #[test]
    fn argument_order_is_irrelevant() {
        let d = verdict(Role::Detector, &["INTERNET"]);
        let a = verdict(Role::Analyst, &["CAMERA", "INTERNET"]);
        let declared = set(&["WAKE_LOCK"]);
        assert_eq!(merge_verdicts("x", 7, &d, &a, &declared), merge_verdicts("x", 7, &a, &d, &declared));
    }
}
