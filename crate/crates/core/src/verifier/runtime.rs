//! Simulated permission enforcement and evidence-based verification.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::case::{CaseStatus, TestCase};
use crate::extract::SignatureKey;
use crate::permission::{canonicalize_permission, scan_permission_tokens, PermissionSet};
use crate::store::{PermissionMapping, Provenance};

/// Ground truth the simulated runtime enforces, keyed by signature.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermissionOracle {
    pub entries: BTreeMap<SignatureKey, PermissionSet>,
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("cannot read oracle {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed oracle: {0}")]
    Malformed(String),
}

impl PermissionOracle {
    pub fn from_json(text: &str) -> Result<Self, OracleError> {
        let raw: BTreeMap<String, Vec<String>> = serde_json::from_str(text).map_err(|e| OracleError::Malformed(e.to_string()))?;
        let mut entries = BTreeMap::new();
        for (key, perms) in raw {
            let key: SignatureKey = key.parse().map_err(|e| OracleError::Malformed(format!("{e}")))?;
            let set = perms
                .iter()
                .map(|p| canonicalize_permission(p).map_err(|e| OracleError::Malformed(format!("{key}: {e}"))))
                .collect::<Result<PermissionSet, _>>()?;
            entries.insert(key, set);
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, OracleError> {
        let text = std::fs::read_to_string(path).map_err(|e| OracleError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_json(&text)
    }

    /// Exact key first, then a match on simple parameter type names.
    pub fn required(&self, key: &SignatureKey) -> Option<&PermissionSet> {
        self.entries.get(key).or_else(|| {
            let simple = key.simplified();
            self.entries.iter().find(|(k, _)| k.simplified() == simple).map(|(_, v)| v)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionResult {
    Completed,
    SecurityException,
    HarnessError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionOutcome {
    pub case_id: String,
    pub result: ExecutionResult,
    pub exception_message: String,
    pub extracted_permissions: PermissionSet,
}

pub fn security_exception_message(fq_method: &str, missing: &PermissionSet) -> String {
    let names: Vec<&str> = missing.iter().map(|p| p.as_str()).collect();
    format!("SecurityException: {fq_method} requires {}", names.join(", "))
}

/// Permission-shaped tokens in an exception message, canonicalized. When the
/// message has a ` requires ` clause only the text after it is scanned, so a
/// method in a `*.permission.*` package is not mistaken for a requirement.
pub fn parse_security_exception(message: &str) -> PermissionSet {
    let tail = message.rfind(" requires ").map_or(message, |i| &message[i..]);
    scan_permission_tokens(tail)
}

/// Runs a validated case: throws iff some required permission is not granted.
/// Unvalidated cases are harness errors; oracle silence means unenforced.
pub fn execute_simulated(tc: &TestCase, oracle: &PermissionOracle) -> ExecutionOutcome {
    let mut outcome = ExecutionOutcome {
        case_id: tc.case_id.clone(),
        result: ExecutionResult::Completed,
        exception_message: String::new(),
        extracted_permissions: PermissionSet::new(),
    };
    if tc.status != CaseStatus::Validated {
        outcome.result = ExecutionResult::HarnessError;
        return outcome;
    }
    let key = tc.target();
    let Some(required) = oracle.required(&key) else {
        return outcome;
    };
    let missing: PermissionSet = required.difference(&tc.manifest_permissions).cloned().collect();
    if !missing.is_empty() {
        outcome.result = ExecutionResult::SecurityException;
        outcome.exception_message = security_exception_message(&key.dotted(), &missing);
        outcome.extracted_permissions = parse_security_exception(&outcome.exception_message);
    }
    outcome
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verification {
    pub mapping: PermissionMapping,
    pub outcome: Option<ExecutionOutcome>,
}

/// Executes `tc` with nothing granted and folds the surfaced permissions into
/// `candidate` under `verified` provenance. Never removes permissions.
pub fn verify_mapping(candidate: &PermissionMapping, tc: &TestCase, oracle: &PermissionOracle) -> Verification {
    let mut mapping = candidate.clone();
    if tc.status != CaseStatus::Validated {
        mapping.unverifiable = mapping.confidence < crate::store::Confidence::Verified;
        return Verification { mapping, outcome: None };
    }
    let mut run = tc.clone();
    run.manifest_permissions.clear();
    let outcome = execute_simulated(&run, oracle);
    if outcome.extracted_permissions.is_empty() {
        mapping.unverifiable = mapping.confidence < crate::store::Confidence::Verified;
    } else {
        mapping.add_all(&outcome.extracted_permissions, Provenance::Verified);
        mapping.unverifiable = false;
    }
    Verification { mapping, outcome: Some(outcome) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::MethodSignature;
    use crate::store::Confidence;
    use proptest::prelude::*;

    fn perms(names: &[&str]) -> PermissionSet {
        names.iter().map(|n| canonicalize_permission(n).unwrap()).collect()
    }

    fn validated_case() -> TestCase {
        TestCase {
            case_id: "tc-1".into(),
            api_id: "1".into(),
            signature: MethodSignature {
                fq_class: "android.hardware.CameraDevice".into(),
                name: "startRecording".into(),
                param_types: vec!["String".into()],
                return_type: "void".into(),
                modifiers: Default::default(),
            },
            code: String::new(),
            manifest_permissions: PermissionSet::new(),
            sdk_version: 7,
            status: CaseStatus::Validated,
            refinement_history: vec![],
            source_snippet: None,
            harness_blocked: false,
        }
    }

    fn oracle(required: &[&str]) -> PermissionOracle {
        PermissionOracle { entries: [(validated_case().target(), perms(required))].into() }
    }

    #[test]
    fn missing_permission_throws() {
        let out = execute_simulated(&validated_case(), &oracle(&["CAMERA"]));
        assert_eq!(out.result, ExecutionResult::SecurityException);
        assert_eq!(out.exception_message, "SecurityException: android.hardware.CameraDevice.startRecording requires android.permission.CAMERA");
        assert_eq!(out.extracted_permissions, perms(&["CAMERA"]));
    }

    #[test]
    fn only_ungranted_permissions_are_named() {
        let mut tc = validated_case();
        tc.manifest_permissions = perms(&["CAMERA"]);
        let out = execute_simulated(&tc, &oracle(&["CAMERA", "RECORD_AUDIO"]));
        assert_eq!(out.extracted_permissions, perms(&["RECORD_AUDIO"]));
        assert!(!out.exception_message.contains("CAMERA,"));
    }

    #[test]
    fn satisfied_or_unknown_completes() {
        let mut tc = validated_case();
        tc.manifest_permissions = perms(&["CAMERA", "RECORD_AUDIO"]);
        let out = execute_simulated(&tc, &oracle(&["CAMERA"]));
        assert_eq!((out.result, out.exception_message.as_str()), (ExecutionResult::Completed, ""));
        assert_eq!(execute_simulated(&validated_case(), &PermissionOracle::default()).result, ExecutionResult::Completed);
        let mut draft = validated_case();
        draft.status = CaseStatus::Draft;
        assert_eq!(execute_simulated(&draft, &oracle(&["CAMERA"])).result, ExecutionResult::HarnessError);
    }

    #[test]
    fn exception_text_variants() {
        assert_eq!(parse_security_exception("requires android.permission.INTERNET or be running as root"), perms(&["INTERNET"]));
        assert!(parse_security_exception("NullPointerException").is_empty());
    }

    fn candidate(names: &[&str]) -> PermissionMapping {
        let mut m = PermissionMapping::new("1", 7);
        m.add_all(&perms(names), Provenance::Analyst);
        m
    }

    #[test]
    fn confirmed_permissions_become_verified() {
        let v = verify_mapping(&candidate(&["CAMERA"]), &validated_case(), &oracle(&["CAMERA"]));
        assert_eq!(v.mapping.verified_permissions(), perms(&["CAMERA"]));
        assert_eq!(v.mapping.confidence, Confidence::Verified);
    }

    #[test]
    fn silence_leaves_candidate_flagged() {
        let v = verify_mapping(&candidate(&["CAMERA"]), &validated_case(), &PermissionOracle::default());
        assert_eq!(v.mapping.confidence, Confidence::Predicted);
        assert!(v.mapping.unverifiable);
        assert_eq!(v.mapping.permission_set(), perms(&["CAMERA"]));
    }

    #[test]
    fn extra_evidence_is_added() {
        let v = verify_mapping(&candidate(&["CAMERA"]), &validated_case(), &oracle(&["CAMERA", "RECORD_AUDIO"]));
        assert_eq!(v.mapping.permission_set(), perms(&["CAMERA", "RECORD_AUDIO"]));
        assert_eq!(v.mapping.verified_permissions(), perms(&["CAMERA", "RECORD_AUDIO"]));
        assert_eq!(v.mapping.permissions[&perms(&["RECORD_AUDIO"]).into_iter().next().unwrap()], [Provenance::Verified].into());
    }

    #[test]
    fn rejected_case_is_unverifiable() {
        let mut tc = validated_case();
        tc.status = CaseStatus::Rejected;
        let v = verify_mapping(&candidate(&["CAMERA"]), &tc, &oracle(&["CAMERA"]));
        assert!(v.mapping.unverifiable && v.outcome.is_none());
        assert_eq!(v.mapping.confidence, Confidence::Predicted);
    }

    #[test]
    fn oracle_file_shape() {
        let o = PermissionOracle::from_json(r#"{"a.B#f(int)": ["CAMERA", "android.permission.INTERNET"]}"#).unwrap();
        assert_eq!(o.required(&"a.B#f(int)".parse().unwrap()), Some(&perms(&["CAMERA", "INTERNET"])));
        assert!(PermissionOracle::from_json(r#"{"not a key": []}"#).is_err());
        assert!(PermissionOracle::from_json("[]").is_err());
    }

    proptest! {
        #[test]
        fn exception_round_trip(
            required in proptest::collection::btree_set("[A-Z][A-Z_]{0,8}[A-Z]", 1..6),
            granted_mask in proptest::collection::vec(any::<bool>(), 6),
        ) {
            let required: PermissionSet = required.iter().map(|n| canonicalize_permission(n).unwrap()).collect();
            let mut tc = validated_case();
            tc.manifest_permissions = required.iter().zip(&granted_mask).filter(|(_, g)| **g).map(|(p, _)| p.clone()).collect();
            let o = PermissionOracle { entries: [(tc.target(), required.clone())].into() };
            let expected: PermissionSet = required.difference(&tc.manifest_permissions).cloned().collect();
            let out = execute_simulated(&tc, &o);
            prop_assert_eq!(parse_security_exception(&out.exception_message), expected.clone());
            prop_assert_eq!(out.result == ExecutionResult::SecurityException, !expected.is_empty());
        }
    }

    #[test]
    fn permission_package_in_target_is_not_a_requirement() {
        let msg = security_exception_message("android.permission.PermissionManager.grant", &perms(&["GRANT_RUNTIME_PERMISSIONS"]));
        assert_eq!(parse_security_exception(&msg), perms(&["GRANT_RUNTIME_PERMISSIONS"]));
        assert_eq!(scan_permission_tokens("android.permission.PermissionManager"), PermissionSet::new());
    }
}
