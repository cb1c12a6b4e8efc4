//! Deterministic offline provider driven by an oracle file.
//!
//! Accepted shapes:
//!
//! ```json
//! {"detector": {"<pattern>": ["PERM", ...]}, "analyst": {...},
//!  "testgen": {"unfixable": ["<pattern>"], "broken_first": ["<pattern>"]},
//!  "fail": ["<pattern>"]}
//! ```
//!
//! or a flat `{"<pattern>": [...]}` map that answers for both roles. A
//! pattern equal to an api_id matches that record; a pattern containing `#`
//! or `(` is globbed against the signature key (`fq_class#name(params)`);
//! anything else is globbed against `fq_class.name`.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;

use serde_json::{json, Value};

use super::prompt::Role;
use super::provider::{CompletionRequest, Provider, ProviderError, Task};
use crate::extract::MethodSignature;
use crate::glob::glob_match;
use crate::permission::{canonicalize_permission, PermissionSet};
use crate::verifier::template::{broken_probe_source, probe_source};

const SECTIONS: [&str; 4] = ["detector", "analyst", "testgen", "fail"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallRecord {
    pub task: Task,
    pub api_id: String,
}

#[derive(Debug, Default)]
pub struct MockProvider {
    detector: BTreeMap<String, PermissionSet>,
    analyst: BTreeMap<String, PermissionSet>,
    unfixable: Vec<String>,
    broken_first: Vec<String>,
    fail: Vec<String>,
    log: Mutex<Vec<CallRecord>>,
}

pub fn pattern_matches(pattern: &str, api_id: &str, sig: &MethodSignature) -> bool {
    if pattern == api_id {
        return true;
    }
    let key = sig.key();
    if pattern.contains('#') || pattern.contains('(') {
        glob_match(pattern, &key.to_string()) || glob_match(pattern, &key.simplified().to_string())
    } else {
        glob_match(pattern, &key.dotted())
    }
}

fn config_error(message: impl Into<String>) -> ProviderError {
    ProviderError::Config(message.into())
}

fn permission_table(value: &Value, section: &str) -> Result<BTreeMap<String, PermissionSet>, ProviderError> {
    let map = value.as_object().ok_or_else(|| config_error(format!("mock oracle section {section:?} must be an object")))?;
    let mut out = BTreeMap::new();
    for (pattern, perms) in map {
        let list = perms.as_array().ok_or_else(|| config_error(format!("mock oracle entry {pattern:?} must be an array")))?;
        let mut set = PermissionSet::new();
        for p in list {
            let name = p.as_str().ok_or_else(|| config_error(format!("non-string permission under {pattern:?}")))?;
            set.insert(canonicalize_permission(name).map_err(|e| config_error(format!("{pattern:?}: {e}")))?);
        }
        out.insert(pattern.clone(), set);
    }
    Ok(out)
}

fn pattern_list(value: &Value, section: &str) -> Result<Vec<String>, ProviderError> {
    value
        .as_array()
        .and_then(|a| a.iter().map(|v| v.as_str().map(str::to_string)).collect::<Option<Vec<_>>>())
        .ok_or_else(|| config_error(format!("mock oracle section {section:?} must be an array of strings")))
}

impl MockProvider {
    pub fn from_path(path: &Path) -> Result<Self, ProviderError> {
        let text = std::fs::read_to_string(path).map_err(|e| config_error(format!("cannot read mock oracle {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            ProviderError::Config(m) => config_error(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ProviderError> {
        let value: Value = serde_json::from_str(text).map_err(|e| config_error(format!("malformed mock oracle: {e}")))?;
        let obj = value.as_object().ok_or_else(|| config_error("mock oracle must be a JSON object"))?;
        let structured = !obj.is_empty() && obj.keys().all(|k| SECTIONS.contains(&k.as_str()));
        let mut mock = Self::default();
        if !structured {
            let table = permission_table(&value, "flat")?;
            mock.detector = table.clone();
            mock.analyst = table;
            return Ok(mock);
        }
        if let Some(v) = obj.get("detector") {
            mock.detector = permission_table(v, "detector")?;
        }
        if let Some(v) = obj.get("analyst") {
            mock.analyst = permission_table(v, "analyst")?;
        }
        if let Some(v) = obj.get("fail") {
            mock.fail = pattern_list(v, "fail")?;
        }
        if let Some(tg) = obj.get("testgen") {
            let tg = tg.as_object().ok_or_else(|| config_error("mock oracle section \"testgen\" must be an object"))?;
            for (k, v) in tg {
                match k.as_str() {
                    "unfixable" => mock.unfixable = pattern_list(v, "testgen.unfixable")?,
                    "broken_first" => mock.broken_first = pattern_list(v, "testgen.broken_first")?,
                    other => return Err(config_error(format!("unknown testgen key {other:?}"))),
                }
            }
        }
        Ok(mock)
    }

    /// A mock whose generated drafts are always broken and never repaired.
    pub fn adversarial() -> Self {
        Self { unfixable: vec!["*".into()], ..Self::default() }
    }

    pub fn calls(&self) -> Vec<CallRecord> {
        self.log.lock().expect("call log poisoned").clone()
    }

    pub fn call_count(&self) -> usize {
        self.log.lock().expect("call log poisoned").len()
    }

    fn any_match(patterns: &[String], req: &CompletionRequest) -> bool {
        patterns.iter().any(|p| pattern_matches(p, &req.api_id, &req.signature))
    }

    fn lookup(table: &BTreeMap<String, PermissionSet>, req: &CompletionRequest) -> (PermissionSet, usize) {
        let mut out = PermissionSet::new();
        let mut hits = 0;
        for (pattern, perms) in table {
            if pattern_matches(pattern, &req.api_id, &req.signature) {
                hits += 1;
                out.extend(perms.iter().cloned());
            }
        }
        (out, hits)
    }
}

impl Provider for MockProvider {
    fn complete(&self, req: &CompletionRequest) -> Result<String, ProviderError> {
        self.log.lock().expect("call log poisoned").push(CallRecord { task: req.task, api_id: req.api_id.clone() });
        if Self::any_match(&self.fail, req) {
            return Err(ProviderError::Transport("mock transport failure".into()));
        }
        let unfixable = Self::any_match(&self.unfixable, req);
        Ok(match req.task {
            Task::Analyze(role) => {
                let table = match role {
                    Role::Detector => &self.detector,
                    Role::Analyst => &self.analyst,
                };
                let (perms, hits) = Self::lookup(table, req);
                let rationale = if hits == 0 { "no oracle entry".to_string() } else { format!("matched {hits} oracle pattern(s)") };
                json!({
                    "requires_permission": !perms.is_empty(),
                    "permissions": perms.iter().map(|p| p.as_str()).collect::<Vec<_>>(),
                    "rationale": rationale,
                })
                .to_string()
            }
            Task::GenerateTest if unfixable || Self::any_match(&self.broken_first, req) => broken_probe_source(&req.signature),
            Task::GenerateTest => probe_source(&req.signature),
            Task::NormalizeSnippet if unfixable => broken_probe_source(&req.signature),
            Task::NormalizeSnippet => req.context.clone().unwrap_or_else(|| probe_source(&req.signature)),
            Task::RefineTest if unfixable => req.context.clone().unwrap_or_else(|| broken_probe_source(&req.signature)),
            Task::RefineTest => probe_source(&req.signature),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::verdict::parse_verdict;

    fn sig(fq: &str, name: &str, params: &[&str]) -> MethodSignature {
        MethodSignature {
            fq_class: fq.into(),
            name: name.into(),
            param_types: params.iter().map(|s| s.to_string()).collect(),
            return_type: "void".into(),
            modifiers: Default::default(),
        }
    }

    fn ask(mock: &MockProvider, role: Role, s: &MethodSignature) -> Vec<String> {
        let req = CompletionRequest { task: Task::Analyze(role), api_id: "id".into(), signature: s.clone(), prompt: String::new(), context: None };
        parse_verdict(&mock.complete(&req).unwrap(), role).permissions.into_iter().map(String::from).collect()
    }

    #[test]
    fn role_specific_entries() {
        let mock = MockProvider::from_json(r#"{"detector": {"*.open": ["CAMERA"]}}"#).unwrap();
        let s = sig("android.hardware.Camera", "open", &["int"]);
        assert_eq!(ask(&mock, Role::Detector, &s), ["android.permission.CAMERA"]);
        assert!(ask(&mock, Role::Analyst, &s).is_empty());
        assert_eq!(mock.call_count(), 2);
    }

    #[test]
    fn flat_maps_and_key_patterns() {
        let mock = MockProvider::from_json(r#"{"android.location.LocationHelper#isGPSEnabled()": ["ACCESS_FINE_LOCATION"]}"#).unwrap();
        let s = sig("android.location.LocationHelper", "isGPSEnabled", &[]);
        assert_eq!(ask(&mock, Role::Analyst, &s), ["android.permission.ACCESS_FINE_LOCATION"]);
        assert_eq!(ask(&mock, Role::Detector, &s), ["android.permission.ACCESS_FINE_LOCATION"]);
        assert!(ask(&mock, Role::Analyst, &sig("android.location.LocationHelper", "isGPSEnabled", &["int"])).is_empty());
    }

    #[test]
    fn simplified_param_names_match() {
        let mock = MockProvider::from_json(r#"{"a.B#f(String)": ["INTERNET"]}"#).unwrap();
        assert_eq!(ask(&mock, Role::Analyst, &sig("a.B", "f", &["java.lang.String"])), ["android.permission.INTERNET"]);
    }

    #[test]
    fn startup_errors() {
        assert!(MockProvider::from_path(Path::new("/nonexistent/oracle.json")).is_err());
        assert!(MockProvider::from_json("[1,2]").is_err());
        assert!(MockProvider::from_json(r#"{"a.B#f()": ["not a permission"]}"#).is_err());
        assert!(MockProvider::from_json(r#"{"detector": []}"#).is_err());
    }

    #[test]
    fn failure_patterns() {
        let mock = MockProvider::from_json(r#"{"fail": ["a.B.*"]}"#).unwrap();
        let req = CompletionRequest { task: Task::GenerateTest, api_id: "x".into(), signature: sig("a.B", "f", &[]), prompt: String::new(), context: None };
        assert!(matches!(mock.complete(&req), Err(ProviderError::Transport(_))));
    }
}
