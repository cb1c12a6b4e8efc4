//! Structured verdicts from provider responses.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::prompt::Role;
use crate::permission::{canonicalize_permission, scan_permission_tokens, PermissionSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParsePath {
    Strict,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisVerdict {
    pub role: Role,
    pub requires_permission: bool,
    pub permissions: PermissionSet,
    pub rationale: String,
    pub raw_response: String,
    pub parse_path: ParsePath,
    /// Set when the response was empty, off-schema, or carried unusable names.
    pub warning: bool,
}

impl AnalysisVerdict {
    pub fn permission_free(role: Role) -> Self {
        Self {
            role,
            requires_permission: false,
            permissions: PermissionSet::new(),
            rationale: String::new(),
            raw_response: String::new(),
            parse_path: ParsePath::Strict,
            warning: false,
        }
    }
}

/// Candidate JSON texts: the whole response, then a fenced block, then the
/// outermost braces.
fn json_candidates(raw: &str) -> Vec<&str> {
    let mut out = vec![raw.trim()];
    if let Some(start) = raw.find("```") {
        let after = &raw[start + 3..];
        let after = after.strip_prefix("json").unwrap_or(after);
        if let Some(end) = after.find("```") {
            out.push(after[..end].trim());
        }
    }
    if let (Some(a), Some(b)) = (raw.find('{'), raw.rfind('}')) {
        if a < b {
            out.push(&raw[a..=b]);
        }
    }
    out
}

fn strict(raw: &str, role: Role) -> Option<AnalysisVerdict> {
    let obj = json_candidates(raw).into_iter().find_map(|c| match serde_json::from_str::<Value>(c) {
        Ok(Value::Object(map)) => Some(map),
        _ => None,
    })?;
    let requires = obj.get("requires_permission")?.as_bool()?;
    let names = obj.get("permissions")?.as_array()?;
    let mut warning = false;
    let mut permissions = PermissionSet::new();
    for name in names {
        match name.as_str().map(canonicalize_permission) {
            Some(Ok(p)) => {
                permissions.insert(p);
            }
            _ => warning = true,
        }
    }
    if !requires && !permissions.is_empty() {
        warning = true;
        permissions.clear();
    }
    if requires && permissions.is_empty() {
        warning = true;
    }
    let rationale = obj.get("rationale").and_then(Value::as_str).unwrap_or_default().to_string();
    Some(AnalysisVerdict {
        role,
        requires_permission: requires,
        permissions,
        rationale,
        raw_response: raw.to_string(),
        parse_path: ParsePath::Strict,
        warning,
    })
}

/// Parses a provider response. Tries the JSON schema first and otherwise
/// falls back to scanning for permission-shaped tokens; never fails.
pub fn parse_verdict(raw: &str, role: Role) -> AnalysisVerdict {
    if let Some(v) = strict(raw, role) {
        return v;
    }
    let permissions = scan_permission_tokens(raw);
    AnalysisVerdict {
        role,
        requires_permission: !permissions.is_empty(),
        permissions,
        rationale: String::new(),
        raw_response: raw.to_string(),
        parse_path: ParsePath::Fallback,
        warning: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(v: &AnalysisVerdict) -> Vec<&str> {
        v.permissions.iter().map(|p| p.as_str()).collect()
    }

    #[test]
    fn strict_schema() {
        let v = parse_verdict(r#"{"requires_permission":true,"permissions":["android.permission.INTERNET"],"rationale":"opens socket"}"#, Role::Detector);
        assert_eq!(v.parse_path, ParsePath::Strict);
        assert!(v.requires_permission && !v.warning);
        assert_eq!(names(&v), ["android.permission.INTERNET"]);
        assert_eq!(v.rationale, "opens socket");
    }

    #[test]
    fn strict_permission_free() {
        let v = parse_verdict(r#"{"requires_permission":false,"permissions":[]}"#, Role::Analyst);
        assert!(!v.requires_permission && v.permissions.is_empty() && !v.warning);
        assert_eq!(v.parse_path, ParsePath::Strict);
    }

    #[test]
    fn prose_falls_back() {
        let v = parse_verdict("This method needs android.permission.ACCESS_FINE_LOCATION.", Role::Analyst);
        assert_eq!(v.parse_path, ParsePath::Fallback);
        assert_eq!(names(&v), ["android.permission.ACCESS_FINE_LOCATION"]);
        assert!(v.requires_permission);
    }

    #[test]
    fn empty_text_warns() {
        let v = parse_verdict("", Role::Detector);
        assert!(!v.requires_permission && v.warning);
    }

    #[test]
    fn fenced_json_and_short_names() {
        let v = parse_verdict("Sure!\n```json\n{\"requires_permission\": true, \"permissions\": [\"CAMERA\"]}\n```", Role::Detector);
        assert_eq!(v.parse_path, ParsePath::Strict);
        assert_eq!(names(&v), ["android.permission.CAMERA"]);
    }

    #[test]
    fn contradictory_false_clears_permissions() {
        let v = parse_verdict(r#"{"requires_permission":false,"permissions":["CAMERA"]}"#, Role::Detector);
        assert!(v.permissions.is_empty() && v.warning);
    }

    proptest! {
        #[test]
        fn never_panics_and_respects_invariant(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
            let text = String::from_utf8_lossy(&bytes);
            let v = parse_verdict(&text, Role::Analyst);
            prop_assert!(v.requires_permission || v.permissions.is_empty());
        }
    }
}
