//! Role profiles, pre-labelled demonstrations and deterministic prompt rendering.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::ApiRecord;
use crate::permission::{canonicalize_permission, PermissionSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Detector,
    Analyst,
}

impl Role {
    pub const BOTH: [Role; 2] = [Role::Detector, Role::Analyst];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Detector => "detector",
            Self::Analyst => "analyst",
        }
    }
}

pub const DETECTOR_INSTRUCTION: &str = "Act as a Permission Detector. Identify permission usage in the Java method \
by checking whether it invokes API calls that involve permissions, and report the permissions those calls need.";

pub const ANALYST_INSTRUCTION: &str = "Act as a Permission Analyst. Analyze what the Java method does and infer the \
permissions it needs from its operational characteristics. Android permissions are most often involved in \
Hardware Access, Network Access, Storage Access, Location Access, Media Access, and System Tools.";

/// The six functional areas the analyst instruction must enumerate.
pub const ANALYST_CATEGORIES: [&str; 6] =
    ["Hardware Access", "Network Access", "Storage Access", "Location Access", "Media Access", "System Tools"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleProfile {
    pub role: Role,
    pub instruction: String,
}

impl RoleProfile {
    pub fn detector() -> Self {
        Self { role: Role::Detector, instruction: DETECTOR_INSTRUCTION.into() }
    }

    pub fn analyst() -> Self {
        Self { role: Role::Analyst, instruction: ANALYST_INSTRUCTION.into() }
    }

    pub fn for_role(role: Role) -> Self {
        match role {
            Role::Detector => Self::detector(),
            Role::Analyst => Self::analyst(),
        }
    }
}

/// A labelled example. An empty permission set labels it permission-free.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demonstration {
    pub code_snippet: String,
    #[serde(default)]
    pub comment: String,
    #[serde(default)]
    pub permissions: PermissionSet,
}

impl Demonstration {
    pub fn is_permission_required(&self) -> bool {
        !self.permissions.is_empty()
    }

    fn label(&self) -> String {
        if self.permissions.is_empty() {
            "permission-free".into()
        } else {
            let names: Vec<&str> = self.permissions.iter().map(|p| p.as_str()).collect();
            format!("permission-required: {}", names.join(", "))
        }
    }
}

fn demo(code: &str, comment: &str, permissions: &[&str]) -> Demonstration {
    Demonstration {
        code_snippet: code.trim_start_matches('\n').into(),
        comment: comment.into(),
        permissions: permissions.iter().map(|p| canonicalize_permission(p).expect("bundled demo permission")).collect(),
    }
}

/// Four bundled cases: an explicit declaration, a name that suggests a
/// permission, an implicit requirement, and a permission-free helper.
pub fn default_demonstrations() -> Vec<Demonstration> {
    vec![
        demo(
            r#"
@RequiresPermission(Manifest.permission.CAMERA)
public void capturePhoto(Camera camera, PictureCallback callback) {
    camera.takePicture(null, null, callback);
}"#,
            "Captures a still image with the device camera.",
            &["CAMERA"],
        ),
        demo(
            r#"
public boolean hasLocationPermission(Context context) {
    return context.checkSelfPermission(Manifest.permission.ACCESS_FINE_LOCATION)
            == PackageManager.PERMISSION_GRANTED;
}"#,
            "Returns whether the caller may read the precise location.",
            &["ACCESS_FINE_LOCATION"],
        ),
        demo(
            r#"
public boolean isInternetConnected(Context context) {
    ConnectivityManager cm = context.getSystemService(ConnectivityManager.class);
    NetworkInfo info = cm.getActiveNetworkInfo();
    return info != null && info.isConnected();
}"#,
            "",
            &["ACCESS_NETWORK_STATE"],
        ),
        demo(
            r#"
public static int clampPercent(int value) {
    return Math.max(0, Math.min(100, value));
}"#,
            "Clamps a value into the range 0..100.",
            &[],
        ),
    ]
}

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("a prompt needs at least one permission-required and one permission-free demonstration")]
    Demonstrations,
    #[error("rendered prompt is {len} characters, over the limit of {limit}")]
    TooLong { len: usize, limit: usize },
    #[error("cannot read demonstrations file {path}: {message}")]
    File { path: String, message: String },
}

pub fn load_demonstrations(path: &Path) -> Result<Vec<Demonstration>, PromptError> {
    let err = |message: String| PromptError::File { path: path.display().to_string(), message };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    let demos: Vec<Demonstration> = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
    check_demonstrations(&demos)?;
    Ok(demos)
}

pub fn check_demonstrations(demos: &[Demonstration]) -> Result<(), PromptError> {
    let required = demos.iter().any(Demonstration::is_permission_required);
    let free = demos.iter().any(|d| !d.is_permission_required());
    if required && free {
        Ok(())
    } else {
        Err(PromptError::Demonstrations)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTarget {
    pub signature: String,
    pub doc_comment: String,
    pub body_text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PromptLimits {
    /// Body text beyond this many characters is cut.
    pub body_budget: usize,
    pub max_prompt_chars: usize,
}

impl Default for PromptLimits {
    fn default() -> Self {
        Self { body_budget: 4000, max_prompt_chars: 16000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptBundle {
    pub role_profile: RoleProfile,
    pub demonstrations: Vec<Demonstration>,
    pub target: PromptTarget,
    pub sdk_version: u32,
}

pub const OUTPUT_DIRECTIVE: &str = "Respond with one JSON object and nothing else: \
{\"requires_permission\": true|false, \"permissions\": [\"<fully qualified permission name>\", ...], \
\"rationale\": \"<one sentence>\"}";

fn or_none(text: &str) -> &str {
    if text.trim().is_empty() {
        "(none)"
    } else {
        text.trim_end()
    }
}

impl PromptBundle {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "## Role\n{}\n", self.role_profile.instruction);
        out.push_str("## Examples\n");
        for (i, d) in self.demonstrations.iter().enumerate() {
            let _ = writeln!(out, "### Example {}\nCode:\n{}\nComment: {}\nLabel: {}\n", i + 1, d.code_snippet.trim_end(), or_none(&d.comment), d.label());
        }
        let _ = writeln!(
            out,
            "## Target (API level {})\nSignature: {}\nComment:\n{}\nCode:\n{}\n",
            self.sdk_version,
            self.target.signature,
            or_none(&self.target.doc_comment),
            or_none(&self.target.body_text)
        );
        let _ = writeln!(out, "## Output\n{OUTPUT_DIRECTIVE}");
        out
    }
}

fn truncate_chars(text: &str, budget: usize) -> &str {
    match text.char_indices().nth(budget) {
        Some((i, _)) => &text[..i],
        None => text,
    }
}

/// Assembles the prompt for one record. The body is cut to `limits.body_budget`
/// characters; demonstrations are never cut.
pub fn build_prompt(role: &RoleProfile, demos: &[Demonstration], record: &ApiRecord, limits: PromptLimits) -> Result<PromptBundle, PromptError> {
    check_demonstrations(demos)?;
    let bundle = PromptBundle {
        role_profile: role.clone(),
        demonstrations: demos.to_vec(),
        target: PromptTarget {
            signature: record.signature.render(),
            doc_comment: record.doc_comment.clone(),
            body_text: truncate_chars(&record.body_text, limits.body_budget).to_string(),
        },
        sdk_version: record.api_level,
    };
    let len = bundle.render().chars().count();
    if len > limits.max_prompt_chars {
        return Err(PromptError::TooLong { len, limit: limits.max_prompt_chars });
    }
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::record::top_package;
    use crate::extract::{ExtractionSource, Location, MethodSignature};

    fn record(name: &str, body: &str) -> ApiRecord {
        ApiRecord {
            api_id: "0".repeat(32),
            signature: MethodSignature {
                fq_class: "android.location.LocationHelper".into(),
                name: name.into(),
                param_types: vec!["Context".into()],
                return_type: "boolean".into(),
                modifiers: Default::default(),
            },
            location: Location { path: "L.java".into(), line: 3 },
            top_package: top_package("android.location.LocationHelper").into(),
            api_level: 10,
            deprecated: false,
            doc_comment: "/** Checks location access. */".into(),
            body_text: body.into(),
            declared_permissions: Default::default(),
            is_jni: false,
            extraction_source: ExtractionSource::Parser,
        }
    }

    #[test]
    fn profiles_carry_their_charges() {
        assert!(RoleProfile::detector().instruction.contains("Permission Detector"));
        let analyst = RoleProfile::analyst().instruction;
        assert!(analyst.contains("Permission Analyst"));
        for c in ANALYST_CATEGORIES {
            assert!(analyst.contains(c), "{c}");
        }
    }

    #[test]
    fn rendered_sections_appear_in_order() {
        let r = record("hasLocationPermission", "{ return true; }");
        let text = build_prompt(&RoleProfile::detector(), &default_demonstrations(), &r, PromptLimits::default()).unwrap().render();
        let mut cursor = 0;
        let mut expect = vec![DETECTOR_INSTRUCTION.to_string()];
        expect.extend((1..=4).map(|i| format!("### Example {i}")));
        expect.extend(["Label: permission-free".to_string(), "hasLocationPermission(Context)".into(), OUTPUT_DIRECTIVE.into()]);
        for needle in expect {
            let at = text[cursor..].find(&needle).unwrap_or_else(|| panic!("{needle} missing after byte {cursor}"));
            cursor += at + needle.len();
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let r = record("isGPSEnabled", "{ return gps; }");
        let a = build_prompt(&RoleProfile::analyst(), &default_demonstrations(), &r, PromptLimits::default()).unwrap().render();
        let b = build_prompt(&RoleProfile::analyst(), &default_demonstrations(), &r, PromptLimits::default()).unwrap().render();
        assert_eq!(a, b);
    }

    #[test]
    fn demonstrations_are_required() {
        let r = record("f", "");
        assert!(matches!(build_prompt(&RoleProfile::detector(), &[], &r, PromptLimits::default()), Err(PromptError::Demonstrations)));
        let only_required: Vec<_> = default_demonstrations().into_iter().filter(|d| d.is_permission_required()).collect();
        assert!(build_prompt(&RoleProfile::detector(), &only_required, &r, PromptLimits::default()).is_err());
    }

    #[test]
    fn body_is_truncated_and_limit_enforced() {
        let r = record("f", &"x".repeat(10_000));
        let limits = PromptLimits { body_budget: 100, max_prompt_chars: 16_000 };
        let bundle = build_prompt(&RoleProfile::detector(), &default_demonstrations(), &r, limits).unwrap();
        assert_eq!(bundle.target.body_text.len(), 100);
        let tight = PromptLimits { body_budget: 100, max_prompt_chars: 200 };
        assert!(matches!(build_prompt(&RoleProfile::detector(), &default_demonstrations(), &r, tight), Err(PromptError::TooLong { .. })));
    }

    #[test]
    fn demonstration_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("demos.json");
        std::fs::write(&path, serde_json::to_string(&default_demonstrations()).unwrap()).unwrap();
        assert_eq!(load_demonstrations(&path).unwrap(), default_demonstrations());
    }
}
