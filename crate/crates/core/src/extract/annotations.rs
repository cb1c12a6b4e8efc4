//! Declared-permission harvesting from `@RequiresPermission` annotations and
//! `{@link android.Manifest.permission#X}` doc references.

use std::sync::LazyLock;

use regex::Regex;

use crate::permission::{canonicalize_permission, PermissionSet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationWarning {
    pub annotation: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DeclaredPermissions {
    pub permissions: PermissionSet,
    pub warnings: Vec<AnnotationWarning>,
}

static DOC_LINK: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\{@link\s+(?:android\.)?Manifest\.permission#([A-Z][A-Z0-9_]*)\s*[^}]*\}").unwrap()
});

static ANNOTATION_NAME: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^@\s*(?:android\.annotation\.|androidx\.annotation\.)?requirespermission(?:\.(?:read|write))?$").unwrap());

static PERMISSION_REF: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"^(?:"([^"]+)"|((?:[A-Za-z_][\w]*\.)*[A-Z][A-Z0-9_]*))$"#).unwrap()
});

fn is_identifier(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn is_requires_permission(name: &str) -> bool {
    ANNOTATION_NAME.is_match(name.trim())
}

/// Element keys that never carry permission names.
const IGNORED_KEYS: &[&str] = &["conditional"];

/// Permissions named by one `@RequiresPermission(...)` annotation, or `None`
/// if the argument list cannot be understood.
fn annotation_permissions(args: &str) -> Option<PermissionSet> {
    let mut out = PermissionSet::new();
    let mut any = false;
    for raw in split_elements(args) {
        let mut element = raw.trim().trim_start_matches('{').trim();
        if element.is_empty() {
            continue;
        }
        if let Some((key, value)) = element.split_once('=').filter(|(k, _)| is_identifier(k.trim())) {
            let key = key.trim();
            if IGNORED_KEYS.contains(&key) {
                continue;
            }
            if !matches!(key, "value" | "allOf" | "anyOf") {
                return None;
            }
            element = value.trim();
        }
        // wrapper forms: @RequiresPermission.Read(@RequiresPermission(X))
        if let Some(rest) = element.strip_prefix('@') {
            let open = rest.find('(')?;
            let inner = rest[open + 1..].strip_suffix(')')?;
            out.extend(annotation_permissions(inner)?);
            any = true;
            continue;
        }
        let element = element.trim_start_matches('{').trim_end_matches('}').trim();
        if element.is_empty() {
            continue;
        }
        let caps = PERMISSION_REF.captures(element)?;
        let name = caps.get(1).or_else(|| caps.get(2))?.as_str();
        out.insert(canonicalize_permission(name).ok()?);
        any = true;
    }
    any.then_some(out)
}

/// Splits on commas outside parentheses and string literals. Array braces
/// are left on the pieces and stripped by the caller, which flattens
/// `allOf = {A, B}` into `allOf = {A` and `B}`.
fn split_elements(args: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut in_str = false;
    let mut start = 0;
    for (i, c) in args.char_indices() {
        match c {
            '"' => in_str = !in_str,
            '(' if !in_str => depth += 1,
            ')' if !in_str => depth -= 1,
            ',' if !in_str && depth == 0 => {
                parts.push(&args[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&args[start..]);
    parts
}

/// Union of permissions named by `@RequiresPermission` annotations and
/// `{@link android.Manifest.permission#X}` references in the doc comment.
pub fn extract_declared_permissions(doc_comment: &str, annotations: &[String]) -> DeclaredPermissions {
    let mut result = DeclaredPermissions::default();
    for cap in DOC_LINK.captures_iter(doc_comment) {
        if let Ok(p) = canonicalize_permission(&cap[1]) {
            result.permissions.insert(p);
        }
    }
    for annotation in annotations {
        let (name, args) = match annotation.find('(') {
            Some(i) => (&annotation[..i], Some(&annotation[i + 1..])),
            None => (annotation.as_str(), None),
        };
        if !is_requires_permission(name) {
            continue;
        }
        let parsed = args
            .and_then(|a| a.trim_end().strip_suffix(')'))
            .and_then(annotation_permissions);
        match parsed {
            Some(perms) => result.permissions.extend(perms),
            None => result.warnings.push(AnnotationWarning {
                annotation: annotation.clone(),
                reason: "unrecognized annotation arguments".into(),
            }),
        }
    }
    result
}
