//! Canonical permission names and the token grammar used to find them in free text.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ANDROID_PREFIX: &str = "android.permission.";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PermissionError {
    #[error("empty permission name")]
    Empty,
    #[error("not a permission name: {0:?}")]
    Invalid(String),
}

/// A permission name in canonical form (`android.permission.CAMERA`,
/// `com.vendor.permission.PAY`, ...).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Permission(String);

impl Permission {
    pub fn parse(name: &str) -> Result<Self, PermissionError> {
        canonicalize_permission(name)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The trailing upper-snake constant, e.g. `CAMERA`.
    pub fn short_name(&self) -> &str {
        self.0.rsplit('.').next().unwrap_or(&self.0)
    }
}

impl fmt::Display for Permission {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for Permission {
    type Error = PermissionError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        canonicalize_permission(&value)
    }
}

impl From<Permission> for String {
    fn from(p: Permission) -> Self {
        p.0
    }
}

pub type PermissionSet = BTreeSet<Permission>;

fn is_upper_snake(s: &str) -> bool {
    !s.is_empty()
        && s.chars().next().is_some_and(|c| c.is_ascii_uppercase() || c == '_')
        && s.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_')
}

/// Maps the spellings seen in SDK sources and tool output onto one form.
///
/// `CAMERA`, `permission.CAMERA`, `Manifest.permission.CAMERA` and
/// `android.Manifest.permission.CAMERA` all become `android.permission.CAMERA`.
/// Other dotted names pass through unchanged. Idempotent.
pub fn canonicalize_permission(name: &str) -> Result<Permission, PermissionError> {
    let name = name.trim();
    if name.is_empty() {
        return Err(PermissionError::Empty);
    }
    let valid_chars = name
        .chars()
        .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '$');
    if !valid_chars || name.starts_with('.') || name.ends_with('.') || name.contains("..") {
        return Err(PermissionError::Invalid(name.to_string()));
    }
    if is_upper_snake(name) {
        return Ok(Permission(format!("{ANDROID_PREFIX}{name}")));
    }
    for alias in ["android.Manifest.permission.", "Manifest.permission.", "permission."] {
        if let Some(rest) = name.strip_prefix(alias) {
            if is_upper_snake(rest) {
                return Ok(Permission(format!("{ANDROID_PREFIX}{rest}")));
            }
        }
    }
    if name.contains('.') {
        return Ok(Permission(name.to_string()));
    }
    Err(PermissionError::Invalid(name.to_string()))
}

static GRAMMAR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[a-zA-Z][\w.]*\.permission\.[A-Z0-9_]+$").unwrap());

static TOKEN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[a-zA-Z][\w.]*?\.permission\.[A-Z0-9_]+").unwrap());

static BARE_MENTION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b([A-Z][A-Z0-9]*(?:_[A-Z0-9]+)+|[A-Z]{3,})\s+permissions?\b").unwrap());

/// True if `p` matches the canonical permission grammar or starts with one of
/// the configured vendor prefixes.
pub fn in_canonical_language(p: &Permission, vendor_prefixes: &[String]) -> bool {
    GRAMMAR.is_match(p.as_str()) || vendor_prefixes.iter().any(|v| p.as_str().starts_with(v.as_str()))
}

/// Every dotted `<prefix>.permission.<CONST>` token in `text`, canonicalized.
pub fn scan_permission_tokens(text: &str) -> PermissionSet {
    let bytes = text.as_bytes();
    TOKEN
        .find_iter(text)
        .filter(|m| {
            // reject matches glued to a preceding identifier character
            m.start() == 0 || {
                let prev = bytes[m.start() - 1];
                !(prev.is_ascii_alphanumeric() || prev == b'_' || prev == b'.')
            }
        })
        // and ones that stop inside a longer identifier (`android.permission.PermissionManager`)
        .filter(|m| bytes.get(m.end()).is_none_or(|next| !next.is_ascii_alphanumeric()))
        .filter_map(|m| canonicalize_permission(m.as_str()).ok())
        .collect()
}

/// Dotted tokens plus prose mentions of the form `CAMERA permission`.
pub fn scan_prose_mentions(text: &str) -> PermissionSet {
    let mut out = scan_permission_tokens(text);
    for cap in BARE_MENTION.captures_iter(text) {
        if let Ok(p) = canonicalize_permission(&cap[1]) {
            out.insert(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canon(s: &str) -> String {
        canonicalize_permission(s).unwrap().to_string()
    }

    #[test]
    fn bare_names_get_the_android_prefix() {
        assert_eq!(canon("CAMERA"), "android.permission.CAMERA");
        assert_eq!(canon("  RECORD_AUDIO "), "android.permission.RECORD_AUDIO");
    }

    #[test]
    fn manifest_aliases_collapse() {
        assert_eq!(canon("Manifest.permission.CAMERA"), "android.permission.CAMERA");
        assert_eq!(canon("android.Manifest.permission.CAMERA"), "android.permission.CAMERA");
        assert_eq!(canon("permission.INTERNET"), "android.permission.INTERNET");
    }

    #[test]
    fn canonical_and_vendor_names_pass_through() {
        assert_eq!(canon("android.permission.RECORD_AUDIO"), "android.permission.RECORD_AUDIO");
        assert_eq!(canon("com.vendor.permission.PAY"), "com.vendor.permission.PAY");
    }

    #[test]
    fn empty_and_garbage_are_rejected() {
        assert_eq!(canonicalize_permission("   "), Err(PermissionError::Empty));
        assert!(canonicalize_permission("not a permission").is_err());
        assert!(canonicalize_permission("camera").is_err());
        assert!(canonicalize_permission("a..b").is_err());
    }

    #[test]
    fn token_scan_handles_prose() {
        let found = scan_permission_tokens(
            "requires android.permission.INTERNET or be running as root; see Manifest.permission.CAMERA.",
        );
        let names: Vec<_> = found.iter().map(|p| p.as_str()).collect();
        assert_eq!(names, ["android.permission.CAMERA", "android.permission.INTERNET"]);
        assert!(scan_permission_tokens("NullPointerException").is_empty());
    }

    #[test]
    fn prose_mentions_need_the_word_permission() {
        let found = scan_prose_mentions("Requires the ACCESS_FINE_LOCATION permission.");
        assert!(found.contains(&canonicalize_permission("ACCESS_FINE_LOCATION").unwrap()));
        assert!(scan_prose_mentions("Returns the ACCESS_FINE_LOCATION value").is_empty());
    }

    #[test]
    fn serde_goes_through_canonicalization() {
        let p: Permission = serde_json::from_str("\"CAMERA\"").unwrap();
        assert_eq!(p.as_str(), "android.permission.CAMERA");
        assert_eq!(serde_json::to_string(&p).unwrap(), "\"android.permission.CAMERA\"");
        assert!(serde_json::from_str::<Permission>("\"\"").is_err());
    }

    proptest::proptest! {
        #[test]
        fn canonicalize_is_idempotent(name in "[A-Za-z][A-Za-z0-9_]{0,8}(\\.[A-Za-z][A-Za-z0-9_]{0,8}){0,4}") {
            if let Ok(once) = canonicalize_permission(&name) {
                let twice = canonicalize_permission(once.as_str()).unwrap();
                proptest::prop_assert_eq!(once, twice);
            }
        }
    }
}
