use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::permission::PermissionSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modifier {
    Public,
    Protected,
    Private,
    Static,
    Final,
    Abstract,
    Native,
    Synchronized,
    Transient,
    Volatile,
    Strictfp,
    Default,
}

impl Modifier {
    pub fn from_keyword(word: &str) -> Option<Self> {
        Some(match word {
            "public" => Self::Public,
            "protected" => Self::Protected,
            "private" => Self::Private,
            "static" => Self::Static,
            "final" => Self::Final,
            "abstract" => Self::Abstract,
            "native" => Self::Native,
            "synchronized" => Self::Synchronized,
            "transient" => Self::Transient,
            "volatile" => Self::Volatile,
            "strictfp" => Self::Strictfp,
            "default" => Self::Default,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Public => "public",
            Self::Protected => "protected",
            Self::Private => "private",
            Self::Static => "static",
            Self::Final => "final",
            Self::Abstract => "abstract",
            Self::Native => "native",
            Self::Synchronized => "synchronized",
            Self::Transient => "transient",
            Self::Volatile => "volatile",
            Self::Strictfp => "strictfp",
            Self::Default => "default",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodSignature {
    pub fq_class: String,
    pub name: String,
    pub param_types: Vec<String>,
    pub return_type: String,
    pub modifiers: BTreeSet<Modifier>,
}

impl MethodSignature {
    pub fn key(&self) -> SignatureKey {
        SignatureKey {
            fq_class: self.fq_class.clone(),
            name: self.name.clone(),
            param_types: self.param_types.clone(),
        }
    }

    /// Human-readable declaration line, e.g. `public boolean isGPSEnabled()`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for m in &self.modifiers {
            out.push_str(m.as_str());
            out.push(' ');
        }
        out.push_str(&format!(
            "{} {}.{}({})",
            self.return_type,
            self.fq_class,
            self.name,
            self.param_types.join(", ")
        ));
        out
    }
}

/// Version-independent identity of a method: `fq_class#name(p1,p2)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SignatureKey {
    pub fq_class: String,
    pub name: String,
    pub param_types: Vec<String>,
}

impl SignatureKey {
    pub fn top_package(&self) -> &str {
        top_package(&self.fq_class)
    }

    /// `fq_class.name`, the form used by glob patterns and exception messages.
    pub fn dotted(&self) -> String {
        format!("{}.{}", self.fq_class, self.name)
    }

    /// Parameter types reduced to their simple names (`java.lang.String` -> `String`).
    pub fn simplified(&self) -> Self {
        Self {
            fq_class: self.fq_class.clone(),
            name: self.name.clone(),
            param_types: self.param_types.iter().map(|p| simple_type_name(p).to_string()).collect(),
        }
    }
}

pub fn simple_type_name(ty: &str) -> &str {
    match ty.rfind('.') {
        Some(i) => &ty[i + 1..],
        None => ty,
    }
}

pub fn top_package(fq_class: &str) -> &str {
    fq_class.split('.').next().unwrap_or(fq_class)
}

impl fmt::Display for SignatureKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}({})", self.fq_class, self.name, self.param_types.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed signature key {0:?}: expected fq_class#name(paramTypes)")]
pub struct SignatureKeyError(pub String);

impl FromStr for SignatureKey {
    type Err = SignatureKeyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || SignatureKeyError(s.to_string());
        let s = s.trim();
        let (fq_class, rest) = s.split_once('#').ok_or_else(err)?;
        let (name, params) = rest.split_once('(').ok_or_else(err)?;
        let params = params.strip_suffix(')').ok_or_else(err)?;
        if fq_class.is_empty() || name.trim().is_empty() {
            return Err(err());
        }
        let param_types = params
            .split(',')
            .map(|p| p.trim().to_string())
            .filter(|p| !p.is_empty())
            .collect();
        Ok(Self { fq_class: fq_class.trim().to_string(), name: name.trim().to_string(), param_types })
    }
}

impl TryFrom<String> for SignatureKey {
    type Error = SignatureKeyError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<SignatureKey> for String {
    fn from(k: SignatureKey) -> Self {
        k.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractionSource {
    Parser,
    Keyword,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Location {
    /// Path relative to the corpus root, `/`-separated.
    pub path: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiRecord {
    pub api_id: String,
    pub signature: MethodSignature,
    pub location: Location,
    pub top_package: String,
    pub api_level: u32,
    pub deprecated: bool,
    pub doc_comment: String,
    pub body_text: String,
    pub declared_permissions: PermissionSet,
    pub is_jni: bool,
    pub extraction_source: ExtractionSource,
}

impl ApiRecord {
    pub fn key(&self) -> SignatureKey {
        self.signature.key()
    }
}

/// Lowercase hex of the first 128 bits of SHA-256 over
/// `corpus_id|fq_class|name|p1,p2,...`.
pub fn api_id(corpus_id: &str, fq_class: &str, name: &str, param_types: &[String]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(corpus_id.as_bytes());
    hasher.update(b"|");
    hasher.update(fq_class.as_bytes());
    hasher.update(b"|");
    hasher.update(name.as_bytes());
    hasher.update(b"|");
    hasher.update(param_types.join(",").as_bytes());
    let digest = hasher.finalize();
    digest[..16].iter().map(|b| format!("{b:02x}")).collect()
}
