//! Snippet corpus and Jaccard retrieval over identifier tokens.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::SignatureKey;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnippetCorpusEntry {
    pub snippet_id: String,
    pub target_signature_tokens: BTreeSet<String>,
    pub code: String,
    #[serde(default)]
    pub source_label: String,
}

#[derive(Debug, Error)]
pub enum SnippetError {
    #[error("cannot read snippet corpus {path}: {message}")]
    Io { path: String, message: String },
    #[error("snippet file {path}: {message}")]
    Malformed { path: String, message: String },
}

/// Splits identifiers on punctuation and camelCase boundaries, lowercased.
/// `isGPSEnabled` gives `is`, `gps`, `enabled`.
pub fn identifier_tokens(text: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for word in text.split(|c: char| !c.is_ascii_alphanumeric()) {
        let chars: Vec<char> = word.chars().collect();
        let mut start = 0;
        for i in 1..chars.len() {
            let (prev, cur) = (chars[i - 1], chars[i]);
            let next_lower = chars.get(i + 1).is_some_and(|c| c.is_ascii_lowercase());
            let boundary = (prev.is_ascii_lowercase() && cur.is_ascii_uppercase())
                || (prev.is_ascii_uppercase() && cur.is_ascii_uppercase() && next_lower)
                || (prev.is_ascii_digit() != cur.is_ascii_digit());
            if boundary {
                out.insert(chars[start..i].iter().collect::<String>().to_ascii_lowercase());
                start = i;
            }
        }
        if start < chars.len() {
            out.insert(chars[start..].iter().collect::<String>().to_ascii_lowercase());
        }
    }
    out
}

pub fn signature_tokens(key: &SignatureKey) -> BTreeSet<String> {
    let mut out = identifier_tokens(&key.fq_class);
    out.extend(identifier_tokens(&key.name));
    for p in &key.param_types {
        out.extend(identifier_tokens(p));
    }
    out
}

/// Reads every `*.json` file in `dir` (sorted by name) as one entry. Token
/// lists are re-tokenized so authors may write raw identifiers.
pub fn load_snippet_corpus(dir: &Path) -> Result<Vec<SnippetCorpusEntry>, SnippetError> {
    let io = |message: String| SnippetError::Io { path: dir.display().to_string(), message };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| io(e.to_string()))?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut entries = Vec::new();
    for path in paths {
        let malformed = |message: String| SnippetError::Malformed { path: path.display().to_string(), message };
        let text = std::fs::read_to_string(&path).map_err(|e| malformed(e.to_string()))?;
        let mut entry: SnippetCorpusEntry = serde_json::from_str(&text).map_err(|e| malformed(e.to_string()))?;
        entry.target_signature_tokens = entry.target_signature_tokens.iter().flat_map(|t| identifier_tokens(t)).collect();
        if entry.target_signature_tokens.is_empty() {
            return Err(malformed("target_signature_tokens is empty".into()));
        }
        entries.push(entry);
    }
    Ok(entries)
}

/// |a ∩ b| and |a ∪ b|.
pub fn jaccard_parts(a: &BTreeSet<String>, b: &BTreeSet<String>) -> (usize, usize) {
    let inter = a.intersection(b).count();
    (inter, a.len() + b.len() - inter)
}

pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    match jaccard_parts(a, b) {
        (_, 0) => 0.0,
        (i, u) => i as f64 / u as f64,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Retrieval<'a> {
    pub entry: &'a SnippetCorpusEntry,
    pub similarity: f64,
}

/// The most similar entry at or above `threshold`; ties go to the smallest
/// snippet_id. Candidates are compared as exact fractions.
pub fn retrieve_snippet<'a>(key: &SignatureKey, corpus: &'a [SnippetCorpusEntry], threshold: f64) -> Option<Retrieval<'a>> {
    let tokens = signature_tokens(key);
    let mut best: Option<(&SnippetCorpusEntry, usize, usize)> = None;
    for entry in corpus {
        let (i, u) = jaccard_parts(&tokens, &entry.target_signature_tokens);
        if u == 0 || (i as f64) < threshold * u as f64 - 1e-9 {
            continue;
        }
        let better = match best {
            None => true,
            Some((b, bi, bu)) => {
                let (lhs, rhs) = (i * bu, bi * u);
                lhs > rhs || (lhs == rhs && entry.snippet_id < b.snippet_id)
            }
        };
        if better {
            best = Some((entry, i, u));
        }
    }
    best.map(|(entry, i, u)| Retrieval { entry, similarity: i as f64 / u as f64 })
}
