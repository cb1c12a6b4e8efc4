//! Line-pattern fallback for method declarations the parser cannot reach.
//!
//! Matches `<modifier> <return_type> <name>(<params>)` on comment-stripped
//! lines. Total over any input: garbage simply matches nothing.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;

use super::record::{MethodSignature, Modifier};

pub const DEFAULT_TRIGGER_KEYWORDS: &[&str] = &["get", "set", "create", "request", "manage"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordMatch {
    pub signature: MethodSignature,
    pub line: usize,
    /// First trigger keyword found in the method name, if any.
    pub trigger: Option<String>,
    /// Annotations on the declaration line and on annotation-only lines directly above it.
    pub annotations: Vec<String>,
    /// Nearest `/** ... */` comment ending within two lines above the declaration.
    pub doc_comment: String,
}

static DECL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(concat!(
        r"^\s*((?:@[\w.]+(?:\([^)]*\))?\s+)*)",
        r"((?:(?:public|protected|private|static|final|abstract|native|synchronized|default|strictfp)\s+)+)",
        r"(?:<[^>]*>\s+)?",
        r"([A-Za-z_$][\w.$]*(?:\s*<[^()]*?>)?(?:\s*\[\s*\])*)\s+",
        r"([A-Za-z_$][\w$]*)\s*\((.*)$",
    ))
    .unwrap()
});

static ANNOTATION_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(@[\w.]+(?:\(.*\))?\s*)+$").unwrap());

static ANNOTATION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"@[\w.]+(?:\([^)]*\))?").unwrap());

static ANNOTATION_ORIG: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"@[\w.]+(?:\((?:"[^"]*"|[^)"])*\))?"#).unwrap());

static PACKAGE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*package\s+([\w.]+)\s*;").unwrap());

static TYPE_DECL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b(?:class|interface|enum|record)\s+([A-Za-z_$][\w$]*)").unwrap());

const NOT_TYPES: &[&str] = &["class", "interface", "enum", "record", "new", "return", "throw", "else", "extends"];

/// Comment and literal content blanked to spaces; newlines preserved so line
/// numbers survive. Also returns the doc comments as (end line, text).
fn strip_comments(text: &str) -> (String, Vec<(usize, String)>) {
    #[derive(PartialEq)]
    enum State {
        Code,
        Line,
        Block { doc: bool, start: usize },
        Str,
        Char,
    }
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut docs = Vec::new();
    let mut state = State::Code;
    let mut line = 1;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        match state {
            State::Code => {
                if c == '/' && next == Some('/') {
                    state = State::Line;
                    out.push_str("  ");
                    i += 2;
                    continue;
                }
                if c == '/' && next == Some('*') {
                    let doc = chars.get(i + 2) == Some(&'*') && chars.get(i + 3) != Some(&'/');
                    state = State::Block { doc, start: i };
                    out.push_str("  ");
                    i += 2;
                    continue;
                }
                if c == '"' {
                    state = State::Str;
                } else if c == '\'' {
                    state = State::Char;
                }
                out.push(c);
            }
            State::Line => {
                if c == '\n' {
                    state = State::Code;
                    out.push('\n');
                } else {
                    out.push(' ');
                }
            }
            State::Block { doc, start } => {
                if c == '*' && next == Some('/') {
                    if doc {
                        docs.push((line, chars[start..i + 2].iter().collect()));
                    }
                    state = State::Code;
                    out.push_str("  ");
                    i += 2;
                    continue;
                }
                out.push(if c == '\n' { '\n' } else { ' ' });
            }
            State::Str | State::Char => {
                let quote = if state == State::Str { '"' } else { '\'' };
                if c == '\\' {
                    out.push(' ');
                    if let Some(n) = next {
                        out.push(if n == '\n' { '\n' } else { ' ' });
                        if n == '\n' {
                            line += 1;
                        }
                    }
                    i += 2;
                    continue;
                }
                if c == quote || c == '\n' {
                    state = State::Code;
                    out.push(c);
                } else {
                    out.push(' ');
                }
            }
        }
        if c == '\n' {
            line += 1;
        }
        i += 1;
    }
    (out, docs)
}

fn camel_segments(name: &str) -> Vec<&str> {
    let mut segments = Vec::new();
    let mut start = 0;
    let chars: Vec<(usize, char)> = name.char_indices().collect();
    for w in 1..chars.len() {
        let (i, c) = chars[w];
        let prev = chars[w - 1].1;
        let next_lower = chars.get(w + 1).is_some_and(|(_, n)| n.is_lowercase());
        let boundary = c == '_'
            || prev == '_'
            || (c.is_uppercase() && (prev.is_lowercase() || prev.is_ascii_digit()))
            || (c.is_uppercase() && prev.is_uppercase() && next_lower);
        if boundary {
            if start < i {
                segments.push(&name[start..i]);
            }
            start = i;
        }
    }
    if start < name.len() {
        segments.push(&name[start..]);
    }
    segments.into_iter().map(|s| s.trim_matches('_')).filter(|s| !s.is_empty()).collect()
}

/// The first configured keyword that prefixes a camelCase segment of `name`
/// (case-sensitive).
pub fn trigger_keyword<'k>(name: &str, keywords: &'k [String]) -> Option<&'k str> {
    let segments = camel_segments(name);
    keywords
        .iter()
        .find(|k| segments.iter().any(|s| s.starts_with(k.as_str())))
        .map(|k| k.as_str())
}

pub fn default_keywords() -> Vec<String> {
    DEFAULT_TRIGGER_KEYWORDS.iter().map(|s| s.to_string()).collect()
}

/// Generic arguments removed and whitespace squeezed: `List < String > []` -> `List[]`.
pub(crate) fn erase_type(ty: &str) -> String {
    let mut out = String::new();
    let mut depth = 0;
    for c in ty.chars() {
        match c {
            '<' => depth += 1,
            '>' => depth -= 1,
            _ if depth > 0 || c.is_whitespace() => {}
            _ => out.push(c),
        }
    }
    out
}

fn parse_params(params: &str) -> Option<Vec<String>> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut current = String::new();
    for c in params.chars() {
        match c {
            '<' => depth += 1,
            '>' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(std::mem::take(&mut current));
                continue;
            }
            _ => {}
        }
        current.push(c);
    }
    parts.push(current);
    let mut out = Vec::new();
    for part in parts {
        let cleaned = ANNOTATION.replace_all(&part, " ");
        let mut words: Vec<&str> = cleaned.split_whitespace().filter(|w| *w != "final").collect();
        if words.is_empty() {
            if out.is_empty() {
                continue;
            }
            return None;
        }
        // name is the last word; everything before it is the type
        let mut dims = 0;
        let mut name = words.pop()?;
        while let Some(stripped) = name.strip_suffix("[]") {
            dims += 1;
            name = stripped;
        }
        if words.is_empty() {
            return None;
        }
        let mut ty = erase_type(&words.join(" "));
        if let Some(base) = ty.strip_suffix("...") {
            ty = format!("{base}[]");
        }
        for _ in 0..dims {
            ty.push_str("[]");
        }
        out.push(ty);
    }
    Some(out)
}

pub fn keyword_scan(text: &str) -> Vec<KeywordMatch> {
    keyword_scan_with(text, &default_keywords())
}

pub fn keyword_scan_with(text: &str, keywords: &[String]) -> Vec<KeywordMatch> {
    let (stripped, docs) = strip_comments(text);
    let lines: Vec<&str> = stripped.lines().collect();
    let orig: Vec<&str> = text.lines().collect();
    let mut package = String::new();
    let mut stack: Vec<(String, i64)> = Vec::new();
    let mut pending_type: Option<String> = None;
    let mut depth: i64 = 0;
    let mut matches = Vec::new();

    for (idx, line) in lines.iter().enumerate() {
        let line_no = idx + 1;
        if let Some(cap) = PACKAGE.captures(line) {
            package = cap[1].to_string();
        }
        if let Some(cap) = TYPE_DECL.captures(line) {
            pending_type = Some(cap[1].to_string());
        }
        if let Some((mut m, above)) = match_declaration(&lines, &orig, idx, keywords) {
            let mut fq: Vec<&str> = Vec::new();
            if !package.is_empty() {
                fq.push(&package);
            }
            fq.extend(stack.iter().map(|(n, _)| n.as_str()));
            m.signature.fq_class = fq.join(".");
            m.line = line_no;
            m.doc_comment = docs
                .iter()
                .rev()
                .find(|(end, _)| *end <= line_no && *end + 2 + above >= line_no)
                .map(|(_, d)| d.clone())
                .unwrap_or_default();
            matches.push(m);
        }
        for c in line.chars() {
            match c {
                '{' => {
                    if let Some(name) = pending_type.take() {
                        stack.push((name, depth));
                    }
                    depth += 1;
                }
                '}' => {
                    depth -= 1;
                    while stack.last().is_some_and(|(_, d)| *d >= depth) {
                        stack.pop();
                    }
                }
                _ => {}
            }
        }
    }
    matches
}

/// A match at `lines[idx]` plus the number of annotation-only lines above it.
fn match_declaration(lines: &[&str], orig: &[&str], idx: usize, keywords: &[String]) -> Option<(KeywordMatch, usize)> {
    let cap = DECL.captures(lines[idx])?;
    let return_type = erase_type(&cap[3]);
    if NOT_TYPES.contains(&return_type.as_str()) {
        return None;
    }
    let name = cap[4].to_string();

    // params may continue onto following lines
    let mut rest = cap[5].to_string();
    let mut extra = 0;
    while !rest.contains(')') {
        extra += 1;
        if extra > 5 || idx + extra >= lines.len() {
            return None;
        }
        rest.push(' ');
        rest.push_str(lines[idx + extra]);
    }
    let params = &rest[..rest.find(')')?];
    let param_types = parse_params(params)?;

    let modifiers: BTreeSet<Modifier> = cap[2].split_whitespace().filter_map(Modifier::from_keyword).collect();
    // annotation text comes from the unstripped line so string arguments survive
    let original = |j: usize, chars: Option<usize>| -> Vec<String> {
        let line = orig.get(j).copied().unwrap_or_default();
        let line: String = match chars {
            Some(n) => line.chars().take(n).collect(),
            None => line.to_string(),
        };
        ANNOTATION_ORIG.find_iter(&line).map(|m| m.as_str().to_string()).collect()
    };
    let mut annotations = original(idx, Some(cap[1].chars().count()));
    let mut above = 0;
    let mut j = idx;
    while j > 0 && ANNOTATION_LINE.is_match(lines[j - 1]) {
        j -= 1;
        above += 1;
        let mut found = original(j, None);
        found.append(&mut annotations);
        annotations = found;
    }
    let trigger = trigger_keyword(&name, keywords).map(str::to_string);
    let found = KeywordMatch {
        signature: MethodSignature { fq_class: String::new(), name, param_types, return_type, modifiers },
        line: idx + 1,
        trigger,
        annotations,
        doc_comment: String::new(),
    };
    Some((found, above))
}
