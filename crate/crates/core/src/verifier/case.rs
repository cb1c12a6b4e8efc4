//! Probe test cases: generation, self-containment validation and refinement.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::snippets::SnippetCorpusEntry;
use super::template::PROBE_CLASS;
use crate::extract::lexer::{tokenize, Token, TokenKind};
use crate::extract::{parse_file_methods, ApiRecord, MethodSignature, Modifier, SignatureKey};
use crate::llm::{complete_with_retry, CompletionRequest, Provider, RetryPolicy, Task};
use crate::permission::PermissionSet;
use crate::store::MappingStore;

pub const DEFAULT_MAX_ITERATIONS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseStatus {
    Draft,
    Validated,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// (a) exactly one entry point and nothing else
    EntryPoint,
    /// (b) exactly one invocation, and it is the target
    TargetInvocation,
    /// (c) only the target, standard types and harness hooks are referenced
    DisallowedReference,
    /// (d) the target exists in the corpus for this SDK version
    UnknownTarget,
    /// (e) no file or network identifiers
    BannedIdentifier,
}

impl Rule {
    pub fn letter(self) -> char {
        match self {
            Self::EntryPoint => 'a',
            Self::TargetInvocation => 'b',
            Self::DisallowedReference => 'c',
            Self::UnknownTarget => 'd',
            Self::BannedIdentifier => 'e',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) {}", self.rule.letter(), self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Refinement {
    pub iteration: usize,
    /// Violations remaining after this round's revision.
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub case_id: String,
    pub api_id: String,
    pub signature: MethodSignature,
    pub code: String,
    /// Permissions granted to the simulated client app.
    pub manifest_permissions: PermissionSet,
    pub sdk_version: u32,
    pub status: CaseStatus,
    pub refinement_history: Vec<Refinement>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_snippet: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub harness_blocked: bool,
}

impl TestCase {
    pub fn target(&self) -> SignatureKey {
        self.signature.key()
    }
}

pub fn case_id(api_id: &str) -> String {
    format!("tc-{api_id}")
}

const RULES_TEXT: &str = "Write one Java class named PermissionProbe with a single `public static void main(String[] args)` \
method. The method must call the target API exactly once and nothing else. Obtain receivers only through \
`Harness.instance(Type.class)`. Do not touch files, sockets, URLs or other SDK types.";

fn generation_prompt(record: &ApiRecord, snippet: Option<&SnippetCorpusEntry>) -> String {
    let mut prompt = format!("{RULES_TEXT}\n\nTarget API (level {}): {}\n", record.api_level, record.signature.render());
    if let Some(s) = snippet {
        prompt.push_str(&format!("\nRewrite this existing example ({}) into that form:\n{}\n", s.snippet_id, s.code));
    }
    prompt
}

/// Asks the provider for a draft probe, normalizing a retrieved snippet when
/// one is supplied. The grant set starts empty.
pub fn generate_test_case(record: &ApiRecord, provider: &dyn Provider, retrieved: Option<&SnippetCorpusEntry>, retry: RetryPolicy) -> TestCase {
    let request = CompletionRequest {
        task: if retrieved.is_some() { Task::NormalizeSnippet } else { Task::GenerateTest },
        api_id: record.api_id.clone(),
        signature: record.signature.clone(),
        prompt: generation_prompt(record, retrieved),
        context: retrieved.map(|s| s.code.clone()),
    };
    let (code, blocked) = match complete_with_retry(provider, &request, retry) {
        Ok(code) => (code, false),
        Err(e) => {
            log::warn!("test generation for {} failed: {e}", record.api_id);
            (String::new(), true)
        }
    };
    TestCase {
        case_id: case_id(&record.api_id),
        api_id: record.api_id.clone(),
        signature: record.signature.clone(),
        code,
        manifest_permissions: PermissionSet::new(),
        sdk_version: record.api_level,
        status: CaseStatus::Draft,
        refinement_history: Vec::new(),
        source_snippet: retrieved.map(|s| s.snippet_id.clone()),
        harness_blocked: blocked,
    }
}

/// What a probe may be checked against: the known API keys for one SDK version.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationContext {
    pub known: BTreeSet<SignatureKey>,
    pub sdk_version: u32,
}

impl ValidationContext {
    pub fn from_store(store: &MappingStore) -> Self {
        Self { known: store.records.values().map(ApiRecord::key).collect(), sdk_version: store.sdk_version }
    }
}

const STANDARD_TYPES: &[&str] = &[
    "String", "Object", "Integer", "Long", "Short", "Byte", "Character", "Boolean", "Float", "Double", "Void", "CharSequence",
    "Harness", PROBE_CLASS,
];

pub const HARNESS_HOOKS: &[&str] = &["instance", "context"];

pub const BANNED_IDENTIFIERS: &[&str] = &[
    "File", "FileInputStream", "FileOutputStream", "FileReader", "FileWriter", "RandomAccessFile", "Files", "Paths", "Path",
    "Socket", "ServerSocket", "DatagramSocket", "SocketChannel", "URL", "URI", "URLConnection", "HttpURLConnection",
    "HttpsURLConnection", "InetAddress", "InetSocketAddress", "Runtime", "ProcessBuilder",
];

const CALL_KEYWORDS: &[&str] = &["if", "while", "for", "switch", "catch", "synchronized", "return", "throw", "assert", "super", "this"];

fn matching_close(tokens: &[&Token], open_idx: usize, src: &str) -> Option<usize> {
    let open = tokens[open_idx].text(src).chars().next()?;
    let close = match open {
        '(' => ')',
        '{' => '}',
        _ => return None,
    };
    let mut depth = 0usize;
    for (i, t) in tokens.iter().enumerate().skip(open_idx) {
        if t.is_punct(open) {
            depth += 1;
        } else if t.is_punct(close) {
            depth -= 1;
            if depth == 0 {
                return Some(i);
            }
        }
    }
    None
}

fn arity(tokens: &[&Token], open_idx: usize, close_idx: usize) -> usize {
    if close_idx == open_idx + 1 {
        return 0;
    }
    let mut depth = 0i32;
    let mut commas = 0;
    for t in &tokens[open_idx + 1..close_idx] {
        if t.is_punct('(') || t.is_punct('{') || t.is_punct('[') {
            depth += 1;
        } else if t.is_punct(')') || t.is_punct('}') || t.is_punct(']') {
            depth -= 1;
        } else if depth == 0 && t.is_punct(',') {
            commas += 1;
        }
    }
    commas + 1
}

fn push(out: &mut Vec<Violation>, rule: Rule, detail: impl Into<String>) {
    let v = Violation { rule, detail: detail.into() };
    if !out.contains(&v) {
        out.push(v);
    }
}

/// Checks a draft against the self-containment and SDK-alignment rules.
/// An empty result means the case may be marked validated.
pub fn validate_test_case(tc: &TestCase, ctx: &ValidationContext) -> Vec<Violation> {
    let mut out = Vec::new();
    let target = tc.target();
    if !ctx.known.contains(&target) {
        push(&mut out, Rule::UnknownTarget, format!("{target} is not part of the corpus"));
    }
    if tc.sdk_version != ctx.sdk_version {
        push(&mut out, Rule::UnknownTarget, format!("case targets API level {}, corpus is {}", tc.sdk_version, ctx.sdk_version));
    }
    let src = tc.code.as_str();
    match parse_file_methods(src) {
        Err(e) => push(&mut out, Rule::EntryPoint, format!("probe does not parse: {e}")),
        Ok(parsed) => {
            let mains: Vec<_> = parsed
                .methods
                .iter()
                .filter(|m| {
                    let s = &m.signature;
                    s.fq_class == PROBE_CLASS
                        && s.name == "main"
                        && s.param_types == ["String[]"]
                        && s.modifiers.contains(&Modifier::Static)
                        && s.modifiers.contains(&Modifier::Public)
                })
                .collect();
            if mains.len() != 1 || parsed.methods.len() != 1 {
                push(&mut out, Rule::EntryPoint, format!("expected only {PROBE_CLASS}.main(String[]), found {} method(s)", parsed.methods.len()));
            }
        }
    }
    let Ok(all) = tokenize(src) else {
        return out;
    };
    let tokens: Vec<&Token> = all.iter().filter(|t| !t.is_comment()).collect();

    let mut allowed: BTreeSet<&str> = STANDARD_TYPES.iter().copied().collect();
    allowed.extend(target.fq_class.split('.'));
    for p in &target.param_types {
        allowed.extend(p.trim_end_matches("[]").split('.'));
    }
    let own_segments: BTreeSet<&str> = target.fq_class.split('.').collect();

    let mut target_calls = 0;
    let mut other_calls = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        let text = t.text(src);
        match t.kind {
            TokenKind::Str => {
                let inner = text.trim_matches('"');
                if inner.contains("://") || inner.starts_with('/') {
                    push(&mut out, Rule::BannedIdentifier, format!("path or URL literal {text}"));
                }
            }
            TokenKind::Ident => {
                if BANNED_IDENTIFIERS.contains(&text) && !own_segments.contains(text) {
                    push(&mut out, Rule::BannedIdentifier, format!("references {text}"));
                }
                if text.starts_with(|c: char| c.is_ascii_uppercase()) && !allowed.contains(text) {
                    push(&mut out, Rule::DisallowedReference, format!("references {text}"));
                }
                let is_call = tokens.get(i + 1).is_some_and(|n| n.is_punct('(')) && !CALL_KEYWORDS.contains(&text);
                if !is_call {
                    continue;
                }
                let prev = i.checked_sub(1).map(|j| tokens[j]);
                if prev.is_some_and(|p| p.kind == TokenKind::Ident && matches!(p.text(src), "void" | "new")) {
                    if prev.is_some_and(|p| p.text(src) == "new") {
                        other_calls.push(format!("new {text}"));
                    }
                    continue;
                }
                let via_harness = prev.is_some_and(|p| p.is_punct('.')) && i >= 2 && tokens[i - 2].text(src) == "Harness";
                if via_harness {
                    if !HARNESS_HOOKS.contains(&text) {
                        push(&mut out, Rule::DisallowedReference, format!("unknown harness hook Harness.{text}"));
                    }
                    continue;
                }
                let n = matching_close(&tokens, i + 1, src).map(|close| arity(&tokens, i + 1, close));
                if text == target.name && n == Some(target.param_types.len()) {
                    target_calls += 1;
                } else {
                    other_calls.push(format!("{text}/{}", n.map_or("?".to_string(), |n| n.to_string())));
                }
            }
            _ => {}
        }
    }
    if target_calls != 1 {
        push(&mut out, Rule::TargetInvocation, format!("expected one call to {}, found {target_calls}", target.dotted()));
    }
    if !other_calls.is_empty() {
        push(&mut out, Rule::TargetInvocation, format!("invokes other code: {}", other_calls.join(", ")));
    }
    out.sort();
    out
}

fn refine_prompt(tc: &TestCase, violations: &[Violation]) -> String {
    let list: Vec<String> = violations.iter().map(|v| format!("- {v}")).collect();
    format!("{RULES_TEXT}\n\nThe probe below breaks these rules:\n{}\n\nReturn a corrected probe.\n\n{}", list.join("\n"), tc.code)
}

/// Validates `tc`, asking the provider for revisions until it passes or
/// `max_iterations` rounds are spent.
pub fn refine_loop(mut tc: TestCase, provider: &dyn Provider, ctx: &ValidationContext, max_iterations: usize, retry: RetryPolicy) -> TestCase {
    if tc.harness_blocked {
        tc.status = CaseStatus::Rejected;
        return tc;
    }
    let mut violations = validate_test_case(&tc, ctx);
    if violations.is_empty() {
        tc.status = CaseStatus::Validated;
        return tc;
    }
    for iteration in 1..=max_iterations {
        let request = CompletionRequest {
            task: Task::RefineTest,
            api_id: tc.api_id.clone(),
            signature: tc.signature.clone(),
            prompt: refine_prompt(&tc, &violations),
            context: Some(tc.code.clone()),
        };
        match complete_with_retry(provider, &request, retry) {
            Ok(code) => tc.code = code,
            Err(e) => {
                log::warn!("refinement of {} failed: {e}", tc.case_id);
                tc.harness_blocked = true;
                tc.refinement_history.push(Refinement { iteration, violations });
                tc.status = CaseStatus::Rejected;
                return tc;
            }
        }
        violations = validate_test_case(&tc, ctx);
        tc.refinement_history.push(Refinement { iteration, violations: violations.clone() });
        if violations.is_empty() {
            tc.status = CaseStatus::Validated;
            return tc;
        }
    }
    tc.status = CaseStatus::Rejected;
    tc
}
