//! Structural recursive-descent parser for Java-style compilation units.
//!
//! Only the declaration skeleton is parsed: packages, type declarations,
//! members and method headers. Method bodies, field initializers and
//! annotation arguments are skipped as balanced token runs, so anything
//! that tokenizes and brace-balances inside a body is accepted.

use std::collections::BTreeSet;

use super::lexer::{tokenize, Token, TokenKind};
use super::record::{MethodSignature, Modifier};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedMethod {
    pub signature: MethodSignature,
    /// Line of the method name.
    pub line: usize,
    /// First and last line of the declaration, annotations included.
    pub span: (usize, usize),
    pub body_text: String,
    pub doc_comment: String,
    /// Raw annotation text, e.g. `@RequiresPermission(Manifest.permission.CAMERA)`.
    pub annotations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParsedFile {
    pub package: Option<String>,
    pub methods: Vec<ParsedMethod>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseFailure {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for ParseFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Parses every method declaration in class, interface, enum and record
/// bodies (nested types included).
pub fn parse_file_methods(src: &str) -> Result<ParsedFile, ParseFailure> {
    let all = tokenize(src).map_err(|e| ParseFailure { line: e.line, message: e.message })?;
    let (docs, toks): (Vec<Token>, Vec<Token>) = all
        .into_iter()
        .filter(|t| t.kind != TokenKind::LineComment && t.kind != TokenKind::BlockComment)
        .partition(|t| t.kind == TokenKind::DocComment);
    let mut p = Parser { src, toks, docs, pos: 0, package: None, methods: Vec::new(), last_member_end: 0 };
    p.compilation_unit()?;
    Ok(ParsedFile { package: p.package, methods: p.methods })
}

const MODIFIERS: &[&str] = &[
    "public", "protected", "private", "static", "final", "abstract", "native", "synchronized",
    "transient", "volatile", "strictfp", "default", "sealed",
];

type PResult<T> = Result<T, ParseFailure>;

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    docs: Vec<Token>,
    pos: usize,
    package: Option<String>,
    methods: Vec<ParsedMethod>,
    last_member_end: usize,
}

#[derive(Default)]
struct Prefix {
    modifiers: BTreeSet<Modifier>,
    annotations: Vec<String>,
    first: Option<usize>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, offset: usize) -> Option<&Token> {
        self.toks.get(self.pos + offset)
    }

    fn text(&self, t: &Token) -> &'a str {
        t.text(self.src)
    }

    fn peek_text(&self) -> Option<&'a str> {
        self.peek().map(|t| t.text(self.src))
    }

    fn peek_is(&self, c: char) -> bool {
        self.peek().is_some_and(|t| t.is_punct(c))
    }

    fn peek_at_is(&self, offset: usize, c: char) -> bool {
        self.peek_at(offset).is_some_and(|t| t.is_punct(c))
    }

    fn current_line(&self) -> usize {
        self.peek()
            .or_else(|| self.toks.last())
            .map(|t| t.line)
            .unwrap_or(1)
    }

    fn fail<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(ParseFailure { line: self.current_line(), message: message.into() })
    }

    fn bump(&mut self) -> PResult<Token> {
        match self.toks.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => self.fail("unexpected end of file"),
        }
    }

    fn expect(&mut self, c: char) -> PResult<Token> {
        if self.peek_is(c) {
            self.bump()
        } else {
            let found = self.peek_text().unwrap_or("end of file").to_string();
            self.fail(format!("expected '{c}', found '{found}'"))
        }
    }

    fn ident_text(&mut self) -> PResult<&'a str> {
        let t = self.ident()?;
        Ok(self.text(&t))
    }

    fn ident(&mut self) -> PResult<Token> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => self.bump(),
            _ => {
                let found = self.peek_text().unwrap_or("end of file").to_string();
                self.fail(format!("expected identifier, found '{found}'"))
            }
        }
    }

    /// Skips a balanced `open ... close` run starting at the current token and
    /// returns the index of the closing token.
    fn skip_balanced(&mut self, open: char, close: char) -> PResult<usize> {
        self.expect(open)?;
        let mut depth = 1usize;
        loop {
            let t = match self.toks.get(self.pos) {
                Some(t) => t,
                None => return self.fail(format!("unbalanced '{open}'")),
            };
            if t.is_punct(open) {
                depth += 1;
            } else if t.is_punct(close) {
                depth -= 1;
                if depth == 0 {
                    self.pos += 1;
                    return Ok(self.pos - 1);
                }
            } else if open != '{' && (t.is_punct('{') || t.is_punct('}')) && open != '<' {
                // braces inside parens/brackets (lambdas, array initializers)
                if t.is_punct('{') {
                    self.skip_balanced('{', '}')?;
                    continue;
                }
                return self.fail(format!("unbalanced '{open}'"));
            } else if open == '<' && (t.is_punct(';') || t.is_punct('{') || t.is_punct('}')) {
                return self.fail("unterminated type arguments");
            }
            self.pos += 1;
        }
    }

    fn qualified_name(&mut self) -> PResult<String> {
        let mut name = self.ident_text()?.to_string();
        while self.peek_is('.') && self.peek_at(1).is_some_and(|t| t.kind == TokenKind::Ident) {
            self.pos += 1;
            name.push('.');
            name.push_str(self.ident_text()?);
        }
        Ok(name)
    }

    fn compilation_unit(&mut self) -> PResult<()> {
        loop {
            if self.peek().is_none() {
                return Ok(());
            }
            if self.peek_is(';') {
                self.pos += 1;
                continue;
            }
            match self.peek_text() {
                Some("package") => {
                    self.pos += 1;
                    self.package = Some(self.qualified_name()?);
                    self.expect(';')?;
                }
                Some("import") => {
                    self.pos += 1;
                    while !self.peek_is(';') {
                        if self.peek().is_none() || self.peek_is('{') || self.peek_is('}') {
                            return self.fail("malformed import");
                        }
                        self.pos += 1;
                    }
                    self.pos += 1;
                }
                _ => {
                    let prefix = self.prefix()?;
                    let outer = self.package.clone().unwrap_or_default();
                    if !self.type_declaration(&outer, &prefix)? {
                        let found = self.peek_text().unwrap_or("end of file").to_string();
                        return self.fail(format!("expected type declaration, found '{found}'"));
                    }
                }
            }
        }
    }

    /// Annotations and modifiers preceding a declaration.
    fn prefix(&mut self) -> PResult<Prefix> {
        let mut prefix = Prefix::default();
        while let Some(t) = self.peek().cloned() {
            if t.is_punct('@') && self.peek_at(1).is_some_and(|n| self.text(n) != "interface") {
                prefix.first.get_or_insert(self.pos);
                self.pos += 1;
                self.qualified_name()?;
                let mut end = self.toks[self.pos - 1].end;
                if self.peek_is('(') {
                    let close = self.skip_balanced('(', ')')?;
                    end = self.toks[close].end;
                }
                prefix.annotations.push(self.src[t.start..end].to_string());
                continue;
            }
            let word = self.text(&t);
            if t.kind == TokenKind::Ident && MODIFIERS.contains(&word) {
                // `default` doubles as the annotation-element default clause,
                // which never appears in prefix position.
                prefix.first.get_or_insert(self.pos);
                if let Some(m) = Modifier::from_keyword(word) {
                    prefix.modifiers.insert(m);
                }
                self.pos += 1;
                continue;
            }
            if word == "non" && self.peek_at_is(1, '-') && self.peek_at(2).is_some_and(|n| self.text(n) == "sealed") {
                prefix.first.get_or_insert(self.pos);
                self.pos += 3;
                continue;
            }
            break;
        }
        Ok(prefix)
    }

    /// Parses a type declaration if one starts here. Returns false without
    /// consuming anything otherwise.
    fn type_declaration(&mut self, outer: &str, _prefix: &Prefix) -> PResult<bool> {
        let Some(t) = self.peek().cloned() else { return Ok(false) };
        let word = self.text(&t);
        let kind = if t.is_punct('@') && self.peek_at(1).is_some_and(|n| self.text(n) == "interface") {
            self.pos += 2;
            "@interface"
        } else if matches!(word, "class" | "interface" | "enum") {
            self.pos += 1;
            word
        } else if word == "record"
            && self.peek_at(1).is_some_and(|n| n.kind == TokenKind::Ident)
            && (self.peek_at_is(2, '(') || self.peek_at_is(2, '<'))
        {
            self.pos += 1;
            "record"
        } else {
            return Ok(false);
        };
        let name = self.ident_text()?.to_string();
        let fq = if outer.is_empty() { name } else { format!("{outer}.{name}") };

        // type parameters, record header, extends/implements/permits clauses
        while !self.peek_is('{') {
            match self.peek() {
                None => return self.fail(format!("missing body for {kind} {fq}")),
                Some(t) if t.is_punct('<') => {
                    self.skip_balanced('<', '>')?;
                }
                Some(t) if t.is_punct('(') => {
                    self.skip_balanced('(', ')')?;
                }
                Some(t) if t.is_punct(';') || t.is_punct('}') => {
                    return self.fail(format!("unexpected '{}' in {kind} header", self.text(t)));
                }
                Some(_) => self.pos += 1,
            }
        }
        self.class_body(&fq, kind == "enum")?;
        self.last_member_end = self.toks[self.pos - 1].end;
        Ok(true)
    }

    fn class_body(&mut self, fq: &str, is_enum: bool) -> PResult<()> {
        self.expect('{')?;
        self.last_member_end = self.toks[self.pos - 1].end;
        if is_enum {
            self.enum_constants()?;
        }
        loop {
            match self.peek() {
                None => return self.fail(format!("unbalanced braces: body of {fq} never closes")),
                Some(t) if t.is_punct('}') => {
                    self.pos += 1;
                    return Ok(());
                }
                Some(t) if t.is_punct(';') => {
                    self.pos += 1;
                }
                Some(_) => {
                    self.member(fq)?;
                    self.last_member_end = self.toks[self.pos - 1].end;
                }
            }
        }
    }

    fn enum_constants(&mut self) -> PResult<()> {
        loop {
            match self.peek() {
                None => return self.fail("unterminated enum body"),
                Some(t) if t.is_punct(';') => {
                    self.pos += 1;
                    return Ok(());
                }
                Some(t) if t.is_punct('}') => return Ok(()),
                Some(t) if t.is_punct('(') => {
                    self.skip_balanced('(', ')')?;
                }
                Some(t) if t.is_punct('{') => {
                    self.skip_balanced('{', '}')?;
                }
                Some(t) if t.is_punct('@') => {
                    self.prefix()?;
                }
                Some(_) => self.pos += 1,
            }
        }
    }

    fn member(&mut self, fq: &str) -> PResult<()> {
        let member_start = self.pos;
        let prefix = self.prefix()?;
        if self.type_declaration(fq, &prefix)? {
            return Ok(());
        }
        if self.peek_is('{') {
            self.skip_balanced('{', '}')?;
            return Ok(());
        }
        if self.peek_is('<') {
            self.skip_balanced('<', '>')?;
        }
        let ret_start = self.pos;
        let return_type = self.type_ref()?;
        if self.peek_is('(') {
            // constructor, or compact record constructor below
            self.pos = ret_start;
            self.ident()?;
            self.skip_balanced('(', ')')?;
            return self.skip_method_tail();
        }
        if self.peek_is('{') {
            self.skip_balanced('{', '}')?;
            return Ok(());
        }
        let name_tok = self.ident()?;
        if !self.peek_is('(') {
            return self.skip_field();
        }
        let param_types = self.parameters()?;
        while self.peek_is('[') && self.peek_at_is(1, ']') {
            self.pos += 2;
        }
        let (body_text, end_idx) = self.method_tail_with_body()?;

        let decl_first = prefix.first.unwrap_or(member_start).min(ret_start);
        let first_tok = self.toks[decl_first].clone();
        let doc_comment = self.doc_for(&first_tok);
        let signature = MethodSignature {
            fq_class: fq.to_string(),
            name: self.text(&name_tok).to_string(),
            param_types,
            return_type,
            modifiers: prefix.modifiers,
        };
        self.methods.push(ParsedMethod {
            signature,
            line: name_tok.line,
            span: (first_tok.line, self.toks[end_idx].end_line),
            body_text,
            doc_comment,
            annotations: prefix.annotations,
        });
        Ok(())
    }

    fn doc_for(&self, first: &Token) -> String {
        self.docs
            .iter()
            .rev()
            .find(|d| d.end <= first.start)
            .filter(|d| d.start >= self.last_member_end && d.end_line + 2 >= first.line)
            .map(|d| d.text(self.src).to_string())
            .unwrap_or_default()
    }

    /// A type reference, generics erased: `java.util.List<String>[]` -> `java.util.List[]`.
    fn type_ref(&mut self) -> PResult<String> {
        while self.peek_is('@') {
            self.pos += 1;
            self.qualified_name()?;
            if self.peek_is('(') {
                self.skip_balanced('(', ')')?;
            }
        }
        let mut name = self.ident_text()?.to_string();
        loop {
            if self.peek_is('<') {
                self.skip_balanced('<', '>')?;
            }
            if self.peek_is('.') && self.peek_at(1).is_some_and(|t| t.kind == TokenKind::Ident) {
                self.pos += 1;
                name.push('.');
                name.push_str(self.ident_text()?);
            } else {
                break;
            }
        }
        while self.peek_is('[') && self.peek_at_is(1, ']') {
            self.pos += 2;
            name.push_str("[]");
        }
        Ok(name)
    }

    fn parameters(&mut self) -> PResult<Vec<String>> {
        self.expect('(')?;
        let mut params = Vec::new();
        if self.peek_is(')') {
            self.pos += 1;
            return Ok(params);
        }
        loop {
            while self.peek_text() == Some("final") || self.peek_is('@') {
                if self.peek_is('@') {
                    self.pos += 1;
                    self.qualified_name()?;
                    if self.peek_is('(') {
                        self.skip_balanced('(', ')')?;
                    }
                } else {
                    self.pos += 1;
                }
            }
            let mut ty = self.type_ref()?;
            if self.peek_is('.') && self.peek_at_is(1, '.') && self.peek_at_is(2, '.') {
                self.pos += 3;
                ty.push_str("[]");
            }
            // receiver parameter `Foo this` or a named parameter
            let name = self.ident()?;
            if self.text(&name) != "this" || !params.is_empty() {
                while self.peek_is('[') && self.peek_at_is(1, ']') {
                    self.pos += 2;
                    ty.push_str("[]");
                }
                params.push(ty);
            }
            if self.peek_is(',') {
                self.pos += 1;
                continue;
            }
            self.expect(')')?;
            return Ok(params);
        }
    }

    fn skip_throws(&mut self) -> PResult<()> {
        if self.peek_text() == Some("throws") {
            self.pos += 1;
            loop {
                self.type_ref()?;
                if !self.peek_is(',') {
                    break;
                }
                self.pos += 1;
            }
        }
        Ok(())
    }

    fn method_tail_with_body(&mut self) -> PResult<(String, usize)> {
        self.skip_throws()?;
        if self.peek_text() == Some("default") {
            self.pos += 1;
            while !self.peek_is(';') {
                if self.peek().is_none() || self.peek_is('}') {
                    return self.fail("unterminated annotation default");
                }
                if self.peek_is('{') {
                    self.skip_balanced('{', '}')?;
                } else {
                    self.pos += 1;
                }
            }
        }
        if self.peek_is(';') {
            self.pos += 1;
            return Ok((String::new(), self.pos - 1));
        }
        if !self.peek_is('{') {
            let found = self.peek_text().unwrap_or("end of file").to_string();
            return self.fail(format!("expected method body, found '{found}'"));
        }
        let open = self.toks[self.pos].start;
        let close = self.skip_balanced('{', '}')?;
        Ok((self.src[open..self.toks[close].end].to_string(), close))
    }

    fn skip_method_tail(&mut self) -> PResult<()> {
        self.method_tail_with_body().map(|_| ())
    }

    fn skip_field(&mut self) -> PResult<()> {
        loop {
            match self.peek() {
                None => return self.fail("unterminated field declaration"),
                Some(t) if t.is_punct(';') => {
                    self.pos += 1;
                    return Ok(());
                }
                Some(t) if t.is_punct('{') => {
                    self.skip_balanced('{', '}')?;
                }
                Some(t) if t.is_punct('(') => {
                    self.skip_balanced('(', ')')?;
                }
                Some(t) if t.is_punct('}') => return self.fail("unexpected '}' in field declaration"),
                Some(_) => self.pos += 1,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sigs(src: &str) -> Vec<(String, String, Vec<String>, String)> {
        parse_file_methods(src)
            .unwrap()
            .methods
            .into_iter()
            .map(|m| (m.signature.fq_class, m.signature.name, m.signature.param_types, m.signature.return_type))
            .collect()
    }

    #[test]
    fn minimal_class() {
        let parsed = parse_file_methods("class A { public int f(int x){return x;} }").unwrap();
        assert_eq!(parsed.methods.len(), 1);
        let m = &parsed.methods[0];
        assert_eq!(m.signature.fq_class, "A");
        assert_eq!(m.signature.name, "f");
        assert_eq!(m.signature.param_types, ["int"]);
        assert_eq!(m.signature.return_type, "int");
        assert_eq!(m.signature.modifiers, BTreeSet::from([Modifier::Public]));
        assert_eq!(m.body_text, "{return x;}");
    }

    #[test]
    fn nested_classes_get_dotted_names() {
        let src = "package p.q;\nclass A {\n  static class B {\n    void g() {}\n  }\n  void h() {}\n}\n";
        let got = sigs(src);
        assert_eq!(got[0].0, "p.q.A.B");
        assert_eq!(got[0].1, "g");
        assert_eq!(got[1].0, "p.q.A");
    }

    #[test]
    fn unbalanced_braces_fail() {
        assert!(parse_file_methods("class A { void f() { if (x) { } }").is_err());
        assert!(parse_file_methods("class A { void f() { } } }").is_err());
    }

    #[test]
    fn generics_are_erased_and_varargs_become_arrays() {
        let src = "class A { public <T> java.util.List<T> f(Map<String, List<Integer>> m, final String... rest, int[] xs) { return null; } }";
        let got = sigs(src);
        assert_eq!(got[0].2, ["Map", "String[]", "int[]"]);
        assert_eq!(got[0].3, "java.util.List");
    }

    #[test]
    fn skips_fields_ctors_initializers_and_enum_constants() {
        let src = r#"
            enum E { X(1) { void inner() {} }, Y(2);
                private final int v;
                E(int v) { this.v = v; }
                static { init(); }
                public int value() { return v; }
            }
            interface I { void a(); default int b() { return 1; } }
            @interface Ann { String value() default "x"; int[] more() default {1, 2}; }
            class F { Runnable r = () -> { foo(); }; int[] xs = {1,2}; F() {} }
        "#;
        let names: Vec<_> = sigs(src).into_iter().map(|s| format!("{}.{}", s.0, s.1)).collect();
        assert_eq!(names, ["E.value", "I.a", "I.b", "Ann.value", "Ann.more"]);
    }

    #[test]
    fn doc_comments_attach_within_two_lines() {
        let src = "class A {\n  /** near */\n  @Deprecated\n  public void near() {}\n  /** far */\n\n\n\n  public void far() {}\n}\n";
        let parsed = parse_file_methods(src).unwrap();
        assert_eq!(parsed.methods[0].doc_comment, "/** near */");
        assert_eq!(parsed.methods[0].annotations, ["@Deprecated"]);
        assert_eq!(parsed.methods[0].span.0, 3);
        assert_eq!(parsed.methods[1].doc_comment, "");
    }

    #[test]
    fn annotations_keep_their_arguments() {
        let src = "class A { @RequiresPermission(allOf = {Manifest.permission.A, Manifest.permission.B}) public native void f(@NonNull String s); }";
        let parsed = parse_file_methods(src).unwrap();
        let m = &parsed.methods[0];
        assert_eq!(m.annotations, ["@RequiresPermission(allOf = {Manifest.permission.A, Manifest.permission.B})"]);
        assert!(m.signature.modifiers.contains(&Modifier::Native));
        assert_eq!(m.signature.param_types, ["String"]);
    }

    #[test]
    fn records_and_sealed_types() {
        let src = "public sealed interface S permits R {}\nrecord R(int a, String b) implements S { R { } public int twice() { return a * 2; } }\nnon-sealed class N {}";
        let got = sigs(src);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].1, "twice");
    }
}
