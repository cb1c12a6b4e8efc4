//! Tokenizer for Java-style source.
//!
//! Comments are kept as tokens so the parser can attach doc comments to the
//! declarations that follow them.

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Number,
    Str,
    Char,
    /// Single punctuation character; multi-character operators are emitted
    /// one character at a time, which is all the structural parser needs.
    Punct(char),
    LineComment,
    BlockComment,
    DocComment,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub end_line: usize,
}

impl Token {
    pub fn text<'a>(&self, src: &'a str) -> &'a str {
        &src[self.start..self.end]
    }

    pub fn is_punct(&self, c: char) -> bool {
        self.kind == TokenKind::Punct(c)
    }

    pub fn is_comment(&self) -> bool {
        matches!(
            self.kind,
            TokenKind::LineComment | TokenKind::BlockComment | TokenKind::DocComment
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub line: usize,
    pub message: String,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, LexError> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    let mut line = 1;

    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            line += 1;
            i += 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let start_line = line;

        let kind = if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            TokenKind::LineComment
        } else if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            let doc = bytes.get(i + 2) == Some(&b'*') && bytes.get(i + 3) != Some(&b'/');
            i += 2;
            loop {
                if i + 1 >= bytes.len() {
                    return Err(LexError { line: start_line, message: "unterminated block comment".into() });
                }
                if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                    i += 2;
                    break;
                }
                if bytes[i] == b'\n' {
                    line += 1;
                }
                i += 1;
            }
            if doc {
                TokenKind::DocComment
            } else {
                TokenKind::BlockComment
            }
        } else if c == b'"' {
            if bytes[i..].starts_with(b"\"\"\"") {
                i += 3;
                loop {
                    if i + 2 >= bytes.len() {
                        return Err(LexError { line: start_line, message: "unterminated text block".into() });
                    }
                    if bytes[i] == b'\\' {
                        i += 2;
                        continue;
                    }
                    if bytes[i..].starts_with(b"\"\"\"") {
                        i += 3;
                        break;
                    }
                    if bytes[i] == b'\n' {
                        line += 1;
                    }
                    i += 1;
                }
            } else {
                i += 1;
                loop {
                    match bytes.get(i) {
                        None | Some(b'\n') => {
                            return Err(LexError { line: start_line, message: "unterminated string literal".into() })
                        }
                        Some(b'\\') => i += 2,
                        Some(b'"') => {
                            i += 1;
                            break;
                        }
                        Some(_) => i += 1,
                    }
                }
            }
            TokenKind::Str
        } else if c == b'\'' {
            i += 1;
            loop {
                match bytes.get(i) {
                    None | Some(b'\n') => {
                        return Err(LexError { line: start_line, message: "unterminated char literal".into() })
                    }
                    Some(b'\\') => i += 2,
                    Some(b'\'') => {
                        i += 1;
                        break;
                    }
                    Some(_) => i += 1,
                }
            }
            TokenKind::Char
        } else if c.is_ascii_digit() {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'.') {
                i += 1;
            }
            TokenKind::Number
        } else if c.is_ascii_alphabetic() || c == b'_' || c == b'$' || c >= 0x80 {
            while i < bytes.len()
                && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'$' || bytes[i] >= 0x80)
            {
                i += 1;
            }
            TokenKind::Ident
        } else {
            i += 1;
            TokenKind::Punct(c as char)
        };

        // multibyte identifiers may stop mid-character only on malformed UTF-8,
        // which &str rules out
        tokens.push(Token { kind, start, end: i, line: start_line, end_line: line });
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_idents_and_punct() {
        let src = "class A { int f(int x){return x;} }";
        let toks = tokenize(src).unwrap();
        let texts: Vec<_> = toks.iter().map(|t| t.text(src)).collect();
        assert_eq!(
            texts,
            ["class", "A", "{", "int", "f", "(", "int", "x", ")", "{", "return", "x", ";", "}", "}"]
        );
    }

    #[test]
    fn comments_and_strings_keep_lines() {
        let src = "/** doc\n * more */\nString s = \"a // not comment\";\n// tail";
        let toks = tokenize(src).unwrap();
        assert_eq!(toks[0].kind, TokenKind::DocComment);
        assert_eq!((toks[0].line, toks[0].end_line), (1, 2));
        let s = toks.iter().find(|t| t.kind == TokenKind::Str).unwrap();
        assert_eq!(s.line, 3);
        assert_eq!(toks.last().unwrap().kind, TokenKind::LineComment);
    }

    #[test]
    fn empty_block_comment_is_not_doc() {
        let toks = tokenize("/**/ x").unwrap();
        assert_eq!(toks[0].kind, TokenKind::BlockComment);
    }

    #[test]
    fn unterminated_literals_fail() {
        assert!(tokenize("String s = \"abc;\n").is_err());
        assert!(tokenize("/* never closed").is_err());
    }
}
