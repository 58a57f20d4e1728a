//! Lossless lexer for Java-like source text.
//!
//! The lexer is total: any UTF-8 input produces a token stream whose
//! concatenated token texts reproduce the input byte for byte. Bytes that
//! belong to no recognized class become single-character punctuation
//! tokens, so malformed or truncated code still lexes.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Identifier,
    Keyword,
    Punctuation,
    Operator,
    StringLiteral,
    CharLiteral,
    NumberLiteral,
    Comment,
    Whitespace,
}

impl TokenKind {
    /// Countable tokens are what compression ratios are measured over.
    pub fn is_countable(self) -> bool {
        !matches!(self, TokenKind::Whitespace | TokenKind::Comment)
    }

    pub fn is_literal(self) -> bool {
        matches!(
            self,
            TokenKind::StringLiteral | TokenKind::CharLiteral | TokenKind::NumberLiteral
        )
    }
}

/// Byte range into the original source, end exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub span: Span,
    pub kind: TokenKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParseStatus {
    Parsable,
    Unparsable,
}

/// Ordered, non-overlapping tokens covering the whole source.
#[derive(Debug, Clone)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
    pub source: String,
    pub parse_status: ParseStatus,
    countable: Vec<usize>,
}

impl TokenStream {
    /// Indices (into `tokens`) of countable tokens, in order.
    pub fn countable_indices(&self) -> &[usize] {
        &self.countable
    }

    /// L: the number of countable tokens.
    pub fn countable_len(&self) -> usize {
        self.countable.len()
    }

    /// The countable token at countable position `i`.
    pub fn countable(&self, i: usize) -> &Token {
        &self.tokens[self.countable[i]]
    }

    pub fn countable_texts(&self) -> Vec<String> {
        self.countable
            .iter()
            .map(|&i| self.tokens[i].text.clone())
            .collect()
    }

    pub fn is_parsable(&self) -> bool {
        self.parse_status == ParseStatus::Parsable
    }
}

const JAVA_KEYWORDS: &[&str] = &[
    "abstract",
    "assert",
    "boolean",
    "break",
    "byte",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extends",
    "final",
    "finally",
    "float",
    "for",
    "goto",
    "if",
    "implements",
    "import",
    "instanceof",
    "int",
    "interface",
    "long",
    "native",
    "new",
    "null",
    "package",
    "private",
    "protected",
    "public",
    "return",
    "short",
    "static",
    "strictfp",
    "super",
    "switch",
    "synchronized",
    "this",
    "throw",
    "throws",
    "transient",
    "try",
    "void",
    "volatile",
    "while",
];

fn is_keyword(text: &str) -> bool {
    JAVA_KEYWORDS.binary_search(&text).is_ok()
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

// Longest-first so maximal munch falls out of a linear scan.
const OPERATORS: &[&str] = &[
    ">>>=", "...", "<<=", ">>=", ">>>", "->", "::", "==", "!=", "<=", ">=", "&&", "||", "++",
    "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "+", "-", "*", "/", "%",
    "=", "<", ">", "!", "&", "|", "^", "~", "?", ":",
];

const PUNCTUATION: &[char] = &['(', ')', '{', '}', '[', ']', ';', ',', '.', '@'];

/// Tokenize `source`. Total: never fails, and concatenating the returned
/// token texts reproduces `source` exactly.
pub fn lex(source: &str) -> TokenStream {
    let mut tokens = Vec::new();
    let chars: Vec<(usize, char)> = source.char_indices().collect();
    let n = chars.len();
    let mut i = 0;

    let push = |tokens: &mut Vec<Token>, start: usize, end: usize, kind: TokenKind| {
        tokens.push(Token {
            text: source[start..end].to_string(),
            span: Span { start, end },
            kind,
        });
    };

    while i < n {
        let (start, c) = chars[i];

        if c.is_whitespace() {
            let mut j = i + 1;
            while j < n && chars[j].1.is_whitespace() {
                j += 1;
            }
            let end = if j < n { chars[j].0 } else { source.len() };
            push(&mut tokens, start, end, TokenKind::Whitespace);
            i = j;
        } else if c == '/' && i + 1 < n && chars[i + 1].1 == '/' {
            let mut j = i + 2;
            while j < n && chars[j].1 != '\n' {
                j += 1;
            }
            let end = if j < n { chars[j].0 } else { source.len() };
            push(&mut tokens, start, end, TokenKind::Comment);
            i = j;
        } else if c == '/' && i + 1 < n && chars[i + 1].1 == '*' {
            let mut j = i + 2;
            while j < n && !(chars[j].1 == '*' && j + 1 < n && chars[j + 1].1 == '/') {
                j += 1;
            }
            let (end, next) = if j < n {
                (chars[j + 1].0 + 1, j + 2) // include "*/"
            } else {
                (source.len(), n) // unterminated: runs to EOF
            };
            push(&mut tokens, start, end, TokenKind::Comment);
            i = next;
        } else if c == '"' || c == '\'' {
            let quote = c;
            let mut j = i + 1;
            while j < n {
                let cj = chars[j].1;
                if cj == '\\' && j + 1 < n {
                    j += 2;
                    continue;
                }
                if cj == quote || cj == '\n' {
                    break;
                }
                j += 1;
            }
            // Unterminated literals end at the newline or EOF.
            let (end, next) = if j < n && chars[j].1 == quote {
                (chars[j].0 + chars[j].1.len_utf8(), j + 1)
            } else if j < n {
                (chars[j].0, j)
            } else {
                (source.len(), n)
            };
            let kind = if quote == '"' {
                TokenKind::StringLiteral
            } else {
                TokenKind::CharLiteral
            };
            push(&mut tokens, start, end, kind);
            i = next;
        } else if c.is_ascii_digit() || (c == '.' && i + 1 < n && chars[i + 1].1.is_ascii_digit())
        {
            let mut j = i;
            if c == '0' && i + 1 < n && matches!(chars[i + 1].1, 'x' | 'X' | 'b' | 'B') {
                j = i + 2;
                while j < n && (chars[j].1.is_ascii_hexdigit() || chars[j].1 == '_') {
                    j += 1;
                }
            } else {
                if c == '.' {
                    j += 1; // leading-dot float
                }
                while j < n && (chars[j].1.is_ascii_digit() || chars[j].1 == '_') {
                    j += 1;
                }
                // Fractional part only when a digit follows the dot, so
                // `x.size()` on an int receiver keeps its own dot token.
                if j < n && chars[j].1 == '.' && j + 1 < n && chars[j + 1].1.is_ascii_digit() {
                    j += 1;
                    while j < n && (chars[j].1.is_ascii_digit() || chars[j].1 == '_') {
                        j += 1;
                    }
                }
                if j < n && matches!(chars[j].1, 'e' | 'E') {
                    let mut k = j + 1;
                    if k < n && matches!(chars[k].1, '+' | '-') {
                        k += 1;
                    }
                    if k < n && chars[k].1.is_ascii_digit() {
                        j = k;
                        while j < n && chars[j].1.is_ascii_digit() {
                            j += 1;
                        }
                    }
                }
            }
            if j < n && matches!(chars[j].1, 'l' | 'L' | 'f' | 'F' | 'd' | 'D') {
                j += 1;
            }
            let end = if j < n { chars[j].0 } else { source.len() };
            push(&mut tokens, start, end, TokenKind::NumberLiteral);
            i = j;
        } else if is_ident_start(c) {
            let mut j = i + 1;
            while j < n && is_ident_continue(chars[j].1) {
                j += 1;
            }
            let end = if j < n { chars[j].0 } else { source.len() };
            let kind = if is_keyword(&source[start..end]) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            };
            push(&mut tokens, start, end, kind);
            i = j;
        } else if PUNCTUATION.contains(&c) {
            push(&mut tokens, start, start + c.len_utf8(), TokenKind::Punctuation);
            i += 1;
        } else if let Some(op) = match_operator(source, start) {
            push(&mut tokens, start, start + op.len(), TokenKind::Operator);
            i += op.chars().count();
        } else {
            // Unknown character: single-char punctuation token.
            push(&mut tokens, start, start + c.len_utf8(), TokenKind::Punctuation);
            i += 1;
        }
    }

    let countable: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.kind.is_countable())
        .map(|(i, _)| i)
        .collect();
    let parse_status = parse_status_heuristic(&tokens, &countable);

    TokenStream {
        tokens,
        source: source.to_string(),
        parse_status,
        countable,
    }
}

fn match_operator(source: &str, start: usize) -> Option<&'static str> {
    let rest = &source[start..];
    OPERATORS.iter().find(|op| rest.starts_with(**op)).copied()
}

/// Parsability stands in for a full parser: brackets must balance and a
/// method header (`name ( ... ) {`) must be present somewhere.
fn parse_status_heuristic(tokens: &[Token], countable: &[usize]) -> ParseStatus {
    let texts: Vec<&str> = countable.iter().map(|&i| tokens[i].text.as_str()).collect();
    let kinds: Vec<TokenKind> = countable.iter().map(|&i| tokens[i].kind).collect();

    let mut stack = Vec::new();
    for &t in &texts {
        match t {
            "(" | "{" | "[" => stack.push(t),
            ")" => {
                if stack.pop() != Some("(") {
                    return ParseStatus::Unparsable;
                }
            }
            "}" => {
                if stack.pop() != Some("{") {
                    return ParseStatus::Unparsable;
                }
            }
            "]" => {
                if stack.pop() != Some("[") {
                    return ParseStatus::Unparsable;
                }
            }
            _ => {}
        }
    }
    if !stack.is_empty() {
        return ParseStatus::Unparsable;
    }

    let matching = bracket_matching(&texts);
    let mut has_header = false;
    for i in 0..texts.len() {
        if kinds[i] == TokenKind::Identifier && i + 1 < texts.len() && texts[i + 1] == "(" {
            if let Some(close) = matching[i + 1] {
                if close + 1 < texts.len() && texts[close + 1] == "{" {
                    has_header = true;
                    break;
                }
            }
        }
    }
    if has_header {
        ParseStatus::Parsable
    } else {
        ParseStatus::Unparsable
    }
}

/// Pair up (), {}, [] over a countable token text slice. Returns, for each
/// position, the position of the matching partner (open -> close and
/// close -> open). Unmatched brackets map to None.
pub(crate) fn bracket_matching(texts: &[&str]) -> Vec<Option<usize>> {
    let mut matching = vec![None; texts.len()];
    let mut stack: Vec<(usize, &str)> = Vec::new();
    for (i, &t) in texts.iter().enumerate() {
        match t {
            "(" | "{" | "[" => stack.push((i, t)),
            ")" | "}" | "]" => {
                let open = match t {
                    ")" => "(",
                    "}" => "{",
                    _ => "[",
                };
                if let Some(&(j, top)) = stack.last() {
                    if top == open {
                        stack.pop();
                        matching[i] = Some(j);
                        matching[j] = Some(i);
                    }
                }
            }
            _ => {}
        }
    }
    matching
}

/// Render the countable tokens selected by `kept` (countable indices, in
/// any order) as source text: original order, single spaces between
/// tokens. Whitespace and comments never appear in the output.
pub fn detokenize(stream: &TokenStream, kept: &[usize]) -> String {
    let mut indices: Vec<usize> = kept
        .iter()
        .copied()
        .filter(|&i| i < stream.countable_len())
        .collect();
    indices.sort_unstable();
    indices.dedup();
    indices
        .iter()
        .map(|&i| stream.countable(i).text.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}
