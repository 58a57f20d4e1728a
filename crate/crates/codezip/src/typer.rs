//! Token type classification.
//!
//! Every countable token receives exactly one of five taxonomy types
//! (plus a fallback):
//!
//! * `Symbol` — operators, delimiters, other symbolic tokens
//! * `Signature` — tokens of a method declaration header
//! * `Invocation` — tokens belonging to call expressions
//! * `Identifier` — user-defined names
//! * `Structure` — flow-control / declaration keywords and their block
//!   delimiters
//! * `OutOfType` — nothing matched; always removed last
//!
//! Classification is a single structural pass (bracket matching plus local
//! context), not an AST, so it works on code that does not parse. A token
//! matching several rules is assigned the candidate with the lowest
//! removal priority in the active table, i.e. the one the compressor
//! protects longest.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexer::{bracket_matching, TokenKind, TokenStream};
use crate::priority::PriorityTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TokenTypeLabel {
    Symbol,
    Signature,
    Invocation,
    Identifier,
    Structure,
    OutOfType,
}

impl TokenTypeLabel {
    /// The five table types, in the fixed tie-break order.
    pub const TABLE_TYPES: [TokenTypeLabel; 5] = [
        TokenTypeLabel::Symbol,
        TokenTypeLabel::Signature,
        TokenTypeLabel::Invocation,
        TokenTypeLabel::Identifier,
        TokenTypeLabel::Structure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TokenTypeLabel::Symbol => "Symbol",
            TokenTypeLabel::Signature => "Signature",
            TokenTypeLabel::Invocation => "Invocation",
            TokenTypeLabel::Identifier => "Identifier",
            TokenTypeLabel::Structure => "Structure",
            TokenTypeLabel::OutOfType => "OutOfType",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "Symbol" => Ok(TokenTypeLabel::Symbol),
            "Signature" => Ok(TokenTypeLabel::Signature),
            "Invocation" => Ok(TokenTypeLabel::Invocation),
            "Identifier" => Ok(TokenTypeLabel::Identifier),
            "Structure" => Ok(TokenTypeLabel::Structure),
            "OutOfType" => Ok(TokenTypeLabel::OutOfType),
            other => Err(Error::Table(format!("unknown token type `{other}`"))),
        }
    }
}

impl std::fmt::Display for TokenTypeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Keywords whose tokens (and attached block delimiters) count as
/// `Structure`. Loadable from a plain-text file, one keyword per line.
#[derive(Debug, Clone)]
pub struct StructureKeywords {
    set: Vec<String>,
}

impl Default for StructureKeywords {
    fn default() -> Self {
        const DEFAULT: &[&str] = &[
            "break", "case", "catch", "class", "continue", "do", "else", "enum", "finally",
            "for", "if", "interface", "new", "return", "switch", "throw", "try", "while",
        ];
        StructureKeywords {
            set: DEFAULT.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl StructureKeywords {
    /// One keyword per line; blank lines and `#` comments ignored.
    pub fn from_config_str(text: &str) -> Self {
        let mut set: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect();
        set.sort();
        set.dedup();
        StructureKeywords { set }
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Ok(Self::from_config_str(&std::fs::read_to_string(path)?))
    }

    pub fn contains(&self, text: &str) -> bool {
        self.set.binary_search_by(|s| s.as_str().cmp(text)).is_ok()
    }
}

/// A token stream with one label per countable token plus per-example
/// term frequencies (exact text, case-sensitive).
#[derive(Debug, Clone)]
pub struct TypedStream {
    pub stream: TokenStream,
    pub labels: Vec<TokenTypeLabel>,
    pub tf: HashMap<String, usize>,
}

impl TypedStream {
    pub fn tf_of(&self, i: usize) -> usize {
        self.tf[&self.stream.countable(i).text]
    }
}

// Candidate bit flags.
const SYM: u8 = 1;
const SIG: u8 = 2;
const INV: u8 = 4;
const IDENT: u8 = 8;
const STRUCT: u8 = 16;

/// Classify with the default structure keyword set.
pub fn classify(stream: &TokenStream, table: &PriorityTable) -> TypedStream {
    classify_with(stream, table, &StructureKeywords::default())
}

pub fn classify_with(
    stream: &TokenStream,
    table: &PriorityTable,
    keywords: &StructureKeywords,
) -> TypedStream {
    let n = stream.countable_len();
    let texts: Vec<&str> = (0..n).map(|i| stream.countable(i).text.as_str()).collect();
    let kinds: Vec<TokenKind> = (0..n).map(|i| stream.countable(i).kind).collect();
    let matching = bracket_matching(&texts);

    let mut cand = vec![0u8; n];
    let mut pure_callee = vec![false; n];

    for i in 0..n {
        match kinds[i] {
            TokenKind::Punctuation | TokenKind::Operator => cand[i] |= SYM,
            TokenKind::Identifier => cand[i] |= IDENT,
            TokenKind::Keyword if keywords.contains(texts[i]) => cand[i] |= STRUCT,
            _ => {}
        }
    }

    // Method headers: a name followed by a parameter list whose closing
    // paren is immediately followed by `{`. The header runs from the start
    // of the statement (modifiers, return type) through that `)`.
    let mut in_header = vec![false; n];
    let mut header_found = false;
    for i in 0..n {
        if kinds[i] == TokenKind::Identifier && i + 1 < n && texts[i + 1] == "(" {
            if let Some(close) = matching[i + 1] {
                if close + 1 < n && texts[close + 1] == "{" {
                    let start = statement_start(&texts, i);
                    for slot in in_header.iter_mut().take(close + 1).skip(start) {
                        *slot = true;
                    }
                    header_found = true;
                }
            }
        }
    }
    // Degraded mode for truncated declarations: a name with an unmatched
    // `(` before any `{` is treated as a header running to stream end.
    if !header_found {
        let first_brace = texts.iter().position(|&t| t == "{").unwrap_or(n);
        for i in 0..first_brace.min(n) {
            if kinds[i] == TokenKind::Identifier
                && i + 1 < n
                && texts[i + 1] == "("
                && matching[i + 1].is_none()
            {
                let start = statement_start(&texts, i);
                for slot in in_header.iter_mut().take(n).skip(start) {
                    *slot = true;
                }
                break;
            }
        }
    }
    for i in 0..n {
        if in_header[i] {
            cand[i] |= SIG;
        }
    }

    // Call expressions: a callee name followed by `(` outside any header.
    // The callee, the argument span (parens included), and the dotted
    // receiver chain feeding the call all become Invocation candidates.
    for i in 0..n {
        let is_callee = kinds[i] == TokenKind::Identifier
            && !in_header[i]
            && i + 1 < n
            && texts[i + 1] == "("
            && !in_header[i + 1];
        if !is_callee {
            continue;
        }
        cand[i] |= INV;
        pure_callee[i] = true;
        if let Some(close) = matching[i + 1] {
            for k in (i + 1)..=close {
                cand[k] |= INV;
            }
        } else {
            for k in (i + 1)..n {
                cand[k] |= INV;
            }
        }
        mark_receiver_chain(&texts, &kinds, &matching, i, &mut cand, &mut pure_callee);
    }
    // A callee never acts as a plain identifier; receiver-chain names keep
    // their Identifier candidacy (cleared flag) so the tie-break can
    // protect them.
    for i in 0..n {
        if pure_callee[i] {
            cand[i] &= !IDENT;
        }
    }

    // Structure block delimiters: `{` after `)` or after a structure
    // keyword (plus its matching `}`), and condition parens directly after
    // a structure keyword.
    for i in 0..n {
        if texts[i] == "{"
            && i > 0
            && (texts[i - 1] == ")" || (kinds[i - 1] == TokenKind::Keyword && keywords.contains(texts[i - 1])))
        {
            cand[i] |= STRUCT;
            if let Some(close) = matching[i] {
                cand[close] |= STRUCT;
            }
        }
        if texts[i] == "("
            && i > 0
            && kinds[i - 1] == TokenKind::Keyword
            && keywords.contains(texts[i - 1])
        {
            cand[i] |= STRUCT;
            if let Some(close) = matching[i] {
                cand[close] |= STRUCT;
            }
        }
    }

    let labels: Vec<TokenTypeLabel> = (0..n).map(|i| assign(cand[i], table)).collect();

    let mut tf: HashMap<String, usize> = HashMap::new();
    for &t in &texts {
        *tf.entry(t.to_string()).or_insert(0) += 1;
    }

    TypedStream {
        stream: stream.clone(),
        labels,
        tf,
    }
}

/// Walk back to just after the previous `;`, `{`, or `}` (or the stream
/// start): that is where a declaration statement begins.
fn statement_start(texts: &[&str], from: usize) -> usize {
    let mut j = from;
    while j > 0 {
        let prev = texts[j - 1];
        if prev == ";" || prev == "{" || prev == "}" {
            break;
        }
        j -= 1;
    }
    j
}

/// From callee position `i`, walk the dotted receiver chain to the left:
/// `a.b().c(` marks the dots, the plain receiver names, and the inner
/// callees. Inner callees are chain names too, which restores their
/// Identifier candidacy.
fn mark_receiver_chain(
    texts: &[&str],
    kinds: &[TokenKind],
    matching: &[Option<usize>],
    callee: usize,
    cand: &mut [u8],
    pure_callee: &mut [bool],
) {
    let mut k = callee as isize - 1;
    loop {
        if k < 0 || texts[k as usize] != "." {
            break;
        }
        cand[k as usize] |= INV; // chain dot
        k -= 1;
        if k < 0 {
            break;
        }
        let p = k as usize;
        if texts[p] == ")" {
            if let Some(open) = matching[p] {
                if open == 0 {
                    break;
                }
                let name = open - 1;
                if kinds[name] == TokenKind::Identifier {
                    cand[name] |= INV;
                    pure_callee[name] = false; // mid-chain callee
                    k = name as isize - 1;
                    continue;
                }
            }
            break;
        } else if kinds[p] == TokenKind::Identifier {
            cand[p] |= INV;
            k -= 1;
        } else if kinds[p] == TokenKind::Keyword && (texts[p] == "this" || texts[p] == "super") {
            cand[p] |= INV;
            k -= 1;
        } else {
            break;
        }
    }
}

/// Resolve a candidate set to the member with the lowest removal
/// priority; ties fall back to the fixed type order.
fn assign(cand: u8, table: &PriorityTable) -> TokenTypeLabel {
    if cand == 0 {
        return TokenTypeLabel::OutOfType;
    }
    let mut best: Option<(f64, TokenTypeLabel)> = None;
    for (bit, label) in [
        (SYM, TokenTypeLabel::Symbol),
        (SIG, TokenTypeLabel::Signature),
        (INV, TokenTypeLabel::Invocation),
        (IDENT, TokenTypeLabel::Identifier),
        (STRUCT, TokenTypeLabel::Structure),
    ] {
        if cand & bit == 0 {
            continue;
        }
        let p = table.priority_of(label);
        match best {
            Some((bp, _)) if p >= bp => {}
            _ => best = Some((p, label)),
        }
    }
    best.map(|(_, l)| l).unwrap_or(TokenTypeLabel::OutOfType)
}
