//! Dependency-free annotation back end: sentence segmentation and
//! tokenization with character offsets, producing document + token tables.
//!
//! All offsets are Unicode scalar (char) offsets into the newline-normalized
//! document text (CR and CRLF become LF before anything else runs).

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::Path;

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::model::{AnnotationSet, DocumentRow, MetaTable, TokenRow};
use crate::validate::{validate, ValidationReport};

/// A sentence as a half-open char-offset range `[start, end)` of the
/// document text. Spans are sorted, non-overlapping, and jointly cover every
/// non-whitespace character.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SentenceSpan {
    pub start: usize,
    pub end: usize,
}

/// A token with document-absolute char offsets; `word` always equals the
/// text slice `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
    pub word: String,
}

/// Words (with their trailing period) that do not end a sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbbreviationList {
    entries: BTreeSet<String>,
}

/// Name of the environment variable holding the path of a custom
/// abbreviation list (one abbreviation per line, `#` comments allowed).
pub const ABBREV_ENV_VAR: &str = "CLEANTABLES_ABBREV";

const DEFAULT_ABBREVIATIONS: [&str; 9] = [
    "Mr.", "Mrs.", "Ms.", "Dr.", "St.", "vs.", "etc.", "U.S.", "No.",
];

impl Default for AbbreviationList {
    fn default() -> Self {
        AbbreviationList {
            entries: DEFAULT_ABBREVIATIONS
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

impl AbbreviationList {
    /// An explicit list; entries not ending in '.' can never match and are
    /// kept verbatim (matching is exact).
    pub fn new<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        AbbreviationList {
            entries: entries.into_iter().map(Into::into).collect(),
        }
    }

    /// An empty list (every terminator ends a sentence).
    pub fn none() -> Self {
        AbbreviationList {
            entries: BTreeSet::new(),
        }
    }

    /// Loads one abbreviation per line; blank lines and lines starting with
    /// '#' are skipped.
    pub fn from_file(path: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(AbbreviationList::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        ))
    }

    /// The default list, unless `CLEANTABLES_ABBREV` names a file to load
    /// instead.
    pub fn from_env() -> io::Result<Self> {
        match std::env::var_os(ABBREV_ENV_VAR) {
            Some(path) => Self::from_file(Path::new(&path)),
            None => Ok(Self::default()),
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains(word)
    }
}

/// Replaces CRLF and lone CR with LF. Offsets everywhere in this crate
/// refer to text in this normalized form.
pub fn normalize_newlines(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '\r' {
            if chars.peek() == Some(&'\n') {
                chars.next();
            }
            out.push('\n');
        } else {
            out.push(c);
        }
    }
    out
}

/// Closing quotes and brackets that may trail a sentence terminator and
/// still belong to the ending sentence.
fn is_closer(c: char) -> bool {
    matches!(
        c,
        '"' | '\'' | ')' | ']' | '}' | '\u{201d}' | '\u{2019}' | '\u{00bb}'
    )
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Splits text into sentences. A sentence ends after '.', '!', or '?'
/// (plus any trailing closing quotes/brackets) followed by whitespace or end
/// of text — unless the chunk ending at a '.' is a listed abbreviation. A
/// final unterminated fragment is its own sentence. Empty and
/// whitespace-only input yields no spans.
pub fn segment_sentences(text: &str, abbreviations: &AbbreviationList) -> Vec<SentenceSpan> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let mut spans = Vec::new();

    let mut i = 0;
    while i < n && chars[i].is_whitespace() {
        i += 1;
    }
    let mut start = i;

    while i < n {
        let c = chars[i];
        if is_terminator(c) {
            let mut k = i + 1;
            while k < n && is_closer(chars[k]) {
                k += 1;
            }
            let at_break = k == n || chars[k].is_whitespace();
            let abbreviated = c == '.' && {
                let mut j = i;
                while j > 0 && !chars[j - 1].is_whitespace() {
                    j -= 1;
                }
                let chunk: String = chars[j..=i].iter().collect();
                abbreviations.contains(&chunk)
            };
            if at_break && !abbreviated {
                spans.push(SentenceSpan { start, end: k });
                i = k;
                while i < n && chars[i].is_whitespace() {
                    i += 1;
                }
                start = i;
                continue;
            }
        }
        i += 1;
    }

    if start < n {
        let mut end = n;
        while end > start && chars[end - 1].is_whitespace() {
            end -= 1;
        }
        if end > start {
            spans.push(SentenceSpan { start, end });
        }
    }
    spans
}

/// Splits one sentence into tokens. Whitespace separates chunks; within a
/// chunk, leading and trailing non-alphanumeric characters come off as
/// single-character tokens while internal punctuation (apostrophes, hyphens,
/// inner periods) stays inside the word. Offsets are document-absolute.
pub fn tokenize_sentence(text: &str, span: SentenceSpan) -> Vec<TokenSpan> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = span.start;
    while i < span.end {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let chunk_start = i;
        while i < span.end && !chars[i].is_whitespace() {
            i += 1;
        }
        let chunk_end = i;

        let mut a = chunk_start;
        let mut b = chunk_end;
        while a < b && !chars[a].is_alphanumeric() {
            tokens.push(single(&chars, a));
            a += 1;
        }
        let mut trailing = Vec::new();
        while b > a && !chars[b - 1].is_alphanumeric() {
            b -= 1;
            trailing.push(single(&chars, b));
        }
        if a < b {
            tokens.push(TokenSpan {
                start: a,
                end: b,
                word: chars[a..b].iter().collect(),
            });
        }
        tokens.extend(trailing.into_iter().rev());
    }
    tokens
}

fn single(chars: &[char], at: usize) -> TokenSpan {
    TokenSpan {
        start: at,
        end: at + 1,
        word: chars[at].to_string(),
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error(transparent)]
    Meta(#[from] crate::model::MetaError),
    #[error("{uri}: {source}")]
    Io {
        uri: String,
        #[source]
        source: io::Error,
    },
    #[error("tokenizer output failed validation:\n{0}")]
    Invalid(ValidationReport),
}

/// Reads each path as a UTF-8 text file, pairing the path (as given) with
/// its contents; read failures carry the file identity.
pub fn read_corpus_files(paths: &[String]) -> Result<Vec<(String, String)>, BackendError> {
    paths
        .iter()
        .map(|p| {
            fs::read_to_string(p)
                .map(|text| (p.clone(), text))
                .map_err(|source| BackendError::Io {
                    uri: p.clone(),
                    source,
                })
        })
        .collect()
}

/// Annotates a corpus with the built-in tokenizer. Each `(uri, text)` pair
/// becomes one document (ids 1..n in input order) whose token table carries
/// only `word` and `cid`; all other annotation tables stay empty. `meta`,
/// when given, supplies one row of extra document columns per corpus item.
/// The normalized raw text is retained for offset validation.
pub fn run_tokenizer_backend(
    corpus: &[(String, String)],
    meta: Option<&MetaTable>,
    language: &str,
    abbreviations: &AbbreviationList,
    time: DateTime<Utc>,
) -> Result<AnnotationSet, BackendError> {
    if let Some(m) = meta {
        m.check_shape(corpus.len())?;
    }

    let mut set = AnnotationSet::default();
    for (i, (uri, text)) in corpus.iter().enumerate() {
        let id = (i + 1) as u32;
        let mut doc = DocumentRow::new(id, time, env!("CARGO_PKG_VERSION"), language, uri.clone());
        if let Some(m) = meta {
            doc.extra = m
                .columns
                .iter()
                .cloned()
                .zip(m.rows[i].iter().cloned())
                .collect();
        }
        set.document.push(doc);

        let text = normalize_newlines(text);
        for (s, span) in segment_sentences(&text, abbreviations)
            .into_iter()
            .enumerate()
        {
            for (t, tok) in tokenize_sentence(&text, span).into_iter().enumerate() {
                set.token.push(TokenRow {
                    id,
                    sid: (s + 1) as u32,
                    tid: (t + 1) as u32,
                    word: tok.word,
                    lemma: None,
                    upos: None,
                    pos: None,
                    cid: Some(tok.start as u32),
                });
            }
        }
        set.raw_text.insert(id, text);
    }

    set.sort_tables();
    let report = validate(&set);
    if !report.ok() {
        return Err(BackendError::Invalid(report));
    }
    Ok(set)
}
