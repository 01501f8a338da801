//! Loaders that populate the data model from external annotators: CoNLL-U
//! parses, sidecar TSV files (entities, coreference, sentiment), and
//! embedding/frequency lexicons.

pub mod conllu;
pub mod lexicon;

pub use conllu::{
    conll_to_annotation, parse_conllu, split_documents, ConlluError, ConlluRow, ConlluSentence,
    IngestError,
};
pub use lexicon::{
    load_embeddings, load_frequency_lexicon, EmbeddingLexicon, FrequencyLexicon, LexiconError,
};

use std::str::FromStr;

use thiserror::Error;

use crate::model::{AnnotationSet, CoreferenceRow, EntityRow, SentenceRow, TokenKey, VectorMatrix};
use crate::validate::{validate, ValidationReport};

/// The three annotation tables that can be filled from sidecar files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SidecarKind {
    Entity,
    Coreference,
    Sentence,
}

impl SidecarKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SidecarKind::Entity => "entity",
            SidecarKind::Coreference => "coreference",
            SidecarKind::Sentence => "sentence",
        }
    }

    /// The exact header the sidecar file must carry.
    pub fn columns(&self) -> &'static [&'static str] {
        match self {
            SidecarKind::Entity => &[
                "id",
                "sid",
                "tid",
                "tid_end",
                "entity_type",
                "entity",
                "entity_normalized",
            ],
            SidecarKind::Coreference => &[
                "id",
                "rid",
                "mid",
                "mention",
                "mention_type",
                "number",
                "gender",
                "animacy",
                "sid",
                "tid",
                "tid_end",
                "tid_head",
            ],
            SidecarKind::Sentence => &["id", "sid", "sentiment"],
        }
    }
}

impl FromStr for SidecarKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "entity" => Ok(SidecarKind::Entity),
            "coreference" => Ok(SidecarKind::Coreference),
            "sentence" => Ok(SidecarKind::Sentence),
            other => Err(format!(
                "unknown sidecar kind {other:?}; expected entity, coreference, or sentence"
            )),
        }
    }
}

#[derive(Debug, Error)]
pub enum SidecarError {
    #[error("unexpected column {name:?} (expected {expected:?})")]
    UnknownColumn {
        name: String,
        expected: &'static [&'static str],
    },
    #[error("missing column {name:?}")]
    MissingColumn { name: &'static str },
    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("sidecar rows failed validation:\n{0}")]
    Invalid(ValidationReport),
}

/// Splits one TSV data line into exactly `n` fields.
fn tsv_fields(line: &str, lineno: usize, n: usize) -> Result<Vec<&str>, SidecarError> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != n {
        return Err(SidecarError::Parse {
            line: lineno,
            detail: format!("expected {n} tab-separated fields, found {}", fields.len()),
        });
    }
    Ok(fields)
}

fn parse_num<T: FromStr>(field: &str, name: &str, lineno: usize) -> Result<T, SidecarError> {
    field.parse().map_err(|_| SidecarError::Parse {
        line: lineno,
        detail: format!("{name} value {field:?} is not a valid number"),
    })
}

fn parse_label<T>(field: &str, lineno: usize) -> Result<T, SidecarError>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    field.parse().map_err(|e| SidecarError::Parse {
        line: lineno,
        detail: format!("{e}"),
    })
}

fn opt(field: &str) -> Option<String> {
    if field.is_empty() {
        None
    } else {
        Some(field.to_string())
    }
}

/// Loads a sidecar TSV and returns a copy of `a` with the corresponding
/// table replaced wholesale. The file must carry a header row with exactly
/// the target schema's columns; empty fields mean absent. Structural
/// problems (dangling keys, bad sentiment, missing canonical mentions, …)
/// are reported with the offending data row numbers.
pub fn load_sidecar(
    a: &AnnotationSet,
    kind: SidecarKind,
    stream: &str,
) -> Result<AnnotationSet, SidecarError> {
    let mut lines = stream.lines().enumerate();
    let expected = kind.columns();
    let header = match lines.next() {
        Some((_, line)) => line,
        None => {
            return Err(SidecarError::MissingColumn { name: expected[0] });
        }
    };
    let got: Vec<&str> = header.split('\t').collect();
    for name in expected {
        if !got.contains(name) {
            return Err(SidecarError::MissingColumn { name });
        }
    }
    for (i, name) in got.iter().enumerate() {
        if expected.get(i) != Some(name) {
            return Err(SidecarError::UnknownColumn {
                name: name.to_string(),
                expected,
            });
        }
    }

    let mut out = a.clone();
    match kind {
        SidecarKind::Entity => {
            let mut rows = Vec::new();
            for (i, line) in lines {
                let lineno = i + 1;
                if line.is_empty() {
                    continue;
                }
                let f = tsv_fields(line, lineno, expected.len())?;
                rows.push(EntityRow {
                    id: parse_num(f[0], "id", lineno)?,
                    sid: parse_num(f[1], "sid", lineno)?,
                    tid: parse_num(f[2], "tid", lineno)?,
                    tid_end: parse_num(f[3], "tid_end", lineno)?,
                    entity_type: f[4].to_string(),
                    entity: f[5].to_string(),
                    entity_normalized: opt(f[6]),
                });
            }
            out.entity = rows;
        }
        SidecarKind::Coreference => {
            let mut rows = Vec::new();
            for (i, line) in lines {
                let lineno = i + 1;
                if line.is_empty() {
                    continue;
                }
                let f = tsv_fields(line, lineno, expected.len())?;
                rows.push(CoreferenceRow {
                    id: parse_num(f[0], "id", lineno)?,
                    rid: parse_num(f[1], "rid", lineno)?,
                    mid: parse_num(f[2], "mid", lineno)?,
                    mention: f[3].to_string(),
                    mention_type: parse_label(f[4], lineno)?,
                    number: parse_label(f[5], lineno)?,
                    gender: parse_label(f[6], lineno)?,
                    animacy: parse_label(f[7], lineno)?,
                    sid: parse_num(f[8], "sid", lineno)?,
                    tid: parse_num(f[9], "tid", lineno)?,
                    tid_end: parse_num(f[10], "tid_end", lineno)?,
                    tid_head: parse_num(f[11], "tid_head", lineno)?,
                });
            }
            out.coreference = rows;
        }
        SidecarKind::Sentence => {
            let mut rows = Vec::new();
            for (i, line) in lines {
                let lineno = i + 1;
                if line.is_empty() {
                    continue;
                }
                let f = tsv_fields(line, lineno, expected.len())?;
                rows.push(SentenceRow {
                    id: parse_num(f[0], "id", lineno)?,
                    sid: parse_num(f[1], "sid", lineno)?,
                    sentiment: parse_num(f[2], "sentiment", lineno)?,
                });
            }
            out.sentence = rows;
        }
    }

    // Validate with the new table still in file order so the report's row
    // numbers match the file (data row N is file line N+1).
    let report = validate(&out);
    if !report.ok() {
        return Err(SidecarError::Invalid(report));
    }
    out.sort_tables();
    Ok(out)
}

/// Attaches an embedding row for every token, in token-table order. The
/// lookup key is the token's word with a lowercase fallback;
/// out-of-vocabulary words get the zero vector. All other tables are
/// preserved bit-for-bit.
pub fn attach_vectors(a: &AnnotationSet, lex: &EmbeddingLexicon) -> AnnotationSet {
    let mut keys: Vec<TokenKey> = Vec::with_capacity(a.token.len());
    let mut values: Vec<f64> = Vec::with_capacity(a.token.len() * lex.dim);
    for t in &a.token {
        keys.push(t.key());
        match lex.lookup(&t.word) {
            Some(v) => values.extend_from_slice(v),
            None => values.extend(std::iter::repeat_n(0.0, lex.dim)),
        }
    }
    let mut out = a.clone();
    out.vector = Some(VectorMatrix {
        keys,
        dim: lex.dim,
        values,
    });
    out
}
