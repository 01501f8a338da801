//! The normalized annotation data model: seven linked tables sharing
//! integer keys, plus optional raw text retained for offset checks.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::validate::{validate, ValidationReport};

/// Document key. Assigned 1..n in corpus input order.
pub type DocId = u32;
/// Sentence index within a document, starting at 1.
pub type SentId = u32;
/// Token index within a sentence. Real tokens start at 1; 0 denotes the
/// synthesized sentence ROOT and is never stored.
pub type TokId = u32;

/// Composite key addressing a single token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenKey {
    pub id: DocId,
    pub sid: SentId,
    pub tid: TokId,
}

impl TokenKey {
    pub fn new(id: DocId, sid: SentId, tid: TokId) -> Self {
        TokenKey { id, sid, tid }
    }
}

impl fmt::Display for TokenKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "id={} sid={} tid={}", self.id, self.sid, self.tid)
    }
}

/// One row of the document table.
///
/// `extra` holds corpus-specific metadata columns (for example a year or a
/// speaker). Every document row in a set carries the same column names, in
/// the same order.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentRow {
    pub id: DocId,
    pub time: DateTime<Utc>,
    pub version: String,
    pub language: String,
    pub uri: String,
    pub extra: Vec<(String, String)>,
}

impl DocumentRow {
    pub fn new(
        id: DocId,
        time: DateTime<Utc>,
        version: impl Into<String>,
        language: impl Into<String>,
        uri: impl Into<String>,
    ) -> Self {
        DocumentRow {
            id,
            time,
            version: version.into(),
            language: language.into(),
            uri: uri.into(),
            extra: Vec::new(),
        }
    }

    /// Value of an extra metadata column, if declared.
    pub fn extra_value(&self, column: &str) -> Option<&str> {
        self.extra
            .iter()
            .find(|(name, _)| name == column)
            .map(|(_, value)| value.as_str())
    }
}

/// One row of the token table. ROOT rows (tid 0) are never stored; they are
/// synthesized by the accessors.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenRow {
    pub id: DocId,
    pub sid: SentId,
    pub tid: TokId,
    pub word: String,
    pub lemma: Option<String>,
    pub upos: Option<String>,
    pub pos: Option<String>,
    /// Character offset of the word start in the source document, counted in
    /// Unicode scalar values from 0.
    pub cid: Option<u32>,
}

impl TokenRow {
    pub fn key(&self) -> TokenKey {
        TokenKey::new(self.id, self.sid, self.tid)
    }
}

/// One row of the dependency table. `tid` is the governor (0 for the
/// sentence ROOT), `tid_target` the dependent.
#[derive(Debug, Clone, PartialEq)]
pub struct DependencyRow {
    pub id: DocId,
    pub sid: SentId,
    pub tid: TokId,
    pub tid_target: TokId,
    pub relation: String,
    pub relation_full: Option<String>,
}

/// One row of the entity table; a token span `[tid, tid_end]` within one
/// sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityRow {
    pub id: DocId,
    pub sid: SentId,
    pub tid: TokId,
    pub tid_end: TokId,
    pub entity_type: String,
    pub entity: String,
    pub entity_normalized: Option<String>,
}

/// Mention types produced by coreference annotators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MentionType {
    List,
    Nominal,
    Pronominal,
    Proper,
}

/// Grammatical number of a mention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MentionNumber {
    Plural,
    Singular,
    Unknown,
}

/// Grammatical gender of a mention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MentionGender {
    Female,
    Male,
    Neutral,
    Unknown,
}

/// Animacy of a mention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MentionAnimacy {
    Animate,
    Inanimate,
    Unknown,
}

macro_rules! label_enum {
    ($ty:ty, $(($variant:path, $label:literal)),+) => {
        impl $ty {
            pub fn as_str(&self) -> &'static str {
                match self {
                    $($variant => $label),+
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = UnknownLabel;

            fn from_str(s: &str) -> Result<Self, UnknownLabel> {
                match s {
                    $($label => Ok($variant),)+
                    _ => Err(UnknownLabel {
                        value: s.to_string(),
                        expected: &[$($label),+],
                    }),
                }
            }
        }
    };
}

label_enum!(
    MentionType,
    (MentionType::List, "LIST"),
    (MentionType::Nominal, "NOMINAL"),
    (MentionType::Pronominal, "PRONOMINAL"),
    (MentionType::Proper, "PROPER")
);

label_enum!(
    MentionNumber,
    (MentionNumber::Plural, "PLURAL"),
    (MentionNumber::Singular, "SINGULAR"),
    (MentionNumber::Unknown, "UNKNOWN")
);

label_enum!(
    MentionGender,
    (MentionGender::Female, "FEMALE"),
    (MentionGender::Male, "MALE"),
    (MentionGender::Neutral, "NEUTRAL"),
    (MentionGender::Unknown, "UNKNOWN")
);

label_enum!(
    MentionAnimacy,
    (MentionAnimacy::Animate, "ANIMATE"),
    (MentionAnimacy::Inanimate, "INANIMATE"),
    (MentionAnimacy::Unknown, "UNKNOWN")
);

/// Error for a label value outside the closed vocabulary of its column.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown label {value:?}; expected one of {expected:?}")]
pub struct UnknownLabel {
    pub value: String,
    pub expected: &'static [&'static str],
}

/// One coreference mention. Rows sharing (id, rid) form a reference class;
/// the canonical mention of a class is the row whose mid equals rid.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreferenceRow {
    pub id: DocId,
    pub rid: u32,
    pub mid: u32,
    pub mention: String,
    pub mention_type: MentionType,
    pub number: MentionNumber,
    pub gender: MentionGender,
    pub animacy: MentionAnimacy,
    pub sid: SentId,
    pub tid: TokId,
    pub tid_end: TokId,
    pub tid_head: TokId,
}

/// Sentence-level annotation row; sentiment runs 0 (very negative) to 4
/// (very positive).
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceRow {
    pub id: DocId,
    pub sid: SentId,
    pub sentiment: u8,
}

/// Word-embedding matrix: one row per non-ROOT token, in token-table order.
/// `values` is row-major with `dim` columns per key.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorMatrix {
    pub keys: Vec<TokenKey>,
    pub dim: usize,
    pub values: Vec<f64>,
}

impl VectorMatrix {
    pub fn empty() -> Self {
        VectorMatrix {
            keys: Vec::new(),
            dim: 0,
            values: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.keys.len()
    }

    /// The embedding values of row `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }
}

/// Auxiliary metadata table: named columns plus one row of values per
/// document (or per matrix row, for PCA output).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetaTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetaError {
    #[error("metadata has {got} rows but {expected} are required")]
    LengthMismatch { expected: usize, got: usize },
    #[error("metadata row {row} has {got} values for {expected} columns")]
    WidthMismatch {
        row: usize,
        expected: usize,
        got: usize,
    },
}

impl MetaTable {
    /// Checks that the table has exactly `expected_rows` rows and that every
    /// row matches the column count.
    pub fn check_shape(&self, expected_rows: usize) -> Result<(), MetaError> {
        if self.rows.len() != expected_rows {
            return Err(MetaError::LengthMismatch {
                expected: expected_rows,
                got: self.rows.len(),
            });
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.columns.len() {
                return Err(MetaError::WidthMismatch {
                    row: i + 1,
                    expected: self.columns.len(),
                    got: row.len(),
                });
            }
        }
        Ok(())
    }
}

/// The full annotation object: six row tables, the optional embedding
/// matrix, and any retained source texts keyed by document id.
///
/// A set is immutable once constructed; every public construction path in
/// this crate yields a set for which [`validate`] reports no violations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnnotationSet {
    pub document: Vec<DocumentRow>,
    pub token: Vec<TokenRow>,
    pub dependency: Vec<DependencyRow>,
    pub entity: Vec<EntityRow>,
    pub coreference: Vec<CoreferenceRow>,
    pub sentence: Vec<SentenceRow>,
    pub vector: Option<VectorMatrix>,
    pub raw_text: BTreeMap<DocId, String>,
}

impl AnnotationSet {
    /// Sorts every table by its primary key. Construction paths call this
    /// before handing the set out.
    pub fn sort_tables(&mut self) {
        self.document.sort_by_key(|r| r.id);
        self.token.sort_by_key(|r| (r.id, r.sid, r.tid));
        self.dependency
            .sort_by_key(|r| (r.id, r.sid, r.tid, r.tid_target));
        self.entity.sort_by_key(|r| (r.id, r.sid, r.tid));
        self.coreference.sort_by_key(|r| (r.id, r.rid, r.mid));
        self.sentence.sort_by_key(|r| (r.id, r.sid));
    }

    /// Drops retained raw text, e.g. before comparing against a set read
    /// back from disk (raw text is not persisted).
    pub fn without_raw_text(mut self) -> Self {
        self.raw_text.clear();
        self
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("duplicate document id {0}")]
    DuplicateDocId(DocId),
    #[error("document ids must be exactly 1..n in input order; found id {0}")]
    BadDocId(DocId),
    #[error("annotation set failed validation:\n{0}")]
    Invalid(ValidationReport),
}

/// Builds an annotation set holding only the given document table; all
/// annotation tables start empty and no vector matrix is attached.
pub fn new_annotation(documents: Vec<DocumentRow>) -> Result<AnnotationSet, ModelError> {
    let mut seen = HashSet::new();
    for row in &documents {
        if !seen.insert(row.id) {
            return Err(ModelError::DuplicateDocId(row.id));
        }
    }
    for (i, row) in documents.iter().enumerate() {
        if row.id as usize != i + 1 {
            return Err(ModelError::BadDocId(row.id));
        }
    }
    let set = AnnotationSet {
        document: documents,
        ..AnnotationSet::default()
    };
    let report = validate(&set);
    if !report.ok() {
        return Err(ModelError::Invalid(report));
    }
    Ok(set)
}
