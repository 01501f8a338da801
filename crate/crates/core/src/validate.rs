//! Structural validation of an annotation set.
//!
//! `validate` walks all seven tables and collects every violation it finds
//! rather than stopping at the first, so a report pinpoints all problems in
//! data assembled from external files. Violations carry one of a small set
//! of stable codes that callers (and the command-line tool) can match on.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use crate::model::{AnnotationSet, DocId, SentId, TokId, TokenKey};

/// Stable machine-readable violation codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationCode {
    /// A primary key appears more than once, or a token is governed twice.
    DupKey,
    /// A row references a document, sentence, or token that does not exist.
    FkViolation,
    /// A span's end precedes its start, or a head lies outside its span.
    BadSpan,
    /// A coreference class has no row whose mention id equals the class id.
    CanonicalMissing,
    /// A value or key falls outside its documented range or shape.
    Range,
    /// A token's recorded character offset does not match the raw text.
    OffsetMismatch,
    /// The vector matrix keys or shape disagree with the token table.
    VectorKeyMismatch,
}

impl ViolationCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ViolationCode::DupKey => "DUP_KEY",
            ViolationCode::FkViolation => "FK_VIOLATION",
            ViolationCode::BadSpan => "BAD_SPAN",
            ViolationCode::CanonicalMissing => "CANONICAL_MISSING",
            ViolationCode::Range => "RANGE",
            ViolationCode::OffsetMismatch => "OFFSET_MISMATCH",
            ViolationCode::VectorKeyMismatch => "VECTOR_KEY_MISMATCH",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The table a violation was found in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TableName {
    Document,
    Token,
    Dependency,
    Entity,
    Coreference,
    Sentence,
    Vector,
}

impl TableName {
    pub fn as_str(&self) -> &'static str {
        match self {
            TableName::Document => "document",
            TableName::Token => "token",
            TableName::Dependency => "dependency",
            TableName::Entity => "entity",
            TableName::Coreference => "coreference",
            TableName::Sentence => "sentence",
            TableName::Vector => "vector",
        }
    }
}

impl fmt::Display for TableName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A single problem found in one table. `locator` identifies the offending
/// row (1-based position plus its key fields) in the order the table was
/// supplied, so line numbers line up with input files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub code: ViolationCode,
    pub table: TableName,
    pub locator: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {}: {}",
            self.code, self.table, self.locator, self.message
        )
    }
}

/// All violations found in one pass over a set, in table order
/// (document, token, dependency, entity, coreference, sentence, vector)
/// and row order within each table.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    /// Distinct codes present, in first-occurrence order.
    pub fn codes(&self) -> Vec<ViolationCode> {
        let mut seen = Vec::new();
        for v in &self.violations {
            if !seen.contains(&v.code) {
                seen.push(v.code);
            }
        }
        seen
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

struct Reporter {
    violations: Vec<Violation>,
}

impl Reporter {
    fn push(&mut self, code: ViolationCode, table: TableName, locator: String, message: String) {
        self.violations.push(Violation {
            code,
            table,
            locator,
            message,
        });
    }
}

fn row_locator(index: usize, key: &str) -> String {
    format!("row {} ({})", index + 1, key)
}

/// Checks every structural invariant of the data model and reports all
/// violations found. A set built by this crate's constructors always yields
/// an empty report; the checks exist for data assembled from external files.
pub fn validate(set: &AnnotationSet) -> ValidationReport {
    let mut r = Reporter {
        violations: Vec::new(),
    };

    // Indexes shared by the reference checks below.
    let doc_ids: HashSet<DocId> = set.document.iter().map(|d| d.id).collect();
    let token_keys: HashSet<TokenKey> = set.token.iter().map(|t| t.key()).collect();
    let mut sentence_tids: BTreeMap<(DocId, SentId), Vec<TokId>> = BTreeMap::new();
    for t in &set.token {
        sentence_tids.entry((t.id, t.sid)).or_default().push(t.tid);
    }

    check_document(set, &mut r);
    check_token(set, &doc_ids, &sentence_tids, &mut r);
    check_dependency(set, &doc_ids, &token_keys, &mut r);
    check_entity(set, &doc_ids, &token_keys, &mut r);
    check_coreference(set, &doc_ids, &token_keys, &mut r);
    check_sentence(set, &doc_ids, &sentence_tids, &mut r);
    check_vector(set, &mut r);

    ValidationReport {
        violations: r.violations,
    }
}

fn check_document(set: &AnnotationSet, r: &mut Reporter) {
    let mut seen: HashSet<DocId> = HashSet::new();
    let first_extra: Option<Vec<&String>> = set
        .document
        .first()
        .map(|d| d.extra.iter().map(|(name, _)| name).collect());

    for (i, d) in set.document.iter().enumerate() {
        let loc = row_locator(i, &format!("id={}", d.id));
        if !seen.insert(d.id) {
            r.push(
                ViolationCode::DupKey,
                TableName::Document,
                loc.clone(),
                format!("document id {} already used", d.id),
            );
        } else if d.id as usize != i + 1 {
            r.push(
                ViolationCode::Range,
                TableName::Document,
                loc.clone(),
                format!("document ids must run 1..n in order; expected {}", i + 1),
            );
        }
        let lang_ok = d.language.len() == 2 && d.language.chars().all(|c| c.is_ascii_lowercase());
        if !lang_ok {
            r.push(
                ViolationCode::Range,
                TableName::Document,
                loc.clone(),
                format!(
                    "language must be two lowercase ASCII letters, got {:?}",
                    d.language
                ),
            );
        }
        if let Some(expected) = &first_extra {
            let names: Vec<&String> = d.extra.iter().map(|(name, _)| name).collect();
            if &names != expected {
                r.push(
                    ViolationCode::Range,
                    TableName::Document,
                    loc,
                    format!(
                        "extra metadata columns {:?} differ from first row's {:?}",
                        names, expected
                    ),
                );
            }
        }
    }
}

fn check_token(
    set: &AnnotationSet,
    doc_ids: &HashSet<DocId>,
    sentence_tids: &BTreeMap<(DocId, SentId), Vec<TokId>>,
    r: &mut Reporter,
) {
    let mut seen: HashSet<TokenKey> = HashSet::new();
    let mut char_cache: HashMap<DocId, Vec<char>> = HashMap::new();

    for (i, t) in set.token.iter().enumerate() {
        let loc = row_locator(i, &t.key().to_string());
        if !seen.insert(t.key()) {
            r.push(
                ViolationCode::DupKey,
                TableName::Token,
                loc.clone(),
                "token key already used".to_string(),
            );
        }
        if t.sid < 1 || t.tid < 1 {
            r.push(
                ViolationCode::Range,
                TableName::Token,
                loc.clone(),
                "sid and tid must start at 1 (tid 0 is the synthesized ROOT)".to_string(),
            );
        }
        if !doc_ids.contains(&t.id) {
            r.push(
                ViolationCode::FkViolation,
                TableName::Token,
                loc.clone(),
                format!("no document with id {}", t.id),
            );
        }
        if let Some(cid) = t.cid {
            if let Some(text) = set.raw_text.get(&t.id) {
                let chars = char_cache
                    .entry(t.id)
                    .or_insert_with(|| text.chars().collect());
                let start = cid as usize;
                let end = start + t.word.chars().count();
                let matches =
                    end <= chars.len() && chars[start..end].iter().copied().eq(t.word.chars());
                if !matches {
                    r.push(
                        ViolationCode::OffsetMismatch,
                        TableName::Token,
                        loc.clone(),
                        format!("word {:?} not found at offset {cid}", t.word),
                    );
                }
            }
        }
    }

    // Within each sentence, tids must be exactly 1..m (checked on the
    // deduplicated set so duplicates are reported once, above).
    for (&(id, sid), tids) in sentence_tids {
        if sid < 1 {
            continue; // already reported per-row
        }
        let distinct: HashSet<TokId> = tids.iter().copied().collect();
        let m = distinct.len() as TokId;
        let contiguous = (1..=m).all(|tid| distinct.contains(&tid));
        if !contiguous {
            r.push(
                ViolationCode::Range,
                TableName::Token,
                format!("sentence (id={id} sid={sid})"),
                format!("token ids must be contiguous from 1; found {:?}", {
                    let mut v: Vec<TokId> = distinct.into_iter().collect();
                    v.sort_unstable();
                    v
                }),
            );
        }
    }
}

fn check_dependency(
    set: &AnnotationSet,
    doc_ids: &HashSet<DocId>,
    token_keys: &HashSet<TokenKey>,
    r: &mut Reporter,
) {
    let mut seen: HashSet<(DocId, SentId, TokId, TokId)> = HashSet::new();
    let mut governed: HashSet<(DocId, SentId, TokId)> = HashSet::new();
    let mut root_rows: BTreeMap<(DocId, SentId), usize> = BTreeMap::new();
    let mut parsed: HashSet<(DocId, SentId)> = HashSet::new();

    for (i, d) in set.dependency.iter().enumerate() {
        let loc = row_locator(
            i,
            &format!(
                "id={} sid={} tid={} tid_target={}",
                d.id, d.sid, d.tid, d.tid_target
            ),
        );
        if !seen.insert((d.id, d.sid, d.tid, d.tid_target)) {
            r.push(
                ViolationCode::DupKey,
                TableName::Dependency,
                loc.clone(),
                "dependency key already used".to_string(),
            );
        }
        if !governed.insert((d.id, d.sid, d.tid_target)) {
            r.push(
                ViolationCode::DupKey,
                TableName::Dependency,
                loc.clone(),
                format!("token tid={} already has a governor", d.tid_target),
            );
        }
        if d.tid_target < 1 {
            r.push(
                ViolationCode::Range,
                TableName::Dependency,
                loc.clone(),
                "tid_target must be a real token (>= 1)".to_string(),
            );
        } else if !token_keys.contains(&TokenKey::new(d.id, d.sid, d.tid_target)) {
            r.push(
                ViolationCode::FkViolation,
                TableName::Dependency,
                loc.clone(),
                format!("target token tid={} does not exist", d.tid_target),
            );
        }
        if d.tid == 0 {
            *root_rows.entry((d.id, d.sid)).or_insert(0) += 1;
        } else if !token_keys.contains(&TokenKey::new(d.id, d.sid, d.tid)) {
            r.push(
                ViolationCode::FkViolation,
                TableName::Dependency,
                loc.clone(),
                format!("governor token tid={} does not exist", d.tid),
            );
        }
        if !doc_ids.contains(&d.id) {
            r.push(
                ViolationCode::FkViolation,
                TableName::Dependency,
                loc,
                format!("no document with id {}", d.id),
            );
        }
        parsed.insert((d.id, d.sid));
    }

    // A sentence with any dependency rows is a parsed sentence and must have
    // exactly one ROOT-governed row.
    for (id, sid) in parsed {
        let n = root_rows.get(&(id, sid)).copied().unwrap_or(0);
        if n != 1 {
            r.push(
                ViolationCode::Range,
                TableName::Dependency,
                format!("sentence (id={id} sid={sid})"),
                format!("parsed sentence must have exactly one ROOT row, found {n}"),
            );
        }
    }
}

fn check_entity(
    set: &AnnotationSet,
    doc_ids: &HashSet<DocId>,
    token_keys: &HashSet<TokenKey>,
    r: &mut Reporter,
) {
    let mut seen: HashSet<(DocId, SentId, TokId)> = HashSet::new();
    for (i, e) in set.entity.iter().enumerate() {
        let loc = row_locator(i, &format!("id={} sid={} tid={}", e.id, e.sid, e.tid));
        if !seen.insert((e.id, e.sid, e.tid)) {
            r.push(
                ViolationCode::DupKey,
                TableName::Entity,
                loc.clone(),
                "entity key already used".to_string(),
            );
        }
        if e.tid_end < e.tid {
            r.push(
                ViolationCode::BadSpan,
                TableName::Entity,
                loc.clone(),
                format!("span end {} precedes start {}", e.tid_end, e.tid),
            );
        }
        if !doc_ids.contains(&e.id) {
            r.push(
                ViolationCode::FkViolation,
                TableName::Entity,
                loc.clone(),
                format!("no document with id {}", e.id),
            );
        }
        for (what, tid) in [("start", e.tid), ("end", e.tid_end)] {
            if !token_keys.contains(&TokenKey::new(e.id, e.sid, tid)) {
                r.push(
                    ViolationCode::FkViolation,
                    TableName::Entity,
                    loc.clone(),
                    format!("{what} token tid={tid} does not exist"),
                );
            }
        }
    }
}

fn check_coreference(
    set: &AnnotationSet,
    doc_ids: &HashSet<DocId>,
    token_keys: &HashSet<TokenKey>,
    r: &mut Reporter,
) {
    let mut seen: HashSet<(DocId, u32)> = HashSet::new();
    let mut classes: BTreeMap<(DocId, u32), bool> = BTreeMap::new();

    for (i, c) in set.coreference.iter().enumerate() {
        let loc = row_locator(i, &format!("id={} rid={} mid={}", c.id, c.rid, c.mid));
        if !seen.insert((c.id, c.mid)) {
            r.push(
                ViolationCode::DupKey,
                TableName::Coreference,
                loc.clone(),
                format!("mention id {} already used in document {}", c.mid, c.id),
            );
        }
        let canonical = classes.entry((c.id, c.rid)).or_insert(false);
        *canonical |= c.mid == c.rid;

        if c.tid_end < c.tid {
            r.push(
                ViolationCode::BadSpan,
                TableName::Coreference,
                loc.clone(),
                format!("span end {} precedes start {}", c.tid_end, c.tid),
            );
        } else if c.tid_head < c.tid || c.tid_head > c.tid_end {
            r.push(
                ViolationCode::BadSpan,
                TableName::Coreference,
                loc.clone(),
                format!(
                    "head tid {} outside span [{}, {}]",
                    c.tid_head, c.tid, c.tid_end
                ),
            );
        }
        if !doc_ids.contains(&c.id) {
            r.push(
                ViolationCode::FkViolation,
                TableName::Coreference,
                loc.clone(),
                format!("no document with id {}", c.id),
            );
        }
        for (what, tid) in [("start", c.tid), ("end", c.tid_end), ("head", c.tid_head)] {
            if !token_keys.contains(&TokenKey::new(c.id, c.sid, tid)) {
                r.push(
                    ViolationCode::FkViolation,
                    TableName::Coreference,
                    loc.clone(),
                    format!("{what} token tid={tid} does not exist"),
                );
            }
        }
    }

    for ((id, rid), has_canonical) in classes {
        if !has_canonical {
            r.push(
                ViolationCode::CanonicalMissing,
                TableName::Coreference,
                format!("class (id={id} rid={rid})"),
                format!("no mention with mid equal to the class id {rid}"),
            );
        }
    }
}

fn check_sentence(
    set: &AnnotationSet,
    doc_ids: &HashSet<DocId>,
    sentence_tids: &BTreeMap<(DocId, SentId), Vec<TokId>>,
    r: &mut Reporter,
) {
    let mut seen: HashSet<(DocId, SentId)> = HashSet::new();
    for (i, s) in set.sentence.iter().enumerate() {
        let loc = row_locator(i, &format!("id={} sid={}", s.id, s.sid));
        if !seen.insert((s.id, s.sid)) {
            r.push(
                ViolationCode::DupKey,
                TableName::Sentence,
                loc.clone(),
                "sentence key already used".to_string(),
            );
        }
        if s.sentiment > 4 {
            r.push(
                ViolationCode::Range,
                TableName::Sentence,
                loc.clone(),
                format!("sentiment must be 0..=4, got {}", s.sentiment),
            );
        }
        if !doc_ids.contains(&s.id) {
            r.push(
                ViolationCode::FkViolation,
                TableName::Sentence,
                loc.clone(),
                format!("no document with id {}", s.id),
            );
        } else if !sentence_tids.contains_key(&(s.id, s.sid)) {
            r.push(
                ViolationCode::FkViolation,
                TableName::Sentence,
                loc,
                format!(
                    "document {} has no sentence {} in the token table",
                    s.id, s.sid
                ),
            );
        }
    }
}

fn check_vector(set: &AnnotationSet, r: &mut Reporter) {
    let Some(v) = &set.vector else {
        return;
    };
    let expected: Vec<TokenKey> = set.token.iter().map(|t| t.key()).collect();
    let mut sorted = expected.clone();
    sorted.sort_unstable();
    if v.keys != sorted {
        r.push(
            ViolationCode::VectorKeyMismatch,
            TableName::Vector,
            "keys".to_string(),
            format!(
                "vector keys must match the token table exactly ({} keys vs {} tokens)",
                v.keys.len(),
                expected.len()
            ),
        );
    }
    if v.values.len() != v.keys.len() * v.dim {
        r.push(
            ViolationCode::VectorKeyMismatch,
            TableName::Vector,
            "shape".to_string(),
            format!(
                "values length {} is not rows {} times dim {}",
                v.values.len(),
                v.keys.len(),
                v.dim
            ),
        );
    }
}
