//! Table accessors: ROOT-row synthesis for tokens, the dependency↔token
//! auto-join, and plain getters for the remaining tables. All accessors are
//! pure and return rows in primary-key order.

use std::collections::HashMap;

use thiserror::Error;

use crate::model::{
    AnnotationSet, CoreferenceRow, DependencyRow, DocumentRow, EntityRow, SentenceRow, TokenKey,
    TokenRow, VectorMatrix,
};

/// A dependency row augmented with the governor's and target's word/lemma,
/// looked up in the ROOT-including token table.
#[derive(Debug, Clone, PartialEq)]
pub struct DependencyJoinedRow {
    pub id: u32,
    pub sid: u32,
    pub tid: u32,
    pub tid_target: u32,
    pub relation: String,
    pub relation_full: Option<String>,
    pub word: String,
    pub lemma: Option<String>,
    pub word_target: String,
    pub lemma_target: Option<String>,
}

/// The token table. With `include_root` set, a phantom row
/// (tid 0, word "ROOT", lemma "ROOT", no upos/pos/cid) is prepended to each
/// sentence; such rows are never stored, only synthesized here.
pub fn get_token(a: &AnnotationSet, include_root: bool) -> Vec<TokenRow> {
    let mut sorted: Vec<TokenRow> = a.token.clone();
    sorted.sort_by_key(|t| (t.id, t.sid, t.tid));
    if !include_root {
        return sorted;
    }
    let mut out = Vec::with_capacity(sorted.len() * 2);
    let mut current: Option<(u32, u32)> = None;
    for t in sorted {
        if current != Some((t.id, t.sid)) {
            current = Some((t.id, t.sid));
            out.push(TokenRow {
                id: t.id,
                sid: t.sid,
                tid: 0,
                word: "ROOT".to_string(),
                lemma: Some("ROOT".to_string()),
                upos: None,
                pos: None,
                cid: None,
            });
        }
        out.push(t);
    }
    out
}

/// The stored dependency table, in primary-key order.
pub fn get_dependency(a: &AnnotationSet) -> Vec<DependencyRow> {
    let mut rows = a.dependency.clone();
    rows.sort_by_key(|d| (d.id, d.sid, d.tid, d.tid_target));
    rows
}

/// The dependency table joined to the words and lemmas of both endpoints.
/// Row count and order are identical to [`get_dependency`]; the governor of
/// a ROOT-governed row joins to the synthesized ROOT token.
///
/// Requires a validated set: every endpoint must exist in the
/// ROOT-including token table.
pub fn get_dependency_joined(a: &AnnotationSet) -> Vec<DependencyJoinedRow> {
    let tokens = get_token(a, true);
    let by_key: HashMap<TokenKey, &TokenRow> = tokens.iter().map(|t| (t.key(), t)).collect();
    let lookup = |id: u32, sid: u32, tid: u32| -> &TokenRow {
        by_key
            .get(&TokenKey::new(id, sid, tid))
            .unwrap_or_else(|| panic!("validated set: token (id={id} sid={sid} tid={tid}) exists"))
    };
    get_dependency(a)
        .into_iter()
        .map(|d| {
            let gov = lookup(d.id, d.sid, d.tid);
            let tgt = lookup(d.id, d.sid, d.tid_target);
            DependencyJoinedRow {
                id: d.id,
                sid: d.sid,
                tid: d.tid,
                tid_target: d.tid_target,
                relation: d.relation,
                relation_full: d.relation_full,
                word: gov.word.clone(),
                lemma: gov.lemma.clone(),
                word_target: tgt.word.clone(),
                lemma_target: tgt.lemma.clone(),
            }
        })
        .collect()
}

/// One of the plainly-gettable tables.
#[derive(Debug, Clone, PartialEq)]
pub enum Table {
    Document(Vec<DocumentRow>),
    Entity(Vec<EntityRow>),
    Coreference(Vec<CoreferenceRow>),
    Sentence(Vec<SentenceRow>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error(
    "unknown table {name:?}; expected document, entity, coreference, or sentence \
     (token, dependency, and vector have dedicated accessors)"
)]
pub struct UnknownTable {
    pub name: String,
}

/// Returns the named table unchanged, ordered by its primary key.
pub fn get_table(a: &AnnotationSet, name: &str) -> Result<Table, UnknownTable> {
    let table = match name {
        "document" => {
            let mut rows = a.document.clone();
            rows.sort_by_key(|d| d.id);
            Table::Document(rows)
        }
        "entity" => {
            let mut rows = a.entity.clone();
            rows.sort_by_key(|e| (e.id, e.sid, e.tid));
            Table::Entity(rows)
        }
        "coreference" => {
            let mut rows = a.coreference.clone();
            rows.sort_by_key(|c| (c.id, c.rid, c.mid));
            Table::Coreference(rows)
        }
        "sentence" => {
            let mut rows = a.sentence.clone();
            rows.sort_by_key(|s| (s.id, s.sid));
            Table::Sentence(rows)
        }
        other => {
            return Err(UnknownTable {
                name: other.to_string(),
            })
        }
    };
    Ok(table)
}

/// The embedding matrix, or an empty matrix when none was attached.
pub fn get_vector(a: &AnnotationSet) -> VectorMatrix {
    a.vector.clone().unwrap_or_else(VectorMatrix::empty)
}
