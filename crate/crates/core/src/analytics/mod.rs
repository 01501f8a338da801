//! Corpus analytics over the data model: sparse term matrices with TF-IDF
//! weighting, principal components, and the standard exploratory queries
//! (sentence lengths, top terms/entities, filtered dependency pairs).

pub mod export;
pub mod pca;

pub use export::{export_matrix, ExportError};
pub use pca::{tidy_pca, PcaTable};

use std::collections::{HashMap, HashSet};
use std::str::FromStr;

use thiserror::Error;

use crate::access::get_dependency_joined;
use crate::ingest::FrequencyLexicon;
use crate::model::{AnnotationSet, DocumentRow, TokenRow};

/// What the matrix values are.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Tf,
    Idf,
    Tfidf,
}

/// Term-frequency weighting scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfWeight {
    Raw,
    Dnorm,
    Lognorm,
    Binary,
}

macro_rules! keyword_enum {
    ($ty:ty, $what:literal, $(($variant:path, $label:literal)),+) => {
        impl $ty {
            pub fn as_str(&self) -> &'static str {
                match self {
                    $($variant => $label),+
                }
            }
        }

        impl std::fmt::Display for $ty {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($label => Ok($variant),)+
                    other => Err(format!(
                        concat!("unknown ", $what, " {:?}; expected one of {:?}"),
                        other,
                        [$($label),+]
                    )),
                }
            }
        }
    };
}

keyword_enum!(
    MatrixKind,
    "matrix type",
    (MatrixKind::Tf, "tf"),
    (MatrixKind::Idf, "idf"),
    (MatrixKind::Tfidf, "tfidf")
);

keyword_enum!(
    TfWeight,
    "tf weighting",
    (TfWeight::Raw, "raw"),
    (TfWeight::Dnorm, "dnorm"),
    (TfWeight::Lognorm, "lognorm"),
    (TfWeight::Binary, "binary")
);

/// A sparse document–term matrix. `doc_ids` are text keys (a composite key
/// like "1-12" is one document of the matrix); `triplets` hold
/// (doc index, term index, value) with at most one entry per position,
/// sorted by (doc, term).
#[derive(Debug, Clone, PartialEq)]
pub struct TermMatrix {
    pub doc_ids: Vec<String>,
    pub vocab: Vec<String>,
    pub triplets: Vec<(usize, usize, f64)>,
    pub kind: MatrixKind,
    pub weighting: TfWeight,
}

impl TermMatrix {
    pub fn empty(kind: MatrixKind, weighting: TfWeight) -> Self {
        TermMatrix {
            doc_ids: Vec::new(),
            vocab: Vec::new(),
            triplets: Vec::new(),
            kind,
            weighting,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.vocab.len()
    }

    /// Materializes the matrix densely (rows × cols), missing entries 0.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n_cols()]; self.n_rows()];
        for &(d, t, v) in &self.triplets {
            dense[d][t] = v;
        }
        dense
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("value out of range: {detail}")]
    BadRange { detail: String },
    #[error("unknown column {name:?}; expected one of {expected:?}")]
    UnknownColumn {
        name: String,
        expected: &'static [&'static str],
    },
    #[error("document-frequency filtering removed every term")]
    EmptyVocab,
    #[error("dimension mismatch: {detail}")]
    DimMismatch { detail: String },
    #[error("k = {k} exceeds min(rows, cols) = {max}")]
    KTooLarge { k: usize, max: usize },
}

/// How token rows are keyed to matrix documents: by document id, or by
/// document and sentence id (one matrix row per sentence, key "id-sid").
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DocVar {
    #[default]
    Id,
    IdSid,
}

keyword_enum!(
    DocVar,
    "document key column",
    (DocVar::Id, "id"),
    (DocVar::IdSid, "id-sid")
);

impl DocVar {
    fn key(&self, t: &TokenRow) -> String {
        match self {
            DocVar::Id => t.id.to_string(),
            DocVar::IdSid => format!("{}-{}", t.id, t.sid),
        }
    }
}

const TOKEN_VARS: &[&str] = &["lemma", "word", "upos", "pos"];

fn term_of<'a>(t: &'a TokenRow, token_var: &str) -> Option<&'a str> {
    match token_var {
        "lemma" => t.lemma.as_deref(),
        "word" => Some(t.word.as_str()),
        "upos" => t.upos.as_deref(),
        "pos" => t.pos.as_deref(),
        _ => unreachable!("token_var checked before use"),
    }
}

/// Builds a document–term matrix from token rows, optionally restricted to a
/// document-frequency band.
///
/// With N distinct document keys and df(t) the number of distinct documents
/// containing t, the vocabulary is every term with
/// min_df ≤ df(t)/N ≤ max_df (inclusive), sorted by code point. Term
/// frequencies follow `weight` (raw count; 1+ln(count); 1; or
/// 0.5 + 0.5·count/maxcount within the document), always only where the raw
/// count is positive. idf(t) = ln(N/df(t)). `kind` selects tf, the single
/// conceptual idf row (doc key "idf"), or their product. Rows whose
/// `token_var` value is absent are dropped; documents are ordered by first
/// appearance.
pub fn get_tfidf(
    tokens: &[TokenRow],
    min_df: f64,
    max_df: f64,
    kind: MatrixKind,
    weight: TfWeight,
    doc_var: DocVar,
    token_var: &str,
) -> Result<TermMatrix, AnalyticsError> {
    if !(0.0..=1.0).contains(&min_df) || !(0.0..=1.0).contains(&max_df) || min_df > max_df {
        return Err(AnalyticsError::BadRange {
            detail: format!("need 0 <= min_df <= max_df <= 1, got {min_df} and {max_df}"),
        });
    }
    if !TOKEN_VARS.contains(&token_var) {
        return Err(AnalyticsError::UnknownColumn {
            name: token_var.to_string(),
            expected: TOKEN_VARS,
        });
    }

    // Documents in first-appearance order; every token row's key counts,
    // even if its term is absent.
    let mut doc_ids: Vec<String> = Vec::new();
    let mut doc_index: HashMap<String, usize> = HashMap::new();
    for t in tokens {
        let key = doc_var.key(t);
        if !doc_index.contains_key(&key) {
            doc_index.insert(key.clone(), doc_ids.len());
            doc_ids.push(key);
        }
    }

    let mut counts: HashMap<(usize, &str), u64> = HashMap::new();
    let mut df: HashMap<&str, HashSet<usize>> = HashMap::new();
    for t in tokens {
        if let Some(term) = term_of(t, token_var) {
            let d = doc_index[&doc_var.key(t)];
            *counts.entry((d, term)).or_insert(0) += 1;
            df.entry(term).or_default().insert(d);
        }
    }

    let n = doc_ids.len() as f64;
    let mut vocab: Vec<&str> = df
        .iter()
        .filter(|(_, docs)| {
            let p = docs.len() as f64 / n;
            min_df <= p && p <= max_df
        })
        .map(|(term, _)| *term)
        .collect();
    vocab.sort_unstable();
    if vocab.is_empty() {
        return Err(AnalyticsError::EmptyVocab);
    }
    let term_index: HashMap<&str, usize> = vocab.iter().enumerate().map(|(i, t)| (*t, i)).collect();

    let idf = |term: &str| -> f64 { (n / df[term].len() as f64).ln() };

    if kind == MatrixKind::Idf {
        let triplets = vocab
            .iter()
            .enumerate()
            .map(|(j, term)| (0usize, j, idf(term)))
            .collect();
        return Ok(TermMatrix {
            doc_ids: vec!["idf".to_string()],
            vocab: vocab.into_iter().map(String::from).collect(),
            triplets,
            kind,
            weighting: weight,
        });
    }

    // Per-document maximum raw count over vocabulary terms (for dnorm).
    let mut maxcount: Vec<u64> = vec![0; doc_ids.len()];
    for (&(d, term), &c) in &counts {
        if term_index.contains_key(term) {
            maxcount[d] = maxcount[d].max(c);
        }
    }

    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    for (&(d, term), &c) in &counts {
        let Some(&j) = term_index.get(term) else {
            continue;
        };
        debug_assert!(c > 0);
        let tf = match weight {
            TfWeight::Raw => c as f64,
            TfWeight::Lognorm => 1.0 + (c as f64).ln(),
            TfWeight::Binary => 1.0,
            TfWeight::Dnorm => 0.5 + 0.5 * c as f64 / maxcount[d] as f64,
        };
        let value = match kind {
            MatrixKind::Tf => tf,
            MatrixKind::Tfidf => tf * idf(term),
            MatrixKind::Idf => unreachable!("handled above"),
        };
        triplets.push((d, j, value));
    }
    triplets.sort_unstable_by_key(|&(d, j, _)| (d, j));

    Ok(TermMatrix {
        doc_ids,
        vocab: vocab.into_iter().map(String::from).collect(),
        triplets,
        kind,
        weighting: weight,
    })
}

/// Empirical quantile with linear interpolation between order statistics:
/// at proportion p the value is x[h] + (h − ⌊h⌋)·(x[⌈h⌉] − x[⌊h⌋]) with
/// h = (n−1)p over the sorted sample. Empty samples yield NaN.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Token counts per sentence (ROOT rows are never stored, so never counted)
/// summarized at the requested quantile probabilities.
pub fn sentence_lengths(
    a: &AnnotationSet,
    probs: &[f64],
) -> Result<Vec<(f64, f64)>, AnalyticsError> {
    for &p in probs {
        if !(0.0..=1.0).contains(&p) {
            return Err(AnalyticsError::BadRange {
                detail: format!("quantile probability {p} outside [0, 1]"),
            });
        }
    }
    let mut counts: HashMap<(u32, u32), u64> = HashMap::new();
    for t in &a.token {
        *counts.entry((t.id, t.sid)).or_insert(0) += 1;
    }
    let mut lengths: Vec<f64> = counts.values().map(|&c| c as f64).collect();
    lengths.sort_by(f64::total_cmp);
    Ok(probs.iter().map(|&p| (p, quantile(&lengths, p))).collect())
}

/// Sorts (term, count) pairs by count descending, ties lexicographically
/// ascending, and keeps the top n.
fn rank(mut items: Vec<(String, u64)>, n: usize) -> Vec<(String, u64)> {
    items.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    items.truncate(n);
    items
}

const FILTER_COLUMNS: &[&str] = &["upos", "pos"];

/// The n most frequent lemmas (words, where the lemma is absent), counted
/// over token rows passing the part-of-speech filter. A filter column with
/// no value keeps every row where that column is present.
pub fn top_terms(
    a: &AnnotationSet,
    filter_column: Option<&str>,
    filter_value: Option<&str>,
    n: usize,
) -> Result<Vec<(String, u64)>, AnalyticsError> {
    if let Some(col) = filter_column {
        if !FILTER_COLUMNS.contains(&col) {
            return Err(AnalyticsError::UnknownColumn {
                name: col.to_string(),
                expected: FILTER_COLUMNS,
            });
        }
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for t in &a.token {
        let keep = match filter_column {
            None => true,
            Some(col) => {
                let actual = if col == "upos" {
                    t.upos.as_deref()
                } else {
                    t.pos.as_deref()
                };
                match filter_value {
                    Some(v) => actual == Some(v),
                    None => actual.is_some(),
                }
            }
        };
        if keep {
            *counts
                .entry(t.lemma.as_deref().unwrap_or(t.word.as_str()))
                .or_insert(0) += 1;
        }
    }
    Ok(rank(
        counts
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        n,
    ))
}

/// The n most frequent entity strings of one entity type.
pub fn top_entities(a: &AnnotationSet, entity_type: &str, n: usize) -> Vec<(String, u64)> {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for e in &a.entity {
        if e.entity_type == entity_type {
            *counts.entry(e.entity.as_str()).or_insert(0) += 1;
        }
    }
    rank(
        counts
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        n,
    )
}

/// One governor→dependent pair surviving the frequency filter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyPair {
    pub id: u32,
    /// The governor's word.
    pub word: String,
    /// The dependent's lemma (its word where the lemma is absent).
    pub lemma_target: String,
}

/// Joined dependency rows with the given relation, restricted to documents
/// passing `doc_filter`, keeping only pairs whose dependent lemma is rarer
/// than `max_frequency` in the lexicon (unlisted words count as frequency 0
/// and are kept). Rows come back in dependency-table order.
pub fn dependency_pairs<F>(
    a: &AnnotationSet,
    doc_filter: F,
    relation: &str,
    freq: &FrequencyLexicon,
    max_frequency: f64,
) -> Vec<DependencyPair>
where
    F: Fn(&DocumentRow) -> bool,
{
    let kept_docs: HashSet<u32> = a
        .document
        .iter()
        .filter(|d| doc_filter(d))
        .map(|d| d.id)
        .collect();
    get_dependency_joined(a)
        .into_iter()
        .filter(|d| kept_docs.contains(&d.id) && d.relation == relation)
        .filter_map(|d| {
            let lemma_target = d.lemma_target.unwrap_or_else(|| d.word_target.clone());
            if freq.frequency(&lemma_target) < max_frequency {
                Some(DependencyPair {
                    id: d.id,
                    word: d.word,
                    lemma_target,
                })
            } else {
                None
            }
        })
        .collect()
}
