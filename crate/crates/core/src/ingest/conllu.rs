//! CoNLL-U reader: 10 tab-separated columns, '#' comment lines, blank-line
//! sentence breaks, '_' for absent values. Captures FORM, LEMMA, UPOS, XPOS,
//! HEAD, and DEPREL; the remaining columns are accepted and ignored.

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::model::{AnnotationSet, DependencyRow, DocumentRow, MetaError, MetaTable, TokenRow};
use crate::validate::{validate, ValidationReport};

/// One retained word line of a CoNLL-U sentence. `form` is kept verbatim
/// (a literal "_" stays a "_" — a token's word cannot be absent); in every
/// other captured column '_' means absent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConlluRow {
    pub tid: u32,
    pub form: String,
    pub lemma: Option<String>,
    pub upos: Option<String>,
    pub xpos: Option<String>,
    pub head: Option<u32>,
    pub deprel: Option<String>,
}

/// One blank-line-delimited sentence block. `sent_index` is the 1-based
/// position in the parsed stream; comment lines are kept verbatim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConlluSentence {
    pub sent_index: usize,
    pub rows: Vec<ConlluRow>,
    pub comments: Vec<String>,
}

impl ConlluSentence {
    /// True when a comment marks this sentence as the start of a new
    /// document ("# newdoc", optionally followed by metadata).
    pub fn starts_new_document(&self) -> bool {
        self.comments.iter().any(|c| {
            let body = c.trim_start_matches('#').trim();
            body == "newdoc" || body.starts_with("newdoc ")
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConlluError {
    #[error("line {line}: {detail}")]
    MalformedLine { line: usize, detail: String },
    #[error("line {line}: head {head} out of range for a {max}-token sentence")]
    BadHead { line: usize, head: u32, max: u32 },
}

fn absent(field: &str) -> Option<String> {
    if field == "_" {
        None
    } else {
        Some(field.to_string())
    }
}

/// Parses a CoNLL-U stream into sentences. Multiword-token range lines
/// (ID "1-2") and empty-node lines (ID "5.1") are skipped; they have no
/// place in the integer tid scheme.
pub fn parse_conllu(input: &str) -> Result<Vec<ConlluSentence>, ConlluError> {
    let mut sentences = Vec::new();
    let mut rows: Vec<(usize, ConlluRow)> = Vec::new();
    let mut comments: Vec<String> = Vec::new();

    let flush = |rows: &mut Vec<(usize, ConlluRow)>,
                 comments: &mut Vec<String>,
                 sentences: &mut Vec<ConlluSentence>|
     -> Result<(), ConlluError> {
        if rows.is_empty() && comments.is_empty() {
            return Ok(());
        }
        let max = rows.len() as u32;
        for (line, row) in rows.iter() {
            if let Some(head) = row.head {
                if head > max || head == row.tid {
                    return Err(ConlluError::BadHead {
                        line: *line,
                        head,
                        max,
                    });
                }
            }
        }
        sentences.push(ConlluSentence {
            sent_index: sentences.len() + 1,
            rows: rows.drain(..).map(|(_, r)| r).collect(),
            comments: std::mem::take(comments),
        });
        Ok(())
    };

    for (i, line) in input.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            flush(&mut rows, &mut comments, &mut sentences)?;
            continue;
        }
        if line.starts_with('#') {
            comments.push(line.to_string());
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 10 {
            return Err(ConlluError::MalformedLine {
                line: lineno,
                detail: format!("expected 10 tab-separated columns, found {}", fields.len()),
            });
        }
        let id = fields[0];
        if id.contains('-') || id.contains('.') {
            continue; // multiword-token range or empty node
        }
        let tid: u32 = id.parse().map_err(|_| ConlluError::MalformedLine {
            line: lineno,
            detail: format!("token id {id:?} is not a positive integer"),
        })?;
        if tid as usize != rows.len() + 1 {
            return Err(ConlluError::MalformedLine {
                line: lineno,
                detail: format!(
                    "token ids must be contiguous from 1; expected {}, found {tid}",
                    rows.len() + 1
                ),
            });
        }
        let head = match fields[6] {
            "_" => None,
            h => Some(h.parse::<u32>().map_err(|_| ConlluError::MalformedLine {
                line: lineno,
                detail: format!("head {h:?} is not a non-negative integer"),
            })?),
        };
        rows.push((
            lineno,
            ConlluRow {
                tid,
                form: fields[1].to_string(),
                lemma: absent(fields[2]),
                upos: absent(fields[3]),
                xpos: absent(fields[4]),
                head,
                deprel: absent(fields[7]),
            },
        ));
    }
    flush(&mut rows, &mut comments, &mut sentences)?;
    Ok(sentences)
}

/// Groups a parsed stream into documents: a sentence bearing a "# newdoc"
/// comment starts a new group; without markers the whole stream is one
/// document.
pub fn split_documents(sentences: Vec<ConlluSentence>) -> Vec<Vec<ConlluSentence>> {
    let mut docs: Vec<Vec<ConlluSentence>> = Vec::new();
    for s in sentences {
        if docs.is_empty() || s.starts_new_document() {
            docs.push(Vec::new());
        }
        docs.last_mut().expect("just pushed").push(s);
    }
    docs
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error(transparent)]
    Meta(#[from] MetaError),
    #[error("ingested annotation failed validation:\n{0}")]
    Invalid(ValidationReport),
}

/// Splits a dependency label at its first ':' into the universal relation
/// and, when a subtype is present, the full label.
fn split_relation(deprel: &str) -> (String, Option<String>) {
    match deprel.split_once(':') {
        Some((head, _)) => (head.to_string(), Some(deprel.to_string())),
        None => (deprel.to_string(), None),
    }
}

/// Builds an annotation set from parsed CoNLL-U documents. Token rows carry
/// form/lemma/upos/xpos (xpos lands in the pos column, cid is absent); each
/// word line with both a head and a deprel yields one dependency row whose
/// governor is the head (0 = ROOT) and target is the word itself.
pub fn conll_to_annotation(
    docs: &[(String, Vec<ConlluSentence>)],
    meta: Option<&MetaTable>,
    language: &str,
    time: DateTime<Utc>,
) -> Result<AnnotationSet, IngestError> {
    if let Some(m) = meta {
        m.check_shape(docs.len())?;
    }

    let mut set = AnnotationSet::default();
    for (i, (uri, sentences)) in docs.iter().enumerate() {
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

        for (s, sentence) in sentences.iter().enumerate() {
            let sid = (s + 1) as u32;
            for row in &sentence.rows {
                set.token.push(TokenRow {
                    id,
                    sid,
                    tid: row.tid,
                    word: row.form.clone(),
                    lemma: row.lemma.clone(),
                    upos: row.upos.clone(),
                    pos: row.xpos.clone(),
                    cid: None,
                });
                if let (Some(head), Some(deprel)) = (row.head, &row.deprel) {
                    let (relation, relation_full) = split_relation(deprel);
                    set.dependency.push(DependencyRow {
                        id,
                        sid,
                        tid: head,
                        tid_target: row.tid,
                        relation,
                        relation_full,
                    });
                }
            }
        }
    }

    set.sort_tables();
    let report = validate(&set);
    if !report.ok() {
        return Err(IngestError::Invalid(report));
    }
    Ok(set)
}
