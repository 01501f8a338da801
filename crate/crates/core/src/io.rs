//! Flat-file persistence: one RFC 4180 CSV per table plus a small JSON
//! manifest, written atomically with LF endings and read back with full
//! validation. Also the CSV renderers used for command-line output.
//!
//! Conventions shared by every file: a header row with the exact schema
//! column names, empty field = absent, timestamps in ISO-8601 UTC, floats in
//! the shortest decimal form that round-trips, rows in primary-key order.
//! Raw document text is not persisted.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use thiserror::Error;

use crate::access::DependencyJoinedRow;
use crate::analytics::{DependencyPair, PcaTable};
use crate::fsutil::write_atomic;
use crate::model::{
    AnnotationSet, CoreferenceRow, DependencyRow, DocumentRow, EntityRow, MetaTable, SentenceRow,
    TokenKey, TokenRow, VectorMatrix,
};
use crate::validate::{validate, ValidationReport};

/// Version stamp written to the manifest.
pub const FORMAT_VERSION: u64 = 1;

/// The six always-present table files, in write order.
const TABLE_FILES: [&str; 6] = [
    "document.csv",
    "token.csv",
    "dependency.csv",
    "entity.csv",
    "coreference.csv",
    "sentence.csv",
];

const VECTOR_FILE: &str = "vector.csv";
const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path} already holds an annotation directory (use force to overwrite)")]
    RefuseOverwrite { path: PathBuf },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{file}:{line}: {detail}")]
    Parse {
        file: String,
        line: u64,
        detail: String,
    },
    #[error("{file}: {detail}")]
    SchemaMismatch { file: String, detail: String },
    #[error("annotation directory failed validation:\n{0}")]
    Invalid(ValidationReport),
}

fn io_ctx(path: &Path) -> impl FnOnce(io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_time(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

fn opt_str(value: &Option<String>) -> &str {
    value.as_deref().unwrap_or("")
}

fn opt_num<T: ToString>(value: &Option<T>) -> String {
    value.as_ref().map(T::to_string).unwrap_or_default()
}

/// Renders records as an RFC 4180 CSV string with LF line endings.
fn to_csv<I, R, F>(header: &[&str], rows: I, mut render: F) -> String
where
    I: IntoIterator<Item = R>,
    F: FnMut(R) -> Vec<String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(render(row)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV output is UTF-8")
}

/// The document table, with any extra metadata columns appended after uri.
pub fn document_to_csv(rows: &[DocumentRow]) -> String {
    let mut header = vec!["id", "time", "version", "language", "uri"];
    let extras: Vec<&str> = rows
        .first()
        .map(|d| d.extra.iter().map(|(name, _)| name.as_str()).collect())
        .unwrap_or_default();
    header.extend(&extras);
    to_csv(&header, rows, |d| {
        let mut record = vec![
            d.id.to_string(),
            format_time(d.time),
            d.version.clone(),
            d.language.clone(),
            d.uri.clone(),
        ];
        record.extend(d.extra.iter().map(|(_, value)| value.clone()));
        record
    })
}

pub fn token_to_csv(rows: &[TokenRow]) -> String {
    to_csv(
        &["id", "sid", "tid", "word", "lemma", "upos", "pos", "cid"],
        rows,
        |t| {
            vec![
                t.id.to_string(),
                t.sid.to_string(),
                t.tid.to_string(),
                t.word.clone(),
                opt_str(&t.lemma).to_string(),
                opt_str(&t.upos).to_string(),
                opt_str(&t.pos).to_string(),
                opt_num(&t.cid),
            ]
        },
    )
}

pub fn dependency_to_csv(rows: &[DependencyRow]) -> String {
    to_csv(
        &[
            "id",
            "sid",
            "tid",
            "tid_target",
            "relation",
            "relation_full",
        ],
        rows,
        |d| {
            vec![
                d.id.to_string(),
                d.sid.to_string(),
                d.tid.to_string(),
                d.tid_target.to_string(),
                d.relation.clone(),
                opt_str(&d.relation_full).to_string(),
            ]
        },
    )
}

pub fn joined_dependency_to_csv(rows: &[DependencyJoinedRow]) -> String {
    to_csv(
        &[
            "id",
            "sid",
            "tid",
            "tid_target",
            "relation",
            "relation_full",
            "word",
            "lemma",
            "word_target",
            "lemma_target",
        ],
        rows,
        |d| {
            vec![
                d.id.to_string(),
                d.sid.to_string(),
                d.tid.to_string(),
                d.tid_target.to_string(),
                d.relation.clone(),
                opt_str(&d.relation_full).to_string(),
                d.word.clone(),
                opt_str(&d.lemma).to_string(),
                d.word_target.clone(),
                opt_str(&d.lemma_target).to_string(),
            ]
        },
    )
}

pub fn entity_to_csv(rows: &[EntityRow]) -> String {
    to_csv(
        &[
            "id",
            "sid",
            "tid",
            "tid_end",
            "entity_type",
            "entity",
            "entity_normalized",
        ],
        rows,
        |e| {
            vec![
                e.id.to_string(),
                e.sid.to_string(),
                e.tid.to_string(),
                e.tid_end.to_string(),
                e.entity_type.clone(),
                e.entity.clone(),
                opt_str(&e.entity_normalized).to_string(),
            ]
        },
    )
}

pub fn coreference_to_csv(rows: &[CoreferenceRow]) -> String {
    to_csv(
        &[
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
        rows,
        |c| {
            vec![
                c.id.to_string(),
                c.rid.to_string(),
                c.mid.to_string(),
                c.mention.clone(),
                c.mention_type.to_string(),
                c.number.to_string(),
                c.gender.to_string(),
                c.animacy.to_string(),
                c.sid.to_string(),
                c.tid.to_string(),
                c.tid_end.to_string(),
                c.tid_head.to_string(),
            ]
        },
    )
}

pub fn sentence_to_csv(rows: &[SentenceRow]) -> String {
    to_csv(&["id", "sid", "sentiment"], rows, |s| {
        vec![s.id.to_string(), s.sid.to_string(), s.sentiment.to_string()]
    })
}

pub fn vector_to_csv(v: &VectorMatrix) -> String {
    let value_names: Vec<String> = (1..=v.dim).map(|i| format!("v{i}")).collect();
    let mut header = vec!["id", "sid", "tid"];
    header.extend(value_names.iter().map(String::as_str));
    to_csv(&header, 0..v.n_rows(), |i| {
        let key = v.keys[i];
        let mut record = vec![key.id.to_string(), key.sid.to_string(), key.tid.to_string()];
        record.extend(v.row(i).iter().map(f64::to_string));
        record
    })
}

/// Metadata columns (if any) followed by PC1..PCk score columns.
pub fn pca_to_csv(p: &PcaTable) -> String {
    let pc_names: Vec<String> = (1..=p.k()).map(|i| format!("PC{i}")).collect();
    let mut header: Vec<&str> = p.meta_columns.iter().map(String::as_str).collect();
    header.extend(pc_names.iter().map(String::as_str));
    to_csv(
        &header,
        p.meta_rows.iter().zip(&p.scores),
        |(meta, scores)| {
            let mut record: Vec<String> = meta.clone();
            record.extend(scores.iter().map(f64::to_string));
            record
        },
    )
}

/// Governor→dependent pairs in the "word => lemma" presentation.
pub fn pairs_to_csv(rows: &[DependencyPair]) -> String {
    to_csv(&["id", "pair"], rows, |p| {
        vec![
            p.id.to_string(),
            format!("{} => {}", p.word, p.lemma_target),
        ]
    })
}

pub fn quantiles_to_csv(rows: &[(f64, f64)]) -> String {
    to_csv(&["prob", "quantile"], rows, |(p, q)| {
        vec![p.to_string(), q.to_string()]
    })
}

/// Ranked (term, count) output; `term_header` names the first column
/// ("lemma" or "entity").
pub fn counts_to_csv(term_header: &str, rows: &[(String, u64)]) -> String {
    to_csv(&[term_header, "count"], rows, |(term, count)| {
        vec![term.clone(), count.to_string()]
    })
}

fn manifest_json(a: &AnnotationSet) -> String {
    let created = a
        .document
        .iter()
        .map(|d| d.time)
        .max()
        .unwrap_or(DateTime::UNIX_EPOCH);
    let extra_columns: Vec<&str> = a
        .document
        .first()
        .map(|d| d.extra.iter().map(|(name, _)| name.as_str()).collect())
        .unwrap_or_default();
    let value = serde_json::json!({
        "format_version": FORMAT_VERSION,
        "created": format_time(created),
        "extra_columns": extra_columns,
    });
    let mut body = serde_json::to_string_pretty(&value).expect("static JSON shape");
    body.push('\n');
    body
}

/// Writes `a` as a directory of CSV files plus a manifest. The directory is
/// created if missing; an existing annotation directory is only replaced
/// when `force` is set. Each file lands atomically. Raw text, if any, is
/// not written.
pub fn write_annotation(a: &AnnotationSet, dir: &Path, force: bool) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(io_ctx(dir))?;
    if !force {
        for name in TABLE_FILES.iter().chain([&VECTOR_FILE, &MANIFEST_FILE]) {
            if dir.join(name).exists() {
                return Err(IoError::RefuseOverwrite {
                    path: dir.to_path_buf(),
                });
            }
        }
    }

    let mut sorted = a.clone();
    sorted.sort_tables();

    let contents = [
        document_to_csv(&sorted.document),
        token_to_csv(&sorted.token),
        dependency_to_csv(&sorted.dependency),
        entity_to_csv(&sorted.entity),
        coreference_to_csv(&sorted.coreference),
        sentence_to_csv(&sorted.sentence),
    ];
    for (name, body) in TABLE_FILES.iter().zip(&contents) {
        let path = dir.join(name);
        write_atomic(&path, body).map_err(io_ctx(&path))?;
    }
    let vector_path = dir.join(VECTOR_FILE);
    match &sorted.vector {
        Some(v) => {
            write_atomic(&vector_path, &vector_to_csv(v)).map_err(io_ctx(&vector_path))?;
        }
        None => {
            if vector_path.exists() {
                fs::remove_file(&vector_path).map_err(io_ctx(&vector_path))?;
            }
        }
    }
    let manifest_path = dir.join(MANIFEST_FILE);
    write_atomic(&manifest_path, &manifest_json(&sorted)).map_err(io_ctx(&manifest_path))
}

/// A parsed CSV file: header names plus records with their line numbers.
struct CsvFile {
    name: &'static str,
    header: Vec<String>,
    records: Vec<(u64, csv::StringRecord)>,
}

impl CsvFile {
    fn parse_err(&self, line: u64, detail: String) -> IoError {
        IoError::Parse {
            file: self.name.to_string(),
            line,
            detail,
        }
    }

    fn require_header(&self, expected: &[&str]) -> Result<(), IoError> {
        if self.header != expected {
            return Err(IoError::SchemaMismatch {
                file: self.name.to_string(),
                detail: format!("header {:?} does not match {:?}", self.header, expected),
            });
        }
        Ok(())
    }
}

fn read_csv_file(
    dir: &Path,
    name: &'static str,
    required: bool,
) -> Result<Option<CsvFile>, IoError> {
    let path = dir.join(name);
    if !path.exists() {
        if required {
            return Err(IoError::SchemaMismatch {
                file: name.to_string(),
                detail: "required table file is missing".to_string(),
            });
        }
        return Ok(None);
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(&path)
        .map_err(|e| IoError::SchemaMismatch {
            file: name.to_string(),
            detail: e.to_string(),
        })?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| IoError::SchemaMismatch {
            file: name.to_string(),
            detail: e.to_string(),
        })?
        .iter()
        .map(String::from)
        .collect();
    let mut records = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| {
            let line = e.position().map(csv::Position::line).unwrap_or_default();
            IoError::Parse {
                file: name.to_string(),
                line,
                detail: e.to_string(),
            }
        })?;
        let line = record.position().map(csv::Position::line).unwrap_or(0);
        records.push((line, record));
    }
    Ok(Some(CsvFile {
        name,
        header,
        records,
    }))
}

fn field(rec: &csv::StringRecord, idx: usize) -> &str {
    rec.get(idx).unwrap_or("")
}

fn parse_field<T: std::str::FromStr>(
    f: &CsvFile,
    line: u64,
    rec: &csv::StringRecord,
    idx: usize,
) -> Result<T, IoError> {
    let raw = field(rec, idx);
    raw.parse().map_err(|_| {
        f.parse_err(
            line,
            format!("column {:?}: bad value {raw:?}", f.header[idx]),
        )
    })
}

fn parse_opt<T: std::str::FromStr>(
    f: &CsvFile,
    line: u64,
    rec: &csv::StringRecord,
    idx: usize,
) -> Result<Option<T>, IoError> {
    let raw = field(rec, idx);
    if raw.is_empty() {
        return Ok(None);
    }
    parse_field(f, line, rec, idx).map(Some)
}

fn opt_string_field(rec: &csv::StringRecord, idx: usize) -> Option<String> {
    let raw = field(rec, idx);
    if raw.is_empty() {
        None
    } else {
        Some(raw.to_string())
    }
}

/// Reads an annotation directory. All six table files must exist;
/// vector.csv and manifest.json are optional. The assembled set is
/// validated before it is returned, with row numbers matching the files.
pub fn read_annotation(dir: &Path) -> Result<AnnotationSet, IoError> {
    let mut set = read_annotation_unchecked(dir)?;
    // Validate in file order, so violation locators give file row numbers.
    let report = validate(&set);
    if !report.ok() {
        return Err(IoError::Invalid(report));
    }
    set.sort_tables();
    Ok(set)
}

/// Like [`read_annotation`] but without the validation pass or re-sorting:
/// rows come back in file order, structural problems and all. This is the
/// entry point for diagnosing a broken directory (parse it, then run
/// [`validate`] yourself and inspect the report).
pub fn read_annotation_unchecked(dir: &Path) -> Result<AnnotationSet, IoError> {
    let mut set = AnnotationSet::default();

    let f = read_csv_file(dir, "document.csv", true)?.expect("required");
    let fixed = ["id", "time", "version", "language", "uri"];
    if f.header.len() < fixed.len() || f.header[..fixed.len()] != fixed {
        return Err(IoError::SchemaMismatch {
            file: f.name.to_string(),
            detail: format!("header {:?} must start with {fixed:?}", f.header),
        });
    }
    let extra_names: Vec<String> = f.header[fixed.len()..].to_vec();
    for (line, rec) in &f.records {
        if rec.len() != f.header.len() {
            return Err(f.parse_err(
                *line,
                format!("expected {} fields, found {}", f.header.len(), rec.len()),
            ));
        }
        let time_raw = field(rec, 1);
        let time = DateTime::parse_from_rfc3339(time_raw)
            .map_err(|e| f.parse_err(*line, format!("time {time_raw:?}: {e}")))?
            .with_timezone(&Utc);
        set.document.push(DocumentRow {
            id: parse_field(&f, *line, rec, 0)?,
            time,
            version: field(rec, 2).to_string(),
            language: field(rec, 3).to_string(),
            uri: field(rec, 4).to_string(),
            extra: extra_names
                .iter()
                .enumerate()
                .map(|(i, name)| (name.clone(), field(rec, fixed.len() + i).to_string()))
                .collect(),
        });
    }

    let f = read_csv_file(dir, "token.csv", true)?.expect("required");
    f.require_header(&["id", "sid", "tid", "word", "lemma", "upos", "pos", "cid"])?;
    for (line, rec) in &f.records {
        set.token.push(TokenRow {
            id: parse_field(&f, *line, rec, 0)?,
            sid: parse_field(&f, *line, rec, 1)?,
            tid: parse_field(&f, *line, rec, 2)?,
            word: field(rec, 3).to_string(),
            lemma: opt_string_field(rec, 4),
            upos: opt_string_field(rec, 5),
            pos: opt_string_field(rec, 6),
            cid: parse_opt(&f, *line, rec, 7)?,
        });
    }

    let f = read_csv_file(dir, "dependency.csv", true)?.expect("required");
    f.require_header(&[
        "id",
        "sid",
        "tid",
        "tid_target",
        "relation",
        "relation_full",
    ])?;
    for (line, rec) in &f.records {
        set.dependency.push(DependencyRow {
            id: parse_field(&f, *line, rec, 0)?,
            sid: parse_field(&f, *line, rec, 1)?,
            tid: parse_field(&f, *line, rec, 2)?,
            tid_target: parse_field(&f, *line, rec, 3)?,
            relation: field(rec, 4).to_string(),
            relation_full: opt_string_field(rec, 5),
        });
    }

    let f = read_csv_file(dir, "entity.csv", true)?.expect("required");
    f.require_header(&[
        "id",
        "sid",
        "tid",
        "tid_end",
        "entity_type",
        "entity",
        "entity_normalized",
    ])?;
    for (line, rec) in &f.records {
        set.entity.push(EntityRow {
            id: parse_field(&f, *line, rec, 0)?,
            sid: parse_field(&f, *line, rec, 1)?,
            tid: parse_field(&f, *line, rec, 2)?,
            tid_end: parse_field(&f, *line, rec, 3)?,
            entity_type: field(rec, 4).to_string(),
            entity: field(rec, 5).to_string(),
            entity_normalized: opt_string_field(rec, 6),
        });
    }

    let f = read_csv_file(dir, "coreference.csv", true)?.expect("required");
    f.require_header(&[
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
    ])?;
    for (line, rec) in &f.records {
        set.coreference.push(CoreferenceRow {
            id: parse_field(&f, *line, rec, 0)?,
            rid: parse_field(&f, *line, rec, 1)?,
            mid: parse_field(&f, *line, rec, 2)?,
            mention: field(rec, 3).to_string(),
            mention_type: parse_field(&f, *line, rec, 4)?,
            number: parse_field(&f, *line, rec, 5)?,
            gender: parse_field(&f, *line, rec, 6)?,
            animacy: parse_field(&f, *line, rec, 7)?,
            sid: parse_field(&f, *line, rec, 8)?,
            tid: parse_field(&f, *line, rec, 9)?,
            tid_end: parse_field(&f, *line, rec, 10)?,
            tid_head: parse_field(&f, *line, rec, 11)?,
        });
    }

    let f = read_csv_file(dir, "sentence.csv", true)?.expect("required");
    f.require_header(&["id", "sid", "sentiment"])?;
    for (line, rec) in &f.records {
        set.sentence.push(SentenceRow {
            id: parse_field(&f, *line, rec, 0)?,
            sid: parse_field(&f, *line, rec, 1)?,
            sentiment: parse_field(&f, *line, rec, 2)?,
        });
    }

    if let Some(f) = read_csv_file(dir, VECTOR_FILE, false)? {
        let fixed = ["id", "sid", "tid"];
        if f.header.len() < fixed.len() || f.header[..fixed.len()] != fixed {
            return Err(IoError::SchemaMismatch {
                file: f.name.to_string(),
                detail: format!("header {:?} must start with {fixed:?}", f.header),
            });
        }
        let dim = f.header.len() - fixed.len();
        for (i, name) in f.header[fixed.len()..].iter().enumerate() {
            if name != &format!("v{}", i + 1) {
                return Err(IoError::SchemaMismatch {
                    file: f.name.to_string(),
                    detail: format!("value column {} must be named v{}", name, i + 1),
                });
            }
        }
        let mut keys = Vec::with_capacity(f.records.len());
        let mut values = Vec::with_capacity(f.records.len() * dim);
        for (line, rec) in &f.records {
            keys.push(TokenKey::new(
                parse_field(&f, *line, rec, 0)?,
                parse_field(&f, *line, rec, 1)?,
                parse_field(&f, *line, rec, 2)?,
            ));
            for j in 0..dim {
                values.push(parse_field::<f64>(&f, *line, rec, fixed.len() + j)?);
            }
        }
        set.vector = Some(VectorMatrix { keys, dim, values });
    }

    let manifest_path = dir.join(MANIFEST_FILE);
    if manifest_path.exists() {
        let body = fs::read_to_string(&manifest_path).map_err(io_ctx(&manifest_path))?;
        let value: serde_json::Value =
            serde_json::from_str(&body).map_err(|e| IoError::SchemaMismatch {
                file: MANIFEST_FILE.to_string(),
                detail: e.to_string(),
            })?;
        let version = value.get("format_version").and_then(|v| v.as_u64());
        if version != Some(FORMAT_VERSION) {
            return Err(IoError::SchemaMismatch {
                file: MANIFEST_FILE.to_string(),
                detail: format!("format_version {version:?} is not {FORMAT_VERSION}"),
            });
        }
        let declared: Vec<String> = value
            .get("extra_columns")
            .and_then(|v| v.as_array())
            .map(|a| {
                a.iter()
                    .filter_map(|v| v.as_str().map(String::from))
                    .collect()
            })
            .unwrap_or_default();
        if declared != extra_names {
            return Err(IoError::SchemaMismatch {
                file: MANIFEST_FILE.to_string(),
                detail: format!(
                    "extra_columns {declared:?} do not match document.csv's {extra_names:?}"
                ),
            });
        }
    }

    Ok(set)
}

/// Reads a document-metadata CSV: the header names the extra columns and
/// each following row supplies one document's values, in corpus order.
pub fn read_meta_csv(path: &Path) -> Result<MetaTable, IoError> {
    let file_label = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| IoError::SchemaMismatch {
            file: file_label.clone(),
            detail: e.to_string(),
        })?;
    let columns: Vec<String> = reader
        .headers()
        .map_err(|e| IoError::SchemaMismatch {
            file: file_label.clone(),
            detail: e.to_string(),
        })?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| IoError::Parse {
            file: file_label.clone(),
            line: e.position().map(csv::Position::line).unwrap_or_default(),
            detail: e.to_string(),
        })?;
        rows.push(record.iter().map(String::from).collect());
    }
    Ok(MetaTable { columns, rows })
}

/// A validation report as a table, one violation per row (header only when
/// the set is clean).
pub fn violations_to_csv(report: &ValidationReport) -> String {
    to_csv(
        &["code", "table", "locator", "message"],
        &report.violations,
        |v| {
            vec![
                v.code.as_str().to_string(),
                v.table.as_str().to_string(),
                v.locator.clone(),
                v.message.clone(),
            ]
        },
    )
}
