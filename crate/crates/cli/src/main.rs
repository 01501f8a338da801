//! cleantables: annotate plain text, ingest standard annotation formats,
//! and query the resulting tables from the command line.
//!
//! Every subcommand reads and writes the flat-file annotation directory
//! format from cleantables-core. Tabular results are CSV on stdout unless
//! `--out` names a file. Exit status: 0 on success, 1 on usage errors,
//! 2 on data errors (unparseable input, failed validation, bad parameters).

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::{DateTime, Utc};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use cleantables_core::analytics::{DocVar, MatrixKind, TfWeight};
use cleantables_core::ingest::{
    attach_vectors, conll_to_annotation, load_embeddings, load_frequency_lexicon, load_sidecar,
    parse_conllu, split_documents, FrequencyLexicon, SidecarKind,
};
use cleantables_core::io::{
    coreference_to_csv, counts_to_csv, dependency_to_csv, document_to_csv, entity_to_csv,
    joined_dependency_to_csv, pairs_to_csv, pca_to_csv, quantiles_to_csv, read_annotation,
    read_annotation_unchecked, read_meta_csv, sentence_to_csv, token_to_csv, vector_to_csv,
    violations_to_csv, write_annotation,
};
use cleantables_core::tokenize::{read_corpus_files, run_tokenizer_backend, AbbreviationList};
use cleantables_core::{
    dependency_pairs, export_matrix, get_dependency, get_dependency_joined, get_table, get_tfidf,
    get_token, get_vector, sentence_lengths, tidy_pca, top_entities, top_terms, validate,
    AnnotationSet, MetaTable, Table,
};

#[derive(Parser)]
#[command(
    name = "cleantables",
    version,
    about = "Normalized annotation tables for text corpora",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tokenize text files into a new annotation directory
    Annotate(AnnotateArgs),
    /// Build an annotation directory from CoNLL-U files
    IngestConllu(IngestArgs),
    /// Replace the entity, coreference, or sentence table from a TSV file
    LoadSidecar(SidecarArgs),
    /// Attach word-embedding vectors to every token
    AttachVectors(VectorArgs),
    /// Check an annotation directory and report violations as a table
    Validate(ValidateArgs),
    /// Print one table (document, token, dependency, entity, coreference,
    /// sentence, or vector) as CSV
    Export(ExportArgs),
    /// Build a term matrix and write it as MatrixMarket files
    Tfidf(TfidfArgs),
    /// Principal components of the document term matrix
    Pca(PcaArgs),
    /// Corpus summaries
    #[command(subcommand)]
    Stats(StatsCmd),
}

fn parse_time(s: &str) -> Result<DateTime<Utc>, String> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| format!("not an ISO-8601 timestamp (like 2016-01-12T21:00:00Z): {e}"))
}

#[derive(Args)]
struct AnnotateArgs {
    /// Annotation backend (this build ships the built-in tokenizer only)
    #[arg(long, value_parser = ["tokenizers"], default_value = "tokenizers")]
    backend: String,
    /// Document language code recorded in the document table
    #[arg(long, default_value = "en")]
    lang: String,
    /// CSV of extra document columns, one row per input file
    #[arg(long)]
    meta: Option<PathBuf>,
    /// Output annotation directory
    #[arg(long)]
    out: PathBuf,
    /// Overwrite an existing annotation directory
    #[arg(long)]
    force: bool,
    /// Fixed document timestamp (ISO-8601) instead of the current time
    #[arg(long, value_parser = parse_time)]
    fixed_time: Option<DateTime<Utc>>,
    /// Input text files, one document each
    #[arg(required = true)]
    files: Vec<String>,
}

#[derive(Args)]
struct IngestArgs {
    /// Document language code recorded in the document table
    #[arg(long, default_value = "en")]
    lang: String,
    /// CSV of extra document columns, one row per resulting document
    #[arg(long)]
    meta: Option<PathBuf>,
    /// Output annotation directory
    #[arg(long)]
    out: PathBuf,
    /// Overwrite an existing annotation directory
    #[arg(long)]
    force: bool,
    /// Fixed document timestamp (ISO-8601) instead of the current time
    #[arg(long, value_parser = parse_time)]
    fixed_time: Option<DateTime<Utc>>,
    /// Input CoNLL-U files ("# newdoc" comments split documents)
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

#[derive(Args)]
struct SidecarArgs {
    /// Annotation directory to update
    #[arg(long = "in")]
    input: PathBuf,
    /// Which table the file replaces
    #[arg(long, value_parser = ["entity", "coreference", "sentence"])]
    kind: String,
    /// Sidecar TSV file
    #[arg(long)]
    file: PathBuf,
    /// Output directory (defaults to updating --in in place)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overwrite an existing annotation directory other than --in
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct VectorArgs {
    /// Annotation directory to update
    #[arg(long = "in")]
    input: PathBuf,
    /// Embedding lexicon in word2vec/GloVe text format
    #[arg(long)]
    embeddings: PathBuf,
    /// Output directory (defaults to updating --in in place)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overwrite an existing annotation directory other than --in
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct ValidateArgs {
    /// Annotation directory to check
    #[arg(long = "in")]
    input: PathBuf,
    /// Write the violation table here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    /// Annotation directory to read
    #[arg(long = "in")]
    input: PathBuf,
    /// Table to print
    #[arg(long, value_parser = [
        "document", "token", "dependency", "entity", "coreference", "sentence", "vector",
    ])]
    table: String,
    /// Prepend the virtual ROOT token of each sentence (token table only)
    #[arg(long)]
    include_root: bool,
    /// Join governor and dependent words onto each row (dependency only)
    #[arg(long)]
    joined: bool,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct MatrixFlags {
    /// Token column supplying the terms
    #[arg(long, default_value = "lemma", value_parser = ["lemma", "word", "upos", "pos"])]
    token_var: String,
    /// Keep only terms appearing in at least this proportion of documents
    #[arg(long, default_value_t = 0.1)]
    min_df: f64,
    /// Keep only terms appearing in at most this proportion of documents
    #[arg(long, default_value_t = 0.9)]
    max_df: f64,
    /// Matrix to compute
    #[arg(long = "type", default_value = "tfidf", value_parser = ["tf", "idf", "tfidf"])]
    kind: String,
    /// Term-frequency weighting
    #[arg(long, default_value = "lognorm", value_parser = ["raw", "dnorm", "lognorm", "binary"])]
    tf_weight: String,
    /// Keep only tokens whose pos tag is in this comma-separated list
    #[arg(long)]
    filter_pos: Option<String>,
}

#[derive(Args)]
struct TfidfArgs {
    /// Annotation directory to read
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    matrix: MatrixFlags,
    /// Document key: one row per document, or per sentence with id-sid
    #[arg(long, default_value = "id", value_parser = ["id", "id-sid"])]
    doc_var: String,
    /// Output directory for matrix.mtx, doc_ids.txt, and vocab.txt
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PcaArgs {
    /// Annotation directory to read
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    matrix: MatrixFlags,
    /// Number of principal components
    #[arg(short, long, default_value_t = 2)]
    k: usize,
    /// Document columns passed through beside the scores
    #[arg(long, default_value = "id")]
    meta_columns: String,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum StatsCmd {
    /// Sentence lengths in tokens, summarized at the given quantiles
    SentenceLengths {
        /// Annotation directory to read
        #[arg(long = "in")]
        input: PathBuf,
        /// Comma-separated quantile probabilities in [0, 1]
        #[arg(long, default_value = "0,0.25,0.5,0.75,1")]
        probs: String,
        /// Write the CSV here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Most frequent lemmas, optionally restricted by part of speech
    TopTerms {
        /// Annotation directory to read
        #[arg(long = "in")]
        input: PathBuf,
        /// Part-of-speech column to filter on
        #[arg(long, value_parser = ["upos", "pos"])]
        filter_column: Option<String>,
        /// Tag the filter column must equal
        #[arg(long)]
        filter_value: Option<String>,
        /// Number of terms to keep
        #[arg(long, default_value_t = 20)]
        n: usize,
        /// Write the CSV here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Most frequent entity strings of one type
    TopEntities {
        /// Annotation directory to read
        #[arg(long = "in")]
        input: PathBuf,
        /// Entity type to count (PERSON, GPE, ...)
        #[arg(long)]
        entity_type: String,
        /// Number of entities to keep
        #[arg(long, default_value_t = 10)]
        n: usize,
        /// Write the CSV here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Governor => dependent pairs for one relation, in table order
    DepPairs {
        /// Annotation directory to read
        #[arg(long = "in")]
        input: PathBuf,
        /// Dependency relation to select (dobj, nsubj, ...)
        #[arg(long)]
        relation: String,
        /// Word-frequency TSV; unlisted words count as frequency 0
        #[arg(long)]
        freq_lexicon: Option<PathBuf>,
        /// Keep pairs whose dependent lemma frequency is below this
        #[arg(long, default_value_t = f64::INFINITY)]
        max_freq: f64,
        /// Comma-separated document ids to restrict to
        #[arg(long)]
        doc_ids: Option<String>,
        /// Write the CSV here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum RunError {
    /// Flag combinations clap cannot express; reported like clap errors.
    Usage(String),
    /// Anything wrong with the data itself.
    Data(String),
    /// `validate` found violations; the table has already been written.
    Violations,
}

trait OrData<T> {
    fn or_data(self) -> Result<T, RunError>;
}

impl<T, E: std::fmt::Display> OrData<T> for Result<T, E> {
    fn or_data(self) -> Result<T, RunError> {
        self.map_err(|e| RunError::Data(e.to_string()))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let wants_exit_zero =
                matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if wants_exit_zero {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(RunError::Data(msg)) => {
            eprintln!("cleantables: {msg}");
            ExitCode::from(2)
        }
        Err(RunError::Violations) => ExitCode::from(2),
    }
}

fn read_file(path: &Path) -> Result<String, RunError> {
    fs::read_to_string(path).map_err(|e| RunError::Data(format!("{}: {e}", path.display())))
}

/// Sends a rendered table to stdout or to `--out`.
fn emit(body: &str, out: Option<&Path>) -> Result<(), RunError> {
    match out {
        None => {
            print!("{body}");
            Ok(())
        }
        Some(path) => {
            fs::write(path, body).map_err(|e| RunError::Data(format!("{}: {e}", path.display())))
        }
    }
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

/// Writes an updated annotation set back to `--out`, defaulting to an
/// in-place update of `--in` (which never needs --force).
fn write_updated(
    a: &AnnotationSet,
    input: &Path,
    out: Option<PathBuf>,
    force: bool,
) -> Result<(), RunError> {
    let target = out.unwrap_or_else(|| input.to_path_buf());
    let in_place = same_dir(&target, input);
    write_annotation(a, &target, force || in_place).or_data()
}

fn time_or_now(fixed: Option<DateTime<Utc>>) -> DateTime<Utc> {
    fixed.unwrap_or_else(Utc::now)
}

fn load_meta(path: Option<&PathBuf>) -> Result<Option<MetaTable>, RunError> {
    path.map(|p| read_meta_csv(p).or_data()).transpose()
}

fn run(cmd: Cmd) -> Result<(), RunError> {
    match cmd {
        Cmd::Annotate(args) => {
            let corpus = read_corpus_files(&args.files).or_data()?;
            let meta = load_meta(args.meta.as_ref())?;
            let abbreviations = AbbreviationList::from_env()
                .map_err(|e| RunError::Data(format!("CLEANTABLES_ABBREV: {e}")))?;
            let set = run_tokenizer_backend(
                &corpus,
                meta.as_ref(),
                &args.lang,
                &abbreviations,
                time_or_now(args.fixed_time),
            )
            .or_data()?;
            write_annotation(&set, &args.out, args.force).or_data()
        }
        Cmd::IngestConllu(args) => {
            let mut docs = Vec::new();
            for path in &args.files {
                let text = read_file(path)?;
                let sentences = parse_conllu(&text)
                    .map_err(|e| RunError::Data(format!("{}: {e}", path.display())))?;
                let split = split_documents(sentences);
                let many = split.len() > 1;
                for (j, sentences) in split.into_iter().enumerate() {
                    let name = if many {
                        format!("{}#{}", path.display(), j + 1)
                    } else {
                        path.display().to_string()
                    };
                    docs.push((name, sentences));
                }
            }
            let meta = load_meta(args.meta.as_ref())?;
            let set = conll_to_annotation(
                &docs,
                meta.as_ref(),
                &args.lang,
                time_or_now(args.fixed_time),
            )
            .or_data()?;
            write_annotation(&set, &args.out, args.force).or_data()
        }
        Cmd::LoadSidecar(args) => {
            let set = read_annotation(&args.input).or_data()?;
            let kind: SidecarKind = args.kind.parse().expect("choices checked by clap");
            let stream = read_file(&args.file)?;
            let updated = load_sidecar(&set, kind, &stream)
                .map_err(|e| RunError::Data(format!("{}: {e}", args.file.display())))?;
            write_updated(&updated, &args.input, args.out, args.force)
        }
        Cmd::AttachVectors(args) => {
            let set = read_annotation(&args.input).or_data()?;
            let lex = load_embeddings(&read_file(&args.embeddings)?)
                .map_err(|e| RunError::Data(format!("{}: {e}", args.embeddings.display())))?;
            let updated = attach_vectors(&set, &lex);
            write_updated(&updated, &args.input, args.out, args.force)
        }
        Cmd::Validate(args) => {
            let set = read_annotation_unchecked(&args.input).or_data()?;
            let report = validate(&set);
            emit(&violations_to_csv(&report), args.out.as_deref())?;
            if report.ok() {
                Ok(())
            } else {
                Err(RunError::Violations)
            }
        }
        Cmd::Export(args) => {
            if args.include_root && args.table != "token" {
                return Err(RunError::Usage(
                    "--include-root only applies to --table token".to_string(),
                ));
            }
            if args.joined && args.table != "dependency" {
                return Err(RunError::Usage(
                    "--joined only applies to --table dependency".to_string(),
                ));
            }
            let set = read_annotation(&args.input).or_data()?;
            let body = match args.table.as_str() {
                "token" => token_to_csv(&get_token(&set, args.include_root)),
                "dependency" if args.joined => {
                    joined_dependency_to_csv(&get_dependency_joined(&set))
                }
                "dependency" => dependency_to_csv(&get_dependency(&set)),
                "vector" => vector_to_csv(&get_vector(&set)),
                name => match get_table(&set, name).expect("choices checked by clap") {
                    Table::Document(rows) => document_to_csv(&rows),
                    Table::Entity(rows) => entity_to_csv(&rows),
                    Table::Coreference(rows) => coreference_to_csv(&rows),
                    Table::Sentence(rows) => sentence_to_csv(&rows),
                },
            };
            emit(&body, args.out.as_deref())
        }
        Cmd::Tfidf(args) => {
            let set = read_annotation(&args.input).or_data()?;
            let doc_var: DocVar = args.doc_var.parse().expect("choices checked by clap");
            let matrix = build_matrix(&set, &args.matrix, doc_var)?;
            export_matrix(&matrix, &args.out).or_data()
        }
        Cmd::Pca(args) => {
            let set = read_annotation(&args.input).or_data()?;
            let matrix = build_matrix(&set, &args.matrix, DocVar::Id)?;
            let meta = doc_meta(&set, &matrix.doc_ids, &args.meta_columns)?;
            let table = tidy_pca(&matrix.to_dense(), Some(&meta), args.k).or_data()?;
            emit(&pca_to_csv(&table), args.out.as_deref())
        }
        Cmd::Stats(stats) => run_stats(stats),
    }
}

/// Applies the shared matrix flags: optional pos filtering, then get_tfidf.
fn build_matrix(
    set: &AnnotationSet,
    flags: &MatrixFlags,
    doc_var: DocVar,
) -> Result<cleantables_core::TermMatrix, RunError> {
    let kind: MatrixKind = flags.kind.parse().expect("choices checked by clap");
    let weight: TfWeight = flags.tf_weight.parse().expect("choices checked by clap");
    let tokens = match &flags.filter_pos {
        None => set.token.clone(),
        Some(list) => {
            let keep: HashSet<&str> = list.split(',').map(str::trim).collect();
            set.token
                .iter()
                .filter(|t| t.pos.as_deref().is_some_and(|p| keep.contains(p)))
                .cloned()
                .collect()
        }
    };
    get_tfidf(
        &tokens,
        flags.min_df,
        flags.max_df,
        kind,
        weight,
        doc_var,
        &flags.token_var,
    )
    .or_data()
}

/// Builds the PCA pass-through metadata: the requested document columns,
/// one row per matrix document.
fn doc_meta(set: &AnnotationSet, doc_ids: &[String], columns: &str) -> Result<MetaTable, RunError> {
    let names: Vec<&str> = columns.split(',').map(str::trim).collect();
    let mut rows = Vec::with_capacity(doc_ids.len());
    for doc_id in doc_ids {
        let doc = set
            .document
            .iter()
            .find(|d| d.id.to_string() == *doc_id)
            .ok_or_else(|| RunError::Data(format!("document {doc_id} has tokens but no row")))?;
        let mut row = Vec::with_capacity(names.len());
        for name in &names {
            let value = match *name {
                "id" => doc.id.to_string(),
                "time" => doc.time.to_rfc3339(),
                "version" => doc.version.clone(),
                "language" => doc.language.clone(),
                "uri" => doc.uri.clone(),
                other => doc
                    .extra_value(other)
                    .ok_or_else(|| {
                        RunError::Data(format!(
                            "unknown meta column {other:?}; expected id, time, version, \
                             language, uri, or a document extra column"
                        ))
                    })?
                    .to_string(),
            };
            row.push(value);
        }
        rows.push(row);
    }
    Ok(MetaTable {
        columns: names.into_iter().map(String::from).collect(),
        rows,
    })
}

fn run_stats(cmd: StatsCmd) -> Result<(), RunError> {
    match cmd {
        StatsCmd::SentenceLengths { input, probs, out } => {
            let set = read_annotation(&input).or_data()?;
            let probs = parse_f64_list(&probs, "--probs")?;
            let table = sentence_lengths(&set, &probs).or_data()?;
            emit(&quantiles_to_csv(&table), out.as_deref())
        }
        StatsCmd::TopTerms {
            input,
            filter_column,
            filter_value,
            n,
            out,
        } => {
            let set = read_annotation(&input).or_data()?;
            let table =
                top_terms(&set, filter_column.as_deref(), filter_value.as_deref(), n).or_data()?;
            emit(&counts_to_csv("lemma", &table), out.as_deref())
        }
        StatsCmd::TopEntities {
            input,
            entity_type,
            n,
            out,
        } => {
            let set = read_annotation(&input).or_data()?;
            let table = top_entities(&set, &entity_type, n);
            emit(&counts_to_csv("entity", &table), out.as_deref())
        }
        StatsCmd::DepPairs {
            input,
            relation,
            freq_lexicon,
            max_freq,
            doc_ids,
            out,
        } => {
            let set = read_annotation(&input).or_data()?;
            let freq = match &freq_lexicon {
                None => FrequencyLexicon::default(),
                Some(path) => load_frequency_lexicon(&read_file(path)?)
                    .map_err(|e| RunError::Data(format!("{}: {e}", path.display())))?,
            };
            let keep: Option<HashSet<u32>> = match &doc_ids {
                None => None,
                Some(list) => Some(
                    list.split(',')
                        .map(|s| {
                            s.trim().parse().map_err(|_| {
                                RunError::Usage(format!("--doc-ids: {s:?} is not a document id"))
                            })
                        })
                        .collect::<Result<_, _>>()?,
                ),
            };
            let pairs = dependency_pairs(
                &set,
                |d| keep.as_ref().is_none_or(|ids| ids.contains(&d.id)),
                &relation,
                &freq,
                max_freq,
            );
            emit(&pairs_to_csv(&pairs), out.as_deref())
        }
    }
}

fn parse_f64_list(list: &str, flag: &str) -> Result<Vec<f64>, RunError> {
    list.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| RunError::Usage(format!("{flag}: {s:?} is not a number")))
        })
        .collect()
}
