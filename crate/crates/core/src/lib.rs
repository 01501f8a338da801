//! cleantables-core: a normalized, table-oriented data model for text
//! annotations, with a built-in tokenizer, loaders for standard annotation
//! formats, table accessors, corpus analytics, and CSV persistence.
//!
//! The central type is [`AnnotationSet`]: seven linked tables (documents,
//! tokens, dependencies, entities, coreferences, sentences, and an optional
//! word-vector matrix) that share integer keys, so any two can be joined
//! without bespoke object traversal.

pub mod access;
pub mod analytics;
mod fsutil;
pub mod ingest;
pub mod io;
pub mod model;
pub mod tokenize;
pub mod validate;

pub use access::{
    get_dependency, get_dependency_joined, get_table, get_token, get_vector, DependencyJoinedRow,
    Table, UnknownTable,
};
pub use analytics::{
    dependency_pairs, export_matrix, get_tfidf, quantile, sentence_lengths, tidy_pca, top_entities,
    top_terms, AnalyticsError, DependencyPair, DocVar, ExportError, MatrixKind, PcaTable,
    TermMatrix, TfWeight,
};
pub use ingest::{
    attach_vectors, conll_to_annotation, load_embeddings, load_frequency_lexicon, load_sidecar,
    parse_conllu, split_documents, ConlluError, ConlluRow, ConlluSentence, EmbeddingLexicon,
    FrequencyLexicon, IngestError, LexiconError, SidecarError, SidecarKind,
};
pub use io::{
    read_annotation, read_annotation_unchecked, read_meta_csv, write_annotation, IoError,
    FORMAT_VERSION,
};
pub use model::{
    new_annotation, AnnotationSet, CoreferenceRow, DependencyRow, DocId, DocumentRow, EntityRow,
    MentionAnimacy, MentionGender, MentionNumber, MentionType, MetaTable, ModelError, SentId,
    SentenceRow, TokId, TokenKey, TokenRow, UnknownLabel, VectorMatrix,
};
pub use tokenize::{run_tokenizer_backend, AbbreviationList, BackendError};
pub use validate::{validate, TableName, ValidationReport, Violation, ViolationCode};
