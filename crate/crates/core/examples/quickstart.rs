//! Tokenize a tiny in-memory corpus, build a TF-IDF matrix over it, and
//! persist the annotation tables to a directory of CSV files.
//!
//! Run with: cargo run -p cleantables-core --example quickstart

use chrono::Utc;
use cleantables_core::analytics::{DocVar, MatrixKind, TfWeight};
use cleantables_core::{get_tfidf, run_tokenizer_backend, write_annotation, AbbreviationList};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = vec![
        (
            "a.txt".to_string(),
            "The council met. It approved the budget.".to_string(),
        ),
        (
            "b.txt".to_string(),
            "The harbor reopened after repairs.".to_string(),
        ),
    ];

    let set = run_tokenizer_backend(
        &corpus,
        None,
        "en",
        &AbbreviationList::default(),
        Utc::now(),
    )?;
    println!(
        "annotated {} documents into {} token rows",
        set.document.len(),
        set.token.len()
    );

    let m = get_tfidf(
        &set.token,
        0.0,
        1.0,
        MatrixKind::Tfidf,
        TfWeight::Lognorm,
        DocVar::Id,
        "word",
    )?;
    println!(
        "tf-idf matrix: {} docs x {} terms",
        m.doc_ids.len(),
        m.vocab.len()
    );

    let out = std::env::temp_dir().join("cleantables-quickstart");
    write_annotation(&set, &out, true)?;
    println!("tables written to {}", out.display());
    Ok(())
}
