//! Acceptance gate: nine end-to-end criteria covering schema soundness,
//! join semantics, term-matrix and PCA numerics, CoNLL-U conformance,
//! tokenizer offsets, persistence round trips, the canonical-mention rule,
//! and a full command-line workflow checked against brute-force oracles.
//!
//! Each criterion prints one `PASS criterion N (...)` line (run with
//! `--nocapture` to see them) and enforces a wall-clock budget. Every
//! tolerance and time limit is pinned in the constants below. All oracles
//! are implemented from scratch in this file, independent of the library
//! code they check.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use chrono::{TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cleantables_core::analytics::{AnalyticsError, DocVar, MatrixKind, TfWeight};
use cleantables_core::ingest::{
    attach_vectors, conll_to_annotation, load_embeddings, load_sidecar, parse_conllu,
    split_documents, SidecarError, SidecarKind,
};
use cleantables_core::tokenize::{run_tokenizer_backend, AbbreviationList};
use cleantables_core::{
    get_dependency_joined, get_tfidf, read_annotation, tidy_pca, validate, write_annotation,
    AnnotationSet, CoreferenceRow, DependencyJoinedRow, DependencyRow, DocumentRow, EntityRow,
    MentionAnimacy, MentionGender, MentionNumber, MentionType, SentenceRow, TokenKey, TokenRow,
    VectorMatrix, ViolationCode,
};

const LIMIT_SCHEMA: Duration = Duration::from_secs(10);
const LIMIT_JOIN: Duration = Duration::from_secs(10);
const LIMIT_TFIDF: Duration = Duration::from_secs(30);
const LIMIT_PCA: Duration = Duration::from_secs(10);
const LIMIT_CONLLU: Duration = Duration::from_secs(5);
const LIMIT_OFFSETS: Duration = Duration::from_secs(20);
const LIMIT_ROUND_TRIP: Duration = Duration::from_secs(5);
const LIMIT_CANONICAL: Duration = Duration::from_secs(5);
const LIMIT_WORKFLOW: Duration = Duration::from_secs(30);

const TFIDF_TOLERANCE: f64 = 1e-10;
const PCA_TOLERANCE: f64 = 1e-8;

const SCHEMA_RANDOM_SETS: usize = 1000;
const JOIN_CORPORA: usize = 200;
const TFIDF_CORPORA: usize = 500;
const PCA_MATRICES: usize = 100;
const OFFSET_TEXTS: usize = 10_000;

/// Wall-clock gate around one criterion.
struct Gate {
    n: u32,
    name: &'static str,
    limit: Duration,
    start: Instant,
}

impl Gate {
    fn new(n: u32, name: &'static str, limit: Duration) -> Self {
        Gate {
            n,
            name,
            limit,
            start: Instant::now(),
        }
    }

    fn pass(self, detail: &str) {
        let elapsed = self.start.elapsed();
        assert!(
            elapsed <= self.limit,
            "criterion {} ({}) took {:.2?}, over the {:?} budget",
            self.n,
            self.name,
            elapsed,
            self.limit
        );
        println!(
            "PASS criterion {} ({}): {} [{:.2?} <= {:?}]",
            self.n, self.name, detail, elapsed, self.limit
        );
    }
}

fn fixed_time() -> chrono::DateTime<Utc> {
    Utc.with_ymd_and_hms(2021, 4, 6, 19, 0, 0).unwrap()
}

fn data_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

// ---------------------------------------------------------------------------
// Criterion 1: schema soundness
// ---------------------------------------------------------------------------

/// A compact hand-built set touching every table, used as the mutant base.
/// Document 2 deliberately has no dependent rows so its id can be broken
/// without knock-on violations.
fn mutant_base() -> AnnotationSet {
    let time = fixed_time();
    let mut set = AnnotationSet::default();
    set.document
        .push(DocumentRow::new(1, time, "0.1.0", "en", "a.txt"));
    set.document
        .push(DocumentRow::new(2, time, "0.1.0", "en", "b.txt"));
    set.raw_text.insert(1, "It runs. Hi.".to_string());
    let words = [
        (1, 1, "It", 0),
        (1, 2, "runs", 3),
        (1, 3, ".", 7),
        (2, 1, "Hi", 9),
        (2, 2, ".", 11),
    ];
    for (sid, tid, word, cid) in words {
        set.token.push(TokenRow {
            id: 1,
            sid,
            tid,
            word: word.to_string(),
            lemma: None,
            upos: None,
            pos: None,
            cid: Some(cid),
        });
    }
    let deps = [(0, 2, "root"), (2, 1, "nsubj"), (2, 3, "punct")];
    for (tid, tid_target, rel) in deps {
        set.dependency.push(DependencyRow {
            id: 1,
            sid: 1,
            tid,
            tid_target,
            relation: rel.to_string(),
            relation_full: None,
        });
    }
    set.entity.push(EntityRow {
        id: 1,
        sid: 1,
        tid: 1,
        tid_end: 2,
        entity_type: "MISC".to_string(),
        entity: "It runs".to_string(),
        entity_normalized: None,
    });
    let mentions = [(1, 1, 2, 2), (2, 1, 1, 1)];
    for (mid, tid, tid_end, tid_head) in mentions {
        set.coreference.push(CoreferenceRow {
            id: 1,
            rid: 1,
            mid,
            mention: "it".to_string(),
            mention_type: MentionType::Pronominal,
            number: MentionNumber::Singular,
            gender: MentionGender::Neutral,
            animacy: MentionAnimacy::Inanimate,
            sid: 1,
            tid,
            tid_end,
            tid_head,
        });
    }
    set.sentence.push(SentenceRow {
        id: 1,
        sid: 1,
        sentiment: 2,
    });
    set
}

fn matching_vector(set: &AnnotationSet, dim: usize) -> VectorMatrix {
    let mut keys: Vec<TokenKey> = set.token.iter().map(TokenRow::key).collect();
    keys.sort_unstable();
    let values = vec![0.25; keys.len() * dim];
    VectorMatrix { keys, dim, values }
}

/// The twenty hand-broken mutants; each must yield exactly one distinct
/// violation code.
fn mutants() -> Vec<(&'static str, AnnotationSet, ViolationCode)> {
    let mut out: Vec<(&'static str, AnnotationSet, ViolationCode)> = Vec::new();
    let mut push = |name, f: &dyn Fn(&mut AnnotationSet), code| {
        let mut set = mutant_base();
        f(&mut set);
        out.push((name, set, code));
    };
    push(
        "duplicate document id",
        &|s| s.document[1].id = 1,
        ViolationCode::DupKey,
    );
    push(
        "document ids skip 2",
        &|s| s.document[1].id = 3,
        ViolationCode::Range,
    );
    push(
        "duplicate token key",
        &|s| {
            let dup = s.token[0].clone();
            s.token.push(dup);
        },
        ViolationCode::DupKey,
    );
    push(
        "token for a missing document",
        &|s| {
            s.token.push(TokenRow {
                id: 99,
                sid: 1,
                tid: 1,
                word: "x".to_string(),
                lemma: None,
                upos: None,
                pos: None,
                cid: None,
            });
        },
        ViolationCode::FkViolation,
    );
    push(
        "token tid gap",
        &|s| s.token[4].tid = 5,
        ViolationCode::Range,
    );
    push(
        "token tid zero",
        &|s| s.token[4].tid = 0,
        ViolationCode::Range,
    );
    push(
        "token offset points at the wrong text",
        &|s| s.token[0].cid = Some(1),
        ViolationCode::OffsetMismatch,
    );
    push(
        "token offset past the end of the text",
        &|s| s.token[0].cid = Some(1000),
        ViolationCode::OffsetMismatch,
    );
    push(
        "dependency governor does not exist",
        &|s| s.dependency[1].tid = 7,
        ViolationCode::FkViolation,
    );
    push(
        "dependency target zero",
        &|s| s.dependency[1].tid_target = 0,
        ViolationCode::Range,
    );
    push(
        "second governor for one token",
        &|s| {
            s.dependency.push(DependencyRow {
                id: 1,
                sid: 1,
                tid: 3,
                tid_target: 1,
                relation: "dep".to_string(),
                relation_full: None,
            });
        },
        ViolationCode::DupKey,
    );
    push(
        "two ROOT rows in one sentence",
        &|s| s.dependency[2].tid = 0,
        ViolationCode::Range,
    );
    push(
        "no ROOT row in a parsed sentence",
        &|s| s.dependency[0].tid = 1,
        ViolationCode::Range,
    );
    push(
        "entity span reversed",
        &|s| {
            s.entity[0].tid = 2;
            s.entity[0].tid_end = 1;
        },
        ViolationCode::BadSpan,
    );
    push(
        "entity in a missing sentence",
        &|s| s.entity[0].sid = 9,
        ViolationCode::FkViolation,
    );
    push(
        "coreference class without a canonical mention",
        &|s| s.coreference[0].mid = 3,
        ViolationCode::CanonicalMissing,
    );
    push(
        "coreference head outside its span",
        &|s| s.coreference[1].tid_head = 2,
        ViolationCode::BadSpan,
    );
    push(
        "sentiment out of range",
        &|s| s.sentence[0].sentiment = 5,
        ViolationCode::Range,
    );
    push(
        "sentence row without tokens",
        &|s| s.sentence[0].sid = 9,
        ViolationCode::FkViolation,
    );
    push(
        "vector keys diverge from the token table",
        &|s| {
            let mut v = matching_vector(s, 2);
            v.keys[0].tid = 9;
            s.vector = Some(v);
        },
        ViolationCode::VectorKeyMismatch,
    );
    out
}

const WORD_POOL: [&str; 18] = [
    "ana", "bo", "dog", "sees", "waves", "runs", "fast", "red", "tower", "hums", "rain", "fell",
    "stone", "gate", "old", "maps", "turn", "cold",
];

fn random_text(rng: &mut ChaCha8Rng) -> String {
    let sentences = rng.gen_range(1..=3);
    let mut text = String::new();
    for s in 0..sentences {
        if s > 0 {
            text.push(' ');
        }
        let words = rng.gen_range(1..=6);
        for w in 0..words {
            if w > 0 {
                text.push(' ');
            }
            text.push_str(WORD_POOL.choose(rng).unwrap());
        }
        text.push(*['.', '!', '?'].choose(rng).unwrap());
    }
    text
}

fn random_tokenized(rng: &mut ChaCha8Rng) -> AnnotationSet {
    let docs = rng.gen_range(1..=3);
    let corpus: Vec<(String, String)> = (1..=docs)
        .map(|i| (format!("{i}.txt"), random_text(rng)))
        .collect();
    run_tokenizer_backend(
        &corpus,
        None,
        "en",
        &AbbreviationList::default(),
        fixed_time(),
    )
    .expect("random text corpus must annotate cleanly")
}

/// A random well-formed CoNLL-U stream: every word line has a head and a
/// deprel, one head-0 line per sentence.
fn random_conllu(rng: &mut ChaCha8Rng) -> String {
    const DEPRELS: [&str; 8] = [
        "nsubj",
        "dobj",
        "det",
        "amod",
        "punct",
        "nsubj:pass",
        "acl:relcl",
        "compound:prt",
    ];
    let mut lines = Vec::new();
    let docs = rng.gen_range(1..=4);
    for _ in 0..docs {
        lines.push("# newdoc".to_string());
        let sentences = rng.gen_range(1..=4);
        for _ in 0..sentences {
            let n = rng.gen_range(1..=8);
            let root = rng.gen_range(1..=n);
            if rng.gen_bool(0.15) && n >= 2 {
                lines.push("1-2\tfused\t_\t_\t_\t_\t_\t_\t_\t_".to_string());
            }
            for tid in 1..=n {
                let form = WORD_POOL.choose(rng).unwrap();
                let lemma = if rng.gen_bool(0.85) { form } else { "_" };
                let upos = if rng.gen_bool(0.8) { "NOUN" } else { "_" };
                let xpos = if rng.gen_bool(0.8) { "NN" } else { "_" };
                let head = if tid == root {
                    0
                } else {
                    loop {
                        let h = rng.gen_range(1..=n);
                        if h != tid {
                            break h;
                        }
                    }
                };
                let deprel = if head == 0 {
                    "root"
                } else {
                    DEPRELS.choose(rng).unwrap()
                };
                lines.push(format!(
                    "{tid}\t{form}\t{lemma}\t{upos}\t{xpos}\t_\t{head}\t{deprel}\t_\t_"
                ));
                if rng.gen_bool(0.05) {
                    lines.push(format!("{tid}.1\telided\t_\t_\t_\t_\t_\t_\t_\t_"));
                }
            }
            lines.push(String::new());
        }
    }
    lines.join("\n")
}

fn random_parsed(rng: &mut ChaCha8Rng) -> AnnotationSet {
    let stream = random_conllu(rng);
    let sentences = parse_conllu(&stream).expect("generated stream is well-formed");
    let docs: Vec<(String, Vec<_>)> = split_documents(sentences)
        .into_iter()
        .enumerate()
        .map(|(i, s)| (format!("{}.conllu", i + 1), s))
        .collect();
    conll_to_annotation(&docs, None, "en", fixed_time())
        .expect("generated parse must convert cleanly")
}

/// Random valid sidecars layered over a parsed set.
fn random_sidecarred(rng: &mut ChaCha8Rng) -> AnnotationSet {
    let set = random_parsed(rng);
    let mut sentences: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    for t in &set.token {
        let n = sentences.entry((t.id, t.sid)).or_insert(0);
        *n = (*n).max(t.tid);
    }
    let keys: Vec<(u32, u32)> = sentences.keys().copied().collect();

    let mut entity =
        String::from("id\tsid\ttid\ttid_end\tentity_type\tentity\tentity_normalized\n");
    let mut used: HashSet<(u32, u32, u32)> = HashSet::new();
    for _ in 0..rng.gen_range(0..=4) {
        let &(id, sid) = keys.choose(rng).unwrap();
        let n = sentences[&(id, sid)];
        let tid = rng.gen_range(1..=n);
        let tid_end = rng.gen_range(tid..=n);
        if used.insert((id, sid, tid)) {
            entity.push_str(&format!("{id}\t{sid}\t{tid}\t{tid_end}\tGPE\tplace\t\n"));
        }
    }
    let mut sentiment = String::from("id\tsid\tsentiment\n");
    for &(id, sid) in &keys {
        sentiment.push_str(&format!("{id}\t{sid}\t{}\n", rng.gen_range(0..=4)));
    }
    let mut coref = String::from(
        "id\trid\tmid\tmention\tmention_type\tnumber\tgender\tanimacy\tsid\ttid\ttid_end\ttid_head\n",
    );
    if rng.gen_bool(0.7) {
        let &(id, sid) = keys.choose(rng).unwrap();
        let n = sentences[&(id, sid)];
        let tid = rng.gen_range(1..=n);
        coref.push_str(&format!(
            "{id}\t1\t1\tit\tPRONOMINAL\tSINGULAR\tUNKNOWN\tANIMATE\t{sid}\t{tid}\t{tid}\t{tid}\n"
        ));
    }

    let set = load_sidecar(&set, SidecarKind::Entity, &entity).expect("valid entity sidecar");
    let set = load_sidecar(&set, SidecarKind::Sentence, &sentiment).expect("valid sentences");
    load_sidecar(&set, SidecarKind::Coreference, &coref).expect("valid coreference sidecar")
}

fn random_with_vectors(rng: &mut ChaCha8Rng) -> AnnotationSet {
    let set = random_tokenized(rng);
    let dim = rng.gen_range(1..=4);
    let mut lexicon = String::new();
    for word in WORD_POOL.iter().take(10) {
        let values: Vec<String> = (0..dim)
            .map(|_| format!("{:.2}", rng.gen::<f64>()))
            .collect();
        lexicon.push_str(&format!("{word} {}\n", values.join(" ")));
    }
    let lex = load_embeddings(&lexicon).expect("valid lexicon");
    attach_vectors(&set, &lex)
}

#[test]
fn criterion_1_schema_soundness() {
    let gate = Gate::new(1, "schema soundness", LIMIT_SCHEMA);

    let base = mutant_base();
    let report = validate(&base);
    assert!(report.ok(), "mutant base must be clean:\n{report}");
    let mut with_vector = base;
    with_vector.vector = Some(matching_vector(&with_vector, 2));
    assert!(validate(&with_vector).ok());

    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    for i in 0..SCHEMA_RANDOM_SETS {
        let set = match i % 4 {
            0 => random_tokenized(&mut rng),
            1 => random_parsed(&mut rng),
            2 => random_sidecarred(&mut rng),
            _ => random_with_vectors(&mut rng),
        };
        let report = validate(&set);
        assert!(report.ok(), "random set {i} failed validation:\n{report}");
    }

    let mutants = mutants();
    assert_eq!(mutants.len(), 20);
    for (name, set, expected) in mutants {
        let report = validate(&set);
        let codes = report.codes();
        assert_eq!(
            codes,
            vec![expected],
            "mutant {name:?} should yield exactly {expected}, got:\n{report}"
        );
    }

    gate.pass(&format!(
        "{SCHEMA_RANDOM_SETS} random sets clean, 20 mutants each flagged with exactly the expected code"
    ));
}

// ---------------------------------------------------------------------------
// Criterion 2: join-oracle equivalence
// ---------------------------------------------------------------------------

/// Literal two-left-join recipe: the dependency table joined against the
/// ROOT-including token table on (id, sid, tid) for the governor and on
/// (id, sid, tid_target) for the dependent, by linear search.
fn join_oracle(set: &AnnotationSet) -> Vec<DependencyJoinedRow> {
    let mut tokens: Vec<TokenRow> = set.token.clone();
    let mut sentences: HashSet<(u32, u32)> = HashSet::new();
    for t in &set.token {
        sentences.insert((t.id, t.sid));
    }
    for (id, sid) in sentences {
        tokens.push(TokenRow {
            id,
            sid,
            tid: 0,
            word: "ROOT".to_string(),
            lemma: Some("ROOT".to_string()),
            upos: None,
            pos: None,
            cid: None,
        });
    }
    let find = |id: u32, sid: u32, tid: u32| {
        tokens
            .iter()
            .find(|t| t.id == id && t.sid == sid && t.tid == tid)
            .expect("valid sets have every joined token")
    };
    let mut deps = set.dependency.clone();
    deps.sort_by_key(|d| (d.id, d.sid, d.tid, d.tid_target));
    deps.into_iter()
        .map(|d| {
            let governor = find(d.id, d.sid, d.tid);
            let dependent = find(d.id, d.sid, d.tid_target);
            DependencyJoinedRow {
                id: d.id,
                sid: d.sid,
                tid: d.tid,
                tid_target: d.tid_target,
                relation: d.relation.clone(),
                relation_full: d.relation_full.clone(),
                word: governor.word.clone(),
                lemma: governor.lemma.clone(),
                word_target: dependent.word.clone(),
                lemma_target: dependent.lemma.clone(),
            }
        })
        .collect()
}

#[test]
fn criterion_2_join_oracle_equivalence() {
    let gate = Gate::new(2, "join-oracle equivalence", LIMIT_JOIN);
    let mut rng = ChaCha8Rng::seed_from_u64(2002);
    let mut rows = 0usize;
    let mut root_rows = 0usize;
    for i in 0..JOIN_CORPORA {
        let set = random_parsed(&mut rng);
        let joined = get_dependency_joined(&set);
        let expected = join_oracle(&set);
        assert_eq!(joined, expected, "join mismatch on corpus {i}");
        rows += joined.len();
        for row in &joined {
            if row.tid == 0 {
                assert_eq!(row.word, "ROOT");
                assert_eq!(row.lemma.as_deref(), Some("ROOT"));
                root_rows += 1;
            }
        }
    }
    assert!(root_rows > 0, "generator never produced a ROOT row");
    gate.pass(&format!(
        "{JOIN_CORPORA} corpora, {rows} joined rows identical to the two-left-join oracle ({root_rows} ROOT rows)"
    ));
}

// ---------------------------------------------------------------------------
// Criterion 3: TF-IDF brute-force equivalence
// ---------------------------------------------------------------------------

struct DenseTfidf {
    doc_ids: Vec<String>,
    vocab: Vec<String>,
    rows: Vec<Vec<f64>>,
}

/// One pass of dense counting for a fixed (corpus, doc_var, token_var):
/// document keys in first-appearance order (every row counts, absent terms
/// or not), term counts per document, document frequency per term.
struct CountedCorpus {
    doc_ids: Vec<String>,
    terms: Vec<String>,
    /// counts[doc][term]
    counts: Vec<Vec<u64>>,
    /// distinct documents containing each term
    df: Vec<usize>,
}

fn count_corpus(tokens: &[TokenRow], doc_var: DocVar, token_var: &str) -> CountedCorpus {
    let key_of = |t: &TokenRow| match doc_var {
        DocVar::Id => t.id.to_string(),
        DocVar::IdSid => format!("{}-{}", t.id, t.sid),
    };
    fn term_of<'a>(t: &'a TokenRow, token_var: &str) -> Option<&'a str> {
        match token_var {
            "word" => Some(&t.word),
            "lemma" => t.lemma.as_deref(),
            "upos" => t.upos.as_deref(),
            "pos" => t.pos.as_deref(),
            other => panic!("unexpected token_var {other}"),
        }
    }
    let mut doc_ids: Vec<String> = Vec::new();
    let mut doc_index: HashMap<String, usize> = HashMap::new();
    for t in tokens {
        let key = key_of(t);
        if !doc_index.contains_key(&key) {
            doc_index.insert(key.clone(), doc_ids.len());
            doc_ids.push(key);
        }
    }
    let mut terms: Vec<String> = Vec::new();
    let mut term_index: HashMap<String, usize> = HashMap::new();
    let mut counts: Vec<Vec<u64>> = vec![Vec::new(); doc_ids.len()];
    for t in tokens {
        if let Some(term) = term_of(t, token_var) {
            let j = *term_index.entry(term.to_string()).or_insert_with(|| {
                terms.push(term.to_string());
                terms.len() - 1
            });
            let row = &mut counts[doc_index[&key_of(t)]];
            if row.len() <= j {
                row.resize(terms.len(), 0);
            }
            row[j] += 1;
        }
    }
    for row in &mut counts {
        row.resize(terms.len(), 0);
    }
    let df = (0..terms.len())
        .map(|j| counts.iter().filter(|row| row[j] > 0).count())
        .collect();
    CountedCorpus {
        doc_ids,
        terms,
        counts,
        df,
    }
}

/// Dense brute-force matrix from the counted corpus: inclusive df band,
/// code-point-sorted vocabulary, natural-log idf over distinct documents.
fn dense_tfidf(
    cc: &CountedCorpus,
    min_df: f64,
    max_df: f64,
    kind: MatrixKind,
    weight: TfWeight,
) -> Option<DenseTfidf> {
    let n = cc.doc_ids.len();
    let mut kept: Vec<usize> = (0..cc.terms.len())
        .filter(|&j| {
            let share = cc.df[j] as f64 / n as f64;
            min_df <= share && share <= max_df
        })
        .collect();
    kept.sort_by(|&a, &b| cc.terms[a].cmp(&cc.terms[b]));
    if kept.is_empty() {
        return None;
    }
    let vocab: Vec<String> = kept.iter().map(|&j| cc.terms[j].clone()).collect();
    let idf = |j: usize| (n as f64 / cc.df[j] as f64).ln();
    if kind == MatrixKind::Idf {
        let rows = vec![kept.iter().map(|&j| idf(j)).collect()];
        return Some(DenseTfidf {
            doc_ids: vec!["idf".to_string()],
            vocab,
            rows,
        });
    }
    let mut rows = vec![vec![0.0; vocab.len()]; n];
    for (d, row) in rows.iter_mut().enumerate() {
        let maxcount = kept.iter().map(|&j| cc.counts[d][j]).max().unwrap_or(0);
        for (out, &j) in row.iter_mut().zip(&kept) {
            let c = cc.counts[d][j];
            if c == 0 {
                continue;
            }
            let tf = match weight {
                TfWeight::Raw => c as f64,
                TfWeight::Lognorm => 1.0 + (c as f64).ln(),
                TfWeight::Binary => 1.0,
                TfWeight::Dnorm => 0.5 + 0.5 * c as f64 / maxcount as f64,
            };
            *out = match kind {
                MatrixKind::Tf => tf,
                MatrixKind::Tfidf => tf * idf(j),
                MatrixKind::Idf => unreachable!(),
            };
        }
    }
    Some(DenseTfidf {
        doc_ids: cc.doc_ids.clone(),
        vocab,
        rows,
    })
}

fn random_token_rows(rng: &mut ChaCha8Rng) -> Vec<TokenRow> {
    let pool: Vec<String> = (0..rng.gen_range(2..=50))
        .map(|i| format!("t{i}"))
        .collect();
    let docs = rng.gen_range(1..=10);
    let mut tokens = Vec::new();
    for id in 1..=docs {
        for sid in 1..=rng.gen_range(1..=3) {
            for tid in 1..=rng.gen_range(1..=6) {
                let word = pool.choose(rng).unwrap().clone();
                let lemma = if rng.gen_bool(0.85) {
                    Some(pool.choose(rng).unwrap().clone())
                } else {
                    None
                };
                tokens.push(TokenRow {
                    id,
                    sid,
                    tid,
                    word,
                    lemma,
                    upos: None,
                    pos: None,
                    cid: None,
                });
            }
        }
    }
    tokens
}

#[test]
fn criterion_3_tfidf_brute_force_equivalence() {
    let gate = Gate::new(3, "TF-IDF brute-force equivalence", LIMIT_TFIDF);
    let df_grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let kinds = [MatrixKind::Tf, MatrixKind::Idf, MatrixKind::Tfidf];
    let weights = [
        TfWeight::Raw,
        TfWeight::Dnorm,
        TfWeight::Lognorm,
        TfWeight::Binary,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3003);
    let mut combos = 0usize;
    for i in 0..TFIDF_CORPORA {
        let tokens = random_token_rows(&mut rng);
        let doc_var = if i % 2 == 0 {
            DocVar::Id
        } else {
            DocVar::IdSid
        };
        let token_var = if i % 3 == 0 { "word" } else { "lemma" };
        let counted = count_corpus(&tokens, doc_var, token_var);
        for kind in kinds {
            for weight in weights {
                for (a, &min_df) in df_grid.iter().enumerate() {
                    for &max_df in &df_grid[a..] {
                        combos += 1;
                        let got =
                            get_tfidf(&tokens, min_df, max_df, kind, weight, doc_var, token_var);
                        let expected = dense_tfidf(&counted, min_df, max_df, kind, weight);
                        match (got, expected) {
                            (Err(AnalyticsError::EmptyVocab), None) => {}
                            (Err(e), None) => {
                                panic!("expected the empty-vocabulary error, got {e}")
                            }
                            (Ok(m), Some(exp)) => {
                                assert_eq!(m.doc_ids, exp.doc_ids, "doc keys differ (corpus {i})");
                                assert_eq!(m.vocab, exp.vocab, "vocab differs (corpus {i})");
                                let dense = m.to_dense();
                                assert_eq!(dense.len(), exp.rows.len());
                                for (r, (got_row, exp_row)) in
                                    dense.iter().zip(&exp.rows).enumerate()
                                {
                                    for (c, (g, e)) in got_row.iter().zip(exp_row).enumerate() {
                                        assert!(
                                            (g - e).abs() <= TFIDF_TOLERANCE,
                                            "corpus {i} {kind} {weight} [{min_df},{max_df}] \
                                             row {r} col {c}: {g} vs {e}"
                                        );
                                    }
                                }
                            }
                            (Ok(m), None) => panic!(
                                "corpus {i}: library built a matrix with vocab {:?} where the \
                                 oracle found none",
                                m.vocab
                            ),
                            (Err(e), Some(exp)) => panic!(
                                "corpus {i}: library failed with {e} where the oracle kept {:?}",
                                exp.vocab
                            ),
                        }
                    }
                }
            }
        }
    }
    gate.pass(&format!(
        "{TFIDF_CORPORA} corpora x {} grid combinations within {TFIDF_TOLERANCE:e}, vocab exact",
        combos / TFIDF_CORPORA
    ));
}

// ---------------------------------------------------------------------------
// Criterion 4: PCA oracle
// ---------------------------------------------------------------------------

/// Dense eigendecomposition oracle: cyclic Jacobi on the Gram matrix of the
/// centered data, eigenvectors ordered by decreasing eigenvalue, the same
/// first-largest-magnitude-positive sign convention, scores by projection.
fn oracle_pca(rows: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let n = rows.len();
    let c = rows[0].len();
    let mut centered = rows.to_vec();
    for j in 0..c {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        for row in &mut centered {
            row[j] -= mean;
        }
    }
    // Gram matrix (c x c).
    let mut s = vec![vec![0.0; c]; c];
    for a in 0..c {
        for b in 0..c {
            s[a][b] = centered.iter().map(|r| r[a] * r[b]).sum();
        }
    }
    // Cyclic Jacobi rotations; stop when the off-diagonal mass is
    // negligible relative to the matrix scale.
    let frob: f64 = s.iter().flatten().map(|x| x * x).sum();
    let mut v = vec![vec![0.0; c]; c];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _ in 0..100 {
        let mut off = 0.0;
        for (p, row) in s.iter().enumerate() {
            for x in &row[p + 1..] {
                off += x * x;
            }
        }
        if off <= frob * 1e-24 {
            break;
        }
        for p in 0..c {
            for q in (p + 1)..c {
                if s[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (s[q][q] - s[p][p]) / s[p][q];
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let cos = 1.0 / (t * t + 1.0).sqrt();
                let sin = t * cos;
                for row in s.iter_mut() {
                    let (sip, siq) = (row[p], row[q]);
                    row[p] = cos * sip - sin * siq;
                    row[q] = sin * sip + cos * siq;
                }
                let (head, tail) = s.split_at_mut(q);
                for (xp, xq) in head[p].iter_mut().zip(tail[0].iter_mut()) {
                    let (spj, sqj) = (*xp, *xq);
                    *xp = cos * spj - sin * sqj;
                    *xq = sin * spj + cos * sqj;
                }
                for row in v.iter_mut() {
                    let (vip, viq) = (row[p], row[q]);
                    row[p] = cos * vip - sin * viq;
                    row[q] = sin * vip + cos * viq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| s[b][b].total_cmp(&s[a][a]));
    let mut directions: Vec<Vec<f64>> = order
        .into_iter()
        .take(k)
        .map(|j| (0..c).map(|i| v[i][j]).collect())
        .collect();
    for dir in &mut directions {
        let mut arg = 0;
        for (i, value) in dir.iter().enumerate() {
            if value.abs() > dir[arg].abs() {
                arg = i;
            }
        }
        if dir[arg] < 0.0 {
            for value in dir.iter_mut() {
                *value = -*value;
            }
        }
    }
    centered
        .iter()
        .map(|row| {
            directions
                .iter()
                .map(|dir| row.iter().zip(dir).map(|(x, d)| x * d).sum())
                .collect()
        })
        .collect()
}

fn assert_scores_close(got: &[Vec<f64>], expected: &[Vec<f64>], context: &str) {
    assert_eq!(got.len(), expected.len(), "{context}: row count");
    let k = expected.first().map_or(0, Vec::len);
    for j in 0..k {
        let direct = got
            .iter()
            .zip(expected)
            .all(|(g, e)| (g[j] - e[j]).abs() <= PCA_TOLERANCE);
        let flipped = got
            .iter()
            .zip(expected)
            .all(|(g, e)| (g[j] + e[j]).abs() <= PCA_TOLERANCE);
        assert!(
            direct || flipped,
            "{context}: column {j} differs beyond {PCA_TOLERANCE:e} up to sign"
        );
    }
}

#[test]
fn criterion_4_pca_oracle() {
    let gate = Gate::new(4, "PCA oracle", LIMIT_PCA);

    // Worked example: collinear points project to (-sqrt(2), 0, sqrt(2)).
    let line = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]];
    let table = tidy_pca(&line, None, 1).unwrap();
    let expected = [-(2.0f64.sqrt()), 0.0, 2.0f64.sqrt()];
    for (row, want) in table.scores.iter().zip(expected) {
        assert!(
            (row[0] - want).abs() <= PCA_TOLERANCE,
            "line example: {} vs {want}",
            row[0]
        );
    }

    // Worked example: constant data centers to zero everywhere.
    let constant = vec![vec![7.0, 7.0, 7.0]; 4];
    let table = tidy_pca(&constant, None, 1).unwrap();
    for row in &table.scores {
        assert!(
            row[0].abs() <= PCA_TOLERANCE,
            "constant example: {}",
            row[0]
        );
    }

    // Worked example: rank-1 data has no second component.
    let u = [1.0, 2.0, 3.0, 4.0];
    let w = [2.0, -1.0, 0.5];
    let rank1: Vec<Vec<f64>> = u
        .iter()
        .map(|ui| w.iter().map(|wj| ui * wj).collect())
        .collect();
    let table = tidy_pca(&rank1, None, 2).unwrap();
    for row in &table.scores {
        assert!(row[1].abs() <= PCA_TOLERANCE, "rank-1 example: {}", row[1]);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(4004);
    for i in 0..PCA_MATRICES {
        let n = rng.gen_range(2..=40);
        let c = rng.gen_range(2..=30);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..c).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        // Centering costs one rank, so components beyond n-1 carry a zero
        // eigenvalue and an arbitrary direction; keep k below that.
        let k = rng.gen_range(1..=(n - 1).min(c).max(1));
        let table = tidy_pca(&rows, None, k).unwrap();
        let expected = oracle_pca(&rows, k);
        assert_scores_close(
            &table.scores,
            &expected,
            &format!("matrix {i} ({n}x{c}, k={k})"),
        );
    }

    gate.pass(&format!(
        "3 worked examples and {PCA_MATRICES} random matrices within {PCA_TOLERANCE:e} of the Jacobi oracle"
    ));
}

// ---------------------------------------------------------------------------
// Criterion 5: CoNLL-U conformance on the bundled sample
// ---------------------------------------------------------------------------

/// A word line as seen by a plain line scanner.
struct OracleWord {
    doc: u32,
    sid: u32,
    tid: u32,
    head: u32,
    deprel: String,
}

/// Line-by-line scan of a CoNLL-U file: counts documents, sentences (blank
/// line separated, per-document numbering), and plain-integer word lines.
fn scan_conllu(text: &str) -> (u32, u32, Vec<OracleWord>) {
    let mut words = Vec::new();
    let mut doc = 0u32;
    let mut sid = 0u32;
    let mut sentences = 0u32;
    let mut in_sentence = false;
    let mut pending_newdoc = false;
    for line in text.lines() {
        if line.is_empty() {
            in_sentence = false;
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let body = comment.trim();
            if body == "newdoc" || body.starts_with("newdoc ") {
                pending_newdoc = true;
            }
            continue;
        }
        if !in_sentence {
            in_sentence = true;
            if pending_newdoc || doc == 0 {
                doc += 1;
                sid = 0;
                pending_newdoc = false;
            }
            sid += 1;
            sentences += 1;
        }
        let id_field = line.split('\t').next().unwrap();
        if !id_field.bytes().all(|b| b.is_ascii_digit()) {
            continue; // multiword range or empty node
        }
        let fields: Vec<&str> = line.split('\t').collect();
        words.push(OracleWord {
            doc,
            sid,
            tid: id_field.parse().unwrap(),
            head: fields[6].parse().unwrap(),
            deprel: fields[7].to_string(),
        });
    }
    (doc, sentences, words)
}

#[test]
fn criterion_5_conllu_conformance() {
    let gate = Gate::new(5, "CoNLL-U conformance", LIMIT_CONLLU);
    let text = fs::read_to_string(data_path("corpus.conllu")).unwrap();

    let (oracle_docs, oracle_sentences, oracle_words) = scan_conllu(&text);
    assert_eq!(
        oracle_sentences, 50,
        "bundled sample must have 50 sentences"
    );

    let sentences = parse_conllu(&text).unwrap();
    let docs: Vec<(String, Vec<_>)> = split_documents(sentences)
        .into_iter()
        .enumerate()
        .map(|(i, s)| (format!("{}.conllu", i + 1), s))
        .collect();
    assert_eq!(docs.len() as u32, oracle_docs);
    let set = conll_to_annotation(&docs, None, "en", fixed_time()).unwrap();

    // One token row and one dependency row per word line.
    assert_eq!(set.token.len(), oracle_words.len());
    assert_eq!(set.dependency.len(), oracle_words.len());

    // Exactly one tid=0 dependency per sentence.
    let mut roots: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    let mut sentence_keys: HashSet<(u32, u32)> = HashSet::new();
    for d in &set.dependency {
        sentence_keys.insert((d.id, d.sid));
        if d.tid == 0 {
            *roots.entry((d.id, d.sid)).or_insert(0) += 1;
        }
    }
    assert_eq!(sentence_keys.len() as u32, oracle_sentences);
    for key in &sentence_keys {
        assert_eq!(
            roots.get(key),
            Some(&1),
            "sentence {key:?} must have one ROOT row"
        );
    }

    // Relation splitting agrees with the raw deprel on every word line.
    let by_target: HashMap<(u32, u32, u32), &cleantables_core::DependencyRow> = set
        .dependency
        .iter()
        .map(|d| ((d.id, d.sid, d.tid_target), d))
        .collect();
    let mut subtyped = 0;
    for w in &oracle_words {
        let d = by_target
            .get(&(w.doc, w.sid, w.tid))
            .unwrap_or_else(|| panic!("no dependency row for word {}/{}/{}", w.doc, w.sid, w.tid));
        assert_eq!(
            d.tid, w.head,
            "governor mismatch at {}/{}/{}",
            w.doc, w.sid, w.tid
        );
        match w.deprel.split_once(':') {
            Some((prefix, _)) => {
                subtyped += 1;
                assert_eq!(d.relation, prefix);
                assert_eq!(d.relation_full.as_deref(), Some(w.deprel.as_str()));
            }
            None => {
                assert_eq!(d.relation, w.deprel);
                assert_eq!(d.relation_full, None);
            }
        }
    }
    assert!(
        subtyped >= 5,
        "sample should exercise ':' subtypes, found {subtyped}"
    );

    gate.pass(&format!(
        "50 sentences, {} word lines -> one token and one dependency each, one ROOT per sentence, {} ':' labels split correctly",
        oracle_words.len(),
        subtyped
    ));
}

// ---------------------------------------------------------------------------
// Criterion 6: offset soundness
// ---------------------------------------------------------------------------

/// Independent offset check: every token's cid must address exactly its
/// word in the newline-normalized text, and the union of token spans must
/// cover every non-whitespace character.
fn assert_offsets_sound(original: &str, context: &str) {
    let normalized = original.replace("\r\n", "\n").replace('\r', "\n");
    let corpus = vec![("t.txt".to_string(), original.to_string())];
    let set = run_tokenizer_backend(
        &corpus,
        None,
        "en",
        &AbbreviationList::default(),
        fixed_time(),
    )
    .unwrap_or_else(|e| panic!("{context}: backend failed: {e}"));
    let chars: Vec<char> = normalized.chars().collect();
    let mut covered = vec![false; chars.len()];
    for t in &set.token {
        let cid = t
            .cid
            .unwrap_or_else(|| panic!("{context}: token without cid")) as usize;
        let word: Vec<char> = t.word.chars().collect();
        assert!(
            cid + word.len() <= chars.len(),
            "{context}: token {:?} at {cid} runs past the text",
            t.word
        );
        assert_eq!(
            &chars[cid..cid + word.len()],
            &word[..],
            "{context}: token {:?} does not match the text at {cid}",
            t.word
        );
        for flag in &mut covered[cid..cid + word.len()] {
            *flag = true;
        }
    }
    for (i, &ch) in chars.iter().enumerate() {
        if !ch.is_whitespace() {
            assert!(
                covered[i],
                "{context}: character {ch:?} at {i} is not covered by any token"
            );
        }
    }
}

const ADVERSARIAL_TEXTS: [&str; 30] = [
    "",
    " ",
    "\n\r\n\r",
    "a",
    ".",
    "...",
    "?!?!",
    "Dr. No met Mr. Smith.",
    "e.g. Dr. Who vs. Mrs. Hudson etc.",
    "(Hello!) [World?] {Yes.}",
    "\"Stop.\" He left.",
    "word\r\nword\rword\nword",
    "It ran. (It hid.) It slept!",
    "U.S. No. 5 vs. No. 6.",
    "a.b.c. d",
    "x...y z",
    "'quoted.' next",
    "\u{201d}curly.\u{201d} next",
    "tab\tsep\ttab.",
    "No.7 is open.",
    "etc.) done",
    "St. Mary's Rd. is long.",
    "\u{1f980}\u{1f980}. \u{1f980}!",
    "\u{dc}n\u{ef}c\u{f6}d\u{e9} t\u{eb}xt. \u{c4}llo?",
    "a\u{a0}b. c",
    "e\u{301}tude. fin",
    "aaaa....    bbbb",
    "1.2.3 4.5",
    "Mrs.\nDay came.",
    "don't re-do self-made O'Brien's",
];

fn random_offset_text(rng: &mut ChaCha8Rng) -> String {
    const PIECES: [&str; 24] = [
        "word",
        "Dr.",
        "Mr.",
        "etc.",
        "No.",
        "a",
        "B",
        "\u{e9}t\u{e9}",
        "\u{1f600}",
        "x.y",
        "don't",
        "(aside)",
        "[note]",
        "\"quote\"",
        "'s",
        "...",
        "!?",
        "123",
        "4.5",
        ",",
        ";",
        "end.",
        "stop!",
        "why?",
    ];
    const SEPARATORS: [&str; 6] = [" ", "  ", "\n", "\r\n", "\r", "\t"];
    let mut text = String::new();
    for i in 0..rng.gen_range(1..=12) {
        if i > 0 {
            text.push_str(SEPARATORS.choose(rng).unwrap());
        }
        text.push_str(PIECES.choose(rng).unwrap());
    }
    text
}

#[test]
fn criterion_6_offset_soundness() {
    let gate = Gate::new(6, "offset soundness", LIMIT_OFFSETS);
    for (i, text) in ADVERSARIAL_TEXTS.iter().enumerate() {
        assert_offsets_sound(text, &format!("adversarial {i}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6006);
    let random_count = OFFSET_TEXTS - ADVERSARIAL_TEXTS.len();
    for i in 0..random_count {
        let text = random_offset_text(&mut rng);
        assert_offsets_sound(&text, &format!("random {i}"));
    }
    gate.pass(&format!(
        "{OFFSET_TEXTS} texts: every cid addresses its word exactly and all non-whitespace is covered"
    ));
}

// ---------------------------------------------------------------------------
// Criterion 7: persistence round trip
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_round_trip() {
    let gate = Gate::new(7, "persistence round trip", LIMIT_ROUND_TRIP);

    // A 100-token corpus with a 300-dimension vector matrix.
    let words: Vec<String> = (1..=100).map(|i| format!("w{i}")).collect();
    let text = words.join(" ");
    let corpus = vec![("big.txt".to_string(), text)];
    let set = run_tokenizer_backend(
        &corpus,
        None,
        "en",
        &AbbreviationList::default(),
        fixed_time(),
    )
    .unwrap();
    assert_eq!(set.token.len(), 100);
    let mut lexicon = String::from("50 300\n");
    for (i, word) in words.iter().take(50).enumerate() {
        let values: Vec<String> = (0..300).map(|j| format!("{}.{:03}", i % 7, j)).collect();
        lexicon.push_str(&format!("{word} {}\n", values.join(" ")));
    }
    let lex = load_embeddings(&lexicon).unwrap();
    let set = attach_vectors(&set, &lex);
    {
        let v = set.vector.as_ref().unwrap();
        assert_eq!((v.n_rows(), v.dim), (100, 300));
    }
    let dir = tempfile::tempdir().unwrap();
    write_annotation(&set, dir.path(), false).unwrap();
    let header = fs::read_to_string(dir.path().join("vector.csv")).unwrap();
    let columns = header.lines().next().unwrap().split(',').count();
    assert_eq!(
        columns, 303,
        "vector.csv must carry id, sid, tid plus 300 values"
    );
    let read_back = read_annotation(dir.path()).unwrap();
    assert_eq!(read_back, set.clone().without_raw_text());

    // A fixture with every optional field absent.
    let mut sparse = AnnotationSet::default();
    sparse
        .document
        .push(DocumentRow::new(1, fixed_time(), "", "en", ""));
    sparse.token.push(TokenRow {
        id: 1,
        sid: 1,
        tid: 1,
        word: "only".to_string(),
        lemma: None,
        upos: None,
        pos: None,
        cid: None,
    });
    let dir = tempfile::tempdir().unwrap();
    write_annotation(&sparse, dir.path(), false).unwrap();
    assert_eq!(read_annotation(dir.path()).unwrap(), sparse);

    // A fixture with every table occupied, via the sidecar path.
    let full = {
        let corpus = vec![
            ("a.txt".to_string(), "Ana sees Bo. Bo waves.".to_string()),
            ("b.txt".to_string(), "A dog runs.".to_string()),
        ];
        let set = run_tokenizer_backend(
            &corpus,
            None,
            "en",
            &AbbreviationList::default(),
            fixed_time(),
        )
        .unwrap();
        let set = load_sidecar(
            &set,
            SidecarKind::Entity,
            "id\tsid\ttid\ttid_end\tentity_type\tentity\tentity_normalized\n\
             1\t1\t1\t1\tPERSON\tAna\tAna\n",
        )
        .unwrap();
        let set = load_sidecar(
            &set,
            SidecarKind::Coreference,
            "id\trid\tmid\tmention\tmention_type\tnumber\tgender\tanimacy\tsid\ttid\ttid_end\ttid_head\n\
             1\t1\t1\tBo\tPROPER\tSINGULAR\tUNKNOWN\tANIMATE\t1\t3\t3\t3\n",
        )
        .unwrap();
        load_sidecar(
            &set,
            SidecarKind::Sentence,
            "id\tsid\tsentiment\n1\t1\t3\n1\t2\t2\n2\t1\t1\n",
        )
        .unwrap()
    };
    let dir = tempfile::tempdir().unwrap();
    write_annotation(&full, dir.path(), false).unwrap();
    assert_eq!(
        read_annotation(dir.path()).unwrap(),
        full.clone().without_raw_text()
    );

    gate.pass("read(write(a)) == a for the 100-token/300-dim corpus, an all-absent fixture, and a fully-annotated fixture");
}

// ---------------------------------------------------------------------------
// Criterion 8: canonical-mention and sentiment rules
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_canonical_mention_rule() {
    let gate = Gate::new(8, "canonical-mention and sentiment rules", LIMIT_CANONICAL);
    let corpus = vec![("a.txt".to_string(), "Ana sees Bo. Bo waves.".to_string())];
    let base = run_tokenizer_backend(
        &corpus,
        None,
        "en",
        &AbbreviationList::default(),
        fixed_time(),
    )
    .unwrap();

    let header = "id\trid\tmid\tmention\tmention_type\tnumber\tgender\tanimacy\tsid\ttid\ttid_end\ttid_head\n";
    let with_canonical = format!(
        "{header}1\t7\t7\tBo\tPROPER\tSINGULAR\tUNKNOWN\tANIMATE\t1\t3\t3\t3\n\
         1\t7\t9\tBo\tPRONOMINAL\tSINGULAR\tUNKNOWN\tANIMATE\t2\t1\t1\t1\n"
    );
    let accepted = load_sidecar(&base, SidecarKind::Coreference, &with_canonical).unwrap();
    assert_eq!(accepted.coreference.len(), 2);

    let without_canonical =
        format!("{header}1\t7\t9\tBo\tPRONOMINAL\tSINGULAR\tUNKNOWN\tANIMATE\t2\t1\t1\t1\n");
    match load_sidecar(&base, SidecarKind::Coreference, &without_canonical) {
        Err(SidecarError::Invalid(report)) => {
            assert_eq!(
                report.codes(),
                vec![ViolationCode::CanonicalMissing],
                "{report}"
            );
        }
        other => panic!("chain without canonical mention must be rejected, got {other:?}"),
    }

    for sentiment in 0..=4u8 {
        let stream = format!("id\tsid\tsentiment\n1\t1\t{sentiment}\n");
        load_sidecar(&base, SidecarKind::Sentence, &stream)
            .unwrap_or_else(|e| panic!("sentiment {sentiment} must be accepted: {e}"));
    }
    for sentiment in [5u8, 9, 200] {
        let stream = format!("id\tsid\tsentiment\n1\t1\t{sentiment}\n");
        match load_sidecar(&base, SidecarKind::Sentence, &stream) {
            Err(SidecarError::Invalid(report)) => {
                assert_eq!(report.codes(), vec![ViolationCode::Range], "{report}");
            }
            other => panic!("sentiment {sentiment} must be rejected, got {other:?}"),
        }
    }

    gate.pass(
        "canonical mentions accepted, missing canonicals rejected, sentiment bounded to 0..=4",
    );
}

// ---------------------------------------------------------------------------
// Criterion 9: workflow reproduction at desk scale
// ---------------------------------------------------------------------------

fn run_cli(args: &[&str]) -> String {
    let output = Command::new(env!("CARGO_BIN_EXE_cleantables"))
        .args(args)
        .output()
        .expect("CLI binary runs");
    assert!(
        output.status.success(),
        "cleantables {args:?} failed:\n{}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout).expect("CLI output is UTF-8")
}

/// (form, lemma-or-form, upos, governor tid, deprel) for one word line.
type WordFacts = (String, String, String, u32, String);

/// The worked corpus as plain line-scanned facts, independent of the library.
struct OracleCorpus {
    /// (doc, sid) -> word-line count
    lengths: BTreeMap<(u32, u32), u32>,
    /// (doc, sid, tid) -> facts about that word line
    words: BTreeMap<(u32, u32, u32), WordFacts>,
}

fn oracle_corpus(text: &str) -> OracleCorpus {
    let mut lengths = BTreeMap::new();
    let mut words = BTreeMap::new();
    let (_, _, scanned) = scan_conllu(text);
    // Re-scan for the full fields; scan_conllu already fixed doc/sid/tid.
    let mut fields_by_position: Vec<Vec<String>> = Vec::new();
    for line in text.lines() {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let id_field = line.split('\t').next().unwrap();
        if !id_field.bytes().all(|b| b.is_ascii_digit()) {
            continue;
        }
        fields_by_position.push(line.split('\t').map(String::from).collect());
    }
    assert_eq!(fields_by_position.len(), scanned.len());
    for (w, fields) in scanned.iter().zip(&fields_by_position) {
        *lengths.entry((w.doc, w.sid)).or_insert(0) += 1;
        let form = fields[1].clone();
        let lemma = if fields[2] == "_" {
            form.clone()
        } else {
            fields[2].clone()
        };
        let upos = fields[3].clone();
        words.insert(
            (w.doc, w.sid, w.tid),
            (form, lemma, upos, w.head, w.deprel.clone()),
        );
    }
    OracleCorpus { lengths, words }
}

/// Mirror of the published quantile definition, written independently.
fn oracle_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

fn rank_counts(counts: HashMap<String, u64>, n: usize) -> Vec<(String, u64)> {
    let mut rows: Vec<(String, u64)> = counts.into_iter().collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    rows.truncate(n);
    rows
}

#[test]
fn criterion_9_workflow_reproduction() {
    let gate = Gate::new(9, "workflow reproduction at desk scale", LIMIT_WORKFLOW);

    let conllu_text = fs::read_to_string(data_path("corpus.conllu")).unwrap();
    let oracle = oracle_corpus(&conllu_text);

    let dir = tempfile::tempdir().unwrap();
    let dir_str = dir.path().to_str().unwrap();
    let conllu = data_path("corpus.conllu");
    let meta = data_path("meta.csv");
    run_cli(&[
        "ingest-conllu",
        "--lang",
        "en",
        "--meta",
        meta.to_str().unwrap(),
        "--fixed-time",
        "2021-04-06T19:00:00Z",
        "--out",
        dir_str,
        conllu.to_str().unwrap(),
    ]);
    for (kind, file) in [
        ("entity", "entities.tsv"),
        ("sentence", "sentiment.tsv"),
        ("coreference", "coref.tsv"),
    ] {
        let path = data_path(file);
        run_cli(&[
            "load-sidecar",
            "--in",
            dir_str,
            "--kind",
            kind,
            "--file",
            path.to_str().unwrap(),
        ]);
    }
    run_cli(&["validate", "--in", dir_str]);

    // Sentence-length quantiles.
    let got = run_cli(&[
        "stats",
        "sentence-lengths",
        "--in",
        dir_str,
        "--probs",
        "0,0.25,0.5,0.75,1",
    ]);
    let mut lengths: Vec<f64> = oracle.lengths.values().map(|&n| n as f64).collect();
    lengths.sort_by(f64::total_cmp);
    let mut expected = String::from("prob,quantile\n");
    for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
        expected.push_str(&format!("{p},{}\n", oracle_quantile(&lengths, p)));
    }
    assert_eq!(
        got, expected,
        "sentence-length quantiles differ from the oracle"
    );

    // Top-20 NOUN lemmas.
    let got = run_cli(&[
        "stats",
        "top-terms",
        "--in",
        dir_str,
        "--filter-column",
        "upos",
        "--filter-value",
        "NOUN",
        "--n",
        "20",
    ]);
    let mut noun_counts: HashMap<String, u64> = HashMap::new();
    for (_, lemma, upos, _, _) in oracle.words.values() {
        if upos == "NOUN" {
            *noun_counts.entry(lemma.clone()).or_insert(0) += 1;
        }
    }
    let ranked = rank_counts(noun_counts, 20);
    assert_eq!(
        ranked.len(),
        20,
        "corpus must supply at least 20 NOUN lemmas"
    );
    let mut expected = String::from("lemma,count\n");
    for (lemma, count) in &ranked {
        expected.push_str(&format!("{lemma},{count}\n"));
    }
    assert_eq!(got, expected, "top NOUN lemmas differ from the oracle");

    // Top-10 GPE entities from the sidecar.
    let got = run_cli(&[
        "stats",
        "top-entities",
        "--in",
        dir_str,
        "--entity-type",
        "GPE",
        "--n",
        "10",
    ]);
    let entities_text = fs::read_to_string(data_path("entities.tsv")).unwrap();
    let mut gpe_counts: HashMap<String, u64> = HashMap::new();
    for line in entities_text.lines().skip(1) {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() >= 6 && fields[4] == "GPE" {
            *gpe_counts.entry(fields[5].to_string()).or_insert(0) += 1;
        }
    }
    let ranked = rank_counts(gpe_counts, 10);
    assert_eq!(
        ranked.len(),
        10,
        "corpus must supply at least 10 GPE mentions"
    );
    let mut expected = String::from("entity,count\n");
    for (entity, count) in &ranked {
        expected.push_str(&format!("{entity},{count}\n"));
    }
    assert_eq!(got, expected, "top GPE entities differ from the oracle");

    // Rare direct-object pairs under the 0.001 frequency threshold.
    let freq_path = data_path("word_frequency.tsv");
    let got = run_cli(&[
        "stats",
        "dep-pairs",
        "--in",
        dir_str,
        "--relation",
        "dobj",
        "--freq-lexicon",
        freq_path.to_str().unwrap(),
        "--max-freq",
        "0.001",
    ]);
    let freq_text = fs::read_to_string(&freq_path).unwrap();
    let mut freqs: HashMap<&str, f64> = HashMap::new();
    for line in freq_text.lines() {
        let (word, value) = line.split_once('\t').unwrap();
        freqs.insert(word, value.parse().unwrap());
    }
    let mut pairs: Vec<(u32, u32, u32, u32, String, String)> = Vec::new();
    for (&(doc, sid, tid), (_, lemma, _, head, deprel)) in &oracle.words {
        let is_dobj = deprel == "dobj" || deprel.starts_with("dobj:");
        if !is_dobj {
            continue;
        }
        let governor = &oracle.words[&(doc, sid, *head)].0;
        if freqs.get(lemma.as_str()).copied().unwrap_or(0.0) < 0.001 {
            pairs.push((doc, sid, *head, tid, governor.clone(), lemma.clone()));
        }
    }
    pairs.sort();
    let mut expected = String::from("id,pair\n");
    for (doc, _, _, _, governor, lemma) in &pairs {
        expected.push_str(&format!("{doc},{governor} => {lemma}\n"));
    }
    assert_eq!(got, expected, "rare dobj pairs differ from the oracle");
    assert!(
        pairs.len() >= 10,
        "corpus must supply a meaningful rare-pair set"
    );

    gate.pass(&format!(
        "CLI pipeline matches line-scan oracles: quantiles, 20 NOUN lemmas, 10 GPE entities, {} rare dobj pairs",
        pairs.len()
    ));
}
