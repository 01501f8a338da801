//! Synthetic corpus generators shared by the pipeline benchmarks.
//!
//! Everything here is deterministic for a given seed so that benchmark runs
//! are comparable across machines and revisions.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cleantables_core::TokenRow;

const WORDS: [&str; 40] = [
    "council", "budget", "road", "school", "river", "bridge", "market", "garden", "library",
    "meeting", "report", "season", "harvest", "signal", "window", "letter", "morning", "evening",
    "station", "harbor", "engine", "record", "notice", "survey", "repair", "permit", "ballot",
    "crowd", "music", "stone", "valley", "forest", "copper", "timber", "barrel", "lantern",
    "ledger", "anchor", "compass", "meadow",
];

const VERBS: [&str; 12] = [
    "approved", "opened", "closed", "moved", "repaired", "counted", "studied", "visited",
    "planned", "funded", "mapped", "stored",
];

/// Plain-text documents shaped like short civic reports: `docs` files, each
/// with `sentences` sentences of roughly `words` words.
pub fn synthetic_texts(
    docs: usize,
    sentences: usize,
    words: usize,
    seed: u64,
) -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (1..=docs)
        .map(|d| {
            let mut text = String::new();
            for s in 0..sentences {
                if s > 0 {
                    text.push(' ');
                }
                text.push_str("The");
                for _ in 0..words {
                    text.push(' ');
                    if rng.gen_bool(0.2) {
                        text.push_str(VERBS.choose(&mut rng).unwrap());
                    } else {
                        text.push_str(WORDS.choose(&mut rng).unwrap());
                    }
                }
                text.push(*['.', '?', '!'].choose(&mut rng).unwrap());
            }
            (format!("doc{d:04}.txt"), text)
        })
        .collect()
}

/// A well-formed CoNLL-U stream: `docs` documents of `sentences` sentences,
/// each with `words` word lines, one root per sentence, and a mix of plain
/// and subtyped relations.
pub fn synthetic_conllu(docs: usize, sentences: usize, words: usize, seed: u64) -> String {
    const DEPRELS: [&str; 6] = ["nsubj", "dobj", "det", "amod", "nsubj:pass", "acl:relcl"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for _ in 0..docs {
        out.push_str("# newdoc\n");
        for _ in 0..sentences {
            let root = rng.gen_range(1..=words);
            for tid in 1..=words {
                let form = WORDS.choose(&mut rng).unwrap();
                let head = if tid == root {
                    0
                } else {
                    loop {
                        let h = rng.gen_range(1..=words);
                        if h != tid {
                            break h;
                        }
                    }
                };
                let deprel = if head == 0 {
                    "root"
                } else {
                    DEPRELS.choose(&mut rng).unwrap()
                };
                out.push_str(&format!(
                    "{tid}\t{form}\t{form}\tNOUN\tNN\t_\t{head}\t{deprel}\t_\t_\n"
                ));
            }
            out.push('\n');
        }
    }
    out
}

/// Bare token rows over a `vocab`-word pool, for term-matrix benchmarks.
pub fn synthetic_tokens(
    docs: usize,
    tokens_per_doc: usize,
    vocab: usize,
    seed: u64,
) -> Vec<TokenRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool: Vec<String> = (0..vocab).map(|i| format!("term{i:05}")).collect();
    let mut rows = Vec::with_capacity(docs * tokens_per_doc);
    for id in 1..=docs as u32 {
        for t in 0..tokens_per_doc {
            let word = pool.choose(&mut rng).unwrap().clone();
            rows.push(TokenRow {
                id,
                sid: (t / 20) as u32 + 1,
                tid: (t % 20) as u32 + 1,
                word: word.clone(),
                lemma: Some(word),
                upos: Some("NOUN".to_string()),
                pos: Some("NN".to_string()),
                cid: None,
            });
        }
    }
    rows
}

/// A dense `n` x `c` matrix of uniform noise, for the PCA benchmark.
pub fn synthetic_matrix(n: usize, c: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..c).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}
