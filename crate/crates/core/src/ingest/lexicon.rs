//! Lexicon readers: word-embedding tables (word followed by D reals per
//! line, optional "count dim" header) and word-frequency tables (TSV).

use std::collections::HashMap;

use thiserror::Error;

/// A word-embedding table with a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingLexicon {
    pub dim: usize,
    pub entries: HashMap<String, Vec<f64>>,
}

impl EmbeddingLexicon {
    /// The vector for a word, trying the exact form first and then its
    /// lowercase form.
    pub fn lookup(&self, word: &str) -> Option<&[f64]> {
        self.entries
            .get(word)
            .or_else(|| self.entries.get(&word.to_lowercase()))
            .map(Vec::as_slice)
    }
}

/// Relative corpus frequencies in [0, 1]; absent words count as 0.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrequencyLexicon {
    pub entries: HashMap<String, f64>,
}

impl FrequencyLexicon {
    pub fn frequency(&self, word: &str) -> f64 {
        self.entries.get(word).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LexiconError {
    #[error("line {line}: expected {expected} values, found {got}")]
    DimMismatch {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("line {line}: {value:?} is not a number")]
    BadNumber { line: usize, value: String },
    #[error("lexicon has no entries")]
    EmptyLexicon,
    #[error("line {line}: frequency {value} outside [0, 1]")]
    Range { line: usize, value: f64 },
    #[error("line {line}: expected two tab-separated fields, found {got}")]
    BadRow { line: usize, got: usize },
}

/// Reads an embedding lexicon: one word plus D space-separated reals per
/// line. A leading line of exactly two non-negative integers is taken as a
/// "count dim" header and skipped. The dimension is fixed by the first data
/// line; duplicate words keep the last value.
pub fn load_embeddings(input: &str) -> Result<EmbeddingLexicon, LexiconError> {
    let mut entries: HashMap<String, Vec<f64>> = HashMap::new();
    let mut dim: Option<usize> = None;
    let mut first_data_line = true;

    for (i, line) in input.lines().enumerate() {
        let lineno = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if first_data_line && fields.len() == 2 && fields.iter().all(|f| f.parse::<u64>().is_ok()) {
            first_data_line = false;
            continue; // "count dim" header
        }
        first_data_line = false;

        let word = fields[0];
        let expected = match dim {
            Some(d) => d,
            None => {
                let d = fields.len().saturating_sub(1);
                if d == 0 {
                    return Err(LexiconError::DimMismatch {
                        line: lineno,
                        expected: 1,
                        got: 0,
                    });
                }
                dim = Some(d);
                d
            }
        };
        if fields.len() - 1 != expected {
            return Err(LexiconError::DimMismatch {
                line: lineno,
                expected,
                got: fields.len() - 1,
            });
        }
        let mut values = Vec::with_capacity(expected);
        for f in &fields[1..] {
            values.push(f.parse::<f64>().map_err(|_| LexiconError::BadNumber {
                line: lineno,
                value: f.to_string(),
            })?);
        }
        entries.insert(word.to_string(), values);
    }

    match dim {
        Some(dim) if !entries.is_empty() => Ok(EmbeddingLexicon { dim, entries }),
        _ => Err(LexiconError::EmptyLexicon),
    }
}

/// Reads a frequency lexicon: TSV lines of word and relative frequency, no
/// header. Duplicate words keep the last value; an empty stream is an empty
/// lexicon (every word then has frequency 0).
pub fn load_frequency_lexicon(input: &str) -> Result<FrequencyLexicon, LexiconError> {
    let mut entries = HashMap::new();
    for (i, line) in input.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(LexiconError::BadRow {
                line: lineno,
                got: fields.len(),
            });
        }
        let value: f64 = fields[1].parse().map_err(|_| LexiconError::BadNumber {
            line: lineno,
            value: fields[1].to_string(),
        })?;
        if !(0.0..=1.0).contains(&value) {
            return Err(LexiconError::Range {
                line: lineno,
                value,
            });
        }
        entries.insert(fields[0].to_string(), value);
    }
    Ok(FrequencyLexicon { entries })
}
