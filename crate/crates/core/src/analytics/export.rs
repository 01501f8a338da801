//! MatrixMarket export of term matrices: the coordinate-format matrix plus
//! two sidecar text files naming the rows (doc_ids) and columns (vocab).

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::analytics::TermMatrix;
use crate::fsutil::write_atomic;

#[derive(Debug, Error)]
#[error("{path}: {source}")]
pub struct ExportError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

/// Writes `matrix.mtx` (MatrixMarket coordinate real general, 1-based
/// indices), `doc_ids.txt`, and `vocab.txt` into `dir`, creating it if
/// needed. Values use the shortest decimal form that round-trips to the
/// same f64, so output is platform-stable.
pub fn export_matrix(m: &TermMatrix, dir: &Path) -> Result<(), ExportError> {
    let ctx = |path: &Path| {
        let path = path.to_path_buf();
        move |source: io::Error| ExportError { path, source }
    };
    std::fs::create_dir_all(dir).map_err(ctx(dir))?;

    let mut mtx = String::new();
    mtx.push_str("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(mtx, "{} {} {}", m.n_rows(), m.n_cols(), m.triplets.len());
    for &(d, t, v) in &m.triplets {
        let _ = writeln!(mtx, "{} {} {}", d + 1, t + 1, v);
    }
    let mtx_path = dir.join("matrix.mtx");
    write_atomic(&mtx_path, &mtx).map_err(ctx(&mtx_path))?;

    for (name, lines) in [("doc_ids.txt", &m.doc_ids), ("vocab.txt", &m.vocab)] {
        let mut body = String::new();
        for line in lines {
            body.push_str(line);
            body.push('\n');
        }
        let path = dir.join(name);
        write_atomic(&path, &body).map_err(ctx(&path))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{get_tfidf, DocVar, MatrixKind, TfWeight};
    use crate::model::TokenRow;

    fn sample_matrix() -> TermMatrix {
        let mut toks = Vec::new();
        for (id, terms) in [(1u32, vec!["a", "a", "b"]), (2, vec!["b", "c"])] {
            for (j, t) in terms.iter().enumerate() {
                toks.push(TokenRow {
                    id,
                    sid: 1,
                    tid: j as u32 + 1,
                    word: t.to_string(),
                    lemma: Some(t.to_string()),
                    upos: None,
                    pos: None,
                    cid: None,
                });
            }
        }
        get_tfidf(
            &toks,
            0.0,
            1.0,
            MatrixKind::Tf,
            TfWeight::Raw,
            DocVar::Id,
            "lemma",
        )
        .unwrap()
    }

    #[test]
    fn writes_header_size_and_entries() {
        let dir = tempfile::tempdir().unwrap();
        let m = sample_matrix();
        export_matrix(&m, dir.path()).unwrap();

        let mtx = std::fs::read_to_string(dir.path().join("matrix.mtx")).unwrap();
        let lines: Vec<&str> = mtx.lines().collect();
        assert_eq!(lines[0], "%%MatrixMarket matrix coordinate real general");
        assert_eq!(lines[1], "2 3 4");
        assert_eq!(lines.len(), 6);

        let docs = std::fs::read_to_string(dir.path().join("doc_ids.txt")).unwrap();
        assert_eq!(docs, "1\n2\n");
        let vocab = std::fs::read_to_string(dir.path().join("vocab.txt")).unwrap();
        assert_eq!(vocab, "a\nb\nc\n");
    }

    #[test]
    fn empty_matrix_writes_zero_size_line() {
        let dir = tempfile::tempdir().unwrap();
        let m = TermMatrix::empty(MatrixKind::Tf, TfWeight::Raw);
        export_matrix(&m, dir.path()).unwrap();
        let mtx = std::fs::read_to_string(dir.path().join("matrix.mtx")).unwrap();
        assert_eq!(
            mtx,
            "%%MatrixMarket matrix coordinate real general\n0 0 0\n"
        );
    }

    /// Re-parse with an independent, by-the-spec reader and compare
    /// triplets exactly.
    #[test]
    fn round_trips_through_a_plain_reader() {
        let dir = tempfile::tempdir().unwrap();
        let m = sample_matrix();
        export_matrix(&m, dir.path()).unwrap();

        let mtx = std::fs::read_to_string(dir.path().join("matrix.mtx")).unwrap();
        let mut lines = mtx.lines();
        let banner = lines.next().unwrap();
        assert!(banner.starts_with("%%MatrixMarket"));
        let size: Vec<usize> = lines
            .next()
            .unwrap()
            .split_whitespace()
            .map(|f| f.parse().unwrap())
            .collect();
        let mut triplets = Vec::new();
        for line in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            assert_eq!(f.len(), 3);
            triplets.push((
                f[0].parse::<usize>().unwrap() - 1,
                f[1].parse::<usize>().unwrap() - 1,
                f[2].parse::<f64>().unwrap(),
            ));
        }
        assert_eq!(size[2], triplets.len());
        assert_eq!(triplets, m.triplets);
    }

    #[test]
    fn io_errors_carry_the_path() {
        let m = sample_matrix();
        let err = export_matrix(&m, Path::new("/proc/definitely/not/writable")).unwrap_err();
        assert!(err.to_string().contains("/proc/definitely/not/writable"));
    }
}
