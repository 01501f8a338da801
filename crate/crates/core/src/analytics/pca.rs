//! Principal components of a dense real matrix: center the columns (no
//! variance scaling), take the top-k right singular directions, and return
//! per-row scores with any metadata columns passed through.

use nalgebra::DMatrix;

use crate::analytics::AnalyticsError;
use crate::model::MetaTable;

/// Principal-component scores, one row per input row, with pass-through
/// metadata. Score columns are ordered by decreasing singular value; each
/// column's mean is 0 (projection of centered data).
#[derive(Debug, Clone, PartialEq)]
pub struct PcaTable {
    pub meta_columns: Vec<String>,
    pub meta_rows: Vec<Vec<String>>,
    /// `scores[i][j]` is row i's score on component j (PC(j+1)).
    pub scores: Vec<Vec<f64>>,
}

impl PcaTable {
    pub fn k(&self) -> usize {
        self.scores.first().map_or(0, Vec::len)
    }
}

/// First index of the largest-magnitude entry (deterministic under ties).
fn argmax_abs(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

/// Computes the top-k principal components of `rows` (a dense rows × cols
/// matrix). Columns are centered but not scaled; the sign of each direction
/// is fixed so that its largest-magnitude loading is positive. `meta`, when
/// given, must have one row per matrix row and is passed through.
pub fn tidy_pca(
    rows: &[Vec<f64>],
    meta: Option<&MetaTable>,
    k: usize,
) -> Result<PcaTable, AnalyticsError> {
    let n = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != c {
            return Err(AnalyticsError::DimMismatch {
                detail: format!("row {} has {} columns, expected {c}", i + 1, row.len()),
            });
        }
    }
    if let Some(m) = meta {
        if m.rows.len() != n {
            return Err(AnalyticsError::DimMismatch {
                detail: format!("metadata has {} rows but the matrix has {n}", m.rows.len()),
            });
        }
    }
    if k == 0 {
        return Err(AnalyticsError::BadRange {
            detail: "k must be at least 1".to_string(),
        });
    }
    let max_k = n.min(c);
    if k > max_k {
        return Err(AnalyticsError::KTooLarge { k, max: max_k });
    }

    // Center each column.
    let mut centered = DMatrix::from_fn(n, c, |i, j| rows[i][j]);
    for j in 0..c {
        let mean = centered.column(j).sum() / n as f64;
        for i in 0..n {
            centered[(i, j)] -= mean;
        }
    }

    // Eigendecompose the smaller Gram matrix rather than running an SVD on
    // the data matrix itself: the symmetric solver holds machine precision
    // on rank-deficient input where the general SVD loses several digits,
    // and the work stays cubic in min(n, c).
    let mut scores = vec![vec![0.0; k]; n];
    if c <= n {
        // S = XᵀX (c × c); eigenvectors are the loading directions.
        let eig = nalgebra::SymmetricEigen::new(centered.transpose() * &centered);
        let mut order: Vec<usize> = (0..c).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        for (pc, &dir) in order.iter().take(k).enumerate() {
            let mut v: Vec<f64> = eig.eigenvectors.column(dir).iter().copied().collect();
            if v[argmax_abs(&v)] < 0.0 {
                for x in &mut v {
                    *x = -*x;
                }
            }
            for i in 0..n {
                scores[i][pc] = (0..c).map(|j| centered[(i, j)] * v[j]).sum();
            }
        }
    } else {
        // G = XXᵀ (n × n); for an eigenpair (λ, u) the loading direction is
        // Xᵀu / σ with σ = √λ, so the score column X·v reduces to σ·u. The
        // unnormalized loading Xᵀu carries the signs needed for the
        // orientation convention.
        let eig = nalgebra::SymmetricEigen::new(&centered * centered.transpose());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        for (pc, &dir) in order.iter().take(k).enumerate() {
            let sigma = eig.eigenvalues[dir].max(0.0).sqrt();
            let u: Vec<f64> = eig.eigenvectors.column(dir).iter().copied().collect();
            let loading: Vec<f64> = (0..c)
                .map(|j| (0..n).map(|i| centered[(i, j)] * u[i]).sum())
                .collect();
            let flip = loading[argmax_abs(&loading)] < 0.0;
            for i in 0..n {
                let s = sigma * u[i];
                scores[i][pc] = if flip { -s } else { s };
            }
        }
    }

    let (meta_columns, meta_rows) = match meta {
        Some(m) => (m.columns.clone(), m.rows.clone()),
        None => (Vec::new(), vec![Vec::new(); n]),
    };
    Ok(PcaTable {
        meta_columns,
        meta_rows,
        scores,
    })
}
