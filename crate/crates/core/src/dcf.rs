//! Distributional correspondence functions and the per-domain
//! correspondence matrix (one row per term, one column per pivot).
//!
//! Both DCFs compare binary occurrence profiles over a [`ProfileIndex`]:
//!
//! * Linear: `P(f|p) - P(f|¬p)`
//! * Cosine: `|f∩p| / sqrt(df(f)·df(p)) - sqrt(P(f)·P(p))`, i.e. the cosine of
//!   the two profiles minus the cosine expected for independent profiles.
//!
//! Both lie in `[-1, 1]` and are zero for degenerate profiles.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{DciError, Result};
use crate::linalg::{l2_normalize, DenseMatrix, RowMatrix};
use crate::projection::Standardizer;
use crate::vectorize::{ProfileIndex, TermId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DcfKind {
    Linear,
    Cosine,
}

impl DcfKind {
    pub const ALL: [DcfKind; 2] = [DcfKind::Linear, DcfKind::Cosine];

    /// Correspondence from raw counts: `n` documents, `df_f`/`df_p` document
    /// frequencies, `co` documents containing both.
    pub fn eval(self, n: usize, df_f: usize, df_p: usize, co: usize) -> f64 {
        match self {
            DcfKind::Linear => linear_from_counts(n, df_f, df_p, co),
            DcfKind::Cosine => cosine_from_counts(n, df_f, df_p, co),
        }
    }
}

impl fmt::Display for DcfKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DcfKind::Linear => "linear",
            DcfKind::Cosine => "cosine",
        })
    }
}

impl FromStr for DcfKind {
    type Err = DciError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(DcfKind::Linear),
            "cosine" => Ok(DcfKind::Cosine),
            other => Err(DciError::Config(format!(
                "unknown DCF `{other}` (expected linear or cosine)"
            ))),
        }
    }
}

fn linear_from_counts(n: usize, df_f: usize, df_p: usize, co: usize) -> f64 {
    if df_p == 0 || df_p >= n {
        return 0.0;
    }
    let given_p = co as f64 / df_p as f64;
    let given_not_p = (df_f - co) as f64 / (n - df_p) as f64;
    given_p - given_not_p
}

fn cosine_from_counts(n: usize, df_f: usize, df_p: usize, co: usize) -> f64 {
    if df_f == 0 || df_p == 0 {
        return 0.0;
    }
    let (df_f, df_p, n) = (df_f as f64, df_p as f64, n as f64);
    co as f64 / (df_f * df_p).sqrt() - ((df_f / n) * (df_p / n)).sqrt()
}

pub fn linear_dcf(f: TermId, p: TermId, index: &ProfileIndex) -> f64 {
    linear_from_counts(index.n_docs(), index.df(f), index.df(p), index.co_occurrences(f, p))
}

pub fn cosine_dcf(f: TermId, p: TermId, index: &ProfileIndex) -> f64 {
    cosine_from_counts(index.n_docs(), index.df(f), index.df(p), index.co_occurrences(f, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixOptions {
    /// Z-score each pivot column over the rows of observed terms before
    /// row normalization.
    pub standardize_features: bool,
}

impl Default for MatrixOptions {
    fn default() -> Self {
        Self {
            standardize_features: true,
        }
    }
}

/// `vocab_size × n_pivots` correspondence embeddings. Only rows of terms that
/// occur in the estimation pool are stored; every other row is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceMatrix {
    vocab_size: usize,
    n_pivots: usize,
    slot: Vec<u32>,
    terms: Vec<TermId>,
    data: Vec<f64>,
    pub dcf: DcfKind,
    pub standardized: bool,
    pub row_normalized: bool,
}

const NO_ROW: u32 = u32::MAX;

impl CorrespondenceMatrix {
    /// Wraps precomputed rows (row `i` is term `i`) as-is; all-zero rows are
    /// not stored.
    pub fn from_dense(dcf: DcfKind, rows: &DenseMatrix) -> Result<Self> {
        let n_pivots = rows.n_cols();
        if n_pivots == 0 {
            return Err(DciError::Argument("correspondence matrix needs at least one pivot".into()));
        }
        let mut slot = vec![NO_ROW; rows.n_rows()];
        let mut terms = Vec::new();
        let mut data = Vec::new();
        for (i, r) in rows.rows().enumerate() {
            if r.iter().any(|&v| v != 0.0) {
                slot[i] = terms.len() as u32;
                terms.push(i as TermId);
                data.extend_from_slice(r);
            }
        }
        Ok(Self {
            vocab_size: rows.n_rows(),
            n_pivots,
            slot,
            terms,
            data,
            dcf,
            standardized: false,
            row_normalized: false,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn n_pivots(&self) -> usize {
        self.n_pivots
    }

    /// The embedding of `term`, or `None` for an all-zero row.
    pub fn row(&self, term: TermId) -> Option<&[f64]> {
        match self.slot.get(term as usize) {
            Some(&s) if s != NO_ROW => {
                let s = s as usize;
                Some(&self.data[s * self.n_pivots..(s + 1) * self.n_pivots])
            }
            _ => None,
        }
    }

    /// Dense copy of row `term` (zeros for unobserved terms).
    pub fn dense_row(&self, term: TermId) -> Vec<f64> {
        self.row(term)
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![0.0; self.n_pivots])
    }

    /// Terms with a stored row, ascending.
    pub fn stored_terms(&self) -> &[TermId] {
        &self.terms
    }

    /// Text dump: a `#` header line, then `term_id<TAB>v1 v2 ...` per stored row.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# vocab_size={} n_pivots={} dcf={} standardized={} row_normalized={}\n",
            self.vocab_size, self.n_pivots, self.dcf, self.standardized, self.row_normalized
        );
        for &t in &self.terms {
            let row = self.row(t).unwrap();
            let _ = write!(out, "{t}\t");
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Builds the correspondence matrix of `pivot_side` (pivot term ids in this
/// index's language) over `index`.
pub fn build_correspondence_matrix(
    kind: DcfKind,
    vocab_size: usize,
    pivot_side: &[TermId],
    index: &ProfileIndex,
    options: MatrixOptions,
) -> Result<CorrespondenceMatrix> {
    if pivot_side.is_empty() {
        return Err(DciError::Argument("correspondence matrix needs at least one pivot".into()));
    }
    let n_pivots = pivot_side.len();
    let bound = index.term_bound().min(vocab_size);
    let mut slot = vec![NO_ROW; vocab_size];
    let mut terms = Vec::new();
    for t in 0..bound as TermId {
        if index.df(t) > 0 {
            slot[t as usize] = terms.len() as u32;
            terms.push(t);
        }
    }

    // Co-occurrence counts, accumulated pivot by pivot over the pivot's documents.
    let mut co = vec![0u32; terms.len() * n_pivots];
    for (j, &p) in pivot_side.iter().enumerate() {
        for &d in index.postings(p) {
            for &f in index.doc_terms(d as usize) {
                if let Some(&s) = slot.get(f as usize) {
                    if s != NO_ROW {
                        co[s as usize * n_pivots + j] += 1;
                    }
                }
            }
        }
    }

    let n = index.n_docs();
    let pivot_df: Vec<usize> = pivot_side.iter().map(|&p| index.df(p)).collect();
    let mut data = vec![0.0; co.len()];
    for (s, &f) in terms.iter().enumerate() {
        let df_f = index.df(f);
        let row = s * n_pivots..(s + 1) * n_pivots;
        for ((out, &both), &df_p) in data[row.clone()].iter_mut().zip(&co[row]).zip(&pivot_df) {
            *out = kind.eval(n, df_f, df_p, both as usize);
        }
    }

    if options.standardize_features && terms.len() >= 2 {
        let st = Standardizer::fit_flat(&data, n_pivots)?;
        for row in data.chunks_exact_mut(n_pivots) {
            st.apply_in_place(row);
        }
    }
    for row in data.chunks_exact_mut(n_pivots) {
        l2_normalize(row);
    }

    Ok(CorrespondenceMatrix {
        vocab_size,
        n_pivots,
        slot,
        terms,
        data,
        dcf: kind,
        standardized: options.standardize_features,
        row_normalized: true,
    })
}
