//! Projection of weighted documents into the pivot space, and per-dimension
//! z-score standardization.

use serde::{Deserialize, Serialize};

use crate::dcf::CorrespondenceMatrix;
use crate::error::{DciError, Result};
use crate::linalg::{l2_normalize, DenseMatrix};
use crate::vectorize::WeightedDoc;

/// Dimensions whose standard deviation falls below this are passed through.
pub const CONSTANT_STD_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Source,
    Target,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedMatrix {
    pub rows: DenseMatrix,
    pub side: Side,
}

/// `row(d) = Σ_f weight(f, d) · matrix.row(f)`, then L2-normalized. Terms
/// without a stored matrix row contribute nothing.
pub fn project(docs: &[WeightedDoc], matrix: &CorrespondenceMatrix, side: Side) -> Result<ProjectedMatrix> {
    let k = matrix.n_pivots();
    let mut rows = DenseMatrix::zeros(docs.len(), k);
    for (i, doc) in docs.iter().enumerate() {
        let out = rows.row_mut(i);
        for &(term, weight) in &doc.entries {
            if term as usize >= matrix.vocab_size() {
                return Err(DciError::Argument(format!(
                    "document term {term} outside the matrix vocabulary ({})",
                    matrix.vocab_size()
                )));
            }
            if let Some(r) = matrix.row(term) {
                for (o, v) in out.iter_mut().zip(r) {
                    *o += weight * v;
                }
            }
        }
        l2_normalize(out);
    }
    Ok(ProjectedMatrix { rows, side })
}

/// Per-dimension mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Fits over a row-major buffer of `n_cols`-wide rows (at least two).
    pub fn fit_flat(data: &[f64], n_cols: usize) -> Result<Self> {
        if n_cols == 0 || !data.len().is_multiple_of(n_cols) {
            return Err(DciError::Argument("standardizer: ragged or zero-width input".into()));
        }
        let n = data.len() / n_cols;
        if n < 2 {
            return Err(DciError::Argument(format!(
                "standardizer needs at least 2 rows, got {n}"
            )));
        }
        let mut mean = vec![0.0; n_cols];
        for row in data.chunks_exact(n_cols) {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let mut var = vec![0.0; n_cols];
        for row in data.chunks_exact(n_cols) {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                let d = v - m;
                *s += d * d;
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n as f64).sqrt();
                if sd < CONSTANT_STD_GUARD {
                    1.0
                } else {
                    sd
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn fit(rows: &DenseMatrix) -> Result<Self> {
        use crate::linalg::RowMatrix;
        Self::fit_flat(rows.as_flat(), rows.n_cols())
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply_in_place(&self, row: &mut [f64]) {
        for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = (*v - m) / s;
        }
    }

    pub fn apply(&self, rows: &DenseMatrix) -> Result<DenseMatrix> {
        use crate::linalg::RowMatrix;
        if rows.n_cols() != self.dim() {
            return Err(DciError::Argument(format!(
                "standardizer fitted on {} dimensions, input has {}",
                self.dim(),
                rows.n_cols()
            )));
        }
        let mut out = rows.clone();
        for i in 0..out.n_rows() {
            self.apply_in_place(out.row_mut(i));
        }
        Ok(out)
    }
}

pub fn standardize_fit(rows: &[Vec<f64>]) -> Result<Standardizer> {
    Standardizer::fit(&DenseMatrix::from_rows(rows)?)
}

pub fn standardize_apply(rows: &[Vec<f64>], standardizer: &Standardizer) -> Result<Vec<Vec<f64>>> {
    if rows.is_empty() {
        return Ok(Vec::new());
    }
    Ok(standardizer.apply(&DenseMatrix::from_rows(rows)?)?.to_rows())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use crate::dcf::{build_correspondence_matrix, DcfKind, MatrixOptions};
    use crate::vectorize::ProfileIndex;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    /// A matrix over a 4-doc pool with a single pivot where term 0 has row [1]
    /// and term 1 row [-1].
    fn one_pivot_matrix() -> CorrespondenceMatrix {
        let docs: Vec<Document> = [&[0u32, 2][..], &[0, 2], &[1, 2], &[1]]
            .iter()
            .map(|ts| Document::from_counts(ts.iter().map(|&t| (t, 1)), None))
            .collect();
        let idx = ProfileIndex::from_documents(&docs).unwrap();
        build_correspondence_matrix(DcfKind::Linear, 3, &[0], &idx, MatrixOptions { standardize_features: false })
            .unwrap()
    }

    #[test]
    fn empty_document_projects_to_zero() {
        let m = one_pivot_matrix();
        let p = project(&[WeightedDoc::default()], &m, Side::Source).unwrap();
        assert_eq!(p.rows.row(0), &[0.0]);
        assert_eq!(p.side, Side::Source);
    }

    #[test]
    fn out_of_vocabulary_term_is_an_argument_error() {
        let m = one_pivot_matrix();
        let doc = WeightedDoc { entries: vec![(9, 1.0)] };
        assert!(matches!(project(&[doc], &m, Side::Target), Err(DciError::Argument(_))));
    }

    #[test]
    fn two_dimensional_compositions() {
        // Pivots 0 and 1 are disjoint halves of the pool, term 2 = pivot 0's
        // profile and term 3 = pivot 1's profile, so Linear rows are ±[1,-1]/√2.
        let docs: Vec<Document> = [&[0u32, 2][..], &[0, 2], &[1, 3], &[1, 3]]
            .iter()
            .map(|ts| Document::from_counts(ts.iter().map(|&t| (t, 1)), None))
            .collect();
        let idx = ProfileIndex::from_documents(&docs).unwrap();
        let m = build_correspondence_matrix(DcfKind::Linear, 4, &[0, 1], &idx, MatrixOptions { standardize_features: false })
            .unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let single = project(&[WeightedDoc { entries: vec![(2, 1.0)] }], &m, Side::Source).unwrap();
        approx::assert_relative_eq!(single.rows.row(0)[0], h, epsilon = 1e-15);
        approx::assert_relative_eq!(single.rows.row(0)[1], -h, epsilon = 1e-15);
        // Opposite rows with equal weight cancel to zero.
        let both = project(&[WeightedDoc { entries: vec![(2, 1.0), (3, 1.0)] }], &m, Side::Source).unwrap();
        assert_eq!(both.rows.row(0), &[0.0, 0.0]);
    }

    fn dense(rows: &[Vec<f64>]) -> CorrespondenceMatrix {
        CorrespondenceMatrix::from_dense(DcfKind::Cosine, &DenseMatrix::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn single_feature_composition() {
        let m = dense(&[vec![0.6, 0.8]]);
        let p = project(&[WeightedDoc { entries: vec![(0, 1.0)] }], &m, Side::Source).unwrap();
        assert_eq!(p.rows.row(0), &[0.6, 0.8]);
    }

    #[test]
    fn orthogonal_rows_sum_then_normalize() {
        let m = dense(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let doc = WeightedDoc { entries: vec![(0, 1.0), (1, 1.0)] };
        let p = project(&[doc], &m, Side::Target).unwrap();
        approx::assert_relative_eq!(p.rows.row(0)[0], 0.7071067811865475, epsilon = 1e-15);
        approx::assert_relative_eq!(p.rows.row(0)[1], 0.7071067811865475, epsilon = 1e-15);
    }

    #[test]
    fn two_point_fit_with_constant_guard() {
        let st = standardize_fit(&[vec![0.0, 2.0], vec![2.0, 2.0]]).unwrap();
        assert_eq!(st.mean, vec![1.0, 2.0]);
        assert_eq!(st.std, vec![1.0, 1.0]);
    }

    #[test]
    fn fit_needs_two_rows() {
        assert!(matches!(standardize_fit(&[vec![1.0]]), Err(DciError::Argument(_))));
    }

    #[test]
    fn apply_examples() {
        let st = Standardizer { mean: vec![5.0, 5.0], std: vec![2.0, 1.0] };
        let out = standardize_apply(&[vec![7.0, 5.0]], &st).unwrap();
        assert_eq!(out, vec![vec![1.0, 0.0]]);
        assert!(matches!(standardize_apply(&[vec![1.0]], &st), Err(DciError::Argument(_))));
    }

    #[test]
    fn monte_carlo_fit() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let normal = Normal::new(5.0, 3.0).unwrap();
        let rows: Vec<Vec<f64>> = (0..10_000).map(|_| vec![normal.sample(&mut rng)]).collect();
        let st = standardize_fit(&rows).unwrap();
        assert!((st.mean[0] - 5.0).abs() < 0.1, "mean {}", st.mean[0]);
        assert!((st.std[0] - 3.0).abs() < 0.1, "std {}", st.std[0]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
            (2usize..20, 1usize..6).prop_flat_map(|(n, d)| {
                prop::collection::vec(prop::collection::vec(-100.0f64..100.0, d), n)
            })
        }

        proptest! {
            #[test]
            fn apply_then_invert_round_trips(rows in matrix()) {
                let st = standardize_fit(&rows).unwrap();
                let z = standardize_apply(&rows, &st).unwrap();
                for (orig, zr) in rows.iter().zip(&z) {
                    for j in 0..orig.len() {
                        let back = zr[j] * st.std[j] + st.mean[j];
                        prop_assert!((back - orig[j]).abs() <= 1e-12 * orig[j].abs().max(1.0));
                    }
                }
            }

            #[test]
            fn projection_is_scale_invariant(
                rows in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 2..8),
                weights in prop::collection::vec(0.0f64..5.0, 8),
                alpha in 0.01f64..100.0,
            ) {
                let entries: Vec<(u32, f64)> = (0..rows.len() as u32).map(|t| (t, weights[t as usize])).collect();
                // Skip near-cancelling sums, where normalization amplifies rounding.
                let raw: f64 = (0..3)
                    .map(|j| entries.iter().map(|&(t, w)| w * rows[t as usize][j]).sum::<f64>().powi(2))
                    .sum::<f64>()
                    .sqrt();
                prop_assume!(raw > 1e-3);
                let m = dense(&rows);
                let doc = WeightedDoc { entries };
                let base = project(std::slice::from_ref(&doc), &m, Side::Source).unwrap();
                let scaled = project(&[doc.scaled(alpha)], &m, Side::Source).unwrap();
                for (a, b) in base.rows.row(0).iter().zip(scaled.rows.row(0)) {
                    prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
                }
            }

            #[test]
            fn refit_on_standardized_output_is_unit(rows in matrix()) {
                let st = standardize_fit(&rows).unwrap();
                let z = standardize_apply(&rows, &st).unwrap();
                let again = standardize_fit(&z).unwrap();
                for j in 0..again.dim() {
                    prop_assert!(again.mean[j].abs() < 1e-9);
                    prop_assert!((again.std[j] - 1.0).abs() < 1e-6);
                }
            }
        }
    }
}
