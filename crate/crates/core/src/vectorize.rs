//! Term vocabularies, binary occurrence profiles and tf-idf weighting.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, DomainPool};
use crate::error::{DciError, Result};

pub type TermId = u32;

/// Bijective term ↔ id map with ids dense in `[0, len)`, assigned in
/// first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    ids: HashMap<String, TermId>,
    terms: Vec<String>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, term: &str) -> TermId {
        if let Some(&id) = self.ids.get(term) {
            return id;
        }
        let id = TermId::try_from(self.terms.len()).expect("vocabulary exceeds u32 ids");
        self.ids.insert(term.to_owned(), id);
        self.terms.push(term.to_owned());
        id
    }

    pub fn id(&self, term: &str) -> Option<TermId> {
        self.ids.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> Option<&str> {
        self.terms.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (TermId, &str)> {
        self.terms
            .iter()
            .enumerate()
            .map(|(i, t)| (i as TermId, t.as_str()))
    }
}

/// Binary occurrence profiles of every term over an estimation pool.
///
/// Besides the per-term postings the index keeps the per-document term
/// lists, which lets co-occurrence counts against a pivot be accumulated by
/// walking only the pivot's documents.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileIndex {
    n_docs: usize,
    postings: Vec<Vec<u32>>,
    doc_terms: Vec<Vec<TermId>>,
}

impl ProfileIndex {
    /// Builds the index over an arbitrary document sequence. Labels are
    /// ignored; presence is `count >= 1`.
    pub fn from_documents<'a, I>(docs: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Document>,
    {
        let mut postings: Vec<Vec<u32>> = Vec::new();
        let mut doc_terms = Vec::new();
        for (d, doc) in docs.into_iter().enumerate() {
            let d = u32::try_from(d)
                .map_err(|_| DciError::Argument("too many documents for index".into()))?;
            let mut terms = Vec::with_capacity(doc.len());
            for (term, _) in doc.iter() {
                let slot = term as usize;
                if slot >= postings.len() {
                    postings.resize_with(slot + 1, Vec::new);
                }
                postings[slot].push(d);
                terms.push(term);
            }
            doc_terms.push(terms);
        }
        if doc_terms.is_empty() {
            return Err(DciError::Config(
                "cannot build a profile index over an empty pool".into(),
            ));
        }
        Ok(Self {
            n_docs: doc_terms.len(),
            postings,
            doc_terms,
        })
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    /// Sorted document indices containing `term`; empty for unseen terms.
    pub fn postings(&self, term: TermId) -> &[u32] {
        self.postings
            .get(term as usize)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn df(&self, term: TermId) -> usize {
        self.postings(term).len()
    }

    /// Terms present in document `doc`, in ascending id order.
    pub fn doc_terms(&self, doc: usize) -> &[TermId] {
        &self.doc_terms[doc]
    }

    /// One past the largest term id with a non-empty profile.
    pub fn term_bound(&self) -> usize {
        self.postings.len()
    }

    /// Number of documents containing both terms.
    pub fn co_occurrences(&self, a: TermId, b: TermId) -> usize {
        intersection_len(self.postings(a), self.postings(b))
    }
}

pub(crate) fn intersection_len(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Index over the pool's estimation documents: labeled followed by
/// unlabeled. Test documents never enter the index.
pub fn build_profile_index(pool: &DomainPool) -> Result<ProfileIndex> {
    ProfileIndex::from_documents(pool.labeled.iter().chain(pool.unlabeled.iter()))
}

/// Sparse tf-idf vector, entries sorted by term id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightedDoc {
    pub entries: Vec<(TermId, f64)>,
}

impl WeightedDoc {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scaled(&self, alpha: f64) -> WeightedDoc {
        WeightedDoc {
            entries: self.entries.iter().map(|&(t, w)| (t, w * alpha)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TfidfOptions {
    /// Replace raw counts by `1 + ln(count)`.
    pub sublinear_tf: bool,
}

impl TfidfOptions {
    pub fn describe(&self) -> &'static str {
        if self.sublinear_tf {
            "tf=1+ln(count); idf=ln((1+n)/(1+df))+1; no normalization"
        } else {
            "tf=count; idf=ln((1+n)/(1+df))+1; no normalization"
        }
    }
}

/// Smoothed inverse document frequency.
pub fn idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

pub fn tfidf_transform(
    docs: &[Document],
    index: &ProfileIndex,
    options: TfidfOptions,
) -> Vec<WeightedDoc> {
    let n = index.n_docs();
    docs.iter()
        .map(|doc| WeightedDoc {
            entries: doc
                .iter()
                .map(|(term, count)| {
                    let tf = if options.sublinear_tf {
                        1.0 + (count as f64).ln()
                    } else {
                        count as f64
                    };
                    (term, tf * idf(n, index.df(term)))
                })
                .collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, Label};

    fn doc(terms: &[(TermId, u32)]) -> Document {
        Document::from_counts(terms.iter().copied(), None)
    }

    #[test]
    fn vocabulary_is_dense_and_bijective() {
        let mut v = Vocabulary::new();
        assert_eq!(v.intern("a"), 0);
        assert_eq!(v.intern("b"), 1);
        assert_eq!(v.intern("a"), 0);
        assert_eq!(v.len(), 2);
        assert_eq!(v.term(1), Some("b"));
        assert_eq!(v.id("c"), None);
    }

    #[test]
    fn document_frequencies() {
        // f = 0, p = 1
        let docs = [doc(&[(0, 1)]), doc(&[(0, 2), (1, 1)]), doc(&[(1, 4)])];
        let index = ProfileIndex::from_documents(&docs).unwrap();
        assert_eq!(index.n_docs(), 3);
        assert_eq!(index.df(0), 2);
        assert_eq!(index.df(1), 2);
        assert_eq!(index.df(7), 0);
        assert!(index.postings(7).is_empty());
        assert_eq!(index.postings(1), &[1, 2]);
        assert_eq!(index.co_occurrences(0, 1), 1);
    }

    #[test]
    fn index_covers_labeled_and_unlabeled_only() {
        let labeled = vec![
            Document::from_counts([(0, 1)], Some(Label::Positive)),
            Document::from_counts([(1, 1)], Some(Label::Negative)),
        ];
        let unlabeled = (0..3).map(|_| doc(&[(2, 1)])).collect();
        let test = vec![Document::from_counts([(3, 1)], Some(Label::Positive))];
        let pool = DomainPool::new("en", "books", labeled, unlabeled, test).unwrap();
        let index = build_profile_index(&pool).unwrap();
        assert_eq!(index.n_docs(), 5);
        assert_eq!(index.df(3), 0);
    }

    #[test]
    fn empty_pool_is_rejected() {
        let err = ProfileIndex::from_documents(std::iter::empty::<&Document>()).unwrap_err();
        assert!(matches!(err, DciError::Config(_)));
    }

    #[test]
    fn idf_identity_single_doc() {
        let docs = [doc(&[(0, 1)])];
        let index = ProfileIndex::from_documents(&docs).unwrap();
        let w = tfidf_transform(&docs, &index, TfidfOptions::default());
        assert_eq!(w[0].entries, vec![(0, 1.0)]);
    }

    #[test]
    fn tfidf_matches_reference_weighting() {
        // Reference value from an independent smoothed-idf tf-idf vectorizer
        // (unnormalized) on docs ["f f", "g", "h"].
        let docs = [doc(&[(0, 2)]), doc(&[(1, 1)]), doc(&[(2, 1)])];
        let index = ProfileIndex::from_documents(&docs).unwrap();
        let w = tfidf_transform(&docs[..1], &index, TfidfOptions::default());
        approx::assert_relative_eq!(w[0].entries[0].1, 3.386294361119891, max_relative = 1e-15);
    }

    #[test]
    fn unseen_terms_get_maximal_idf_and_empty_docs_stay_empty() {
        let docs = [doc(&[(0, 1)]), doc(&[(0, 1)])];
        let index = ProfileIndex::from_documents(&docs).unwrap();
        let probe = [doc(&[(5, 1)]), doc(&[])];
        let w = tfidf_transform(&probe, &index, TfidfOptions::default());
        approx::assert_relative_eq!(w[0].entries[0].1, idf(2, 0));
        assert!(w[1].is_empty());
    }

    #[test]
    fn sublinear_tf() {
        let docs = [doc(&[(0, 3)])];
        let index = ProfileIndex::from_documents(&docs).unwrap();
        let w = tfidf_transform(&docs, &index, TfidfOptions { sublinear_tf: true });
        approx::assert_relative_eq!(w[0].entries[0].1, 1.0 + 3f64.ln());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn corpus() -> impl Strategy<Value = Vec<Vec<(u32, u32)>>> {
            prop::collection::vec(
                prop::collection::btree_map(0u32..20, 1u32..5, 0..8)
                    .prop_map(|m| m.into_iter().collect::<Vec<_>>()),
                1..30,
            )
        }

        proptest! {
            #[test]
            fn df_matches_brute_force_scan(raw in corpus()) {
                let docs: Vec<Document> = raw.iter().map(|d| doc(d)).collect();
                let index = ProfileIndex::from_documents(&docs).unwrap();
                for term in 0..20u32 {
                    let brute = raw.iter().filter(|d| d.iter().any(|&(t, _)| t == term)).count();
                    prop_assert_eq!(index.df(term), brute);
                    prop_assert!(index.postings(term).windows(2).all(|w| w[0] < w[1]));
                }
            }

            #[test]
            fn profiles_are_label_blind(raw in corpus(), flips in prop::collection::vec(any::<bool>(), 30)) {
                let plain: Vec<Document> = raw.iter().map(|d| doc(d)).collect();
                let labeled: Vec<Document> = raw
                    .iter()
                    .zip(&flips)
                    .map(|(d, &f)| Document::from_counts(d.iter().copied(), Some(if f { Label::Positive } else { Label::Negative })))
                    .collect();
                prop_assert_eq!(
                    ProfileIndex::from_documents(&plain).unwrap(),
                    ProfileIndex::from_documents(&labeled).unwrap()
                );
            }

            #[test]
            fn idf_non_increasing_in_df(n in 1usize..500, a in 0usize..500, b in 0usize..500) {
                let (lo, hi) = (a.min(b).min(n), a.max(b).min(n));
                prop_assert!(idf(n, lo) >= idf(n, hi));
            }
        }
    }
}
