//! Seeded synthetic transfer tasks with a known pivot structure.
//!
//! Both domains share a small set of weakly polar terms (the pivot
//! candidates) and each has its own strongly polar terms that never occur
//! in the other domain. A classifier trained on source features alone only
//! sees the shared terms at test time; a method that maps target-specific
//! terms onto the shared ones through co-occurrence can recover more.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{build_task, Document, DomainPool, Label, PoolTag, TransferTask, TranslationOracle};
use crate::error::{DciError, Result};
use crate::vectorize::{TermId, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSizes {
    pub labeled: usize,
    pub unlabeled: usize,
    pub test: usize,
}

impl Default for SplitSizes {
    fn default() -> Self {
        Self {
            labeled: 200,
            unlabeled: 600,
            test: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    /// Shared polar terms per polarity.
    pub shared_terms: usize,
    /// Domain-specific polar terms per polarity and domain.
    pub domain_terms: usize,
    pub noise_terms: usize,
    /// Shared terms per polarity whose polarity is reversed in the target
    /// domain (words whose sentiment depends on the product).
    pub flipped_terms: usize,
    /// Occurrence probability of a shared term in a document of the same /
    /// opposite polarity.
    pub shared_p: (f64, f64),
    pub domain_p: (f64, f64),
    pub noise_p: f64,
    /// Puts the target in a second language reached through a dictionary
    /// covering the shared and noise terms.
    pub cross_lingual: bool,
    /// Passed to the task; 0 picks the default.
    pub n_pivots: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            shared_terms: 10,
            domain_terms: 10,
            noise_terms: 40,
            flipped_terms: 2,
            shared_p: (0.12, 0.04),
            domain_p: (0.3, 0.03),
            noise_p: 0.1,
            cross_lingual: false,
            n_pivots: 0,
        }
    }
}

struct Layout {
    shared: [Vec<TermId>; 2],
    own: [Vec<TermId>; 2],
    noise: Vec<TermId>,
}

fn intern_all(vocab: &mut Vocabulary, prefix: &str, n: usize) -> Vec<TermId> {
    (0..n).map(|k| vocab.intern(&format!("{prefix}{k}"))).collect()
}

fn layout(vocab: &mut Vocabulary, lang: &str, domain: &str, spec: &SyntheticSpec, flip: usize) -> Layout {
    let mut good = intern_all(vocab, &format!("{lang}_good"), spec.shared_terms);
    let mut bad = intern_all(vocab, &format!("{lang}_bad"), spec.shared_terms);
    for k in 0..flip {
        std::mem::swap(&mut good[k], &mut bad[k]);
    }
    Layout {
        shared: [good, bad],
        own: [
            intern_all(vocab, &format!("{domain}_pos"), spec.domain_terms),
            intern_all(vocab, &format!("{domain}_neg"), spec.domain_terms),
        ],
        noise: intern_all(vocab, &format!("{lang}_word"), spec.noise_terms),
    }
}

fn sample_doc(rng: &mut ChaCha8Rng, layout: &Layout, spec: &SyntheticSpec, label: Label) -> Document {
    let polarity = usize::from(label == Label::Negative);
    let mut counts = Vec::new();
    let mut draw = |terms: &[TermId], p: f64, rng: &mut ChaCha8Rng| {
        for &t in terms {
            if rng.random_bool(p) {
                counts.push((t, rng.random_range(1..=2)));
            }
        }
    };
    draw(&layout.shared[polarity], spec.shared_p.0, rng);
    draw(&layout.shared[1 - polarity], spec.shared_p.1, rng);
    draw(&layout.own[polarity], spec.domain_p.0, rng);
    draw(&layout.own[1 - polarity], spec.domain_p.1, rng);
    draw(&layout.noise, spec.noise_p, rng);
    Document::from_counts(counts, Some(label))
}

/// Balanced labeled documents (alternating labels).
fn sample_split(rng: &mut ChaCha8Rng, layout: &Layout, spec: &SyntheticSpec, n: usize, labeled: bool) -> Vec<Document> {
    (0..n)
        .map(|i| {
            let label = if i % 2 == 0 { Label::Positive } else { Label::Negative };
            let mut d = sample_doc(rng, layout, spec, label);
            if !labeled {
                d.label = None;
            }
            d
        })
        .collect()
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(DciError::Config(format!("synthetic {name} probability {p} outside [0, 1]")))
    }
}

/// Generates a source → target task. Identical seeds give identical tasks;
/// pool tags carry the seed so tasks from different seeds stay distinct.
pub fn make_synthetic_task(seed: u64, sizes: SplitSizes, spec: &SyntheticSpec) -> Result<TransferTask> {
    if spec.shared_terms == 0 {
        return Err(DciError::Config(
            "synthetic task needs shared terms; without them no pivot exists".into(),
        ));
    }
    if spec.flipped_terms > spec.shared_terms {
        return Err(DciError::Config("more flipped terms than shared terms".into()));
    }
    if sizes.labeled < 2 || sizes.test == 0 {
        return Err(DciError::Config("synthetic task needs labeled and test documents".into()));
    }
    for (name, p) in [
        ("shared", spec.shared_p.0),
        ("shared", spec.shared_p.1),
        ("domain", spec.domain_p.0),
        ("domain", spec.domain_p.1),
        ("noise", spec.noise_p),
    ] {
        check_probability(name, p)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (src_lang, tgt_lang) = if spec.cross_lingual { ("en", "xx") } else { ("en", "en") };

    let mut src_vocab = Vocabulary::new();
    let src_layout = layout(&mut src_vocab, src_lang, "alpha", spec, 0);
    let mut tgt_vocab_own = Vocabulary::new();
    let tgt_layout = if spec.cross_lingual {
        layout(&mut tgt_vocab_own, tgt_lang, "beta", spec, spec.flipped_terms)
    } else {
        layout(&mut src_vocab, tgt_lang, "beta", spec, spec.flipped_terms)
    };

    let src_docs = [
        sample_split(&mut rng, &src_layout, spec, sizes.labeled, true),
        sample_split(&mut rng, &src_layout, spec, sizes.unlabeled, false),
    ];
    let tgt_docs = [
        sample_split(&mut rng, &tgt_layout, spec, sizes.labeled, true),
        sample_split(&mut rng, &tgt_layout, spec, sizes.unlabeled, false),
        sample_split(&mut rng, &tgt_layout, spec, sizes.test, true),
    ];

    let src_vocab = Arc::new(src_vocab);
    let tgt_vocab = if spec.cross_lingual {
        Arc::new(tgt_vocab_own)
    } else {
        Arc::clone(&src_vocab)
    };
    let [s_lab, s_unl] = src_docs;
    let [t_lab, t_unl, t_test] = tgt_docs;
    let source = DomainPool::with_vocab(PoolTag::new(src_lang, format!("alpha{seed}")), Arc::clone(&src_vocab), s_lab, s_unl, Vec::new())?;
    let target = DomainPool::with_vocab(PoolTag::new(tgt_lang, format!("beta{seed}")), Arc::clone(&tgt_vocab), t_lab, t_unl, t_test)?;

    // Shared and noise words translate by name; domain words have no entry.
    let dictionary = spec.cross_lingual.then(|| {
        let pairs: Vec<(String, String)> = src_vocab
            .iter()
            .filter_map(|(_, term)| {
                let rest = term.strip_prefix("en_")?;
                let translated = format!("{tgt_lang}_{rest}");
                tgt_vocab.id(&translated).map(|_| (term.to_owned(), translated))
            })
            .collect();
        Arc::new(TranslationOracle::from_pairs(pairs))
    });
    build_task(Arc::new(source), Arc::new(target), dictionary, spec.n_pivots)
}
