//! Pivot selection: frequent-on-both-sides terms ranked by their mutual
//! information with the source label.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, DomainPool, Label, TransferTask};
use crate::error::{DciError, Result};
use crate::vectorize::{ProfileIndex, TermId, Vocabulary};

pub const DEFAULT_MIN_SUPPORT: usize = 10;

/// Ordered (source term, target term) pairs with their MI scores in bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PivotSet {
    pub pairs: Vec<(TermId, TermId)>,
    pub scores: Vec<f64>,
    pub requested: usize,
}

impl PivotSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// How many requested pivots could not be supplied.
    pub fn shortfall(&self) -> usize {
        self.requested.saturating_sub(self.pairs.len())
    }

    pub fn source_terms(&self) -> Vec<TermId> {
        self.pairs.iter().map(|&(s, _)| s).collect()
    }

    pub fn target_terms(&self) -> Vec<TermId> {
        self.pairs.iter().map(|&(_, t)| t).collect()
    }

    /// The top `n` pivots. Selection is a prefix of the ranking, so this is
    /// what [`select_pivots`] returns when asked for `n`.
    pub fn truncated(&self, n: usize) -> PivotSet {
        let k = n.min(self.pairs.len());
        PivotSet {
            pairs: self.pairs[..k].to_vec(),
            scores: self.scores[..k].to_vec(),
            requested: n,
        }
    }
}

/// Presence/label contingency counts of every term over a labeled set.
#[derive(Debug, Clone)]
pub struct LabelCounts {
    pos_docs: usize,
    neg_docs: usize,
    present_pos: Vec<u32>,
    present_neg: Vec<u32>,
}

impl LabelCounts {
    pub fn new(labeled: &[Document], vocab_size: usize) -> Result<Self> {
        if labeled.is_empty() {
            return Err(DciError::Argument("no labeled documents to score terms on".into()));
        }
        let mut counts = Self {
            pos_docs: 0,
            neg_docs: 0,
            present_pos: vec![0; vocab_size],
            present_neg: vec![0; vocab_size],
        };
        for doc in labeled {
            let (docs, present) = match doc.label {
                Some(Label::Positive) => (&mut counts.pos_docs, &mut counts.present_pos),
                Some(Label::Negative) => (&mut counts.neg_docs, &mut counts.present_neg),
                None => return Err(DciError::Argument("unlabeled document in labeled set".into())),
            };
            *docs += 1;
            for (t, _) in doc.iter() {
                let slot = present
                    .get_mut(t as usize)
                    .ok_or_else(|| DciError::Argument(format!("term id {t} outside vocabulary")))?;
                *slot += 1;
            }
        }
        Ok(counts)
    }

    pub fn mutual_information(&self, term: TermId) -> Result<f64> {
        let t = term as usize;
        if t >= self.present_pos.len() {
            return Err(DciError::Argument(format!(
                "term id {term} outside vocabulary of size {}",
                self.present_pos.len()
            )));
        }
        let tp = self.present_pos[t] as usize;
        let tn = self.present_neg[t] as usize;
        Ok(mi_bits(tp, tn, self.pos_docs - tp, self.neg_docs - tn))
    }
}

/// I(F;Y) in bits from the 2×2 table: feature present/absent × positive/negative.
fn mi_bits(present_pos: usize, present_neg: usize, absent_pos: usize, absent_neg: usize) -> f64 {
    let n = (present_pos + present_neg + absent_pos + absent_neg) as f64;
    let f1 = (present_pos + present_neg) as f64;
    let f0 = (absent_pos + absent_neg) as f64;
    let y1 = (present_pos + absent_pos) as f64;
    let y0 = (present_neg + absent_neg) as f64;
    let cell = |joint: usize, fm: f64, ym: f64| {
        if joint == 0 {
            0.0
        } else {
            let j = joint as f64;
            (j / n) * (j * n / (fm * ym)).log2()
        }
    };
    let mi = cell(present_pos, f1, y1)
        + cell(present_neg, f1, y0)
        + cell(absent_pos, f0, y1)
        + cell(absent_neg, f0, y0);
    mi.clamp(0.0, 1.0)
}

/// Mutual information between the presence of `term` and the label over the
/// pool's labeled documents.
pub fn mutual_information(term: TermId, pool: &DomainPool) -> Result<f64> {
    LabelCounts::new(&pool.labeled, pool.vocab.len())?.mutual_information(term)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PivotOptions {
    /// Minimum document frequency on each side.
    pub min_support: usize,
}

impl Default for PivotOptions {
    fn default() -> Self {
        Self {
            min_support: DEFAULT_MIN_SUPPORT,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    source: TermId,
    target: TermId,
    mi: f64,
    source_df: usize,
}

fn rank(a: &Candidate, b: &Candidate) -> Ordering {
    b.mi.total_cmp(&a.mi)
        .then(b.source_df.cmp(&a.source_df))
        .then(a.source.cmp(&b.source))
}

/// Selects up to `task.n_pivots` pivots. Returns fewer, with
/// [`PivotSet::shortfall`] set, when not enough candidates pass the support
/// thresholds.
pub fn select_pivots(
    task: &TransferTask,
    source_index: &ProfileIndex,
    target_index: &ProfileIndex,
    options: PivotOptions,
) -> Result<PivotSet> {
    let source_vocab = &task.source.vocab;
    let target_vocab = &task.target.vocab;
    let translate: Box<dyn Fn(TermId) -> Option<TermId> + '_> = if task.is_cross_lingual() {
        let dict = task.dictionary.as_deref().ok_or_else(|| {
            DciError::Config("cross-lingual pivot selection needs a dictionary".into())
        })?;
        Box::new(move |s| {
            let term = source_vocab.term(s)?;
            target_vocab.id(dict.translate(term)?)
        })
    } else {
        Box::new(Some)
    };

    let counts = LabelCounts::new(&task.source.labeled, source_vocab.len())?;
    let bound = source_index.term_bound().min(source_vocab.len());
    let mut candidates = Vec::new();
    for s in 0..bound as TermId {
        let source_df = source_index.df(s);
        if source_df < options.min_support {
            continue;
        }
        let Some(t) = translate(s) else { continue };
        if target_index.df(t) < options.min_support {
            continue;
        }
        candidates.push(Candidate {
            source: s,
            target: t,
            mi: counts.mutual_information(s)?,
            source_df,
        });
    }
    rank_candidates(candidates, task.n_pivots)
}

fn rank_candidates(mut candidates: Vec<Candidate>, requested: usize) -> Result<PivotSet> {
    if candidates.is_empty() {
        return Err(DciError::Task(
            "no pivot candidates satisfy the support thresholds; lower min_support".into(),
        ));
    }
    candidates.sort_by(rank);
    let mut used_targets = std::collections::HashSet::new();
    let mut set = PivotSet {
        pairs: Vec::new(),
        scores: Vec::new(),
        requested,
    };
    for c in candidates {
        if set.pairs.len() == requested {
            break;
        }
        // Two source terms may translate to the same target term; keep the better one.
        if !used_targets.insert(c.target) {
            continue;
        }
        set.pairs.push((c.source, c.target));
        set.scores.push(c.mi);
    }
    if set.shortfall() > 0 {
        log::info!(
            "pivot selection: {} candidates for {} requested pivots",
            set.len(),
            requested
        );
    }
    Ok(set)
}

/// `rank<TAB>source_term<TAB>target_term<TAB>mi_score`, one pivot per line,
/// rank starting at 1.
pub fn write_pivot_dump(pivots: &PivotSet, source_vocab: &Vocabulary, target_vocab: &Vocabulary) -> String {
    let mut out = String::new();
    for (i, (&(s, t), mi)) in pivots.pairs.iter().zip(&pivots.scores).enumerate() {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            i + 1,
            source_vocab.term(s).unwrap_or("?"),
            target_vocab.term(t).unwrap_or("?"),
            mi
        );
    }
    out
}
