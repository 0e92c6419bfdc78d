//! Processed-corpus documents, domain pools, bilingual dictionaries and
//! transfer tasks.
//!
//! The on-disk document format is one review per line, made of
//! whitespace-separated `token:count` fields and an optional trailing
//! `#label#:positive|negative|unlabeled` field. Tokens are opaque; they may
//! themselves contain colons, so each field is split at its last colon.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{DciError, Result};
use crate::vectorize::{TermId, Vocabulary};

/// Default pivot count for tasks where source and target share a language.
pub const DEFAULT_PIVOTS_CROSS_DOMAIN: usize = 1000;
/// Default pivot count for cross-lingual tasks; each pivot needs a translation.
pub const DEFAULT_PIVOTS_CROSS_LINGUAL: usize = 450;

const LABEL_FIELD: &str = "#label#";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    /// `+1.0` for positive, `-1.0` for negative.
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Positive => "positive",
            Label::Negative => "negative",
        }
    }
}

/// Bag of term counts with an optional label. Entries are sorted by term id
/// and every stored count is at least one.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Document {
    terms: Vec<(TermId, u32)>,
    pub label: Option<Label>,
}

impl Document {
    /// Builds a document from `(term, count)` pairs. Repeated terms are
    /// summed and zero counts dropped.
    pub fn from_counts<I>(counts: I, label: Option<Label>) -> Self
    where
        I: IntoIterator<Item = (TermId, u32)>,
    {
        let mut terms: Vec<(TermId, u32)> = counts.into_iter().filter(|&(_, c)| c > 0).collect();
        terms.sort_unstable_by_key(|&(t, _)| t);
        terms.dedup_by(|next, kept| {
            if next.0 == kept.0 {
                kept.1 += next.1;
                true
            } else {
                false
            }
        });
        Self { terms, label }
    }

    pub fn iter(&self) -> impl Iterator<Item = (TermId, u32)> + '_ {
        self.terms.iter().copied()
    }

    pub fn count(&self, term: TermId) -> u32 {
        self.terms
            .binary_search_by_key(&term, |&(t, _)| t)
            .map(|i| self.terms[i].1)
            .unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Parses one line of the processed format. Blank lines yield `Ok(None)`.
/// `line_no` is only used for error messages.
pub fn parse_processed_line(
    line: &str,
    line_no: usize,
    vocab: &mut Vocabulary,
) -> Result<Option<Document>> {
    if line.trim().is_empty() {
        return Ok(None);
    }
    let mut counts = Vec::new();
    let mut label = None;
    for field in line.split_whitespace() {
        let (token, value) = field
            .rsplit_once(':')
            .ok_or_else(|| DciError::parse(line_no, format!("field `{field}` has no `:count`")))?;
        if token == LABEL_FIELD {
            label = match value {
                "positive" => Some(Label::Positive),
                "negative" => Some(Label::Negative),
                "unlabeled" => None,
                other => {
                    return Err(DciError::parse(line_no, format!("unknown label `{other}`")));
                }
            };
            continue;
        }
        if token.is_empty() {
            return Err(DciError::parse(line_no, format!("empty token in `{field}`")));
        }
        let count: u32 = value.parse().map_err(|_| {
            DciError::parse(line_no, format!("count `{value}` in `{field}` is not a non-negative integer"))
        })?;
        if count > 0 {
            counts.push((vocab.intern(token), count));
        }
    }
    Ok(Some(Document::from_counts(counts, label)))
}

/// Parses a whole processed file's contents, one document per non-blank line.
pub fn parse_processed(text: &str, vocab: &mut Vocabulary) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(doc) = parse_processed_line(line, i + 1, vocab)? {
            docs.push(doc);
        }
    }
    Ok(docs)
}

pub fn load_processed_file(path: &Path, vocab: &mut Vocabulary) -> Result<Vec<Document>> {
    let text = std::fs::read_to_string(path).map_err(|e| DciError::io(path, e))?;
    parse_processed(&text, vocab)
}

/// Serializes documents back to the processed line format.
pub fn write_processed(docs: &[Document], vocab: &Vocabulary) -> String {
    let mut out = String::new();
    for doc in docs {
        let mut first = true;
        for (term, count) in doc.iter() {
            if !first {
                out.push(' ');
            }
            first = false;
            let token = vocab.term(term).expect("document term outside vocabulary");
            out.push_str(token);
            out.push(':');
            out.push_str(&count.to_string());
        }
        // An empty unlabeled document would otherwise be a blank line, which
        // the parser skips.
        let label = match doc.label {
            Some(label) => Some(label.as_str()),
            None if first => Some("unlabeled"),
            None => None,
        };
        if let Some(label) = label {
            if !first {
                out.push(' ');
            }
            out.push_str(LABEL_FIELD);
            out.push(':');
            out.push_str(label);
        }
        out.push('\n');
    }
    out
}

/// Identifies one side of a task: a (language, domain) pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PoolTag {
    pub language: String,
    pub domain: String,
}

impl PoolTag {
    pub fn new(language: impl Into<String>, domain: impl Into<String>) -> Self {
        Self {
            language: language.into(),
            domain: domain.into(),
        }
    }

    /// Parses `lang-domain`, or a bare `domain` in `default_language`.
    pub fn parse(tag: &str, default_language: &str) -> Result<Self> {
        let tag = tag.trim();
        let (language, domain) = match tag.split_once('-') {
            Some((l, d)) => (l, d),
            None => (default_language, tag),
        };
        if language.is_empty() || domain.is_empty() {
            return Err(DciError::Config(format!("malformed pool tag `{tag}`")));
        }
        Ok(Self::new(language, domain))
    }
}

impl fmt::Display for PoolTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.language, self.domain)
    }
}

/// The documents of one (language, domain) side.
#[derive(Debug, Clone)]
pub struct DomainPool {
    pub tag: PoolTag,
    pub vocab: Arc<Vocabulary>,
    pub labeled: Vec<Document>,
    pub unlabeled: Vec<Document>,
    pub test: Vec<Document>,
}

impl DomainPool {
    /// Builds a pool over a fresh vocabulary that covers every term id used
    /// by the documents. Term ids are expected to be dense; names are
    /// synthesized as `t<id>` when unknown.
    pub fn new(
        language: &str,
        domain: &str,
        labeled: Vec<Document>,
        unlabeled: Vec<Document>,
        test: Vec<Document>,
    ) -> Result<Self> {
        let bound = labeled
            .iter()
            .chain(&unlabeled)
            .chain(&test)
            .flat_map(|d| d.iter().map(|(t, _)| t as usize + 1))
            .max()
            .unwrap_or(0);
        let mut vocab = Vocabulary::new();
        for id in 0..bound {
            vocab.intern(&format!("t{id}"));
        }
        Self::with_vocab(PoolTag::new(language, domain), Arc::new(vocab), labeled, unlabeled, test)
    }

    pub fn with_vocab(
        tag: PoolTag,
        vocab: Arc<Vocabulary>,
        labeled: Vec<Document>,
        unlabeled: Vec<Document>,
        test: Vec<Document>,
    ) -> Result<Self> {
        if let Some(i) = labeled.iter().position(|d| d.label.is_none()) {
            return Err(DciError::Config(format!(
                "pool {tag}: labeled document #{} has no label",
                i + 1
            )));
        }
        let bound = vocab.len();
        let out_of_range = labeled
            .iter()
            .chain(&unlabeled)
            .chain(&test)
            .flat_map(|d| d.iter())
            .any(|(t, _)| t as usize >= bound);
        if out_of_range {
            return Err(DciError::Config(format!(
                "pool {tag}: document term outside its vocabulary"
            )));
        }
        Ok(Self {
            tag,
            vocab,
            labeled,
            unlabeled,
            test,
        })
    }

    pub fn language(&self) -> &str {
        &self.tag.language
    }

    pub fn domain(&self) -> &str {
        &self.tag.domain
    }
}

/// Deterministic word-translation oracle; one target term per source term.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TranslationOracle {
    entries: HashMap<String, String>,
    duplicates: usize,
}

impl TranslationOracle {
    pub fn from_pairs<I, S, T>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: Into<String>,
    {
        let mut oracle = Self::default();
        for (s, t) in pairs {
            oracle.insert(s.into(), t.into());
        }
        oracle
    }

    fn insert(&mut self, source: String, target: String) {
        use std::collections::hash_map::Entry;
        match self.entries.entry(source) {
            Entry::Occupied(_) => self.duplicates += 1,
            Entry::Vacant(v) => {
                v.insert(target);
            }
        }
    }

    pub fn translate(&self, term: &str) -> Option<&str> {
        self.entries.get(term).map(String::as_str)
    }

    /// Entries ignored because their source term was already mapped.
    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Parses `source<TAB>target` lines; lines without a tab fall back to
/// whitespace separation. The first mapping of a source term wins.
pub fn parse_dictionary(text: &str) -> Result<TranslationOracle> {
    let mut oracle = TranslationOracle::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let pair = match line.split_once('\t') {
            Some((s, t)) => Some((s.trim(), t.trim())),
            None => {
                let mut it = line.split_whitespace();
                it.next().zip(it.next())
            }
        };
        match pair {
            Some((s, t)) if !s.is_empty() && !t.is_empty() => oracle.insert(s.to_owned(), t.to_owned()),
            _ => {
                return Err(DciError::parse(i + 1, "dictionary line needs a source and a target term"));
            }
        }
    }
    if oracle.duplicates > 0 {
        log::warn!("dictionary: ignored {} duplicate entries", oracle.duplicates);
    }
    Ok(oracle)
}

pub fn load_dictionary(path: &Path) -> Result<TranslationOracle> {
    let text = std::fs::read_to_string(path).map_err(|e| DciError::io(path, e))?;
    parse_dictionary(&text)
}

/// A source → target adaptation problem.
#[derive(Debug, Clone)]
pub struct TransferTask {
    pub source: Arc<DomainPool>,
    pub target: Arc<DomainPool>,
    pub dictionary: Option<Arc<TranslationOracle>>,
    pub n_pivots: usize,
}

impl TransferTask {
    pub fn is_cross_lingual(&self) -> bool {
        self.source.language() != self.target.language()
    }

    pub fn id(&self) -> TaskId {
        TaskId {
            source: self.source.tag.to_string(),
            target: self.target.tag.to_string(),
        }
    }

    /// Labeled target documents used for scoring. Pools without a dedicated
    /// test split (one labeled set per domain) are scored on their labeled set.
    pub fn target_test(&self) -> &[Document] {
        if self.target.test.is_empty() {
            &self.target.labeled
        } else {
            &self.target.test
        }
    }

    /// Target documents available for unsupervised estimation; never
    /// overlaps [`Self::target_test`].
    pub fn target_estimation(&self) -> Vec<&Document> {
        if self.target.test.is_empty() {
            self.target.unlabeled.iter().collect()
        } else {
            self.target.labeled.iter().chain(&self.target.unlabeled).collect()
        }
    }

    /// Labeled target documents that are not test documents (the in-domain
    /// training split, when the dataset provides one).
    pub fn target_training(&self) -> &[Document] {
        if self.target.test.is_empty() {
            &[]
        } else {
            &self.target.labeled
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TaskId {
    pub source: String,
    pub target: String,
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.source, self.target)
    }
}

/// Assembles a task. `n_pivots == 0` selects the default for the task kind.
pub fn build_task(
    source: Arc<DomainPool>,
    target: Arc<DomainPool>,
    dictionary: Option<Arc<TranslationOracle>>,
    n_pivots: usize,
) -> Result<TransferTask> {
    let cross_lingual = source.language() != target.language();
    if cross_lingual && dictionary.is_none() {
        return Err(DciError::Config(format!(
            "task {}:{} is cross-lingual ({} → {}) and needs a bilingual dictionary",
            source.tag,
            target.tag,
            source.language(),
            target.language()
        )));
    }
    if !cross_lingual && !Arc::ptr_eq(&source.vocab, &target.vocab) && source.vocab != target.vocab {
        return Err(DciError::Config(format!(
            "pools {} and {} share a language but not a vocabulary",
            source.tag, target.tag
        )));
    }
    if source.labeled.is_empty() {
        return Err(DciError::Config(format!("source pool {} has no labeled documents", source.tag)));
    }
    let n_pivots = match n_pivots {
        0 if cross_lingual => DEFAULT_PIVOTS_CROSS_LINGUAL,
        0 => DEFAULT_PIVOTS_CROSS_DOMAIN,
        n => n,
    };
    Ok(TransferTask {
        source,
        target,
        dictionary,
        n_pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(line: &str, vocab: &mut Vocabulary) -> Result<Option<Document>> {
        parse_processed_line(line, 1, vocab)
    }

    #[test]
    fn labeled_line() {
        let mut v = Vocabulary::new();
        let d = one("great:2 plot:1 #label#:positive", &mut v).unwrap().unwrap();
        assert_eq!(d.label, Some(Label::Positive));
        assert_eq!(d.count(v.id("great").unwrap()), 2);
        assert_eq!(d.count(v.id("plot").unwrap()), 1);
        assert_eq!(d.len(), 2);
        assert_eq!(v.id("#label#"), None);
        assert_eq!(v.len(), 2);
    }

    #[test]
    fn unlabeled_line() {
        let mut v = Vocabulary::new();
        let d = one("bien:1 film:3", &mut v).unwrap().unwrap();
        assert_eq!(d.label, None);
        assert_eq!(d.count(v.id("film").unwrap()), 3);
        let d = one("bien:1 #label#:unlabeled", &mut v).unwrap().unwrap();
        assert_eq!(d.label, None);
    }

    #[test]
    fn malformed_fields_name_the_line() {
        let mut v = Vocabulary::new();
        let text = "ok:1\nbroken:abc\n";
        match parse_processed(text, &mut v).unwrap_err() {
            DciError::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e:?}"),
        }
        assert!(matches!(one("nocolon", &mut v), Err(DciError::Parse { line: 1, .. })));
        assert!(matches!(one("x:-1", &mut v), Err(DciError::Parse { .. })));
        assert!(matches!(one("x:1 #label#:meh", &mut v), Err(DciError::Parse { .. })));
    }

    #[test]
    fn tokens_may_contain_colons_and_bigrams() {
        let mut v = Vocabulary::new();
        let d = one(":):3 not_good:1", &mut v).unwrap().unwrap();
        assert_eq!(d.count(v.id(":)").unwrap()), 3);
        assert_eq!(d.count(v.id("not_good").unwrap()), 1);
    }

    #[test]
    fn repeated_tokens_are_summed() {
        let mut v = Vocabulary::new();
        let d = one("a:1 a:2 b:0", &mut v).unwrap().unwrap();
        assert_eq!(d.count(v.id("a").unwrap()), 3);
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn blank_lines_are_skipped() {
        let mut v = Vocabulary::new();
        let docs = parse_processed("a:1\n\n   \nb:1 #label#:negative\n", &mut v).unwrap();
        assert_eq!(docs.len(), 2);
    }

    #[test]
    fn loading_is_deterministic() {
        let text = "z:1 y:2 #label#:positive\ny:1 x:4 #label#:negative\n";
        let mut v = Vocabulary::new();
        let a = parse_processed(text, &mut v).unwrap();
        let b = parse_processed(text, &mut v).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dictionary_tab_and_space_forms() {
        let d = parse_dictionary("good\tgut\nbad schlecht\n").unwrap();
        assert_eq!(d.translate("good"), Some("gut"));
        assert_eq!(d.translate("bad"), Some("schlecht"));
        assert_eq!(d.translate("xyzzy"), None);
    }

    #[test]
    fn dictionary_first_entry_wins() {
        let d = parse_dictionary("good gut\ngood prima\n").unwrap();
        assert_eq!(d.translate("good"), Some("gut"));
        assert_eq!(d.duplicates(), 1);
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn dictionary_short_line() {
        match parse_dictionary("a b\nlonely\n").unwrap_err() {
            DciError::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn pool_tags() {
        assert_eq!(PoolTag::parse("books", "en").unwrap(), PoolTag::new("en", "books"));
        assert_eq!(PoolTag::parse("de-books", "en").unwrap(), PoolTag::new("de", "books"));
        assert!(PoolTag::parse("-books", "en").is_err());
    }

    fn labeled_pool(lang: &str, domain: &str, vocab: Arc<Vocabulary>) -> Arc<DomainPool> {
        let docs = vec![
            Document::from_counts([(0, 1)], Some(Label::Positive)),
            Document::from_counts([(1, 1)], Some(Label::Negative)),
        ];
        Arc::new(DomainPool::with_vocab(PoolTag::new(lang, domain), vocab, docs, vec![], vec![]).unwrap())
    }

    #[test]
    fn default_pivot_counts_by_task_kind() {
        let mut v = Vocabulary::new();
        v.intern("a");
        v.intern("b");
        let en = Arc::new(v.clone());
        let de = Arc::new(v);
        let books = labeled_pool("en", "books", en.clone());
        let dvd = labeled_pool("en", "dvd", en);
        let de_books = labeled_pool("de", "books", de);

        let t = build_task(books.clone(), dvd, None, 0).unwrap();
        assert_eq!(t.n_pivots, 1000);
        assert!(!t.is_cross_lingual());

        let dict = Arc::new(TranslationOracle::from_pairs([("a", "a")]));
        let t = build_task(books.clone(), de_books.clone(), Some(dict), 0).unwrap();
        assert_eq!(t.n_pivots, 450);

        let err = build_task(books.clone(), de_books, None, 0).unwrap_err();
        assert!(matches!(err, DciError::Config(_)));

        let dvd = labeled_pool("en", "dvd", books.vocab.clone());
        assert_eq!(build_task(books, dvd, None, 37).unwrap().n_pivots, 37);
    }

    #[test]
    fn labeled_split_requires_labels() {
        let docs = vec![Document::from_counts([(0, 1)], None)];
        assert!(DomainPool::new("en", "x", docs, vec![], vec![]).is_err());
    }

    #[test]
    fn mds_style_target_scores_on_labeled_set() {
        let mut v = Vocabulary::new();
        v.intern("a");
        v.intern("b");
        let v = Arc::new(v);
        let src = labeled_pool("en", "books", v.clone());
        let tgt = Arc::new(
            DomainPool::with_vocab(
                PoolTag::new("en", "dvd"),
                v,
                vec![
                    Document::from_counts([(0, 1)], Some(Label::Positive)),
                    Document::from_counts([(1, 1)], Some(Label::Negative)),
                ],
                vec![Document::from_counts([(0, 2)], None)],
                vec![],
            )
            .unwrap(),
        );
        let task = build_task(src, tgt, None, 0).unwrap();
        assert_eq!(task.target_test().len(), 2);
        assert_eq!(task.target_estimation().len(), 1);
        assert!(task.target_training().is_empty());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn token() -> impl Strategy<Value = String> {
            "[a-z_:#]{1,6}".prop_filter("label field", |t| !t.starts_with("#label#"))
        }

        fn line() -> impl Strategy<Value = (Vec<(String, u32)>, Option<bool>)> {
            (
                prop::collection::vec((token(), 0u32..20), 0..8),
                prop::option::of(any::<bool>()),
            )
        }

        proptest! {
            #[test]
            fn serialize_then_reload_is_term_identical(lines in prop::collection::vec(line(), 1..10)) {
                let text: String = lines
                    .iter()
                    .map(|(fields, label)| {
                        let mut parts: Vec<String> = fields.iter().map(|(t, c)| format!("{t}:{c}")).collect();
                        if let Some(pos) = label {
                            parts.push(format!("#label#:{}", if *pos { "positive" } else { "negative" }));
                        }
                        parts.join(" ") + "\n"
                    })
                    .collect();
                let mut v1 = Vocabulary::new();
                let first = parse_processed(&text, &mut v1).unwrap();
                let written = write_processed(&first, &v1);
                let mut v2 = Vocabulary::new();
                let second = parse_processed(&written, &mut v2).unwrap();
                prop_assert_eq!(first.len(), second.len());
                for (a, b) in first.iter().zip(&second) {
                    prop_assert_eq!(a.label, b.label);
                    let ta: Vec<_> = a.iter().map(|(t, c)| (v1.term(t).unwrap(), c)).collect();
                    let mut tb: Vec<_> = b.iter().map(|(t, c)| (v2.term(t).unwrap(), c)).collect();
                    let mut ta = ta;
                    ta.sort();
                    tb.sort();
                    prop_assert_eq!(ta, tb);
                }
                prop_assert!(v1.id("#label#").is_none());
            }
        }
    }
}
