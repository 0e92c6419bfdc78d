//! Dataset manifests: a TOML file mapping (language, domain, split) to
//! processed-corpus files, plus bilingual dictionaries.
//!
//! ```toml
//! default_language = "en"
//!
//! [[pools]]
//! language = "en"
//! domain = "books"
//! labeled = "en/books/train.processed"
//! unlabeled = "en/books/unlabeled.processed"
//! test = "en/books/test.processed"        # optional
//!
//! [[dictionaries]]
//! source = "en"
//! target = "de"
//! path = "dict/en-de.txt"
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::{load_dictionary, load_processed_file, DomainPool, PoolTag, TranslationOracle};
use crate::dcf::DcfKind;
use crate::error::{DciError, Result};
use crate::harness::StandardizeFit;
use crate::vectorize::Vocabulary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default = "default_language")]
    pub default_language: String,
    #[serde(default)]
    pub pools: Vec<PoolEntry>,
    #[serde(default)]
    pub dictionaries: Vec<DictionaryEntry>,
    #[serde(default)]
    pub config: ConfigOverrides,
}

fn default_language() -> String {
    "en".to_owned()
}

/// Experiment settings a manifest may pin; command-line flags win over them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub dcf: Option<DcfKind>,
    pub n_pivots: Option<usize>,
    pub min_support: Option<usize>,
    pub standardize_docs: Option<bool>,
    pub standardize_fit: Option<StandardizeFit>,
    pub c_grid: Option<Vec<f64>>,
    pub folds: Option<usize>,
    pub seed: Option<u64>,
    pub sublinear_tf: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolEntry {
    pub language: String,
    pub domain: String,
    #[serde(default)]
    pub labeled: Option<PathBuf>,
    #[serde(default)]
    pub unlabeled: Option<PathBuf>,
    #[serde(default)]
    pub test: Option<PathBuf>,
}

impl PoolEntry {
    pub fn tag(&self) -> PoolTag {
        PoolTag::new(&self.language, &self.domain)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictionaryEntry {
    pub source: String,
    pub target: String,
    pub path: PathBuf,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        let manifest: Manifest =
            toml::from_str(text).map_err(|e| DciError::Config(format!("manifest: {e}")))?;
        let mut seen = BTreeSet::new();
        for pool in &manifest.pools {
            if pool.language.is_empty() || pool.domain.is_empty() {
                return Err(DciError::Config("manifest: pool with empty language or domain".into()));
            }
            if !seen.insert(pool.tag()) {
                return Err(DciError::Config(format!("manifest: pool {} listed twice", pool.tag())));
            }
        }
        Ok(manifest)
    }

    pub fn pool(&self, tag: &PoolTag) -> Option<&PoolEntry> {
        self.pools.iter().find(|p| p.language == tag.language && p.domain == tag.domain)
    }

    pub fn dictionary(&self, source: &str, target: &str) -> Option<&DictionaryEntry> {
        self.dictionaries
            .iter()
            .find(|d| d.source == source && d.target == target)
    }
}

/// A manifest together with the directory its relative paths resolve from.
#[derive(Debug, Clone)]
pub struct ManifestFile {
    pub manifest: Manifest,
    pub base_dir: PathBuf,
}

impl ManifestFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| DciError::io(path, e))?;
        let manifest = Manifest::parse(&text)?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { manifest, base_dir })
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Loads the named pools, sharing one vocabulary per language. Missing
    /// files surface as [`DciError::Io`] carrying the offending path.
    pub fn load_pools(&self, tags: &[PoolTag]) -> Result<BTreeMap<PoolTag, Arc<DomainPool>>> {
        let wanted: BTreeSet<&PoolTag> = tags.iter().collect();
        let mut vocabs: HashMap<String, Vocabulary> = HashMap::new();
        let mut raw = Vec::new();
        for tag in wanted {
            let entry = self
                .manifest
                .pool(tag)
                .ok_or_else(|| DciError::Config(format!("pool {tag} is not listed in the manifest")))?;
            let vocab = vocabs.entry(tag.language.clone()).or_default();
            let mut split = |p: &Option<PathBuf>| -> Result<Vec<_>> {
                match p {
                    Some(p) => load_processed_file(&self.resolve(p), vocab),
                    None => Ok(Vec::new()),
                }
            };
            let labeled = split(&entry.labeled)?;
            let unlabeled = split(&entry.unlabeled)?;
            let test = split(&entry.test)?;
            raw.push((tag.clone(), labeled, unlabeled, test));
        }
        let vocabs: HashMap<String, Arc<Vocabulary>> =
            vocabs.into_iter().map(|(k, v)| (k, Arc::new(v))).collect();
        raw.into_iter()
            .map(|(tag, labeled, unlabeled, test)| {
                let vocab = vocabs[&tag.language].clone();
                let pool = DomainPool::with_vocab(tag.clone(), vocab, labeled, unlabeled, test)?;
                Ok((tag, Arc::new(pool)))
            })
            .collect()
    }

    pub fn load_dictionary(&self, source: &str, target: &str) -> Result<Option<TranslationOracle>> {
        match self.manifest.dictionary(source, target) {
            Some(entry) => load_dictionary(&self.resolve(&entry.path)).map(Some),
            None => Ok(None),
        }
    }
}
