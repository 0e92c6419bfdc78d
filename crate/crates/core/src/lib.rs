//! Distributional Correspondence Indexing for cross-domain and
//! cross-lingual sentiment classification.
//!
//! Documents from both domains are projected into a shared space whose
//! dimensions are pivot terms: each term is represented by how its
//! occurrence profile corresponds to every pivot's profile in its own
//! domain. A linear SVM trained on projected source documents is then
//! applied to projected target documents.

pub mod corpus;
pub mod dcf;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod manifest;
pub mod pivots;
pub mod projection;
pub mod stats;
pub mod svm;
pub mod vectorize;

pub use corpus::{build_task, Document, DomainPool, Label, PoolTag, TaskId, TransferTask, TranslationOracle};
pub use dcf::{build_correspondence_matrix, CorrespondenceMatrix, DcfKind, MatrixOptions};
pub use error::{DciError, Result};
pub use harness::{run_batch, run_dci, run_dci_detailed, run_lower, run_upper, sweep_pivots, ExperimentConfig, Method, RunResult};
pub use pivots::{select_pivots, PivotSet};
pub use projection::{project, Side, Standardizer};
pub use stats::{paired_ttest, PairedTTestResult};
pub use svm::{grid_search_c, predict, train_svm, SvmModel, SvmParams};
pub use vectorize::{ProfileIndex, TermId, TfidfOptions, Vocabulary, WeightedDoc};
