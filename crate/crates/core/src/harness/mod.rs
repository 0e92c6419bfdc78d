//! Experiment orchestration: DCI runs, Lower/Upper baselines, pivot sweeps
//! and batches, with per-phase wall-clock timing.

mod report;
mod synthetic;

pub use report::{
    parse_report, render_report, render_sweep_csv, render_timings_csv, Report, ReportFormat,
    ReportMetadata, ResultRecord,
};
pub use synthetic::{make_synthetic_task, SplitSizes, SyntheticSpec};

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, TaskId, TransferTask};
use crate::dcf::{build_correspondence_matrix, DcfKind, MatrixOptions};
use crate::error::{DciError, Result};
use crate::linalg::{l2_normalize, RowMatrix, SparseMatrix};
use crate::pivots::{select_pivots, PivotOptions, PivotSet, DEFAULT_MIN_SUPPORT};
use crate::projection::{project, Side, Standardizer};
use crate::svm::{grid_search_c, predict, stratified_folds, GridSearchOptions, SvmModel};
use crate::vectorize::{build_profile_index, tfidf_transform, ProfileIndex, TermId, TfidfOptions, WeightedDoc};

/// Pivot counts swept by default.
pub const DEFAULT_SWEEP_GRID: [usize; 11] = [10, 25, 50, 100, 250, 500, 1000, 1500, 2000, 2500, 5000];
/// Sweeps over cross-lingual tasks stop here.
pub const CROSS_LINGUAL_SWEEP_CAP: usize = 1500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Lower,
    Upper,
    #[serde(rename = "DCI-Linear")]
    DciLinear,
    #[serde(rename = "DCI-Cosine")]
    DciCosine,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Lower, Method::Upper, Method::DciLinear, Method::DciCosine];

    pub fn dci(kind: DcfKind) -> Self {
        match kind {
            DcfKind::Linear => Method::DciLinear,
            DcfKind::Cosine => Method::DciCosine,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Lower => "Lower",
            Method::Upper => "Upper",
            Method::DciLinear => "DCI-Linear",
            Method::DciCosine => "DCI-Cosine",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = DciError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| DciError::Config(format!("unknown method `{s}`")))
    }
}

/// Population the document standardizer is fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StandardizeFit {
    /// Projected source-labeled plus target-unlabeled documents.
    Both,
    SourceOnly,
}

impl FromStr for StandardizeFit {
    type Err = DciError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "both" => Ok(StandardizeFit::Both),
            "source-only" => Ok(StandardizeFit::SourceOnly),
            other => Err(DciError::Config(format!(
                "unknown standardization fit population `{other}` (expected both or source-only)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub min_support: usize,
    pub standardize_features: bool,
    pub standardize_docs: bool,
    pub standardize_fit: StandardizeFit,
    pub tfidf: TfidfOptions,
    /// C grid, folds, solver tolerance and the seed all randomness derives from.
    pub svm: GridSearchOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            min_support: DEFAULT_MIN_SUPPORT,
            standardize_features: true,
            standardize_docs: true,
            standardize_fit: StandardizeFit::Both,
            tfidf: TfidfOptions::default(),
            svm: GridSearchOptions::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_support == 0 {
            return Err(DciError::Config("min_support must be at least 1".into()));
        }
        self.svm.validate()
    }

    pub fn seed(&self) -> u64 {
        self.svm.seed
    }

    fn pivot_options(&self) -> PivotOptions {
        PivotOptions {
            min_support: self.min_support,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    /// Profile indexing and pivot selection.
    pub pivot_s: f64,
    /// Correspondence matrices, tf-idf, projection and standardization.
    pub dci_s: f64,
    /// Grid search and the final refit.
    pub svm_s: f64,
    /// Wall clock of the whole run.
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub task: TaskId,
    pub method: Method,
    pub accuracy: f64,
    pub best_c: f64,
    pub n_pivots_used: usize,
    pub timings: Timings,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskAccuracy {
    pub task: TaskId,
    pub accuracy: f64,
    pub n_pivots_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub n_pivots: usize,
    pub accuracies: Vec<TaskAccuracy>,
    pub mean_accuracy: f64,
    pub total_s: f64,
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

fn labels(docs: &[&Document]) -> Result<Vec<f64>> {
    docs.iter()
        .map(|d| {
            d.label
                .map(|l| l.sign())
                .ok_or_else(|| DciError::Config("unlabeled document in a labeled split".into()))
        })
        .collect()
}

/// Profile indexes and the full pivot ranking of a task, reusable across
/// pivot counts.
struct PreparedTask {
    source_index: ProfileIndex,
    target_index: ProfileIndex,
    ranking: PivotSet,
    pivot_s: f64,
}

fn prepare(task: &TransferTask, n_pivots: usize, config: &ExperimentConfig) -> Result<PreparedTask> {
    let t = Instant::now();
    let source_index = build_profile_index(&task.source)?;
    let target_index = ProfileIndex::from_documents(task.target_estimation())
        .map_err(|_| DciError::Config(format!("target pool {} has no documents for estimation", task.target.tag)))?;
    let sized = TransferTask {
        n_pivots,
        ..task.clone()
    };
    let ranking = select_pivots(&sized, &source_index, &target_index, config.pivot_options())?;
    Ok(PreparedTask {
        source_index,
        target_index,
        ranking,
        pivot_s: secs(t),
    })
}

struct Scored {
    accuracy: f64,
    best_c: f64,
    model: SvmModel,
    dci_s: f64,
    svm_s: f64,
}

fn run_with_pivots(
    task: &TransferTask,
    prepared: &PreparedTask,
    pivots: &PivotSet,
    dcf: DcfKind,
    config: &ExperimentConfig,
) -> Result<Scored> {
    let t = Instant::now();
    let matrix_opts = MatrixOptions {
        standardize_features: config.standardize_features,
    };
    let src_matrix = build_correspondence_matrix(
        dcf,
        task.source.vocab.len(),
        &pivots.source_terms(),
        &prepared.source_index,
        matrix_opts,
    )?;
    let tgt_matrix = build_correspondence_matrix(
        dcf,
        task.target.vocab.len(),
        &pivots.target_terms(),
        &prepared.target_index,
        matrix_opts,
    )?;

    let train_docs = &task.source.labeled;
    let test_docs = task.target_test();
    let train = tfidf_transform(train_docs, &prepared.source_index, config.tfidf);
    let test = tfidf_transform(test_docs, &prepared.target_index, config.tfidf);
    let mut x_train = project(&train, &src_matrix, Side::Source)?.rows;
    let mut x_test = project(&test, &tgt_matrix, Side::Target)?.rows;

    if config.standardize_docs {
        let fit_rows = match config.standardize_fit {
            StandardizeFit::SourceOnly => x_train.clone(),
            StandardizeFit::Both if task.target.unlabeled.is_empty() => x_train.clone(),
            StandardizeFit::Both => {
                let unl = tfidf_transform(&task.target.unlabeled, &prepared.target_index, config.tfidf);
                x_train.vstack(&project(&unl, &tgt_matrix, Side::Target)?.rows)?
            }
        };
        let st = Standardizer::fit(&fit_rows)?;
        x_train = st.apply(&x_train)?;
        x_test = st.apply(&x_test)?;
    }
    let dci_s = secs(t);

    let t = Instant::now();
    let y_train = labels(&train_docs.iter().collect::<Vec<_>>())?;
    let y_test = labels(&test_docs.iter().collect::<Vec<_>>())?;
    let gs = grid_search_c(&x_train, &y_train, &config.svm)?;
    let pred = predict(&gs.model, &x_test)?;
    let accuracy = crate::stats::accuracy(&pred, &y_test)?;
    Ok(Scored {
        accuracy,
        best_c: gs.best_c,
        model: gs.model,
        dci_s,
        svm_s: secs(t),
    })
}

fn shortfall_note(pivots: &PivotSet) -> Option<String> {
    (pivots.shortfall() > 0).then(|| {
        format!(
            "only {} of {} requested pivots passed the support thresholds",
            pivots.len(),
            pivots.requested
        )
    })
}

/// Full DCI pipeline: pivots, correspondence matrices, projection,
/// standardization, grid-searched SVM on the source, accuracy on the target.
pub fn run_dci(task: &TransferTask, dcf: DcfKind, config: &ExperimentConfig) -> Result<RunResult> {
    run_dci_detailed(task, dcf, config).map(|(r, _)| r)
}

/// What a DCI run selected and learned, for dumping.
#[derive(Debug, Clone)]
pub struct DciArtifacts {
    pub pivots: PivotSet,
    pub model: SvmModel,
}

pub fn run_dci_detailed(
    task: &TransferTask,
    dcf: DcfKind,
    config: &ExperimentConfig,
) -> Result<(RunResult, DciArtifacts)> {
    let id = task.id();
    let start = Instant::now();
    let result = (|| {
        let prepared = prepare(task, task.n_pivots, config)?;
        let scored = run_with_pivots(task, &prepared, &prepared.ranking, dcf, config)?;
        let run = RunResult {
            task: id.clone(),
            method: Method::dci(dcf),
            accuracy: scored.accuracy,
            best_c: scored.best_c,
            n_pivots_used: prepared.ranking.len(),
            timings: Timings {
                pivot_s: prepared.pivot_s,
                dci_s: scored.dci_s,
                svm_s: scored.svm_s,
                total_s: secs(start),
            },
            notes: shortfall_note(&prepared.ranking).into_iter().collect(),
        };
        let artifacts = DciArtifacts {
            pivots: prepared.ranking,
            model: scored.model,
        };
        Ok((run, artifacts))
    })();
    result.map_err(|e: DciError| e.in_task(id.to_string()))
}

/// Tf-idf rows, L2-normalized, as a sparse matrix of the given width.
fn tfidf_rows(docs: &[WeightedDoc], width: usize) -> Result<SparseMatrix> {
    let mut m = SparseMatrix::new(width);
    for doc in docs {
        let mut v: Vec<f64> = doc.entries.iter().map(|&(_, w)| w).collect();
        l2_normalize(&mut v);
        m.push_row(doc.entries.iter().map(|&(t, _)| t).zip(v))?;
    }
    Ok(m)
}

/// Maps a source document into the target vocabulary through the
/// dictionary; untranslatable terms are dropped.
fn translate_document(task: &TransferTask, doc: &Document) -> Document {
    let dict = task.dictionary.as_deref();
    let counts = doc.iter().filter_map(|(t, c)| {
        let term = task.source.vocab.term(t)?;
        let translated = dict?.translate(term)?;
        task.target.vocab.id(translated).map(|id: TermId| (id, c))
    });
    Document::from_counts(counts, doc.label)
}

/// No adaptation: train on source documents, score on the target test set.
/// Cross-lingual source documents are first translated term by term.
pub fn run_lower(task: &TransferTask, config: &ExperimentConfig) -> Result<RunResult> {
    let id = task.id();
    let start = Instant::now();
    let result = (|| {
        let (train_docs, index, width) = if task.is_cross_lingual() {
            let map = |docs: &[Document]| docs.iter().map(|d| translate_document(task, d)).collect::<Vec<_>>();
            let labeled = map(&task.source.labeled);
            let unlabeled = map(&task.source.unlabeled);
            let index = ProfileIndex::from_documents(labeled.iter().chain(&unlabeled))?;
            (labeled, index, task.target.vocab.len())
        } else {
            (task.source.labeled.clone(), build_profile_index(&task.source)?, task.source.vocab.len())
        };
        let test_docs = task.target_test();
        let x_train = tfidf_rows(&tfidf_transform(&train_docs, &index, config.tfidf), width)?;
        let x_test = tfidf_rows(&tfidf_transform(test_docs, &index, config.tfidf), width)?;

        let t = Instant::now();
        let y_train = labels(&train_docs.iter().collect::<Vec<_>>())?;
        let y_test = labels(&test_docs.iter().collect::<Vec<_>>())?;
        let gs = grid_search_c(&x_train, &y_train, &config.svm)?;
        let accuracy = crate::stats::accuracy(&predict(&gs.model, &x_test)?, &y_test)?;
        let svm_s = secs(t);
        let mut notes = Vec::new();
        if task.is_cross_lingual() {
            notes.push("source documents translated term-by-term through the dictionary".to_owned());
        }
        Ok(RunResult {
            task: id.clone(),
            method: Method::Lower,
            accuracy,
            best_c: gs.best_c,
            n_pivots_used: 0,
            timings: Timings {
                pivot_s: 0.0,
                dci_s: 0.0,
                svm_s,
                total_s: secs(start),
            },
            notes,
        })
    })();
    result.map_err(|e: DciError| e.in_task(id.to_string()))
}

/// In-domain reference: train on the target's own labeled split when it has
/// one, otherwise k-fold cross-validation over the target test set.
pub fn run_upper(task: &TransferTask, config: &ExperimentConfig) -> Result<RunResult> {
    let id = task.id();
    let start = Instant::now();
    let result = (|| {
        let test_docs = task.target_test();
        if test_docs.iter().any(|d| d.label.is_none()) {
            return Err(DciError::Config(format!(
                "target pool {} has unlabeled test documents",
                task.target.tag
            )));
        }
        let estimation = task.target_estimation();
        let index = if estimation.is_empty() {
            ProfileIndex::from_documents(test_docs)?
        } else {
            ProfileIndex::from_documents(estimation)?
        };
        let width = task.target.vocab.len();
        let x_test = tfidf_rows(&tfidf_transform(test_docs, &index, config.tfidf), width)?;
        let y_test = labels(&test_docs.iter().collect::<Vec<_>>())?;

        let t = Instant::now();
        let training = task.target_training();
        let (accuracy, best_c, notes) = if !training.is_empty() {
            let x_train = tfidf_rows(&tfidf_transform(training, &index, config.tfidf), width)?;
            let y_train = labels(&training.iter().collect::<Vec<_>>())?;
            let gs = grid_search_c(&x_train, &y_train, &config.svm)?;
            let acc = crate::stats::accuracy(&predict(&gs.model, &x_test)?, &y_test)?;
            (acc, gs.best_c, Vec::new())
        } else {
            let k = config.svm.folds;
            let fold = stratified_folds(&y_test, k, config.seed())?;
            let mut accs = Vec::with_capacity(k);
            let mut chosen = Vec::with_capacity(k);
            for f in 0..k {
                let train: Vec<usize> = (0..y_test.len()).filter(|&i| fold[i] != f).collect();
                let held: Vec<usize> = (0..y_test.len()).filter(|&i| fold[i] == f).collect();
                let y_tr: Vec<f64> = train.iter().map(|&i| y_test[i]).collect();
                let y_ho: Vec<f64> = held.iter().map(|&i| y_test[i]).collect();
                let gs = grid_search_c(&x_test.select_rows(&train), &y_tr, &config.svm)?;
                let pred = predict(&gs.model, &x_test.select_rows(&held))?;
                accs.push(crate::stats::accuracy(&pred, &y_ho)?);
                chosen.push(gs.best_c);
            }
            let note = format!("{k}-fold cross-validation on the target test set");
            (accs.iter().sum::<f64>() / k as f64, mode_smallest(&chosen), vec![note])
        };
        Ok(RunResult {
            task: id.clone(),
            method: Method::Upper,
            accuracy,
            best_c,
            n_pivots_used: 0,
            timings: Timings {
                pivot_s: 0.0,
                dci_s: 0.0,
                svm_s: secs(t),
                total_s: secs(start),
            },
            notes,
        })
    })();
    result.map_err(|e: DciError| e.in_task(id.to_string()))
}

/// Most frequent value; ties go to the smaller one.
fn mode_smallest(values: &[f64]) -> f64 {
    let mut best = (0usize, f64::INFINITY);
    for &v in values {
        let count = values.iter().filter(|&&w| w == v).count();
        if count > best.0 || (count == best.0 && v < best.1) {
            best = (count, v);
        }
    }
    best.1
}

pub fn run_method(task: &TransferTask, method: Method, config: &ExperimentConfig) -> Result<RunResult> {
    match method {
        Method::Lower => run_lower(task, config),
        Method::Upper => run_upper(task, config),
        Method::DciLinear => run_dci(task, DcfKind::Linear, config),
        Method::DciCosine => run_dci(task, DcfKind::Cosine, config),
    }
}

/// Runs every (task, method) pair; results come back in task-major order
/// regardless of scheduling.
pub fn run_batch(tasks: &[TransferTask], methods: &[Method], config: &ExperimentConfig) -> Result<Vec<RunResult>> {
    let jobs: Vec<(&TransferTask, Method)> = tasks
        .iter()
        .flat_map(|t| methods.iter().map(move |&m| (t, m)))
        .collect();
    jobs.par_iter().map(|&(t, m)| run_method(t, m, config)).collect()
}

/// Validates a sweep grid and applies the cross-lingual cap. Returns the
/// effective grid and a note when values were dropped.
pub fn effective_sweep_grid(grid: &[usize], cross_lingual: bool) -> Result<(Vec<usize>, Option<String>)> {
    if grid.is_empty() {
        return Err(DciError::Config("empty pivot grid".into()));
    }
    if grid.contains(&0) {
        return Err(DciError::Config("pivot counts must be positive".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DciError::Config("pivot grid must be strictly ascending".into()));
    }
    if !cross_lingual || grid.iter().all(|&n| n <= CROSS_LINGUAL_SWEEP_CAP) {
        return Ok((grid.to_vec(), None));
    }
    let mut capped: Vec<usize> = grid.iter().copied().filter(|&n| n < CROSS_LINGUAL_SWEEP_CAP).collect();
    capped.push(CROSS_LINGUAL_SWEEP_CAP);
    let dropped: Vec<String> = grid
        .iter()
        .filter(|&&n| n > CROSS_LINGUAL_SWEEP_CAP)
        .map(usize::to_string)
        .collect();
    let note = format!(
        "cross-lingual sweep capped at {CROSS_LINGUAL_SWEEP_CAP} pivots (dropped {})",
        dropped.join(", ")
    );
    Ok((capped, Some(note)))
}

/// One DCI run per (task, pivot count). Indexes and the pivot ranking are
/// computed once per task; a count's time includes that shared selection.
pub fn sweep_pivots(
    tasks: &[TransferTask],
    dcf: DcfKind,
    grid: &[usize],
    config: &ExperimentConfig,
) -> Result<(Vec<SweepResult>, Vec<String>)> {
    if tasks.is_empty() {
        return Err(DciError::Config("sweep needs at least one task".into()));
    }
    let cross_lingual = tasks.iter().any(TransferTask::is_cross_lingual);
    let (grid, note) = effective_sweep_grid(grid, cross_lingual)?;
    let n_max = *grid.last().unwrap();

    let per_task: Vec<Vec<(TaskAccuracy, f64)>> = tasks
        .par_iter()
        .map(|task| {
            let id = task.id();
            let inner = || -> Result<Vec<(TaskAccuracy, f64)>> {
                let prepared = prepare(task, n_max, config)?;
                grid.iter()
                    .map(|&n| {
                        let pivots = prepared.ranking.truncated(n);
                        let s = run_with_pivots(task, &prepared, &pivots, dcf, config)?;
                        let acc = TaskAccuracy {
                            task: id.clone(),
                            accuracy: s.accuracy,
                            n_pivots_used: pivots.len(),
                        };
                        Ok((acc, prepared.pivot_s + s.dci_s + s.svm_s))
                    })
                    .collect()
            };
            inner().map_err(|e| e.in_task(id.to_string()))
        })
        .collect::<Result<_>>()?;

    let results = grid
        .iter()
        .enumerate()
        .map(|(g, &n)| {
            let accuracies: Vec<TaskAccuracy> = per_task.iter().map(|r| r[g].0.clone()).collect();
            let mean = accuracies.iter().map(|a| a.accuracy).sum::<f64>() / accuracies.len() as f64;
            SweepResult {
                n_pivots: n,
                accuracies,
                mean_accuracy: mean,
                total_s: per_task.iter().map(|r| r[g].1).sum(),
            }
        })
        .collect();
    Ok((results, note.into_iter().collect()))
}
