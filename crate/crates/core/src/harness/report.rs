//! Result serialization: JSON (round-trippable), CSV and Markdown tables,
//! plus the timing and sweep CSV files.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, Method, RunResult, SweepResult};
use crate::error::{DciError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub version: String,
    pub config: ExperimentConfig,
    pub tfidf: String,
    pub doc_standardization: String,
    pub significance_pairing: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ReportMetadata {
    pub fn new(config: &ExperimentConfig) -> Self {
        let doc_standardization = if !config.standardize_docs {
            "off".to_owned()
        } else {
            match config.standardize_fit {
                super::StandardizeFit::Both => "fit on source labeled + target unlabeled".to_owned(),
                super::StandardizeFit::SourceOnly => "fit on source labeled".to_owned(),
            }
        };
        Self {
            version: env!("CARGO_PKG_VERSION").to_owned(),
            config: config.clone(),
            tfidf: config.tfidf.describe().to_owned(),
            doc_standardization,
            significance_pairing: "paired per task: one accuracy per method and task".to_owned(),
            notes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ResultRecord {
    Run(RunResult),
    Sweep(SweepResult),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub metadata: ReportMetadata,
    pub results: Vec<ResultRecord>,
}

enum Kind<'a> {
    Runs(Vec<&'a RunResult>),
    Sweeps(Vec<&'a SweepResult>),
}

fn classify(records: &[ResultRecord]) -> Result<Kind<'_>> {
    let runs: Vec<&RunResult> = records
        .iter()
        .filter_map(|r| match r {
            ResultRecord::Run(x) => Some(x),
            ResultRecord::Sweep(_) => None,
        })
        .collect();
    let sweeps: Vec<&SweepResult> = records
        .iter()
        .filter_map(|r| match r {
            ResultRecord::Sweep(x) => Some(x),
            ResultRecord::Run(_) => None,
        })
        .collect();
    match (runs.is_empty(), sweeps.is_empty()) {
        (false, true) => Ok(Kind::Runs(runs)),
        (true, false) => Ok(Kind::Sweeps(sweeps)),
        (true, true) => Err(DciError::Argument("no results to render".into())),
        (false, false) => Err(DciError::Argument(
            "cannot render run results and sweep results in one table".into(),
        )),
    }
}

pub fn render_report(records: &[ResultRecord], metadata: &ReportMetadata, format: ReportFormat) -> Result<String> {
    let kind = classify(records)?;
    match format {
        ReportFormat::Json => {
            let report = Report {
                metadata: metadata.clone(),
                results: records.to_vec(),
            };
            let mut s = serde_json::to_string_pretty(&report)?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Csv => match kind {
            Kind::Runs(runs) => runs_csv(&runs),
            Kind::Sweeps(sweeps) => sweeps_csv(&sweeps),
        },
        ReportFormat::Markdown => Ok(match kind {
            Kind::Runs(runs) => runs_markdown(&runs),
            Kind::Sweeps(sweeps) => sweeps_markdown(&sweeps),
        }),
    }
}

pub fn parse_report(text: &str) -> Result<Report> {
    Ok(serde_json::from_str(text)?)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| DciError::Argument(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn runs_csv(runs: &[&RunResult]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "source", "target", "method", "accuracy", "best_c", "n_pivots_used", "pivot_s", "dci_s", "svm_s", "total_s",
    ])?;
    for r in runs {
        w.write_record([
            r.task.source.clone(),
            r.task.target.clone(),
            r.method.to_string(),
            r.accuracy.to_string(),
            r.best_c.to_string(),
            r.n_pivots_used.to_string(),
            r.timings.pivot_s.to_string(),
            r.timings.dci_s.to_string(),
            r.timings.svm_s.to_string(),
            r.timings.total_s.to_string(),
        ])?;
    }
    finish_csv(w)
}

fn sweeps_csv(sweeps: &[&SweepResult]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n_pivots", "mean_accuracy", "total_seconds"])?;
    for s in sweeps {
        w.write_record([s.n_pivots.to_string(), s.mean_accuracy.to_string(), s.total_s.to_string()])?;
    }
    finish_csv(w)
}

/// Sweep summary written next to the results: `n_pivots,mean_accuracy,total_seconds`.
pub fn render_sweep_csv(sweeps: &[SweepResult]) -> Result<String> {
    sweeps_csv(&sweeps.iter().collect::<Vec<_>>())
}

pub fn render_timings_csv(runs: &[RunResult]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["task", "method", "pivot_s", "dci_s", "svm_s"])?;
    for r in runs {
        w.write_record([
            r.task.to_string(),
            r.method.to_string(),
            r.timings.pivot_s.to_string(),
            r.timings.dci_s.to_string(),
            r.timings.svm_s.to_string(),
        ])?;
    }
    finish_csv(w)
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

/// One row per task, one column per method; the best accuracy in each row
/// is bold. A final row holds per-method averages.
fn runs_markdown(runs: &[&RunResult]) -> String {
    let mut methods: Vec<Method> = runs.iter().map(|r| r.method).collect();
    methods.sort();
    methods.dedup();
    let mut table: BTreeMap<String, BTreeMap<Method, f64>> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for r in runs {
        let key = r.task.to_string();
        if !table.contains_key(&key) {
            order.push(key.clone());
        }
        table.entry(key).or_default().insert(r.method, r.accuracy);
    }

    let mut out = String::from("| Task |");
    for m in &methods {
        out.push_str(&format!(" {m} |"));
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(methods.len()));
    out.push('\n');

    let row = |label: &str, cells: &BTreeMap<Method, f64>| {
        let best = cells.values().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut line = format!("| {label} |");
        for m in &methods {
            match cells.get(m) {
                Some(&a) if a == best => line.push_str(&format!(" **{}** |", pct(a))),
                Some(&a) => line.push_str(&format!(" {} |", pct(a))),
                None => line.push_str(" - |"),
            }
        }
        line.push('\n');
        line
    };
    for task in &order {
        out.push_str(&row(task, &table[task]));
    }
    if order.len() > 1 {
        let mut avg = BTreeMap::new();
        for m in &methods {
            let vals: Vec<f64> = table.values().filter_map(|c| c.get(m).copied()).collect();
            avg.insert(*m, vals.iter().sum::<f64>() / vals.len() as f64);
        }
        out.push_str(&row("Average", &avg));
    }
    out
}

fn sweeps_markdown(sweeps: &[&SweepResult]) -> String {
    let best = sweeps.iter().map(|s| s.mean_accuracy).fold(f64::NEG_INFINITY, f64::max);
    let mut out = String::from("| Pivots | Mean accuracy | Seconds |\n|---:|---:|---:|\n");
    for s in sweeps {
        let acc = if s.mean_accuracy == best {
            format!("**{}**", pct(s.mean_accuracy))
        } else {
            pct(s.mean_accuracy)
        };
        out.push_str(&format!("| {} | {} | {:.3} |\n", s.n_pivots, acc, s.total_s));
    }
    out
}
