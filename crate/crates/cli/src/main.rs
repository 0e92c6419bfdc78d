//! `dci`: run DCI experiments, pivot sweeps and significance tests.
//!
//! Exit codes: 0 success, 1 internal failure, 2 usage or configuration error.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use dci::corpus::{build_task, load_dictionary, PoolTag, TransferTask, TranslationOracle, DEFAULT_PIVOTS_CROSS_DOMAIN, DEFAULT_PIVOTS_CROSS_LINGUAL};
use dci::dcf::DcfKind;
use dci::harness::{
    effective_sweep_grid, make_synthetic_task, parse_report, render_report, render_sweep_csv, render_timings_csv,
    run_dci_detailed, run_method, sweep_pivots, ExperimentConfig, Method, ReportFormat, ReportMetadata,
    ResultRecord, RunResult, SplitSizes, StandardizeFit, SyntheticSpec, DEFAULT_SWEEP_GRID,
};
use dci::manifest::{ConfigOverrides, ManifestFile};
use dci::pivots::write_pivot_dump;
use dci::stats::{paired_ttest, ALPHAS};
use dci::{DciError, Result};

#[derive(Parser)]
#[command(name = "dci", version, about = "Distributional Correspondence Indexing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run methods on transfer tasks and write a results table.
    Run(RunArgs),
    /// Vary the number of pivots and record accuracy and time per count.
    Sweep(SweepArgs),
    /// Paired two-tailed t-test between two results.json files.
    Ttest(TtestArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Dataset manifest (TOML) listing pools, dictionaries and optional [config] defaults.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Transfer task as SOURCE:TARGET pool tags, e.g. books:dvd or en-books:de-music. Repeatable.
    #[arg(long = "task", value_name = "SRC:TGT")]
    tasks: Vec<String>,
    /// Distributional correspondence function [default: cosine].
    #[arg(long, value_parser = parse_dcf)]
    dcf: Option<DcfKind>,
    /// Pivots per task; 0 means 1000 cross-domain, 450 cross-lingual.
    #[arg(long)]
    n_pivots: Option<usize>,
    /// Minimum document frequency of a pivot on each side [default: 10].
    #[arg(long)]
    min_support: Option<usize>,
    /// Skip z-scoring of projected documents.
    #[arg(long)]
    no_standardize_docs: bool,
    /// Population the document standardizer is fitted on: both or source-only [default: both].
    #[arg(long, value_parser = parse_standardize_fit)]
    standardize_fit: Option<StandardizeFit>,
    /// Comma-separated C values for the grid search [default: 1e-5,...,1e5].
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    c_grid: Option<Vec<f64>>,
    /// Cross-validation folds of the grid search [default: 5].
    #[arg(long)]
    folds: Option<usize>,
    /// Seed for fold splits, solver permutations and synthetic data [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Use 1 + ln(count) as term frequency.
    #[arg(long)]
    sublinear_tf: bool,
    /// Output directory.
    #[arg(long, env = "DCI_OUTPUT_DIR", default_value = "dci-output")]
    out: PathBuf,
    /// Generate synthetic tasks instead of loading a dataset.
    #[arg(long)]
    synthetic: bool,
    /// Number of synthetic tasks (seeds SEED, SEED+1, ...).
    #[arg(long, default_value_t = 1, requires = "synthetic")]
    synthetic_count: usize,
    /// Synthetic tasks are cross-lingual; sweeps are capped at 1500 pivots.
    #[arg(long)]
    cross_lingual: bool,
    /// Bilingual dictionary for cross-lingual tasks (overrides the manifest).
    #[arg(long)]
    dict: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Methods to run: lower, upper, dci-linear, dci-cosine, or all. Repeatable [default: DCI with --dcf].
    #[arg(long = "method", value_delimiter = ',')]
    methods: Vec<String>,
    /// Also write pivot lists and trained models of DCI runs.
    #[arg(long)]
    dump_artifacts: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated ascending pivot counts.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = DEFAULT_SWEEP_GRID)]
    grid: Vec<usize>,
}

#[derive(Args)]
struct TtestArgs {
    /// First results.json.
    a: PathBuf,
    /// Second results.json.
    b: PathBuf,
    /// Method taken from the first file (needed when it holds several).
    #[arg(long)]
    method_a: Option<String>,
    /// Method taken from the second file (needed when it holds several).
    #[arg(long)]
    method_b: Option<String>,
    /// Significance level of the headline verdict.
    #[arg(long, default_value_t = 0.005)]
    alpha: f64,
}

fn parse_dcf(s: &str) -> std::result::Result<DcfKind, String> {
    s.parse().map_err(|e: DciError| e.to_string())
}

fn parse_standardize_fit(s: &str) -> std::result::Result<StandardizeFit, String> {
    s.parse().map_err(|e: DciError| e.to_string())
}

struct Resolved {
    config: ExperimentConfig,
    dcf: DcfKind,
    n_pivots: usize,
    manifest: Option<ManifestFile>,
}

/// Defaults, then manifest [config], then flags.
fn resolve(args: &CommonArgs) -> Result<Resolved> {
    let manifest = args.manifest.as_deref().map(ManifestFile::load).transpose()?;
    let over = manifest
        .as_ref()
        .map(|m| m.manifest.config.clone())
        .unwrap_or_else(ConfigOverrides::default);
    let mut config = ExperimentConfig::default();
    if let Some(v) = over.min_support {
        config.min_support = v;
    }
    if let Some(v) = over.standardize_docs {
        config.standardize_docs = v;
    }
    if let Some(v) = over.standardize_fit {
        config.standardize_fit = v;
    }
    if let Some(v) = over.c_grid {
        config.svm.c_grid = v;
    }
    if let Some(v) = over.folds {
        config.svm.folds = v;
    }
    if let Some(v) = over.seed {
        config.svm.seed = v;
    }
    if let Some(v) = over.sublinear_tf {
        config.tfidf.sublinear_tf = v;
    }

    if let Some(v) = args.min_support {
        config.min_support = v;
    }
    if args.no_standardize_docs {
        config.standardize_docs = false;
    }
    if let Some(v) = args.standardize_fit {
        config.standardize_fit = v;
    }
    if let Some(v) = &args.c_grid {
        config.svm.c_grid = v.clone();
    }
    if let Some(v) = args.folds {
        config.svm.folds = v;
    }
    if let Some(v) = args.seed {
        config.svm.seed = v;
    }
    if args.sublinear_tf {
        config.tfidf.sublinear_tf = true;
    }
    config.validate()?;
    let dcf = args.dcf.or(over.dcf).unwrap_or(DcfKind::Cosine);
    let n_pivots = args.n_pivots.or(over.n_pivots).unwrap_or(0);
    Ok(Resolved {
        config,
        dcf,
        n_pivots,
        manifest,
    })
}

fn print_config(r: &Resolved) -> Result<()> {
    let doc = json!({
        "dcf": r.dcf,
        "n_pivots": r.n_pivots,
        "default_pivots_cross_domain": DEFAULT_PIVOTS_CROSS_DOMAIN,
        "default_pivots_cross_lingual": DEFAULT_PIVOTS_CROSS_LINGUAL,
        "default_sweep_grid": DEFAULT_SWEEP_GRID,
        "experiment": r.config,
    });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(())
}

fn parse_task_spec(spec: &str, default_language: &str) -> Result<(PoolTag, PoolTag)> {
    let (src, tgt) = spec
        .split_once(':')
        .ok_or_else(|| DciError::Config(format!("task `{spec}` is not of the form SOURCE:TARGET")))?;
    Ok((PoolTag::parse(src, default_language)?, PoolTag::parse(tgt, default_language)?))
}

fn load_tasks(args: &CommonArgs, r: &Resolved) -> Result<Vec<TransferTask>> {
    if args.synthetic {
        if !args.tasks.is_empty() || args.manifest.is_some() {
            return Err(DciError::Config("--synthetic cannot be combined with --task or --manifest".into()));
        }
        let spec = SyntheticSpec {
            cross_lingual: args.cross_lingual,
            n_pivots: r.n_pivots,
            ..SyntheticSpec::default()
        };
        let seed = r.config.seed();
        return (0..args.synthetic_count as u64)
            .map(|i| make_synthetic_task(seed + i, SplitSizes::default(), &spec))
            .collect();
    }
    let mf = r
        .manifest
        .as_ref()
        .ok_or_else(|| DciError::Config("give --manifest with --task, or use --synthetic".into()))?;
    if args.tasks.is_empty() {
        return Err(DciError::Config("no --task given".into()));
    }
    let lang = &mf.manifest.default_language;
    let pairs = args
        .tasks
        .iter()
        .map(|t| parse_task_spec(t, lang))
        .collect::<Result<Vec<_>>>()?;

    // Dictionaries are checked before any corpus is read.
    let cli_dict: Option<Arc<TranslationOracle>> = args.dict.as_deref().map(load_dictionary).transpose()?.map(Arc::new);
    let mut dicts: BTreeMap<(String, String), Arc<TranslationOracle>> = BTreeMap::new();
    for (s, t) in &pairs {
        if s.language == t.language {
            continue;
        }
        let key = (s.language.clone(), t.language.clone());
        if dicts.contains_key(&key) {
            continue;
        }
        let dict = match &cli_dict {
            Some(d) => Arc::clone(d),
            None => match mf.load_dictionary(&s.language, &t.language)? {
                Some(d) => Arc::new(d),
                None => {
                    return Err(DciError::Config(format!(
                        "task {s}:{t} is cross-lingual and no {} → {} dictionary is available; pass --dict or add a [[dictionaries]] entry to the manifest",
                        s.language, t.language
                    )))
                }
            },
        };
        dicts.insert(key, dict);
    }

    let tags: Vec<PoolTag> = pairs.iter().flat_map(|(s, t)| [s.clone(), t.clone()]).collect();
    let pools = mf.load_pools(&tags)?;
    pairs
        .iter()
        .map(|(s, t)| {
            let dict = dicts.get(&(s.language.clone(), t.language.clone())).cloned();
            build_task(Arc::clone(&pools[s]), Arc::clone(&pools[t]), dict, r.n_pivots)
        })
        .collect()
}

fn parse_methods(names: &[String], dcf: DcfKind) -> Result<Vec<Method>> {
    if names.is_empty() {
        return Ok(vec![Method::dci(dcf)]);
    }
    let mut out = BTreeSet::new();
    for n in names {
        match n.to_ascii_lowercase().as_str() {
            "all" => out.extend(Method::ALL),
            "dci" => {
                out.insert(Method::dci(dcf));
            }
            _ => {
                out.insert(n.parse::<Method>()?);
            }
        }
    }
    Ok(out.into_iter().collect())
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| DciError::Io { path, source: e })
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| DciError::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let r = resolve(&args.common)?;
    if args.common.print_config {
        return print_config(&r);
    }
    let methods = parse_methods(&args.methods, r.dcf)?;
    let tasks = load_tasks(&args.common, &r)?;
    let out = &args.common.out;
    create_dir(out)?;

    let mut runs: Vec<RunResult> = Vec::new();
    for task in &tasks {
        for &m in &methods {
            let run = match (m, args.dump_artifacts) {
                (Method::DciLinear | Method::DciCosine, true) => {
                    let dcf = if m == Method::DciLinear { DcfKind::Linear } else { DcfKind::Cosine };
                    let (run, art) = run_dci_detailed(task, dcf, &r.config)?;
                    let stem = format!("{}_{}_{}", task.source.tag, task.target.tag, dcf);
                    let dump = write_pivot_dump(&art.pivots, &task.source.vocab, &task.target.vocab);
                    write(out, &format!("pivots_{stem}.tsv"), &dump)?;
                    write(out, &format!("model_{stem}.txt"), &art.model.to_text())?;
                    run
                }
                _ => run_method(task, m, &r.config)?,
            };
            for note in &run.notes {
                eprintln!("note: {}: {}", run.task, note);
            }
            runs.push(run);
        }
    }

    let mut meta = ReportMetadata::new(&r.config);
    if tasks.iter().any(TransferTask::is_cross_lingual) && methods.contains(&Method::Lower) {
        meta.notes.push(
            "cross-lingual Lower: source documents translated term by term through the dictionary, untranslatable terms dropped"
                .into(),
        );
    }
    let records: Vec<ResultRecord> = runs.iter().cloned().map(ResultRecord::Run).collect();
    write(out, "results.json", &render_report(&records, &meta, ReportFormat::Json)?)?;
    write(out, "results.csv", &render_report(&records, &meta, ReportFormat::Csv)?)?;
    let md = render_report(&records, &meta, ReportFormat::Markdown)?;
    write(out, "report.md", &md)?;
    write(out, "timings.csv", &render_timings_csv(&runs)?)?;
    print!("{md}");
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let r = resolve(&args.common)?;
    if args.common.print_config {
        return print_config(&r);
    }
    let tasks = load_tasks(&args.common, &r)?;
    let cross_lingual = args.common.cross_lingual || tasks.iter().any(TransferTask::is_cross_lingual);
    let (grid, note) = effective_sweep_grid(&args.grid, cross_lingual)?;
    let mut meta = ReportMetadata::new(&r.config);
    if let Some(note) = note {
        eprintln!("note: {note}");
        meta.notes.push(note);
    }
    let out = &args.common.out;
    create_dir(out)?;
    let (sweeps, notes) = sweep_pivots(&tasks, r.dcf, &grid, &r.config)?;
    meta.notes.extend(notes);
    let records: Vec<ResultRecord> = sweeps.iter().cloned().map(ResultRecord::Sweep).collect();
    write(out, "results.json", &render_report(&records, &meta, ReportFormat::Json)?)?;
    write(out, "sweep.csv", &render_sweep_csv(&sweeps)?)?;
    let md = render_report(&records, &meta, ReportFormat::Markdown)?;
    write(out, "report.md", &md)?;
    print!("{md}");
    Ok(())
}

/// Per-task accuracies of one method in a results file.
fn accuracies(path: &Path, method: Option<&str>) -> Result<BTreeMap<String, f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| DciError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let report = parse_report(&text)?;
    let runs: Vec<RunResult> = report
        .results
        .into_iter()
        .map(|r| match r {
            ResultRecord::Run(run) => Ok(run),
            ResultRecord::Sweep(_) => Err(DciError::Argument(format!(
                "{}: sweep results cannot be t-tested",
                path.display()
            ))),
        })
        .collect::<Result<_>>()?;
    let methods: BTreeSet<Method> = runs.iter().map(|r| r.method).collect();
    let method = match method {
        Some(m) => m.parse::<Method>()?,
        None if methods.len() == 1 => *methods.iter().next().unwrap(),
        None => {
            let names: Vec<&str> = methods.iter().map(|m| m.as_str()).collect();
            return Err(DciError::Argument(format!(
                "{} holds several methods ({}); choose one with --method-a/--method-b",
                path.display(),
                names.join(", ")
            )));
        }
    };
    let acc: BTreeMap<String, f64> = runs
        .iter()
        .filter(|r| r.method == method)
        .map(|r| (r.task.to_string(), r.accuracy))
        .collect();
    if acc.is_empty() {
        return Err(DciError::Argument(format!("{} has no {method} results", path.display())));
    }
    Ok(acc)
}

fn cmd_ttest(args: TtestArgs) -> Result<()> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(DciError::Argument(format!("--alpha {} outside (0, 1)", args.alpha)));
    }
    let a = accuracies(&args.a, args.method_a.as_deref())?;
    let b = accuracies(&args.b, args.method_b.as_deref())?;
    let only_a: Vec<&String> = a.keys().filter(|k| !b.contains_key(*k)).collect();
    let only_b: Vec<&String> = b.keys().filter(|k| !a.contains_key(*k)).collect();
    if !only_a.is_empty() || !only_b.is_empty() {
        let fmt = |v: &[&String]| v.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ");
        return Err(DciError::Argument(format!(
            "task sets differ; only in {}: [{}]; only in {}: [{}]",
            args.a.display(),
            fmt(&only_a),
            args.b.display(),
            fmt(&only_b)
        )));
    }
    let xs: Vec<f64> = a.values().copied().collect();
    let ys: Vec<f64> = b.values().copied().collect();
    let res = paired_ttest(&xs, &ys)?;
    println!("pairs: {}", xs.len());
    println!("mean difference: {:.6}", res.mean_difference);
    println!("t: {:.6}", res.t_statistic);
    println!("df: {}", res.degrees_of_freedom);
    println!("p: {:.6e}", res.p_value);
    for alpha in ALPHAS {
        let verdict = if res.is_significant(alpha) { "significant" } else { "not significant" };
        println!("alpha {alpha}: {verdict}");
    }
    if !ALPHAS.contains(&args.alpha) {
        let verdict = if res.is_significant(args.alpha) { "significant" } else { "not significant" };
        println!("alpha {}: {verdict}", args.alpha);
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Ttest(a) => cmd_ttest(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Messages already carry their underlying cause.
            eprintln!("error: {e}");
            ExitCode::from(if e.is_user_error() { 2 } else { 1 })
        }
    }
}
