//! L2-regularized squared-hinge linear SVM trained by dual coordinate
//! descent, with stratified k-fold grid search over `C`.
//!
//! The bias is handled as an extra constant-1 feature, so it is regularized
//! together with the weights. The primal problem is
//!
//! ```text
//! min_w  ½‖w‖² + C Σ max(0, 1 − yᵢ w·x̃ᵢ)²
//! ```
//!
//! and the dual solved here is
//!
//! ```text
//! max_{α ≥ 0}  Σ αᵢ − ½‖Σ αᵢ yᵢ x̃ᵢ‖² − Σ αᵢ² / (4C).
//! ```

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DciError, Result};
use crate::linalg::RowMatrix;

/// `{10^i : -5 <= i <= 5}`.
pub const DEFAULT_C_GRID: [f64; 11] = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1e0, 1e1, 1e2, 1e3, 1e4, 1e5];
pub const DEFAULT_TOL: f64 = 1e-4;
pub const DEFAULT_MAX_ITER: usize = 1000;
pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    /// Stop once the largest projected-gradient violation in an epoch is below this.
    pub tol: f64,
    /// Maximum number of epochs.
    pub max_iter: usize,
    /// Seeds the per-epoch coordinate permutation.
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
}

impl SvmModel {
    pub fn decision<M: RowMatrix>(&self, x: &M, row: usize) -> f64 {
        x.row_dot(row, &self.weights) + self.bias
    }

    /// Text dump: `n_features`, `bias`, `c` header lines then one weight per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n_features {}", self.weights.len());
        let _ = writeln!(out, "bias {}", self.bias);
        let _ = writeln!(out, "c {}", self.c);
        out.push_str("weights\n");
        for w in &self.weights {
            let _ = writeln!(out, "{w}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let mut header = |key: &str| -> Result<(usize, String)> {
            let (i, line) = lines
                .next()
                .ok_or_else(|| DciError::parse(0, format!("missing `{key}` line")))?;
            let value = line
                .strip_prefix(key)
                .map(str::trim)
                .ok_or_else(|| DciError::parse(i + 1, format!("expected `{key}`")))?;
            Ok((i + 1, value.to_owned()))
        };
        let number = |(line, v): (usize, String)| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| DciError::parse(line, format!("`{v}` is not a number")))
        };
        let (line, n) = header("n_features")?;
        let n: usize = n
            .parse()
            .map_err(|_| DciError::parse(line, "n_features is not an integer"))?;
        let bias = number(header("bias")?)?;
        let c = number(header("c")?)?;
        header("weights")?;
        let mut weights = Vec::with_capacity(n.min(1 << 20));
        for (i, line) in lines {
            weights.push(number((i + 1, line.trim().to_owned()))?);
        }
        if weights.len() != n {
            return Err(DciError::parse(0, format!("expected {n} weights, found {}", weights.len())));
        }
        Ok(Self { weights, bias, c })
    }
}

/// Solver state at termination, for diagnostics and oracle checks.
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: SvmModel,
    pub alpha: Vec<f64>,
    /// Dual objective after each epoch.
    pub dual_trace: Vec<f64>,
    pub epochs: usize,
    /// Largest projected-gradient magnitude seen in the final epoch.
    pub max_violation: f64,
    pub converged: bool,
}

fn check_labels(y: &[f64]) -> Result<(usize, usize)> {
    let mut pos = 0;
    let mut neg = 0;
    for &v in y {
        if v == 1.0 {
            pos += 1;
        } else if v == -1.0 {
            neg += 1;
        } else {
            return Err(DciError::Argument(format!("label {v} is not ±1")));
        }
    }
    Ok((pos, neg))
}

pub fn train_svm<M: RowMatrix>(x: &M, y: &[f64], params: &SvmParams) -> Result<SvmModel> {
    train_svm_detailed(x, y, params).map(|o| o.model)
}

pub fn train_svm_detailed<M: RowMatrix>(x: &M, y: &[f64], params: &SvmParams) -> Result<TrainOutput> {
    let n = x.n_rows();
    if n != y.len() {
        return Err(DciError::Argument(format!("{n} rows but {} labels", y.len())));
    }
    if n < 2 {
        return Err(DciError::Argument("need at least two training examples".into()));
    }
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(DciError::Argument(format!("C must be positive, got {}", params.c)));
    }
    if !x.all_finite() {
        return Err(DciError::Argument("non-finite feature value".into()));
    }
    let (pos, neg) = check_labels(y)?;
    if pos == 0 || neg == 0 {
        return Err(DciError::Training("both classes must be present".into()));
    }

    let dim = x.n_cols();
    let diag = 0.5 / params.c;
    // w[..dim] are the feature weights, w[dim] the bias weight.
    let mut w = vec![0.0; dim + 1];
    let mut alpha = vec![0.0; n];
    let qd: Vec<f64> = (0..n).map(|i| x.row_sq_norm(i) + 1.0 + diag).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut trace = Vec::new();
    let mut epochs = 0;
    let mut max_violation = f64::INFINITY;

    while epochs < params.max_iter {
        order.shuffle(&mut rng);
        max_violation = 0.0;
        for &i in &order {
            let yi = y[i];
            let g = yi * (x.row_dot(i, &w[..dim]) + w[dim]) - 1.0 + diag * alpha[i];
            let pg = if alpha[i] == 0.0 { g.min(0.0) } else { g };
            max_violation = f64::max(max_violation, pg.abs());
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / qd[i]).max(0.0);
                let step = (alpha[i] - old) * yi;
                x.row_axpy(i, step, &mut w[..dim]);
                w[dim] += step;
            }
        }
        epochs += 1;
        trace.push(dual_objective(&w, &alpha, diag));
        if max_violation < params.tol {
            break;
        }
    }
    let converged = max_violation < params.tol;
    if !converged {
        log::debug!(
            "svm: C={} stopped after {} epochs with violation {:.3e}",
            params.c,
            epochs,
            max_violation
        );
    }
    let bias = w.pop().unwrap();
    Ok(TrainOutput {
        model: SvmModel {
            weights: w,
            bias,
            c: params.c,
        },
        alpha,
        dual_trace: trace,
        epochs,
        max_violation,
        converged,
    })
}

fn dual_objective(w: &[f64], alpha: &[f64], diag: f64) -> f64 {
    let sum: f64 = alpha.iter().sum();
    let wsq: f64 = w.iter().map(|v| v * v).sum();
    let asq: f64 = alpha.iter().map(|a| a * a).sum();
    sum - 0.5 * wsq - 0.5 * diag * asq
}

/// Sign of the decision value; exactly zero maps to `+1`.
pub fn predict<M: RowMatrix>(model: &SvmModel, x: &M) -> Result<Vec<f64>> {
    if x.n_cols() != model.weights.len() {
        return Err(DciError::Argument(format!(
            "model has {} features, input has {}",
            model.weights.len(),
            x.n_cols()
        )));
    }
    Ok((0..x.n_rows())
        .map(|i| if model.decision(x, i) >= 0.0 { 1.0 } else { -1.0 })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchOptions {
    pub c_grid: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GridSearchOptions {
    fn default() -> Self {
        Self {
            c_grid: DEFAULT_C_GRID.to_vec(),
            folds: DEFAULT_FOLDS,
            seed: 0,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

impl GridSearchOptions {
    pub fn validate(&self) -> Result<()> {
        if self.c_grid.is_empty() {
            return Err(DciError::Config("empty C grid".into()));
        }
        if let Some(c) = self.c_grid.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(DciError::Config(format!("C grid value {c} is not positive")));
        }
        if self.folds < 2 {
            return Err(DciError::Config(format!("need at least 2 folds, got {}", self.folds)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) || self.max_iter == 0 {
            return Err(DciError::Config("solver tolerance and iteration cap must be positive".into()));
        }
        Ok(())
    }

    fn params(&self, c: f64) -> SvmParams {
        SvmParams {
            c,
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvScore {
    pub c: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best_c: f64,
    pub cv_accuracy: Vec<CvScore>,
    pub folds: usize,
    /// Refit on all training data at `best_c`.
    pub model: SvmModel,
}

/// Seeded stratified fold assignment: each class is shuffled independently
/// and dealt round-robin across `k` folds.
pub fn stratified_folds(y: &[f64], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(DciError::Config(format!("need at least 2 folds, got {k}")));
    }
    let (pos, neg) = check_labels(y)?;
    if pos < k || neg < k {
        return Err(DciError::Config(format!(
            "{k}-fold cross-validation needs at least {k} examples per class \
             ({pos} positive, {neg} negative); use fewer folds"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0; y.len()];
    for class in [1.0, -1.0] {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        members.shuffle(&mut rng);
        for (j, &i) in members.iter().enumerate() {
            fold[i] = j % k;
        }
    }
    Ok(fold)
}

pub fn grid_search_c<M>(x: &M, y: &[f64], options: &GridSearchOptions) -> Result<GridSearchResult>
where
    M: RowMatrix + Send,
{
    options.validate()?;
    if x.n_rows() != y.len() {
        return Err(DciError::Argument(format!("{} rows but {} labels", x.n_rows(), y.len())));
    }
    let k = options.folds;
    let fold = stratified_folds(y, k, options.seed)?;
    let splits: Vec<(M, Vec<f64>, M, Vec<f64>)> = (0..k)
        .map(|f| {
            let train: Vec<usize> = (0..y.len()).filter(|&i| fold[i] != f).collect();
            let held: Vec<usize> = (0..y.len()).filter(|&i| fold[i] == f).collect();
            (
                x.select_rows(&train),
                train.iter().map(|&i| y[i]).collect(),
                x.select_rows(&held),
                held.iter().map(|&i| y[i]).collect(),
            )
        })
        .collect();

    let cells: Vec<(usize, usize)> = (0..options.c_grid.len())
        .flat_map(|ci| (0..k).map(move |f| (ci, f)))
        .collect();
    let scores: Vec<f64> = cells
        .par_iter()
        .map(|&(ci, f)| {
            let (xt, yt, xv, yv) = &splits[f];
            let model = train_svm(xt, yt, &options.params(options.c_grid[ci]))?;
            let pred = predict(&model, xv)?;
            crate::stats::accuracy(&pred, yv)
        })
        .collect::<Result<_>>()?;

    let cv_accuracy: Vec<CvScore> = options
        .c_grid
        .iter()
        .enumerate()
        .map(|(ci, &c)| CvScore {
            c,
            accuracy: scores[ci * k..(ci + 1) * k].iter().sum::<f64>() / k as f64,
        })
        .collect();
    let best = cv_accuracy
        .iter()
        .fold(None::<&CvScore>, |best, s| match best {
            Some(b) if b.accuracy > s.accuracy || (b.accuracy == s.accuracy && b.c <= s.c) => Some(b),
            _ => Some(s),
        })
        .expect("non-empty grid");
    let best_c = best.c;
    let model = train_svm(x, y, &options.params(best_c))?;
    Ok(GridSearchResult {
        best_c,
        cv_accuracy,
        folds: k,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    fn dense(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn separable_two_points() {
        let x = dense(&[&[-1.0], &[1.0]]);
        let y = [-1.0, 1.0];
        let m = train_svm(&x, &y, &SvmParams::default()).unwrap();
        assert!(m.weights[0] > 0.0);
        assert_eq!(predict(&m, &x).unwrap(), y.to_vec());
    }

    #[test]
    fn single_class_is_a_training_error() {
        let x = dense(&[&[1.0], &[2.0]]);
        assert!(matches!(
            train_svm(&x, &[1.0, 1.0], &SvmParams::default()),
            Err(DciError::Training(_))
        ));
    }

    #[test]
    fn non_finite_features_rejected() {
        let x = dense(&[&[f64::NAN], &[2.0]]);
        assert!(matches!(
            train_svm(&x, &[1.0, -1.0], &SvmParams::default()),
            Err(DciError::Argument(_))
        ));
    }

    #[test]
    fn no_signal_gives_zero_weights() {
        let x = dense(&[&[0.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]]);
        let y = [1.0, -1.0, 1.0];
        let m = train_svm(&x, &y, &SvmParams { tol: 1e-10, ..Default::default() }).unwrap();
        assert_eq!(m.weights, vec![0.0, 0.0]);
        assert!(m.bias > 0.0);
        assert_eq!(predict(&m, &x).unwrap(), vec![1.0; 3]);
    }

    #[test]
    fn duplicated_data_with_halved_c_is_equivalent() {
        let rows: &[&[f64]] = &[&[0.3, 1.0], &[1.2, -0.4], &[-0.7, 0.2], &[-1.1, -0.9], &[0.1, 0.1]];
        let y = [1.0, 1.0, -1.0, -1.0, 1.0];
        let x = dense(rows);
        let doubled_rows: Vec<&[f64]> = rows.iter().chain(rows).copied().collect();
        let x2 = dense(&doubled_rows);
        let y2: Vec<f64> = y.iter().chain(&y).copied().collect();
        let p = SvmParams { c: 2.0, tol: 1e-13, max_iter: 100_000, seed: 3 };
        let a = train_svm(&x, &y, &p).unwrap();
        let b = train_svm(&x2, &y2, &SvmParams { c: 1.0, ..p }).unwrap();
        for i in 0..x.n_rows() {
            assert!((a.decision(&x, i) - b.decision(&x, i)).abs() < 1e-9);
        }
    }

    #[test]
    fn predict_sign_convention() {
        let m = SvmModel { weights: vec![1.0], bias: 0.0, c: 1.0 };
        let x = dense(&[&[2.0], &[-2.0], &[0.0]]);
        assert_eq!(predict(&m, &x).unwrap(), vec![1.0, -1.0, 1.0]);
        assert!(matches!(predict(&m, &dense(&[&[1.0, 1.0]])), Err(DciError::Argument(_))));
    }

    #[test]
    fn default_grid_is_powers_of_ten() {
        assert_eq!(DEFAULT_C_GRID.len(), 11);
        for (c, i) in DEFAULT_C_GRID.iter().zip(-5..=5) {
            assert_eq!(*c, format!("1e{i}").parse::<f64>().unwrap());
        }
    }

    fn separable(n: usize) -> (DenseMatrix, Vec<f64>) {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                vec![s * (2.0 + (i % 5) as f64 * 0.1), (i % 3) as f64 * 0.1]
            })
            .collect();
        let y = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        (DenseMatrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn ties_pick_smallest_c() {
        let (x, y) = separable(20);
        let r = grid_search_c(&x, &y, &GridSearchOptions::default()).unwrap();
        assert!(r.cv_accuracy.iter().all(|s| s.accuracy == 1.0));
        assert_eq!(r.best_c, 1e-5);
        assert_eq!(r.model.c, 1e-5);
        assert_eq!(r.folds, 5);
    }

    #[test]
    fn grid_search_is_deterministic() {
        let (x, y) = separable(30);
        let opts = GridSearchOptions { seed: 9, ..Default::default() };
        let a = grid_search_c(&x, &y, &opts).unwrap();
        let b = grid_search_c(&x, &y, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            stratified_folds(&y, 5, 9).unwrap(),
            stratified_folds(&y, 5, 9).unwrap()
        );
        assert!(opts.c_grid.contains(&a.best_c));
    }

    #[test]
    fn folds_are_stratified() {
        let y: Vec<f64> = (0..23).map(|i| if i < 10 { 1.0 } else { -1.0 }).collect();
        let fold = stratified_folds(&y, 5, 1).unwrap();
        for f in 0..5 {
            let pos = (0..23).filter(|&i| fold[i] == f && y[i] > 0.0).count();
            assert_eq!(pos, 2);
        }
    }

    #[test]
    fn too_few_class_members_for_folds() {
        let (x, y) = separable(6);
        let err = grid_search_c(&x, &y, &GridSearchOptions::default()).unwrap_err();
        assert!(matches!(err, DciError::Config(_)));
    }

    #[test]
    fn model_text_round_trip() {
        let m = SvmModel { weights: vec![0.5, -1.25e-3, 3.0], bias: -0.125, c: 100.0 };
        let text = m.to_text();
        assert!(text.starts_with("n_features 3\nbias -0.125\nc 100\nweights\n"));
        assert_eq!(SvmModel::from_text(&text).unwrap(), m);
        assert!(SvmModel::from_text("n_features 2\nbias 0\nc 1\nweights\n1\n").is_err());
        assert!(SvmModel::from_text("bias 0\n").is_err());
    }
}
