//! Cross-validated estimation of per-observation information loss and
//! selection of the qualifying dimension.
//!
//! For every candidate K and every fold, a codec is fitted on the training
//! rows and each held-out row is reconstructed; its loss goes into row i,
//! column K of the cross-validated loss matrix. The same fold plan serves
//! every K. The qualifying dimension is the smallest K whose attainment
//! quantile of held-out losses is strictly below the tolerance.

mod folds;
mod output;
mod quantile;

use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;

pub use folds::{make_folds, FoldPlan};
pub use output::{fmt_float, read_metadata, write_report, write_summary_csv};
pub use quantile::empirical_quantile;

use crate::data::{subsample, DataMatrix};
use crate::error::{ClareError, Result};
use crate::learners::{Codec, Learner};
use crate::rng::mix64;

/// Equally spaced candidate latent dimensions `from, from+by, ... <= to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KGrid {
    pub from: usize,
    pub to: usize,
    pub by: usize,
}

impl KGrid {
    pub fn new(from: usize, to: usize, by: usize) -> Result<Self> {
        if from == 0 || by == 0 || from > to {
            return Err(ClareError::InvalidArgument(format!(
                "latent dimension grid from={from} to={to} by={by} is empty or invalid"
            )));
        }
        Ok(KGrid { from, to, by })
    }

    pub fn values(&self) -> Vec<usize> {
        (self.from..=self.to).step_by(self.by).collect()
    }

    pub fn len(&self) -> usize {
        (self.to - self.from) / self.by + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Tolerance ε, attainment rate 1−α and the extra plotted quantile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Criterion {
    pub tolerance: f64,
    pub attainment: f64,
    pub user_quantile: f64,
}

impl Default for Criterion {
    fn default() -> Self {
        Criterion {
            tolerance: 0.05,
            attainment: 0.95,
            user_quantile: 0.9,
        }
    }
}

impl Criterion {
    pub fn new(tolerance: f64, attainment: f64, user_quantile: f64) -> Result<Self> {
        let c = Criterion {
            tolerance,
            attainment,
            user_quantile,
        };
        if !(tolerance > 0.0 && tolerance < 1.0) {
            return Err(ClareError::InvalidArgument(format!(
                "tolerance level {tolerance} must be in (0, 1)"
            )));
        }
        if !(attainment > 0.0 && attainment <= 1.0) {
            return Err(ClareError::InvalidArgument(format!(
                "attainment rate {attainment} must be in (0, 1]"
            )));
        }
        if !(user_quantile > 0.0 && user_quantile < 1.0) {
            return Err(ClareError::InvalidArgument(format!(
                "cvqlines quantile {user_quantile} must be in (0, 1)"
            )));
        }
        Ok(c)
    }
}

/// Column-major-by-K loss matrices: `cv[i * n_k + j]` is the held-out loss
/// of observation i at the j-th grid value.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSurface {
    pub cv: Vec<f64>,
    pub train: Vec<f64>,
    pub ks: Vec<usize>,
    pub k_grid: KGrid,
    pub fold_plan: FoldPlan,
    pub row_ids: Vec<String>,
}

impl LossSurface {
    pub fn n(&self) -> usize {
        self.fold_plan.n()
    }

    pub fn n_k(&self) -> usize {
        self.ks.len()
    }

    pub fn cv_at(&self, i: usize, j: usize) -> f64 {
        self.cv[i * self.n_k() + j]
    }

    pub fn train_at(&self, i: usize, j: usize) -> f64 {
        self.train[i * self.n_k() + j]
    }

    pub fn cv_column(&self, j: usize) -> Vec<f64> {
        (0..self.n()).map(|i| self.cv_at(i, j)).collect()
    }

    pub fn train_column(&self, j: usize) -> Vec<f64> {
        (0..self.n()).map(|i| self.train_at(i, j)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub k: usize,
    pub mean_train: f64,
    pub mean_cv: f64,
    pub min_cv: f64,
    pub max_cv: f64,
    pub q_attain: f64,
    pub q_user: f64,
}

/// `round(T / qd)`, displayed as `R:1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompressionRatio(pub u64);

impl std::fmt::Display for CompressionRatio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:1", self.0)
    }
}

pub fn compression_ratio(t: usize, qd: usize) -> Result<CompressionRatio> {
    if qd == 0 {
        return Err(ClareError::InvalidArgument("qualifying dimension must be >= 1".into()));
    }
    Ok(CompressionRatio((t as f64 / qd as f64).round() as u64))
}

/// Smallest K whose attainment quantile is strictly below the tolerance.
pub fn qualifying_dimension(summary: &[SummaryRow], criterion: &Criterion) -> Option<usize> {
    summary
        .iter()
        .find(|row| row.q_attain < criterion.tolerance)
        .map(|row| row.k)
}

#[derive(Debug, Clone)]
pub struct EvaluationReport {
    pub learner: String,
    pub learner_config: Vec<(String, String)>,
    pub t: usize,
    pub criterion: Criterion,
    pub surface: LossSurface,
    pub summary: Vec<SummaryRow>,
    pub qualifying_dimension: Option<usize>,
    pub compression_ratio: Option<CompressionRatio>,
    pub final_codec: Option<Codec>,
    /// Warnings raised during the run, such as grid clamping.
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct Progress {
    pub k: usize,
    pub fold: usize,
    pub n_folds: usize,
    pub elapsed: Duration,
}

pub type ProgressFn = dyn Fn(&Progress) + Send + Sync;

#[derive(Clone, Default)]
pub struct RunOptions {
    /// Worker threads; 0 uses the available parallelism, 1 runs inline.
    pub threads: usize,
    pub progress: Option<Arc<ProgressFn>>,
    /// Skip the full-data refit at the qualifying dimension.
    pub skip_refit: bool,
}

impl std::fmt::Debug for RunOptions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RunOptions")
            .field("threads", &self.threads)
            .field("progress", &self.progress.is_some())
            .field("skip_refit", &self.skip_refit)
            .finish()
    }
}

/// Seed handed to the learner for one fold. Learners that need randomness
/// derive per-K streams from it, so every (seed, K, fold) task is
/// independent of scheduling.
fn task_seed(seed: u64, fold: u64) -> u64 {
    mix64(seed ^ mix64(fold.wrapping_add(1)))
}

const REFIT_FOLD: u64 = u64::MAX;

struct TaskOutput {
    fold: usize,
    /// (grid index, held-out losses in validation-row order, training losses
    /// in training-row order)
    columns: Vec<(usize, Vec<f64>, Vec<f64>)>,
}

fn run_tasks<T, F>(threads: usize, tasks: &[T], f: F) -> Result<Vec<TaskOutput>>
where
    T: Sync,
    F: Fn(&T) -> Result<TaskOutput> + Sync + Send,
{
    if threads == 1 {
        return tasks.iter().map(&f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| ClareError::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| tasks.par_iter().map(&f).collect())
}

fn row_losses(codec: &Codec, data: &DataMatrix, rows: &[usize]) -> Result<Vec<f64>> {
    rows.iter().map(|&i| codec.loss(data.row(i))).collect()
}

/// Run the full cross-validation loop for one learner.
pub fn run_clare(
    data: &DataMatrix,
    learner: &dyn Learner,
    k_grid: KGrid,
    fold_plan: &FoldPlan,
    criterion: Criterion,
    options: &RunOptions,
) -> Result<EvaluationReport> {
    if fold_plan.n() != data.n() {
        return Err(ClareError::Shape {
            context: "fold plan vs data rows".into(),
            expected: data.n(),
            actual: fold_plan.n(),
        });
    }
    let splits: Vec<(Vec<usize>, Vec<usize>)> =
        (0..fold_plan.k_folds).map(|f| fold_plan.split(f)).collect();
    let min_train = splits.iter().map(|(tr, _)| tr.len()).min().unwrap_or(0);
    if min_train < 2 {
        return Err(ClareError::InvalidArgument(format!(
            "every training fold needs at least 2 rows; smallest has {min_train}"
        )));
    }

    let mut notes = Vec::new();
    let cap = learner.max_latent_dim(min_train, data.grid());
    if k_grid.from > cap {
        return Err(ClareError::InvalidArgument(format!(
            "infeasible grid: {} supports K <= {cap} with {min_train} training rows, grid starts at {}",
            learner.name(),
            k_grid.from
        )));
    }
    let mut k_grid = k_grid;
    if k_grid.to > cap {
        let msg = format!(
            "latent_dim_to {} exceeds the {} maximum {cap}; clamped",
            k_grid.to,
            learner.name()
        );
        log::warn!("{msg}");
        notes.push(msg);
        k_grid.to = cap;
    }
    let ks = k_grid.values();
    let n_k = ks.len();
    let n = data.n();
    let n_folds = fold_plan.k_folds;
    let seed = fold_plan.seed;

    let threads = match options.threads {
        0 => std::thread::available_parallelism().map_or(1, |p| p.get()),
        t => t,
    };

    let fit_fold = |fold: usize, js: &[usize]| -> Result<TaskOutput> {
        let started = Instant::now();
        let (train_rows, val_rows) = &splits[fold];
        let train = data.select_rows(train_rows)?;
        let fold_ks: Vec<usize> = js.iter().map(|&j| ks[j]).collect();
        let annotate = |k: usize| {
            move |e: ClareError| ClareError::Fit {
                k,
                fold,
                source: Box::new(e),
            }
        };
        let kmax = *fold_ks.iter().max().unwrap();
        let codecs = learner
            .fit_grid(&train, &fold_ks, task_seed(seed, fold as u64))
            .map_err(annotate(kmax))?;
        let mut columns = Vec::with_capacity(js.len());
        for (&j, codec) in js.iter().zip(&codecs) {
            let cv = row_losses(codec, data, val_rows).map_err(annotate(ks[j]))?;
            let tr = row_losses(codec, data, train_rows).map_err(annotate(ks[j]))?;
            columns.push((j, cv, tr));
            if let Some(progress) = &options.progress {
                progress(&Progress {
                    k: ks[j],
                    fold,
                    n_folds,
                    elapsed: started.elapsed(),
                });
            }
        }
        Ok(TaskOutput { fold, columns })
    };

    let outputs = if learner.nested() {
        let all: Vec<usize> = (0..n_k).collect();
        let tasks: Vec<usize> = (0..n_folds).collect();
        run_tasks(threads, &tasks, |&fold| fit_fold(fold, &all))?
    } else {
        let tasks: Vec<(usize, usize)> = (0..n_folds)
            .flat_map(|f| (0..n_k).map(move |j| (f, j)))
            .collect();
        run_tasks(threads, &tasks, |&(fold, j)| fit_fold(fold, &[j]))?
    };

    let mut cv = vec![f64::NAN; n * n_k];
    let mut train_sum = vec![0.0; n * n_k];
    let mut train_count = vec![0usize; n * n_k];
    // outputs are in task order, so sums accumulate fold by fold
    for out in &outputs {
        let (train_rows, val_rows) = &splits[out.fold];
        for (j, cv_col, tr_col) in &out.columns {
            for (&i, &l) in val_rows.iter().zip(cv_col) {
                cv[i * n_k + j] = l;
            }
            for (&i, &l) in train_rows.iter().zip(tr_col) {
                train_sum[i * n_k + j] += l;
                train_count[i * n_k + j] += 1;
            }
        }
    }
    debug_assert!(cv.iter().all(|v| v.is_finite()));
    let train: Vec<f64> = train_sum
        .iter()
        .zip(&train_count)
        .map(|(s, &c)| s / c as f64)
        .collect();

    let surface = LossSurface {
        cv,
        train,
        ks: ks.clone(),
        k_grid,
        fold_plan: fold_plan.clone(),
        row_ids: data.row_ids().to_vec(),
    };
    let summary = summarize(&surface, &criterion)?;
    let qd = qualifying_dimension(&summary, &criterion);
    let final_codec = match qd {
        Some(k) if !options.skip_refit => Some(
            learner
                .fit(data, k, task_seed(seed, REFIT_FOLD))
                .map_err(|e| ClareError::Fit {
                    k,
                    fold: n_folds,
                    source: Box::new(e),
                })?,
        ),
        _ => None,
    };
    Ok(EvaluationReport {
        learner: learner.name(),
        learner_config: learner.config(),
        t: data.t(),
        criterion,
        surface,
        summary,
        qualifying_dimension: qd,
        compression_ratio: qd.map(|k| compression_ratio(data.t(), k)).transpose()?,
        final_codec,
        notes,
    })
}

/// Per-K summary statistics of a loss surface.
pub fn summarize(surface: &LossSurface, criterion: &Criterion) -> Result<Vec<SummaryRow>> {
    let n = surface.n() as f64;
    (0..surface.n_k())
        .map(|j| {
            let cv = surface.cv_column(j);
            let tr = surface.train_column(j);
            Ok(SummaryRow {
                k: surface.ks[j],
                mean_train: tr.iter().sum::<f64>() / n,
                mean_cv: cv.iter().sum::<f64>() / n,
                min_cv: cv.iter().copied().fold(f64::INFINITY, f64::min),
                max_cv: cv.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                q_attain: empirical_quantile(&cv, criterion.attainment)?,
                q_user: empirical_quantile(&cv, criterion.user_quantile)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SampleSizeReport {
    pub n: usize,
    pub learner: String,
    pub report: EvaluationReport,
}

/// Successively subsample the data to each size in `sizes` (descending)
/// and evaluate every learner with leave-one-out folds.
pub fn sample_size_experiment(
    data: &DataMatrix,
    sizes: &[usize],
    learners: &[&dyn Learner],
    k_grid: KGrid,
    criterion: Criterion,
    seed: u64,
    options: &RunOptions,
) -> Result<Vec<SampleSizeReport>> {
    if sizes.is_empty() || sizes.windows(2).any(|w| w[0] <= w[1]) {
        return Err(ClareError::InvalidArgument(format!(
            "sample sizes must be strictly descending, got {sizes:?}"
        )));
    }
    let mut current = data.clone();
    let mut reports = Vec::new();
    for &n in sizes {
        if n != current.n() {
            current = subsample(&current, n, seed)?;
        }
        let plan = make_folds(n, n, seed)?;
        for learner in learners {
            let report = run_clare(&current, *learner, k_grid, &plan, criterion, options)?;
            reports.push(SampleSizeReport {
                n,
                learner: learner.name(),
                report,
            });
        }
    }
    Ok(reports)
}
