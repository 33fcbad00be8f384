//! Monte-Carlo orchestration for `simulate` and `roc`.
//!
//! Replicate `r` of every grid cell uses seed `base ^ r` for its design,
//! its random transform directions and its folds. Replicates may run on
//! several threads; results are always reduced in replicate order.

use rayon::prelude::*;
use serde::Serialize;

use super::config::{transform_param, ExperimentConfig, GridCell, MethodSpec};
use super::report::{fmt_fraction, fmt_opt, fmt_percent, fmt_sci, header_with, Table, RESULT_COLUMNS, ROC_COLUMNS};
use crate::diagnostics::{cmse, roc_prepared, support_metrics, MetricsRecord};
use crate::error::Result;
use crate::linalg::center_columns;
use crate::rng::replicate_seed;
use crate::simgen::{generate, SimInstance};
use crate::solver::{fit_path, fit_penalized, FitResult, PathStop, Penalty};
use crate::transform::{prepare, PreparedDesign};
use crate::tuning::{resolve_penalty, select_cv, select_ic_prepared, Criterion};

/// The fit chosen by one criterion in one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub criterion: Criterion,
    pub lambda: f64,
    pub support: Vec<usize>,
    pub metrics: MetricsRecord,
}

/// Runs `f` on a dedicated pool of `jobs` threads.
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool")
        .install(f)
}

struct MethodSetup {
    prep: PreparedDesign,
    penalty: Penalty,
    path: crate::solver::LambdaPath,
}

fn setup(inst: &SimInstance, method: &MethodSpec, cfg: &ExperimentConfig, seed: u64) -> Result<MethodSetup> {
    let (xc, yc, _) = center_columns(&inst.x, &inst.y)?;
    let prep = prepare(&xc, &yc, &method.transform.with_seed(seed))?;
    let penalty = resolve_penalty(method.penalty, &prep, &cfg.path, seed, &cfg.solver)?;
    let path = cfg.path.path_for(&prep, &penalty)?;
    Ok(MethodSetup { prep, penalty, path })
}

/// The full-data fit at path index `idx`, extending the path when cross
/// validation reached further than the full-data path did.
fn fit_at(s: &MethodSetup, fits: &[FitResult], idx: usize, cfg: &ExperimentConfig) -> Result<FitResult> {
    if let Some(f) = fits.get(idx) {
        return Ok(f.clone());
    }
    let lambda = s.path.values()[idx];
    let warm = fits.last().filter(|_| s.penalty.is_convex()).map(|f| f.beta.as_slice());
    fit_penalized(&s.prep.design, &s.prep.response, lambda, &s.penalty, warm, &cfg.solver)
}

/// Fits one method on one replicate and scores the fit picked by every
/// configured criterion.
pub fn evaluate_method(
    inst: &SimInstance,
    method: &MethodSpec,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<Vec<Selection>> {
    let s = setup(inst, method, cfg, seed)?;
    let n = s.prep.design.nrows();
    let fits = fit_path(&s.prep.design, &s.prep.scoring_response(), &s.path, &s.penalty, &cfg.solver, PathStop::for_design(&s.prep.design))?;
    let p = inst.x.ncols();
    cfg.criteria
        .iter()
        .map(|&criterion| {
            let idx = match criterion {
                Criterion::Cv => select_cv(&s.prep, &s.path, &s.penalty, cfg.folds, seed, &cfg.solver)?.selected_index,
                ic => select_ic_prepared(&s.prep, &fits, ic)?.selected_index,
            };
            let fit = fit_at(&s, &fits, idx, cfg)?;
            let mut metrics = support_metrics(&fit.support, &inst.support_true, p)?;
            if cfg.cmse && !fit.support.is_empty() && n >= cfg.folds * (fit.support.len() + 2) {
                metrics.cmse = Some(cmse(&inst.x, &inst.y, &fit.support, cfg.folds, seed)?);
            }
            Ok(Selection {
                criterion,
                lambda: fit.lambda,
                support: fit.support,
                metrics,
            })
        })
        .collect()
}

/// Mean metrics for one (cell, method, criterion), or the error that
/// stopped it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub cell: GridCell,
    pub method: MethodSpec,
    pub criterion: Criterion,
    pub replicates: usize,
    pub mean_tpr: Option<f64>,
    pub mean_fpr: Option<f64>,
    pub mean_cmse: Option<f64>,
    pub mean_df: Option<f64>,
    pub error: Option<String>,
}

impl ResultRow {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

pub fn cell_fields(experiment: &str, cell: &GridCell, method: &MethodSpec) -> Vec<String> {
    vec![
        experiment.to_string(),
        cell.model.to_string(),
        cell.n.to_string(),
        cell.p.to_string(),
        cell.k.to_string(),
        cell.rho.map(|r| r.to_string()).unwrap_or_default(),
        cell.coef.to_string(),
        cell.heteroscedastic.to_string(),
        method.transform.name().to_string(),
        transform_param(&method.transform),
        method.penalty.to_string(),
    ]
}

fn status(error: &Option<String>) -> String {
    match error {
        None => "ok".to_string(),
        Some(e) => format!("error: {e}"),
    }
}

pub fn results_table(experiment: &str, rows: &[ResultRow]) -> Table {
    let mut t = Table::new(&header_with(&RESULT_COLUMNS));
    for r in rows {
        let mut rec = cell_fields(experiment, &r.cell, &r.method);
        rec.extend([
            r.criterion.to_string(),
            r.replicates.to_string(),
            fmt_opt(r.mean_tpr, fmt_fraction),
            fmt_opt(r.mean_fpr, fmt_fraction),
            fmt_opt(r.mean_tpr, fmt_percent),
            fmt_opt(r.mean_fpr, fmt_percent),
            fmt_opt(r.mean_cmse, fmt_fraction),
            fmt_opt(r.mean_df, fmt_fraction),
            status(&r.error),
        ]);
        t.push(rec);
    }
    t
}

type PerReplicate<T> = Vec<Result<Vec<Result<T>>>>;

/// Method `mi`'s outcome in every replicate, with errors rendered.
fn method_outcomes<T>(per_rep: &PerReplicate<T>, mi: usize) -> Vec<std::result::Result<&T, String>> {
    per_rep
        .iter()
        .map(|rep| match rep {
            Ok(methods) => methods[mi].as_ref().map_err(|e| e.to_string()),
            Err(e) => Err(e.to_string()),
        })
        .collect()
}

fn run_replicates<T: Send>(
    cfg: &ExperimentConfig,
    cell: &GridCell,
    work: impl Fn(&SimInstance, u64) -> T + Sync,
) -> Vec<Result<T>> {
    (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let seed = replicate_seed(cfg.seed, r as u64);
            let inst = generate(cell.model, &cell.params(), seed)?;
            Ok(work(&inst, seed))
        })
        .collect()
}

fn first_error<T>(results: &[std::result::Result<T, String>]) -> Option<String> {
    results
        .iter()
        .enumerate()
        .find_map(|(r, res)| res.as_ref().err().map(|e| format!("replicate {r}: {e}")))
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut count) = (0.0, 0usize);
    for v in values {
        sum += v;
        count += 1;
    }
    (count > 0).then(|| sum / count as f64)
}

/// Runs every grid cell and method; one row per (cell, method, criterion).
/// Must be called inside the thread pool that should do the work.
pub fn simulate_rows(cfg: &ExperimentConfig) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for cell in &cfg.grid {
        let per_rep: PerReplicate<Vec<Selection>> = run_replicates(cfg, cell, |inst, seed| {
            cfg.methods.iter().map(|m| evaluate_method(inst, m, cfg, seed)).collect()
        });
        for (mi, method) in cfg.methods.iter().enumerate() {
            let outcomes = method_outcomes(&per_rep, mi);
            let error = first_error(&outcomes);
            for (ci, &criterion) in cfg.criteria.iter().enumerate() {
                let sel: Vec<&Selection> = if error.is_none() {
                    outcomes.iter().map(|o| &o.as_ref().unwrap()[ci]).collect()
                } else {
                    Vec::new()
                };
                rows.push(ResultRow {
                    cell: *cell,
                    method: *method,
                    criterion,
                    replicates: cfg.replicates,
                    mean_tpr: mean(sel.iter().map(|s| s.metrics.tpr)),
                    mean_fpr: mean(sel.iter().map(|s| s.metrics.fpr)),
                    mean_cmse: mean(sel.iter().filter_map(|s| s.metrics.cmse)),
                    mean_df: mean(sel.iter().map(|s| s.support.len() as f64)),
                    error: error.clone(),
                });
            }
        }
    }
    rows
}

/// Mean ROC point at one path index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocRow {
    pub cell: GridCell,
    pub method: MethodSpec,
    pub lambda_index: usize,
    pub lambda_ratio: Option<f64>,
    pub mean_fpr: Option<f64>,
    pub mean_tpr: Option<f64>,
    pub mean_df: Option<f64>,
    pub replicates: usize,
    pub error: Option<String>,
}

/// Per (cell, method): mean (FPR, TPR) at each path index over replicates.
/// Paths are never cut short here so every replicate has the same length.
pub fn roc_rows(cfg: &ExperimentConfig) -> Vec<RocRow> {
    let mut rows = Vec::new();
    for cell in &cfg.grid {
        let per_rep: PerReplicate<Vec<(f64, f64, f64, usize)>> = run_replicates(cfg, cell, |inst, seed| {
            cfg.methods
                .iter()
                .map(|m| {
                    let s = setup(inst, m, cfg, seed)?;
                    let pts = roc_prepared(&s.prep, &inst.support_true, &s.path, &s.penalty, &cfg.solver)?;
                    let lmax = s.path.lambda_max();
                    Ok(pts.into_iter().map(|p| (p.lambda / lmax, p.fpr, p.tpr, p.df)).collect())
                })
                .collect()
        });
        for (mi, method) in cfg.methods.iter().enumerate() {
            let outcomes = method_outcomes(&per_rep, mi);
            let error = first_error(&outcomes);
            if let Some(e) = error {
                rows.push(RocRow {
                    cell: *cell,
                    method: *method,
                    lambda_index: 0,
                    lambda_ratio: None,
                    mean_fpr: None,
                    mean_tpr: None,
                    mean_df: None,
                    replicates: cfg.replicates,
                    error: Some(e),
                });
                continue;
            }
            let curves: Vec<&Vec<(f64, f64, f64, usize)>> = outcomes.into_iter().map(|o| o.unwrap()).collect();
            let len = curves.iter().map(|c| c.len()).min().unwrap_or(0);
            for i in 0..len {
                rows.push(RocRow {
                    cell: *cell,
                    method: *method,
                    lambda_index: i,
                    lambda_ratio: mean(curves.iter().map(|c| c[i].0)),
                    mean_fpr: mean(curves.iter().map(|c| c[i].1)),
                    mean_tpr: mean(curves.iter().map(|c| c[i].2)),
                    mean_df: mean(curves.iter().map(|c| c[i].3 as f64)),
                    replicates: curves.len(),
                    error: None,
                });
            }
        }
    }
    rows
}

pub fn roc_table(experiment: &str, rows: &[RocRow]) -> Table {
    let mut t = Table::new(&header_with(&ROC_COLUMNS));
    for r in rows {
        let mut rec = cell_fields(experiment, &r.cell, &r.method);
        rec.extend([
            r.lambda_index.to_string(),
            fmt_opt(r.lambda_ratio, fmt_sci),
            fmt_opt(r.mean_fpr, fmt_fraction),
            fmt_opt(r.mean_tpr, fmt_fraction),
            fmt_opt(r.mean_df, fmt_fraction),
            r.replicates.to_string(),
            status(&r.error),
        ]);
        t.push(rec);
    }
    t
}

/// Step interpolation of a mean ROC curve: the largest TPR among points with
/// FPR at most `fpr`.
pub fn tpr_at_fpr(points: &[(f64, f64)], fpr: f64) -> f64 {
    points
        .iter()
        .filter(|&&(f, _)| f <= fpr + 1e-12)
        .map(|&(_, t)| t)
        .fold(0.0, f64::max)
}
