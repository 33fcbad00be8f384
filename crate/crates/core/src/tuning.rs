//! Choosing λ along a path: K-fold cross-validation, BIC and GIC.
//!
//! All selectors work on a [`PreparedDesign`], so a transform is computed
//! once on the full data before any row split. Ties go to the larger λ.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, dot, Matrix};
use crate::rng::{stream, Stream};
use crate::solver::{
    self, fit_path, lambda_path_for, FitResult, LambdaPath, PathStop, Penalty, SolverOptions,
};
use crate::transform::PreparedDesign;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Cv,
    Bic,
    Gic,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Cv => "cv",
            Criterion::Bic => "bic",
            Criterion::Gic => "gic",
        })
    }
}

impl FromStr for Criterion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cv" | "5-cv" | "5cv" => Ok(Criterion::Cv),
            "bic" => Ok(Criterion::Bic),
            "gic" => Ok(Criterion::Gic),
            _ => Err(Error::arg(format!("unknown criterion `{s}`"))),
        }
    }
}

pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct TuningReport {
    pub criterion: Criterion,
    pub lambdas: Vec<f64>,
    pub scores: Vec<f64>,
    pub selected_index: usize,
    pub selected_lambda: f64,
    pub folds: Option<usize>,
    pub fold_seed: Option<u64>,
}

/// Index of the smallest score, earliest index on ties.
pub fn argmin_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s < scores[best] {
            best = i;
        }
    }
    best
}

/// Gaussian information criterion with `RSS` floored at `ε·‖y‖²`.
pub fn ic_score(criterion: Criterion, rss: f64, df: usize, n: usize, p: usize, y_norm2: f64) -> f64 {
    let nf = n as f64;
    let rss = rss.max(f64::EPSILON * y_norm2).max(f64::MIN_POSITIVE);
    let fit = nf * (rss / nf).ln();
    let df = df as f64;
    match criterion {
        Criterion::Bic => fit + df * nf.ln(),
        Criterion::Gic => fit + df * nf.ln().ln() * (p as f64).ln(),
        Criterion::Cv => panic!("cross-validation has no closed-form score"),
    }
}

/// Scores already-computed path fits by BIC or GIC.
pub fn select_ic_from_fits(
    design: &Matrix,
    response: &[f64],
    fits: &[FitResult],
    criterion: Criterion,
) -> Result<TuningReport> {
    score_ic(design, response, design.nrows(), fits, criterion)
}

/// BIC or GIC for fits on a prepared design. A PROD fit is the regression
/// of `(I − P_Z)·y` on `(I − P_Z)·X`, which after rotating onto the range
/// of `I − P_Z` is an ordinary Gaussian regression with `n − q` rows, so
/// residuals are taken against `(I − P_Z)·y` and the sample size is `n − q`.
pub fn select_ic_prepared(prep: &PreparedDesign, fits: &[FitResult], criterion: Criterion) -> Result<TuningReport> {
    let q = prep.z_basis.as_ref().map_or(0, |z| z.ncols());
    let rows = prep.design.nrows().saturating_sub(q).max(1);
    score_ic(&prep.design, &prep.scoring_response(), rows, fits, criterion)
}

fn score_ic(
    design: &Matrix,
    response: &[f64],
    rows: usize,
    fits: &[FitResult],
    criterion: Criterion,
) -> Result<TuningReport> {
    if criterion == Criterion::Cv {
        return Err(Error::arg("use select_cv for cross-validation"));
    }
    if fits.is_empty() {
        return Err(Error::arg("no fits to score"));
    }
    let p = design.ncols();
    let y2 = dot(response, response);
    let scores: Vec<f64> = fits
        .iter()
        .map(|f| {
            let rss = solver::residual_sum_of_squares(design, response, &f.beta);
            ic_score(criterion, rss, f.df(), rows, p, y2)
        })
        .collect();
    let lambdas: Vec<f64> = fits.iter().map(|f| f.lambda).collect();
    let selected_index = argmin_first(&scores);
    Ok(TuningReport {
        criterion,
        selected_lambda: lambdas[selected_index],
        lambdas,
        scores,
        selected_index,
        folds: None,
        fold_seed: None,
    })
}

/// Fits the path on the prepared design and selects by BIC or GIC. PROD
/// paths are fitted against `(I − P_Z)·y`, which leaves the coefficients
/// unchanged and makes the explained-deviance stop refer to the same
/// regression that is scored.
pub fn select_ic(
    prep: &PreparedDesign,
    path: &LambdaPath,
    penalty: &Penalty,
    criterion: Criterion,
    opts: &SolverOptions,
) -> Result<(TuningReport, Vec<FitResult>)> {
    let fits = fit_path(
        &prep.design,
        &prep.scoring_response(),
        path,
        penalty,
        opts,
        PathStop::for_design(&prep.design),
    )?;
    let report = select_ic_prepared(prep, &fits, criterion)?;
    Ok((report, fits))
}

/// Fold label per row: a seeded shuffle of `0..n` dealt round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::arg(format!("need at least two folds, got {folds}")));
    }
    if n < folds {
        return Err(Error::arg(format!("{n} rows cannot fill {folds} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(seed, Stream::Folds));
    let mut label = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        label[row] = pos % folds;
    }
    Ok(label)
}

pub fn select_cv(
    prep: &PreparedDesign,
    path: &LambdaPath,
    penalty: &Penalty,
    folds: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<TuningReport> {
    let labels = fold_assignment(prep.design.nrows(), folds, seed)?;
    let mut report = select_cv_with_folds(prep, path, penalty, &labels, opts)?;
    report.fold_seed = Some(seed);
    Ok(report)
}

/// Cross-validation with an explicit fold label per row.
///
/// Each training split is re-centered on its own rows; validation rows are
/// predicted with the training intercept. When the path is cut short on some
/// fold, scores cover only the λ values reached on every fold.
pub fn select_cv_with_folds(
    prep: &PreparedDesign,
    path: &LambdaPath,
    penalty: &Penalty,
    labels: &[usize],
    opts: &SolverOptions,
) -> Result<TuningReport> {
    let n = prep.design.nrows();
    if labels.len() != n {
        return Err(Error::dim(format!("{} fold labels for {n} rows", labels.len())));
    }
    let folds = labels.iter().copied().max().map_or(0, |m| m + 1);
    if folds < 2 {
        return Err(Error::arg("need at least two folds"));
    }
    let mut totals: Vec<f64> = vec![0.0; path.len()];
    let mut reached = path.len();
    for f in 0..folds {
        let (train, valid): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| labels[i] != f);
        if valid.len() < 2 || train.len() < 2 {
            return Err(Error::Fold {
                fold: f,
                reason: format!("{} validation and {} training rows", valid.len(), train.len()),
            });
        }
        let scores = fold_scores(prep, path, penalty, &train, &valid, opts).map_err(|e| Error::Fold {
            fold: f,
            reason: e.to_string(),
        })?;
        reached = reached.min(scores.len());
        for (t, s) in totals.iter_mut().zip(&scores) {
            *t += s;
        }
    }
    let scores: Vec<f64> = totals[..reached].iter().map(|t| t / folds as f64).collect();
    let lambdas = path.values()[..reached].to_vec();
    let selected_index = argmin_first(&scores);
    Ok(TuningReport {
        criterion: Criterion::Cv,
        selected_lambda: lambdas[selected_index],
        lambdas,
        scores,
        selected_index,
        folds: Some(folds),
        fold_seed: None,
    })
}

fn fold_scores(
    prep: &PreparedDesign,
    path: &LambdaPath,
    penalty: &Penalty,
    train: &[usize],
    valid: &[usize],
    opts: &SolverOptions,
) -> Result<Vec<f64>> {
    let xt = prep.design.select_rows(train);
    let yt: Vec<f64> = train.iter().map(|&i| prep.response[i]).collect();
    let (xc, yc, info) = linalg::center_columns(&xt, &yt)?;
    let fits = fit_path(&xc, &yc, path, penalty, opts, PathStop::for_design(&xc))?;
    let xv = prep.design.select_rows(valid);
    let yv: Vec<f64> = valid.iter().map(|&i| prep.response[i]).collect();
    Ok(fits
        .iter()
        .map(|fit| {
            let pred = info.predict(&xv, &fit.beta);
            let sse: f64 = yv.iter().zip(&pred).map(|(a, b)| (a - b) * (a - b)).sum();
            sse / yv.len() as f64
        })
        .collect())
}

/// Path settings shared by the experiment drivers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathSettings {
    pub n_lambda: usize,
    /// `None` picks [`solver::default_ratio`].
    pub ratio: Option<f64>,
}

impl Default for PathSettings {
    fn default() -> Self {
        PathSettings {
            n_lambda: solver::DEFAULT_N_LAMBDA,
            ratio: None,
        }
    }
}

impl PathSettings {
    pub fn path_for(&self, prep: &PreparedDesign, penalty: &Penalty) -> Result<LambdaPath> {
        let (n, p) = prep.design.shape();
        let ratio = self.ratio.unwrap_or_else(|| solver::default_ratio(n, p));
        lambda_path_for(&prep.design, &prep.response, penalty, self.n_lambda, ratio)
    }
}

/// Adaptive-Lasso weights from a Lasso tuned by K-fold CV on the same design.
pub fn adaptive_weights_cv(
    prep: &PreparedDesign,
    settings: &PathSettings,
    folds: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<Vec<f64>> {
    let path = settings.path_for(prep, &Penalty::Lasso)?;
    let report = select_cv(prep, &path, &Penalty::Lasso, folds, seed, opts)?;
    let init = solver::fit_lasso(&prep.design, &prep.response, report.selected_lambda, None, opts)?;
    Ok(solver::adaptive_weights(&init.beta))
}

/// Resolves a penalty kind into a concrete penalty for `prep`, computing
/// adaptive weights when needed.
pub fn resolve_penalty(
    kind: PenaltyKind,
    prep: &PreparedDesign,
    settings: &PathSettings,
    seed: u64,
    opts: &SolverOptions,
) -> Result<Penalty> {
    Ok(match kind {
        PenaltyKind::Lasso => Penalty::Lasso,
        PenaltyKind::Scad => Penalty::scad(),
        PenaltyKind::Mcp => Penalty::mcp(),
        PenaltyKind::AdaLasso => Penalty::AdaptiveLasso {
            weights: adaptive_weights_cv(prep, settings, DEFAULT_FOLDS, seed, opts)?,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    Lasso,
    Scad,
    Mcp,
    #[serde(rename = "adalasso")]
    AdaLasso,
}

impl fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PenaltyKind::Lasso => "lasso",
            PenaltyKind::Scad => "scad",
            PenaltyKind::Mcp => "mcp",
            PenaltyKind::AdaLasso => "adalasso",
        })
    }
}

impl FromStr for PenaltyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lasso" => Ok(PenaltyKind::Lasso),
            "scad" => Ok(PenaltyKind::Scad),
            "mcp" => Ok(PenaltyKind::Mcp),
            "adalasso" | "adaptive" | "adaptive-lasso" => Ok(PenaltyKind::AdaLasso),
            _ => Err(Error::arg(format!("unknown penalty `{s}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use crate::simgen::{gen_model1, CoefMode};
    use crate::transform::{prepare, TransformSpec};
    use rand_distr::{Distribution, StandardNormal};

    fn prepared(n: usize, p: usize, seed: u64) -> PreparedDesign {
        let inst = gen_model1(n, p, 3, CoefMode::Dirac05, seed).unwrap();
        let (x, y, _) = linalg::center_columns(&inst.x, &inst.y).unwrap();
        prepare(&x, &y, &TransformSpec::None).unwrap()
    }

    #[test]
    fn folds_partition_rows() {
        let labels = fold_assignment(23, 5, 7).unwrap();
        let mut counts = [0; 5];
        for &l in &labels {
            counts[l] += 1;
        }
        assert_eq!(counts.iter().sum::<usize>(), 23);
        assert!(counts.iter().all(|&c| c == 4 || c == 5));
        assert_eq!(labels, fold_assignment(23, 5, 7).unwrap());
        assert!(fold_assignment(3, 5, 1).is_err());
        assert!(fold_assignment(10, 1, 1).is_err());
    }

    #[test]
    fn ties_pick_the_larger_lambda() {
        assert_eq!(argmin_first(&[3.0, 1.0, 1.0, 2.0]), 1);
        assert_eq!(argmin_first(&[1.0, 1.0]), 0);
    }

    #[test]
    fn ic_formulas() {
        let (n, p) = (100usize, 50usize);
        let b = ic_score(Criterion::Bic, 50.0, 3, n, p, 1.0);
        assert!((b - (100.0 * 0.5f64.ln() + 3.0 * 100f64.ln())).abs() < 1e-12);
        let g = ic_score(Criterion::Gic, 50.0, 3, n, p, 1.0);
        assert!((g - (100.0 * 0.5f64.ln() + 3.0 * 100f64.ln().ln() * 50f64.ln())).abs() < 1e-12);
        assert!(ic_score(Criterion::Bic, 0.0, 0, n, p, 1.0).is_finite());
    }

    #[test]
    fn cv_on_replicated_data_equals_in_sample_mse() {
        let base = prepared(30, 6, 4);
        let copies = 5;
        let rows: Vec<usize> = (0..copies).flat_map(|_| 0..30).collect();
        let big = PreparedDesign {
            design: base.design.select_rows(&rows),
            response: rows.iter().map(|&i| base.response[i]).collect(),
            ..base.clone()
        };
        let labels: Vec<usize> = (0..copies).flat_map(|c| std::iter::repeat(c).take(30)).collect();
        let path = PathSettings::default().path_for(&base, &Penalty::Lasso).unwrap();
        let opts = SolverOptions {
            tol: 1e-12,
            ..SolverOptions::default()
        };
        let report = select_cv_with_folds(&big, &path, &Penalty::Lasso, &labels, &opts).unwrap();
        let (xc, yc, info) = linalg::center_columns(&base.design, &base.response).unwrap();
        let fits = fit_path(&xc, &yc, &path, &Penalty::Lasso, &opts, PathStop::for_design(&xc)).unwrap();
        for (k, fit) in fits.iter().enumerate().take(report.scores.len()) {
            let pred = info.predict(&base.design, &fit.beta);
            let mse: f64 = base
                .response
                .iter()
                .zip(&pred)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / 30.0;
            assert!((report.scores[k] - mse).abs() < 1e-9, "{k}: {} vs {mse}", report.scores[k]);
        }
    }

    #[test]
    fn cv_is_deterministic() {
        let prep = prepared(60, 20, 2);
        let path = PathSettings::default().path_for(&prep, &Penalty::Lasso).unwrap();
        let opts = SolverOptions::default();
        let a = select_cv(&prep, &path, &Penalty::Lasso, 5, 11, &opts).unwrap();
        let b = select_cv(&prep, &path, &Penalty::Lasso, 5, 11, &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.scores.iter().all(|s| s.is_finite()));
    }

    #[test]
    fn tiny_folds_are_rejected() {
        let prep = prepared(12, 5, 2);
        let path = PathSettings::default().path_for(&prep, &Penalty::Lasso).unwrap();
        let labels: Vec<usize> = (0..12).map(|i| if i == 0 { 2 } else { i % 2 }).collect();
        assert!(matches!(
            select_cv_with_folds(&prep, &path, &Penalty::Lasso, &labels, &SolverOptions::default()),
            Err(Error::Fold { fold: 2, .. })
        ));
    }

    #[test]
    fn identical_fits_select_larger_lambda() {
        let prep = prepared(40, 10, 1);
        let path = PathSettings::default().path_for(&prep, &Penalty::Lasso).unwrap();
        let fits = fit_path(
            &prep.design,
            &prep.response,
            &path,
            &Penalty::Lasso,
            &SolverOptions::default(),
            PathStop::never(),
        )
        .unwrap();
        let dup = vec![fits[5].clone(), fits[5].clone()];
        let r = select_ic_from_fits(&prep.design, &prep.response, &dup, Criterion::Bic).unwrap();
        assert_eq!(r.selected_index, 0);
    }

    #[test]
    fn prod_scores_match_the_rotated_regression() {
        let inst = gen_model1(60, 20, 3, CoefMode::Dirac05, 4).unwrap();
        let (x, y, _) = linalg::center_columns(&inst.x, &inst.y).unwrap();
        let prep = prepare(&x, &y, &TransformSpec::Licm { q: crate::transform::QChoice::Fixed(3) }).unwrap();
        let path = PathSettings::default().path_for(&prep, &Penalty::Lasso).unwrap();
        let opts = SolverOptions::default();
        let fits = fit_path(&prep.design, &prep.response, &path, &Penalty::Lasso, &opts, PathStop::never()).unwrap();
        // orthonormal basis W of the range of I − P_Z, an (n − q)-row regression
        let q = prep.z_basis.clone().unwrap();
        let m = Matrix::identity(60).sub(&q.matmul(&q.transpose()));
        let w = linalg::thin_svd(&m).unwrap().u;
        assert_eq!(w.ncols(), 57);
        let wx = w.tr_matmul(&prep.design);
        let wy = w.tr_mul_vec(&prep.response);
        for criterion in [Criterion::Bic, Criterion::Gic] {
            let a = select_ic_prepared(&prep, &fits, criterion).unwrap();
            let b = select_ic_from_fits(&wx, &wy, &fits, criterion).unwrap();
            for (u, v) in a.scores.iter().zip(&b.scores) {
                assert!((u - v).abs() < 1e-8 * v.abs().max(1.0), "{u} vs {v}");
            }
            assert_eq!(a.selected_index, b.selected_index);
        }
        let raw = prepare(&x, &y, &TransformSpec::None).unwrap();
        let fits = fit_path(&raw.design, &raw.response, &path, &Penalty::Lasso, &opts, PathStop::never()).unwrap();
        let a = select_ic_prepared(&raw, &fits, Criterion::Bic).unwrap();
        assert_eq!(a, select_ic_from_fits(&raw.design, &raw.response, &fits, Criterion::Bic).unwrap());
    }

    #[test]
    fn gic_null_model_selects_nothing_mostly() {
        let (n, p) = (200, 50);
        let mut empty = 0;
        for rep in 0..20u64 {
            let mut rng = stream(rep, Stream::Design);
            let mut x = Matrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
            linalg::center_in_place(&mut x);
            let mut nr = stream(rep, Stream::Noise);
            let mut y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut nr)).collect();
            let m = linalg::mean(&y);
            y.iter_mut().for_each(|v| *v -= m);
            let prep = prepare(&x, &y, &TransformSpec::None).unwrap();
            let path = PathSettings::default().path_for(&prep, &Penalty::Lasso).unwrap();
            let (r, fits) = select_ic(&prep, &path, &Penalty::Lasso, Criterion::Gic, &SolverOptions::default()).unwrap();
            if fits[r.selected_index].support.is_empty() {
                empty += 1;
            }
        }
        assert!(empty >= 18, "{empty}");
    }

    #[test]
    fn adaptive_weights_come_from_cv_lasso() {
        let prep = prepared(80, 15, 3);
        let w = adaptive_weights_cv(&prep, &PathSettings::default(), 5, 1, &SolverOptions::default()).unwrap();
        assert_eq!(w.len(), 15);
        assert!(w.iter().any(|v| v.is_finite()));
        assert!(w.iter().all(|v| *v > 0.0));
    }
}
