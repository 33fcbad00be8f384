//! `fit`, `diagnose` and `prescreen` on a dataset.

use serde::Serialize;

use super::data::{format_number, Dataset};
use super::report::{fmt_fraction, Table};
use crate::diagnostics::{self, cmse, irrepresentable_value_prod, min_signal_strength};
use crate::error::{Error, Result};
use crate::linalg::center_columns;
use crate::simgen::SimInstance;
use crate::solver::{fit_path, fit_penalized, kkt_residual_for, PathStop, SolverOptions};
use crate::transform::{prepare, TransformSpec};
use crate::tuning::{resolve_penalty, select_cv, select_ic_prepared, Criterion, PathSettings, PenaltyKind};

/// A simulated instance as a named dataset (`y`, `x1` … `xp`).
pub fn dataset_from_instance(inst: &SimInstance) -> Dataset {
    Dataset {
        response_name: "y".into(),
        predictor_names: (1..=inst.x.ncols()).map(|j| format!("x{j}")).collect(),
        x: inst.x.clone(),
        y: inst.y.clone(),
    }
}

/// Resolves `x3,x7` (or 1-based positions `3,7`) to zero-based indices.
pub fn parse_support(spec: &str, data: &Dataset) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for raw in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let idx = match data.column_index(raw) {
            Some(j) => j,
            None => match raw.parse::<usize>() {
                Ok(pos) if pos >= 1 && pos <= data.p() => pos - 1,
                _ => return Err(Error::arg(format!("unknown support column `{raw}`"))),
            },
        };
        out.push(idx);
    }
    if out.is_empty() {
        return Err(Error::arg("empty support list"));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct FitOptions {
    pub transform: TransformSpec,
    pub penalty: PenaltyKind,
    pub criterion: Criterion,
    /// Fit at this λ instead of tuning.
    pub lambda: Option<f64>,
    pub prescreen: Option<usize>,
    pub folds: usize,
    pub seed: u64,
    pub path: PathSettings,
    pub solver: SolverOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            transform: TransformSpec::None,
            penalty: PenaltyKind::Lasso,
            criterion: Criterion::Cv,
            lambda: None,
            prescreen: None,
            folds: crate::tuning::DEFAULT_FOLDS,
            seed: crate::rng::DEFAULT_SEED,
            path: PathSettings::default(),
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub n: usize,
    pub p: usize,
    pub screened: Option<Vec<String>>,
    pub transform: TransformSpec,
    pub penalty: String,
    pub criterion: Option<Criterion>,
    pub selected_lambda: f64,
    pub support: Vec<String>,
    pub intercept: f64,
    pub kkt_residual: f64,
    pub cmse: Option<f64>,
    pub warnings: Vec<String>,
}

/// Centers, optionally prescreens, transforms, fits and tunes. The table
/// lists the intercept and the nonzero coefficients.
pub fn run_fit(data: &Dataset, opts: &FitOptions) -> Result<(Table, FitSummary)> {
    let (work, screened) = match opts.prescreen {
        Some(keep) => {
            let mut kept = diagnostics::prescreen(&data.x, &data.y, keep)?;
            kept.sort_unstable();
            let sub = data.select(&kept);
            let names = sub.predictor_names.clone();
            (sub, Some(names))
        }
        None => (data.clone(), None),
    };
    let (xc, yc, centering) = center_columns(&work.x, &work.y)?;
    let spec = opts.transform.with_seed(opts.seed);
    let prep = prepare(&xc, &yc, &spec)?;
    let penalty = resolve_penalty(opts.penalty, &prep, &opts.path, opts.seed, &opts.solver)?;
    let (fit, criterion) = match opts.lambda {
        Some(lambda) => (
            fit_penalized(&prep.design, &prep.response, lambda, &penalty, None, &opts.solver)?,
            None,
        ),
        None => {
            let path = opts.path.path_for(&prep, &penalty)?;
            let fits = fit_path(&prep.design, &prep.scoring_response(), &path, &penalty, &opts.solver, PathStop::for_design(&prep.design))?;
            let idx = match opts.criterion {
                Criterion::Cv => select_cv(&prep, &path, &penalty, opts.folds, opts.seed, &opts.solver)?.selected_index,
                ic => select_ic_prepared(&prep, &fits, ic)?.selected_index,
            };
            let fit = match fits.get(idx) {
                Some(f) => f.clone(),
                None => fit_penalized(&prep.design, &prep.response, path.values()[idx], &penalty, None, &opts.solver)?,
            };
            (fit, Some(opts.criterion))
        }
    };
    let kkt = kkt_residual_for(&prep.design, &prep.response, fit.lambda, &fit.beta, &penalty);
    let intercept = centering.intercept(&fit.beta);
    let n = work.n();
    let cmse_value = if !fit.support.is_empty() && n >= opts.folds * (fit.support.len() + 2) {
        Some(cmse(&work.x, &work.y, &fit.support, opts.folds, opts.seed)?)
    } else {
        None
    };
    let mut table = Table::new(&["term", "coefficient"]);
    table.push(vec!["(intercept)".into(), format_number(intercept)]);
    for &j in &fit.support {
        table.push(vec![work.predictor_names[j].clone(), format_number(fit.beta[j])]);
    }
    let summary = FitSummary {
        n,
        p: data.p(),
        screened,
        transform: prep.resolved,
        penalty: penalty.name().to_string(),
        criterion,
        selected_lambda: fit.lambda,
        support: fit.support.iter().map(|&j| work.predictor_names[j].clone()).collect(),
        intercept,
        kkt_residual: kkt,
        cmse: cmse_value,
        warnings: prep.warnings,
    };
    Ok((table, summary))
}

pub const DIAGNOSE_COLUMNS: [&str; 16] = [
    "source",
    "transform",
    "transform_param",
    "support_size",
    "value_raw",
    "value_prod",
    "ratio",
    "gamma_x",
    "gamma_prod",
    "c_min",
    "c_min_star",
    "sigma",
    "q1",
    "q2",
    "violated",
    "status",
];

/// One row per transform. Violations of the irrepresentable condition are
/// flagged rather than treated as errors; the second value is the number of
/// rows that failed outright.
pub fn run_diagnose(
    source: &str,
    data: &Dataset,
    support: &[usize],
    transforms: &[TransformSpec],
    sigma: f64,
    seed: u64,
) -> (Table, usize) {
    let mut table = Table::new(&DIAGNOSE_COLUMNS);
    let mut failures = 0;
    for spec in transforms {
        let spec = spec.with_seed(seed);
        let mut row = vec![
            source.to_string(),
            spec.name().to_string(),
            super::config::transform_param(&spec),
            support.len().to_string(),
        ];
        match irrepresentable_value_prod(&data.x, &spec, support) {
            Ok(ic) => {
                let violated = ic.value_raw >= 1.0 || ic.value_prod >= 1.0;
                let ratio = if ic.value_raw > 0.0 { fmt_fraction(ic.value_prod / ic.value_raw) } else { String::new() };
                row.extend([fmt_fraction(ic.value_raw), fmt_fraction(ic.value_prod), ratio]);
                row.extend([fmt_fraction(ic.gamma_x()), fmt_fraction(ic.gamma_prod())]);
                match min_signal_strength(&data.x, &spec, support, sigma) {
                    Ok(q) => row.extend([
                        fmt_fraction(q.c_min),
                        fmt_fraction(q.c_min_star),
                        fmt_fraction(sigma),
                        fmt_fraction(q.q1),
                        fmt_fraction(q.q2),
                        violated.to_string(),
                        "ok".into(),
                    ]),
                    Err(Error::IrrepresentableViolated { .. }) => row.extend([
                        String::new(),
                        String::new(),
                        fmt_fraction(sigma),
                        String::new(),
                        String::new(),
                        "true".into(),
                        "ok".into(),
                    ]),
                    Err(e) => {
                        failures += 1;
                        row.extend(std::iter::repeat_n(String::new(), 6).chain([format!("error: {e}")]));
                    }
                }
            }
            Err(e) => {
                failures += 1;
                row.extend(std::iter::repeat_n(String::new(), 11).chain([format!("error: {e}")]));
            }
        }
        table.push(row);
    }
    (table, failures)
}

#[derive(Debug, Clone, Serialize)]
pub struct Ranked {
    pub column: String,
    pub t_statistic: f64,
}

/// The dataset reduced to the `keep` strongest predictors (original column
/// order) and their ranking.
pub fn run_prescreen(data: &Dataset, keep: usize) -> Result<(Dataset, Vec<Ranked>)> {
    let order = diagnostics::prescreen(&data.x, &data.y, keep)?;
    let t = diagnostics::marginal_t_statistics(&data.x, &data.y)?;
    let ranking = order
        .iter()
        .map(|&j| Ranked {
            column: data.predictor_names[j].clone(),
            t_statistic: t[j],
        })
        .collect();
    let mut kept = order;
    kept.sort_unstable();
    Ok((data.select(&kept), ranking))
}
