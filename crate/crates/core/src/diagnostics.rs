//! Design diagnostics and support-recovery metrics.
//!
//! All Gram matrices are scaled by `1/n`. Index sets are zero-based.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, center_columns, dot, Matrix};
use crate::rng::{stream, Stream};
use crate::solver::{fit_path, LambdaPath, Penalty, PathStop, SolverOptions};
use crate::transform::{self, PreparedDesign, TransformSpec};
use crate::tuning::fold_assignment;

/// Gram matrices whose condition number exceeds this are treated as singular.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcReport {
    pub value_raw: f64,
    pub value_prod: f64,
    pub support: Vec<usize>,
    pub spec: TransformSpec,
}

impl IcReport {
    pub fn gamma_x(&self) -> f64 {
        1.0 - self.value_raw
    }

    pub fn gamma_prod(&self) -> f64 {
        1.0 - self.value_prod
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalStrengthReport {
    pub q1: f64,
    pub q2: f64,
    pub gamma_x: f64,
    pub gamma_prod: f64,
    pub c_min: f64,
    pub c_min_star: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub tpr: f64,
    pub fpr: f64,
    pub tp_count: usize,
    pub fp_count: usize,
    pub cmse: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub lambda: f64,
    pub fpr: f64,
    pub tpr: f64,
    pub df: usize,
}

fn check_support(s: &[usize], p: usize) -> Result<Vec<usize>> {
    let mut s = s.to_vec();
    s.sort_unstable();
    s.dedup();
    if s.is_empty() {
        return Err(Error::arg("support must be nonempty"));
    }
    if let Some(&bad) = s.iter().find(|&&j| j >= p) {
        return Err(Error::arg(format!("support index {bad} out of range for {p} columns")));
    }
    if s.len() == p {
        return Err(Error::arg("support must leave at least one column outside"));
    }
    Ok(s)
}

fn complement(s: &[usize], p: usize) -> Vec<usize> {
    (0..p).filter(|j| s.binary_search(j).is_err()).collect()
}

/// `n⁻¹ AᵀB`.
fn scaled_cross(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.nrows() as f64;
    a.tr_matmul(b).scaled(1.0 / n)
}

/// Smallest eigenvalue of an SPD Gram, or `SingularGram` with its condition
/// number.
fn gram_min_eigen(g: &Matrix, design: &'static str) -> Result<f64> {
    let ev = linalg::sym_eigenvalues(g)?;
    let lo = ev.first().copied().unwrap_or(0.0);
    let hi = ev.last().copied().unwrap_or(0.0);
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(hi > 0.0) || !(condition <= MAX_GRAM_CONDITION) {
        return Err(Error::SingularGram { design, condition });
    }
    Ok(lo)
}

/// `max_j Σ_i |a_ij|`.
fn max_col_l1(a: &Matrix) -> f64 {
    (0..a.ncols())
        .map(|j| a.col(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `‖A‖_∞ = max_i Σ_j |a_ij|`.
fn inf_norm(a: &Matrix) -> f64 {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn ic_value_sorted(x: &Matrix, s: &[usize], design: &'static str) -> Result<f64> {
    let xs = x.select_cols(s);
    let xc = x.select_cols(&complement(s, x.ncols()));
    let g = scaled_cross(&xs, &xs);
    gram_min_eigen(&g, design)?;
    let coef = linalg::spd_solve(&g, &scaled_cross(&xs, &xc))?;
    Ok(max_col_l1(&coef))
}

/// `max_{j∉S} ‖(X_SᵀX_S)⁻¹X_Sᵀx_j‖₁` on `x` as given (no centering).
pub fn irrepresentable_value(x: &Matrix, s: &[usize]) -> Result<f64> {
    let s = check_support(s, x.ncols())?;
    ic_value_sorted(x, &s, "raw")
}

fn centered_design(x: &Matrix) -> Result<Matrix> {
    let zeros = vec![0.0; x.nrows()];
    Ok(center_columns(x, &zeros)?.0)
}

/// Centers `x`, applies `spec`, and evaluates the irrepresentable value on
/// both the centered design and the transformed one.
pub fn irrepresentable_value_prod(x: &Matrix, spec: &TransformSpec, s: &[usize]) -> Result<IcReport> {
    let support = check_support(s, x.ncols())?;
    let xc = centered_design(x)?;
    let zeros = vec![0.0; x.nrows()];
    let prep = transform::prepare(&xc, &zeros, spec)?;
    let value_raw = ic_value_sorted(&xc, &support, "raw")?;
    let value_prod = ic_value_sorted(&prep.design, &support, "transformed")?;
    Ok(IcReport {
        value_raw,
        value_prod,
        support,
        spec: prep.resolved,
    })
}

struct SupportGram {
    inv_norm: f64,
    c_min: f64,
    ic: f64,
}

fn support_gram(x: &Matrix, s: &[usize], design: &'static str) -> Result<SupportGram> {
    let xs = x.select_cols(s);
    let g = scaled_cross(&xs, &xs);
    let c_min = gram_min_eigen(&g, design)?;
    let inv = linalg::spd_inverse(&g)?;
    let ic = ic_value_sorted(x, s, design)?;
    Ok(SupportGram {
        inv_norm: inf_norm(&inv),
        c_min,
        ic,
    })
}

fn signal_bound(gamma: f64, inv_norm: f64, c_min: f64, sigma: f64) -> f64 {
    (inv_norm + 4.0 * sigma / c_min.sqrt()) / gamma
}

/// Minimum-signal-strength bounds `q₁` (centered design) and `q₂`
/// (transformed design), `q = γ⁻¹[‖Σ_SS⁻¹‖_∞ + 4σ/√C_min]`.
pub fn min_signal_strength(
    x: &Matrix,
    spec: &TransformSpec,
    s: &[usize],
    sigma: f64,
) -> Result<SignalStrengthReport> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::arg(format!("noise level must be positive, got {sigma}")));
    }
    let support = check_support(s, x.ncols())?;
    let xc = centered_design(x)?;
    let zeros = vec![0.0; x.nrows()];
    let prep = transform::prepare(&xc, &zeros, spec)?;
    let raw = support_gram(&xc, &support, "raw")?;
    let prod = support_gram(&prep.design, &support, "transformed")?;
    let gamma_x = 1.0 - raw.ic;
    let gamma_prod = 1.0 - prod.ic;
    if gamma_x <= 0.0 {
        return Err(Error::IrrepresentableViolated {
            design: "raw",
            value: raw.ic,
        });
    }
    if gamma_prod <= 0.0 {
        return Err(Error::IrrepresentableViolated {
            design: "transformed",
            value: prod.ic,
        });
    }
    Ok(SignalStrengthReport {
        q1: signal_bound(gamma_x, raw.inv_norm, raw.c_min, sigma),
        q2: signal_bound(gamma_prod, prod.inv_norm, prod.c_min, sigma),
        gamma_x,
        gamma_prod,
        c_min: raw.c_min,
        c_min_star: prod.c_min,
        sigma,
    })
}

/// TPR = |TP|/k and FPR = |FP|/(p − k).
pub fn support_metrics(estimated: &[usize], truth: &[usize], p: usize) -> Result<MetricsRecord> {
    let mut t = truth.to_vec();
    t.sort_unstable();
    t.dedup();
    if t.is_empty() {
        return Err(Error::arg("true support is empty; TPR is undefined"));
    }
    let mut e = estimated.to_vec();
    e.sort_unstable();
    e.dedup();
    if let Some(&bad) = t.iter().chain(&e).find(|&&j| j >= p) {
        return Err(Error::arg(format!("index {bad} out of range for {p} columns")));
    }
    let tp = e.iter().filter(|j| t.binary_search(j).is_ok()).count();
    let fp = e.len() - tp;
    let negatives = p - t.len();
    Ok(MetricsRecord {
        tpr: tp as f64 / t.len() as f64,
        fpr: if negatives == 0 { 0.0 } else { fp as f64 / negatives as f64 },
        tp_count: tp,
        fp_count: fp,
        cmse: None,
    })
}

/// One (FPR, TPR) point per λ along a warm-started path on the centered,
/// transformed design.
pub fn roc_path(
    x: &Matrix,
    y: &[f64],
    truth: &[usize],
    path: &LambdaPath,
    penalty: &Penalty,
    spec: &TransformSpec,
    opts: &SolverOptions,
) -> Result<Vec<RocPoint>> {
    let (xc, yc, _) = center_columns(x, y)?;
    let prep = transform::prepare(&xc, &yc, spec)?;
    roc_prepared(&prep, truth, path, penalty, opts)
}

/// [`roc_path`] on an already prepared design.
pub fn roc_prepared(
    prep: &PreparedDesign,
    truth: &[usize],
    path: &LambdaPath,
    penalty: &Penalty,
    opts: &SolverOptions,
) -> Result<Vec<RocPoint>> {
    let fits = fit_path(&prep.design, &prep.response, path, penalty, opts, PathStop::never())?;
    let p = prep.design.ncols();
    fits.iter()
        .map(|f| {
            let m = support_metrics(&f.support, truth, p)?;
            Ok(RocPoint {
                lambda: f.lambda,
                fpr: m.fpr,
                tpr: m.tpr,
                df: f.df(),
            })
        })
        .collect()
}

/// Cross-validated mean squared prediction error of an OLS refit (with
/// intercept) on the support columns.
pub fn cmse(x: &Matrix, y: &[f64], support: &[usize], folds: usize, seed: u64) -> Result<f64> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::dim(format!("response has {} entries, design has {n} rows", y.len())));
    }
    let mut s = support.to_vec();
    s.sort_unstable();
    s.dedup();
    if s.is_empty() {
        return Err(Error::arg("CMSE needs a nonempty support"));
    }
    if let Some(&bad) = s.iter().find(|&&j| j >= p) {
        return Err(Error::arg(format!("support index {bad} out of range for {p} columns")));
    }
    if n < folds * (s.len() + 2) {
        return Err(Error::arg(format!(
            "{n} rows are too few for {folds}-fold refits on {} columns",
            s.len()
        )));
    }
    let labels = fold_assignment(n, folds, seed)?;
    let xs = x.select_cols(&s);
    let mut total = 0.0;
    for fold in 0..folds {
        let train: Vec<usize> = (0..n).filter(|&i| labels[i] != fold).collect();
        let test: Vec<usize> = (0..n).filter(|&i| labels[i] == fold).collect();
        let y_train: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let (xt, yt, centering) = center_columns(&xs.select_rows(&train), &y_train)?;
        let gram = xt.tr_matmul(&xt);
        gram_min_eigen(&gram, "refit").map_err(|e| Error::Fold {
            fold,
            reason: format!("least-squares refit is rank deficient ({e})"),
        })?;
        let rhs = Matrix::from_col_major(s.len(), 1, xt.tr_mul_vec(&yt))?;
        let beta = linalg::spd_solve(&gram, &rhs).map_err(|e| Error::Fold {
            fold,
            reason: e.to_string(),
        })?;
        let pred = centering.predict(&xs.select_rows(&test), beta.col(0));
        let sse: f64 = test.iter().zip(&pred).map(|(&i, f)| (y[i] - f).powi(2)).sum();
        total += sse / test.len() as f64;
    }
    Ok(total / folds as f64)
}

/// Absolute t-statistic of the simple regression of `y` on each column.
/// Constant columns score 0.
pub fn marginal_t_statistics(x: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::dim(format!("response has {} entries, design has {n} rows", y.len())));
    }
    if n < 3 {
        return Err(Error::arg("t-statistics need at least three rows"));
    }
    let ym = linalg::mean(y);
    let yc: Vec<f64> = y.iter().map(|v| v - ym).collect();
    let syy = dot(&yc, &yc);
    let df = (n - 2) as f64;
    Ok((0..p)
        .map(|j| {
            let col = x.col(j);
            let m = linalg::mean(col);
            let xc: Vec<f64> = col.iter().map(|v| v - m).collect();
            let sxx = dot(&xc, &xc);
            if sxx <= f64::EPSILON * f64::EPSILON * n as f64 * m.abs().max(1.0).powi(2) || syy == 0.0 {
                return 0.0;
            }
            let r2 = (dot(&xc, &yc).powi(2) / (sxx * syy)).min(1.0);
            if r2 >= 1.0 {
                f64::INFINITY
            } else {
                (r2 * df / (1.0 - r2)).sqrt()
            }
        })
        .collect())
}

/// Indices of the `keep` columns with the largest marginal |t|, strongest
/// first; ties go to the smaller index.
pub fn prescreen(x: &Matrix, y: &[f64], keep: usize) -> Result<Vec<usize>> {
    if keep > x.ncols() {
        return Err(Error::arg(format!("cannot keep {keep} of {} columns", x.ncols())));
    }
    let t = marginal_t_statistics(x, y)?;
    let mut order: Vec<usize> = (0..x.ncols()).collect();
    order.sort_by(|&a, &b| t[b].total_cmp(&t[a]).then(a.cmp(&b)));
    order.truncate(keep);
    Ok(order)
}

/// Factor design `X = F Bᵀ + K` with identity factor and idiosyncratic
/// covariances. Support row `l < r` loads `loading` on factor `l` and the
/// other support rows carry no factor, so `B_S = [loading·I_r; 0]`. Every
/// non-support row `j` loads `loading` on factor `(j − k) mod r`, which keeps
/// the factors pervasive. Returns the design and the support `0..k`.
pub fn example_one_design(
    n: usize,
    p: usize,
    k: usize,
    factors: usize,
    loading: f64,
    seed: u64,
) -> Result<(Matrix, Vec<usize>)> {
    if factors == 0 || factors >= k || k >= p {
        return Err(Error::arg(format!(
            "need 0 < factors < k < p, got factors={factors}, k={k}, p={p}"
        )));
    }
    let mut rng = stream(seed, Stream::Design);
    let mut x = Matrix::zeros(n, p);
    let mut f = vec![0.0; factors];
    for i in 0..n {
        for v in f.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        for j in 0..p {
            let e: f64 = StandardNormal.sample(&mut rng);
            let load = if j < factors {
                loading * f[j]
            } else if j >= k {
                loading * f[(j - k) % factors]
            } else {
                0.0
            };
            x[(i, j)] = load + e;
        }
    }
    Ok((x, (0..k).collect()))
}
