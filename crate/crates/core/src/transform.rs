//! Orthogonal decompositions X = P_Z X + (I − P_Z) X and spectral baselines.
//!
//! Every variant here is blind to the response except the Puffer and Trim
//! baselines, which map `y` through the same spectral operator as `X`.

use std::fmt;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, ThinSvd};
use crate::rng::{stream, Stream};

/// Number of directions removed by a PROD transform.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QChoice {
    /// ER estimate for LICM, `n/2` for the random generations.
    #[default]
    Auto,
    #[serde(untagged)]
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tau {
    #[default]
    Median,
    #[serde(untagged)]
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TransformSpec {
    None,
    Licm {
        #[serde(default)]
        q: QChoice,
    },
    Rgz {
        #[serde(default)]
        q: QChoice,
        #[serde(default)]
        seed: u64,
    },
    Rgb {
        #[serde(default)]
        q: QChoice,
        #[serde(default)]
        seed: u64,
    },
    Puffer,
    Trim {
        #[serde(default)]
        tau: Tau,
    },
}

impl TransformSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TransformSpec::None => "none",
            TransformSpec::Licm { .. } => "licm",
            TransformSpec::Rgz { .. } => "rgz",
            TransformSpec::Rgb { .. } => "rgb",
            TransformSpec::Puffer => "puffer",
            TransformSpec::Trim { .. } => "trim",
        }
    }

    /// True for the PROD variants, which keep the original response.
    pub fn is_prod(&self) -> bool {
        matches!(
            self,
            TransformSpec::Licm { .. } | TransformSpec::Rgz { .. } | TransformSpec::Rgb { .. }
        )
    }

    /// The same spec with its seed replaced (used per replicate).
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            TransformSpec::Rgz { q, .. } => TransformSpec::Rgz { q, seed },
            TransformSpec::Rgb { q, .. } => TransformSpec::Rgb { q, seed },
            other => other,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TransformSpec::Trim { tau: Tau::Value(t) } if !(*t > 0.0) => {
                Err(Error::arg(format!("trim threshold must be positive, got {t}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for TransformSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let q = |q: &QChoice| match q {
            QChoice::Auto => "auto".to_string(),
            QChoice::Fixed(v) => v.to_string(),
        };
        match self {
            TransformSpec::Licm { q: qq } => write!(f, "licm(q={})", q(qq)),
            TransformSpec::Rgz { q: qq, seed } => write!(f, "rgz(q={},seed={seed})", q(qq)),
            TransformSpec::Rgb { q: qq, seed } => write!(f, "rgb(q={},seed={seed})", q(qq)),
            TransformSpec::Trim { tau: Tau::Median } => write!(f, "trim(tau=median)"),
            TransformSpec::Trim { tau: Tau::Value(t) } => write!(f, "trim(tau={t})"),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProdDecomposition {
    pub pz_x: Matrix,
    pub mz_x: Matrix,
    pub z_basis: Matrix,
    pub spec: TransformSpec,
}

impl ProdDecomposition {
    pub fn q(&self) -> usize {
        self.z_basis.ncols()
    }
}

/// Splits `x` along an orthonormal basis `q`: returns `(Q QᵀX, X − Q QᵀX)`.
fn split_on_basis(x: &Matrix, q: &Matrix) -> (Matrix, Matrix) {
    if q.ncols() == 0 {
        return (Matrix::zeros(x.nrows(), x.ncols()), x.clone());
    }
    let pz_x = q.matmul(&q.tr_matmul(x));
    let mz_x = x.sub(&pz_x);
    (pz_x, mz_x)
}

pub fn decompose(x: &Matrix, z: &Matrix) -> Result<ProdDecomposition> {
    decompose_as(x, z, TransformSpec::None)
}

fn decompose_as(x: &Matrix, z: &Matrix, spec: TransformSpec) -> Result<ProdDecomposition> {
    if z.nrows() != x.nrows() {
        return Err(Error::dim(format!(
            "Z has {} rows, X has {}",
            z.nrows(),
            x.nrows()
        )));
    }
    let z_basis = linalg::orthonormalize(z);
    let (pz_x, mz_x) = split_on_basis(x, &z_basis);
    Ok(ProdDecomposition {
        pz_x,
        mz_x,
        z_basis,
        spec,
    })
}

pub fn licm(x: &Matrix, q: usize) -> Result<ProdDecomposition> {
    licm_from_svd(x, &linalg::thin_svd(x)?, q)
}

/// LICM using a precomputed SVD of `x`.
pub fn licm_from_svd(x: &Matrix, svd: &ThinSvd, q: usize) -> Result<ProdDecomposition> {
    if q > svd.rank() {
        return Err(Error::RankExceeded { q, rank: svd.rank() });
    }
    let z_basis = svd.leading_u(q);
    let (pz_x, mz_x) = split_on_basis(x, &z_basis);
    Ok(ProdDecomposition {
        pz_x,
        mz_x,
        z_basis,
        spec: TransformSpec::Licm { q: QChoice::Fixed(q) },
    })
}

/// Upper bound on the factor count scanned by the ER estimator by default.
pub fn default_l_max(rank: usize) -> usize {
    20.min(rank.saturating_sub(1))
}

/// `argmax_{1≤l≤l_max} d_l / d_{l+1}` over a nonincreasing spectrum, ties to
/// the smallest `l`.
pub fn er_from_spectrum(d: &[f64], l_max: usize) -> Result<usize> {
    if d.len() < 2 {
        return Err(Error::RankTooSmall {
            rank: d.len(),
            reason: "the eigenvalue-ratio estimator needs two nonzero singular values",
        });
    }
    if l_max == 0 || l_max > d.len() - 1 {
        return Err(Error::arg(format!(
            "l_max must lie in 1..={}, got {l_max}",
            d.len() - 1
        )));
    }
    let mut best = 1;
    let mut best_ratio = d[0] / d[1];
    for l in 2..=l_max {
        let ratio = d[l - 1] / d[l];
        if ratio > best_ratio {
            best = l;
            best_ratio = ratio;
        }
    }
    Ok(best)
}

pub fn estimate_factors_er(x: &Matrix, l_max: usize) -> Result<usize> {
    er_from_spectrum(&linalg::thin_svd(x)?.d, l_max)
}

fn gaussian_matrix(n: usize, q: usize, seed: u64) -> Matrix {
    let mut rng = stream(seed, Stream::Transform);
    Matrix::from_fn(n, q, |_, _| StandardNormal.sample(&mut rng))
}

/// Orthonormalized i.i.d. standard-normal `n×q` draws.
pub fn rgz(n: usize, q: usize, seed: u64) -> Result<Matrix> {
    if q == 0 || q > n {
        return Err(Error::arg(format!("RGZ needs 1 <= q <= n = {n}, got {q}")));
    }
    Ok(linalg::orthonormalize(&gaussian_matrix(n, q, seed)))
}

/// Orthonormal basis of `X·B` for a Gaussian `p×q` matrix `B`.
#[derive(Debug, Clone)]
pub struct RgbBasis {
    pub basis: Matrix,
    pub requested: usize,
    /// Set when `X·B` had fewer than `requested` independent columns.
    pub rank_deficient: bool,
}

pub fn rgb(x: &Matrix, q: usize, seed: u64) -> Result<RgbBasis> {
    let (n, p) = x.shape();
    if q == 0 || q > n.min(p) {
        return Err(Error::arg(format!(
            "RGB needs 1 <= q <= min(n, p) = {}, got {q}",
            n.min(p)
        )));
    }
    let b = gaussian_matrix(p, q, seed);
    let basis = linalg::orthonormalize(&x.matmul(&b));
    Ok(RgbBasis {
        rank_deficient: basis.ncols() < q,
        basis,
        requested: q,
    })
}

/// Puffer preconditioning `F = U D⁺ Uᵀ`: returns `(F·X, F·y)`.
pub fn puffer(x: &Matrix, y: &[f64]) -> Result<(Matrix, Vec<f64>)> {
    check_response(x, y)?;
    let svd = linalg::thin_svd(x)?;
    let fx = svd.u.matmul(&svd.v.transpose());
    let mut uty = svd.u.tr_mul_vec(y);
    for (c, d) in uty.iter_mut().zip(&svd.d) {
        *c /= d;
    }
    Ok((fx, svd.u.mul_vec(&uty)))
}

/// Median of a spectrum (mean of the two middle values for even lengths).
pub fn median(d: &[f64]) -> f64 {
    let mut s = d.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

/// Caps singular values at `τ`. `y` is mapped by `U diag(min(d, τ)/d) Uᵀ` on
/// the column space of `X` and left alone outside it. Returns the transformed
/// pair and the `τ` used.
pub fn trim(x: &Matrix, y: &[f64], tau: Tau) -> Result<(Matrix, Vec<f64>, f64)> {
    check_response(x, y)?;
    if let Tau::Value(t) = tau {
        if !(t > 0.0) {
            return Err(Error::arg(format!("trim threshold must be positive, got {t}")));
        }
    }
    let svd = linalg::thin_svd(x)?;
    if svd.rank() == 0 {
        return Ok((x.clone(), y.to_vec(), 0.0));
    }
    let t = match tau {
        Tau::Value(t) => t,
        Tau::Median => median(&svd.d),
    };
    let mut xt = svd.u.clone();
    let mut uty = svd.u.tr_mul_vec(y);
    for (k, &d) in svd.d.iter().enumerate() {
        let capped = d.min(t);
        xt.col_mut(k).iter_mut().for_each(|v| *v *= capped);
        uty[k] *= 1.0 - capped / d;
    }
    // identity on the orthogonal complement of col(X)
    let shrink = svd.u.mul_vec(&uty);
    let yt = y.iter().zip(&shrink).map(|(a, b)| a - b).collect();
    Ok((xt.matmul(&svd.v.transpose()), yt, t))
}

fn check_response(x: &Matrix, y: &[f64]) -> Result<()> {
    if x.nrows() < 2 {
        return Err(Error::arg("spectral transforms need at least two rows"));
    }
    if y.len() != x.nrows() {
        return Err(Error::dim(format!("response has {} entries, design has {} rows", y.len(), x.nrows())));
    }
    Ok(())
}

/// A design and response ready for the solver, with what the transform did.
#[derive(Debug, Clone)]
pub struct PreparedDesign {
    pub design: Matrix,
    pub response: Vec<f64>,
    /// The spec with `q` resolved to the value actually used.
    pub resolved: TransformSpec,
    pub warnings: Vec<String>,
    /// PROD only: the removed part `P_Z·X`.
    pub pz_x: Option<Matrix>,
    /// PROD only: an orthonormal basis of the span of `Z`.
    pub z_basis: Option<Matrix>,
}

impl PreparedDesign {
    /// The response the fitted part can account for: `(I − P_Z)·y` for PROD,
    /// the working response otherwise. `P_Z·y` is orthogonal to every column
    /// of the design, so it only adds a constant to residual sums.
    pub fn scoring_response(&self) -> Vec<f64> {
        match &self.z_basis {
            Some(q) if q.ncols() > 0 => {
                let coef = q.tr_mul_vec(&self.response);
                let fitted = q.mul_vec(&coef);
                self.response.iter().zip(&fitted).map(|(a, b)| a - b).collect()
            }
            _ => self.response.clone(),
        }
    }
}

/// Applies `spec` to centered `(x, y)`.
///
/// PROD variants keep `y`. Random directions for RGZ are centered before
/// orthonormalization so that `(I − P_Z)X` stays column-centered.
pub fn prepare(x: &Matrix, y: &[f64], spec: &TransformSpec) -> Result<PreparedDesign> {
    spec.validate()?;
    let n = x.nrows();
    let mut warnings = Vec::new();
    let keep = |design: Matrix, response: Vec<f64>, resolved, warnings| PreparedDesign {
        design,
        response,
        resolved,
        warnings,
        pz_x: None,
        z_basis: None,
    };
    let finish = |d: ProdDecomposition, resolved, warnings| PreparedDesign {
        design: d.mz_x,
        response: y.to_vec(),
        resolved,
        warnings,
        pz_x: Some(d.pz_x),
        z_basis: Some(d.z_basis),
    };
    match *spec {
        TransformSpec::None => Ok(keep(x.clone(), y.to_vec(), *spec, warnings)),
        TransformSpec::Licm { q } => {
            let svd = linalg::thin_svd(x)?;
            let q = match q {
                QChoice::Fixed(q) => q,
                QChoice::Auto => er_from_spectrum(&svd.d, default_l_max(svd.rank()))?,
            };
            let d = licm_from_svd(x, &svd, q)?;
            Ok(finish(d, TransformSpec::Licm { q: QChoice::Fixed(q) }, warnings))
        }
        TransformSpec::Rgz { q, seed } => {
            let q = resolve_random_q(q, n, n);
            if q == 0 || q > n {
                return Err(Error::arg(format!("RGZ needs 1 <= q <= n = {n}, got {q}")));
            }
            let mut z = gaussian_matrix(n, q, seed);
            linalg::center_in_place(&mut z);
            let mut d = decompose_as(x, &z, *spec)?;
            if d.q() < q {
                warnings.push(format!("rgz: centered draws span {} of {q} directions", d.q()));
            }
            d.spec = TransformSpec::Rgz { q: QChoice::Fixed(q), seed };
            let resolved = d.spec;
            Ok(finish(d, resolved, warnings))
        }
        TransformSpec::Rgb { q, seed } => {
            let q = resolve_random_q(q, n, x.ncols());
            let out = rgb(x, q, seed)?;
            if out.rank_deficient {
                warnings.push(format!(
                    "rgb: X·B has rank {} below the requested {q}",
                    out.basis.ncols()
                ));
            }
            let (pz_x, mz_x) = split_on_basis(x, &out.basis);
            let resolved = TransformSpec::Rgb { q: QChoice::Fixed(q), seed };
            let d = ProdDecomposition {
                pz_x,
                mz_x,
                z_basis: out.basis,
                spec: resolved,
            };
            Ok(finish(d, resolved, warnings))
        }
        TransformSpec::Puffer => {
            let (fx, fy) = puffer(x, y)?;
            Ok(keep(fx, fy, *spec, warnings))
        }
        TransformSpec::Trim { tau } => {
            let (xt, yt, t) = trim(x, y, tau)?;
            Ok(keep(xt, yt, TransformSpec::Trim { tau: Tau::Value(t) }, warnings))
        }
    }
}

fn resolve_random_q(q: QChoice, n: usize, p: usize) -> usize {
    match q {
        QChoice::Fixed(q) => q,
        QChoice::Auto => (n / 2).min(p).max(1),
    }
}
