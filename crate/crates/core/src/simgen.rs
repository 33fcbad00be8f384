//! Seeded generators for the five simulation designs.
//!
//! Draw order within a replicate is fixed: the design stream yields model
//! parameters (loadings or covariance factors) first, then the rows of `X`
//! one at a time; the noise stream yields one standard normal per row; the
//! coefficient stream is used only by `Unif01`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::rng::{stream, SimRng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    M1,
    M2,
    M3,
    M4,
    M5,
}

impl Model {
    pub fn needs_rho(self) -> bool {
        matches!(self, Model::M3 | Model::M5)
    }

    /// Standard deviation of the homoscedastic noise.
    pub fn noise_sd(self) -> f64 {
        match self {
            Model::M1 | Model::M2 => 0.5,
            Model::M3 | Model::M4 | Model::M5 => 1.0,
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "m1" | "model1" | "1" => Ok(Model::M1),
            "m2" | "model2" | "2" => Ok(Model::M2),
            "m3" | "model3" | "3" => Ok(Model::M3),
            "m4" | "model4" | "4" => Ok(Model::M4),
            "m5" | "model5" | "5" => Ok(Model::M5),
            _ => Err(Error::arg(format!("unknown model `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CoefMode {
    /// First `k` coefficients equal 0.5.
    #[serde(rename = "Dirac")]
    Dirac05,
    /// First `k` coefficients drawn from Unif(0, 1].
    #[serde(rename = "Unif")]
    Unif01,
    /// First `k` coefficients equal 1.
    #[serde(rename = "One")]
    One,
}

impl fmt::Display for CoefMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoefMode::Dirac05 => "Dirac",
            CoefMode::Unif01 => "Unif",
            CoefMode::One => "One",
        })
    }
}

impl FromStr for CoefMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dirac" | "dirac05" => Ok(CoefMode::Dirac05),
            "unif" | "unif01" => Ok(CoefMode::Unif01),
            "one" => Ok(CoefMode::One),
            _ => Err(Error::arg(format!("unknown coefficient mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub rho: Option<f64>,
    pub coef_mode: CoefMode,
    pub heteroscedastic: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimInstance {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub beta_true: Vec<f64>,
    pub support_true: Vec<usize>,
    pub model: Model,
    pub params: SimParams,
    pub seed: u64,
    /// Standard normals from the noise stream, one per row.
    noise: Vec<f64>,
}

impl SimInstance {
    pub fn noise_draws(&self) -> &[f64] {
        &self.noise
    }
}

/// Dispatches on `model`; Models 4 and 5 always use unit coefficients.
pub fn generate(model: Model, params: &SimParams, seed: u64) -> Result<SimInstance> {
    let SimParams { n, p, k, coef_mode, .. } = *params;
    let inst = match model {
        Model::M1 => gen_model1(n, p, k, coef_mode, seed)?,
        Model::M2 => gen_model2(n, p, k, coef_mode, seed)?,
        Model::M3 => gen_model3(n, p, k, rho_of(params)?, coef_mode, seed)?,
        Model::M4 => gen_model4(n, p, k, seed)?,
        Model::M5 => gen_model5(n, p, k, rho_of(params)?, seed)?,
    };
    Ok(if params.heteroscedastic {
        apply_heteroscedastic(inst)
    } else {
        inst
    })
}

fn rho_of(params: &SimParams) -> Result<f64> {
    params
        .rho
        .ok_or_else(|| Error::arg("Toeplitz designs need rho"))
}

fn check_sizes(n: usize, p: usize, k: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::arg(format!("need n >= 2, got {n}")));
    }
    if p == 0 || k > p {
        return Err(Error::arg(format!("need 1 <= p and k <= p, got p = {p}, k = {k}")));
    }
    Ok(())
}

pub fn make_coefficients(p: usize, k: usize, mode: CoefMode, seed: u64) -> Result<Vec<f64>> {
    if k > p {
        return Err(Error::arg(format!("k = {k} exceeds p = {p}")));
    }
    let mut beta = vec![0.0; p];
    match mode {
        CoefMode::Dirac05 => beta[..k].fill(0.5),
        CoefMode::One => beta[..k].fill(1.0),
        CoefMode::Unif01 => {
            let mut rng = stream(seed, Stream::Coefficients);
            for b in &mut beta[..k] {
                let u: f64 = rng.random();
                *b = 1.0 - u;
            }
        }
    }
    Ok(beta)
}

fn normal(rng: &mut SimRng) -> f64 {
    StandardNormal.sample(rng)
}

fn noise_draws(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, Stream::Noise);
    (0..n).map(|_| normal(&mut rng)).collect()
}

fn assemble(
    x: Matrix,
    beta: Vec<f64>,
    noise_sd: f64,
    model: Model,
    params: SimParams,
    seed: u64,
) -> SimInstance {
    let noise = noise_draws(x.nrows(), seed);
    let mut y = x.mul_vec(&beta);
    for (v, z) in y.iter_mut().zip(&noise) {
        *v += noise_sd * z;
    }
    let support_true = (0..params.k).collect();
    SimInstance {
        x,
        y,
        beta_true: beta,
        support_true,
        model,
        params,
        seed,
        noise,
    }
}

/// `p×3` standard-normal loadings with rows stably sorted by ℓ₂ norm.
fn sorted_loadings(rng: &mut SimRng, p: usize) -> Vec<[f64; 3]> {
    let mut a: Vec<[f64; 3]> = (0..p).map(|_| [normal(rng), normal(rng), normal(rng)]).collect();
    a.sort_by(|l, r| sq3(l).total_cmp(&sq3(r)));
    a
}

/// Rows `x_i = A f_i + e_i` with `e_ij ~ N(0, sd_j²)`.
fn factor_rows(rng: &mut SimRng, n: usize, a: &[[f64; 3]], sd: &[f64]) -> Matrix {
    let p = a.len();
    let mut x = Matrix::zeros(n, p);
    for i in 0..n {
        let f = [normal(rng), normal(rng), normal(rng)];
        for j in 0..p {
            let e = normal(rng);
            x[(i, j)] = a[j][0] * f[0] + a[j][1] * f[1] + a[j][2] * f[2] + sd[j] * e;
        }
    }
    x
}

pub fn gen_model1(n: usize, p: usize, k: usize, coef_mode: CoefMode, seed: u64) -> Result<SimInstance> {
    check_sizes(n, p, k)?;
    let mut rng = stream(seed, Stream::Design);
    let a = sorted_loadings(&mut rng, p);
    let x = factor_rows(&mut rng, n, &a, &vec![1.0; p]);
    let beta = make_coefficients(p, k, coef_mode, seed)?;
    let params = SimParams {
        n,
        p,
        k,
        rho: None,
        coef_mode,
        heteroscedastic: false,
    };
    Ok(assemble(x, beta, Model::M1.noise_sd(), Model::M1, params, seed))
}

/// Loadings of Model 2 after zeroing and the common variance `σ²`.
pub fn model2_loadings(p: usize, seed: u64) -> (Vec<[f64; 3]>, f64) {
    model2_loadings_from(&mut stream(seed, Stream::Design), p)
}

fn model2_loadings_from(rng: &mut SimRng, p: usize) -> (Vec<[f64; 3]>, f64) {
    let mut a = sorted_loadings(rng, p);
    for row in a.iter_mut().take(5) {
        row[0] = 0.0;
    }
    let sigma2 = 1.5 * a.iter().map(sq3).fold(0.0, f64::max);
    (a, sigma2)
}

fn sq3(r: &[f64; 3]) -> f64 {
    r[0] * r[0] + r[1] * r[1] + r[2] * r[2]
}

pub fn gen_model2(n: usize, p: usize, k: usize, coef_mode: CoefMode, seed: u64) -> Result<SimInstance> {
    check_sizes(n, p, k)?;
    if p < 5 {
        return Err(Error::arg(format!("Model 2 needs p >= 5, got {p}")));
    }
    let mut rng = stream(seed, Stream::Design);
    let (a, sigma2) = model2_loadings_from(&mut rng, p);
    let sd: Vec<f64> = a.iter().map(|r| (sigma2 - sq3(r)).sqrt()).collect();
    let x = factor_rows(&mut rng, n, &a, &sd);
    let beta = make_coefficients(p, k, coef_mode, seed)?;
    let params = SimParams {
        n,
        p,
        k,
        rho: None,
        coef_mode,
        heteroscedastic: false,
    };
    Ok(assemble(x, beta, Model::M2.noise_sd(), Model::M2, params, seed))
}

/// Lower Cholesky factor of the Toeplitz matrix `ρ^|j−l|` in closed form:
/// `L[j][0] = ρʲ` and `L[j][l] = ρ^{j−l}·√(1−ρ²)` for `l ≥ 1`.
pub fn toeplitz_cholesky(p: usize, rho: f64) -> Matrix {
    let s = (1.0 - rho * rho).sqrt();
    Matrix::from_fn(p, p, |j, l| {
        if l > j {
            0.0
        } else if l == 0 {
            rho.powi(j as i32)
        } else {
            rho.powi((j - l) as i32) * s
        }
    })
}

/// Rows `x_i ~ N(0, Σ)` for the Toeplitz `Σ_{jl} = ρ^|j−l|`, applying the
/// Cholesky factor as the recursion `x_j = ρ x_{j−1} + √(1−ρ²) z_j`.
fn toeplitz_rows(rng: &mut SimRng, n: usize, p: usize, rho: f64) -> Matrix {
    let s = (1.0 - rho * rho).sqrt();
    let mut x = Matrix::zeros(n, p);
    for i in 0..n {
        let mut prev = 0.0;
        for j in 0..p {
            let z = normal(rng);
            prev = if j == 0 { z } else { rho * prev + s * z };
            x[(i, j)] = prev;
        }
    }
    x
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::arg(format!("rho must lie in (0, 1), got {rho}")));
    }
    Ok(())
}

pub fn gen_model3(
    n: usize,
    p: usize,
    k: usize,
    rho: f64,
    coef_mode: CoefMode,
    seed: u64,
) -> Result<SimInstance> {
    gen_toeplitz(n, p, k, rho, coef_mode, seed, Model::M3)
}

pub fn gen_model5(n: usize, p: usize, k: usize, rho: f64, seed: u64) -> Result<SimInstance> {
    gen_toeplitz(n, p, k, rho, CoefMode::One, seed, Model::M5)
}

fn gen_toeplitz(
    n: usize,
    p: usize,
    k: usize,
    rho: f64,
    coef_mode: CoefMode,
    seed: u64,
    model: Model,
) -> Result<SimInstance> {
    check_sizes(n, p, k)?;
    check_rho(rho)?;
    let mut rng = stream(seed, Stream::Design);
    let x = toeplitz_rows(&mut rng, n, p, rho);
    let beta = make_coefficients(p, k, coef_mode, seed)?;
    let params = SimParams {
        n,
        p,
        k,
        rho: Some(rho),
        coef_mode,
        heteroscedastic: false,
    };
    Ok(assemble(x, beta, 1.0, model, params, seed))
}

/// `corr(BBᵀ + I)` for `B` with i.i.d. Unif(−0.5, 0.5) entries, `p×3`.
pub fn model4_covariance(rng: &mut SimRng, p: usize) -> Matrix {
    let u = Uniform::new(-0.5, 0.5).expect("valid bounds");
    let b: Vec<[f64; 3]> = (0..p).map(|_| [u.sample(rng), u.sample(rng), u.sample(rng)]).collect();
    let dot3 = |a: &[f64; 3], c: &[f64; 3]| a[0] * c[0] + a[1] * c[1] + a[2] * c[2];
    let diag: Vec<f64> = b.iter().map(|r| dot3(r, r) + 1.0).collect();
    Matrix::from_fn(p, p, |j, l| {
        if j == l {
            1.0
        } else {
            dot3(&b[j], &b[l]) / (diag[j] * diag[l]).sqrt()
        }
    })
}

pub fn gen_model4(n: usize, p: usize, k: usize, seed: u64) -> Result<SimInstance> {
    check_sizes(n, p, k)?;
    let mut rng = stream(seed, Stream::Design);
    let sigma = model4_covariance(&mut rng, p);
    let l = linalg::cholesky(&sigma)?;
    let z = Matrix::from_fn(p, n, |_, _| normal(&mut rng));
    // column i of z is row i of X before mixing
    let x = l.matmul(&z).transpose();
    let beta = make_coefficients(p, k, CoefMode::One, seed)?;
    let params = SimParams {
        n,
        p,
        k,
        rho: None,
        coef_mode: CoefMode::One,
        heteroscedastic: false,
    };
    Ok(assemble(x, beta, 1.0, Model::M4, params, seed))
}

/// Redraws the noise as `ε_i = σ_i z_i` with `σ_i = ‖x_i‖₂/p`, reusing the
/// instance's noise-stream normals; `X` and `β` are untouched.
pub fn apply_heteroscedastic(mut inst: SimInstance) -> SimInstance {
    let p = inst.x.ncols() as f64;
    let mut y = inst.x.mul_vec(&inst.beta_true);
    for (i, v) in y.iter_mut().enumerate() {
        let row = inst.x.row(i);
        *v += linalg::norm2(&row) / p * inst.noise[i];
    }
    inst.y = y;
    inst.params.heteroscedastic = true;
    inst
}
