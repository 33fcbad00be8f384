//! Penalized least squares by cyclic coordinate descent.
//!
//! Objective: `n⁻¹‖y − Xβ‖² + Σⱼ pen(βⱼ)`, with `pen = λ|β|` for the Lasso.
//! Coordinate `j` sees curvature `cⱼ = ‖xⱼ‖²/n` and inner product
//! `gⱼ = xⱼᵀr/n + cⱼβⱼ`, so the Lasso update is `S(gⱼ, λ/2)/cⱼ`.
//!
//! SCAD and MCP use the univariate closed forms with `λₑ = λ/(2cⱼ)` on
//! `z = gⱼ/cⱼ`. These are the exact coordinate minimizers for the penalty
//! `2cⱼ·p_{λₑ}(|βⱼ|)`, whose slope at zero is `λ` like the Lasso's.
//!
//! Inputs are expected to be column-centered; intercepts live in
//! [`CenteringInfo`](crate::linalg::CenteringInfo).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, axpy, center_columns, dot, CenteringInfo, Matrix};
use crate::transform::{self, TransformSpec};

pub const DEFAULT_TOL: f64 = 1e-7;
/// Active-set sweeps between attempts to jump to the sign-pattern solution.
const POLISH_EVERY: usize = 8;
/// Sign-face solves per polish attempt.
const MAX_FACE_STEPS: usize = 64;
pub const DEFAULT_MAX_SWEEPS: usize = 100_000;
pub const DEFAULT_SCAD_A: f64 = 3.7;
pub const DEFAULT_MCP_GAMMA: f64 = 3.0;

/// Columns with `‖xⱼ‖²/n` below this are frozen at zero.
const FROZEN_CURVATURE: f64 = 1e-24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Penalty {
    Lasso,
    Scad { a: f64 },
    Mcp { gamma: f64 },
    /// Weighted Lasso; `+∞` excludes a coordinate.
    #[serde(rename = "adalasso")]
    AdaptiveLasso { weights: Vec<f64> },
}

impl Penalty {
    pub fn scad() -> Self {
        Penalty::Scad { a: DEFAULT_SCAD_A }
    }

    pub fn mcp() -> Self {
        Penalty::Mcp { gamma: DEFAULT_MCP_GAMMA }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Penalty::Lasso => "lasso",
            Penalty::Scad { .. } => "scad",
            Penalty::Mcp { .. } => "mcp",
            Penalty::AdaptiveLasso { .. } => "adalasso",
        }
    }

    pub fn is_convex(&self) -> bool {
        matches!(self, Penalty::Lasso | Penalty::AdaptiveLasso { .. })
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        match self {
            Penalty::Lasso => Ok(()),
            Penalty::Scad { a } if !(*a > 2.0) => Err(Error::arg(format!("SCAD needs a > 2, got {a}"))),
            Penalty::Mcp { gamma } if !(*gamma > 1.0) => {
                Err(Error::arg(format!("MCP needs gamma > 1, got {gamma}")))
            }
            Penalty::AdaptiveLasso { weights } => {
                if weights.len() != p {
                    return Err(Error::dim(format!("{} adaptive weights for {p} columns", weights.len())));
                }
                if weights.iter().any(|w| !(*w >= 0.0)) {
                    return Err(Error::arg("adaptive weights must be non-negative"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Coordinate minimizer given inner product `g` and curvature `c`.
    #[inline]
    fn update(&self, j: usize, g: f64, c: f64, lambda: f64) -> f64 {
        match self {
            Penalty::Lasso => soft(g, 0.5 * lambda) / c,
            Penalty::AdaptiveLasso { weights } => {
                let w = weights[j];
                if w.is_infinite() {
                    0.0
                } else {
                    soft(g, 0.5 * lambda * w) / c
                }
            }
            Penalty::Scad { a } => {
                let z = g / c;
                let le = lambda / (2.0 * c);
                let az = z.abs();
                if az <= 2.0 * le {
                    soft(z, le)
                } else if az <= a * le {
                    ((a - 1.0) * z - z.signum() * a * le) / (a - 2.0)
                } else {
                    z
                }
            }
            Penalty::Mcp { gamma } => {
                let z = g / c;
                let le = lambda / (2.0 * c);
                if z.abs() <= gamma * le {
                    soft(z, le) / (1.0 - 1.0 / gamma)
                } else {
                    z
                }
            }
        }
    }

    /// Penalty slope at `|β| = θ > 0`.
    fn slope(&self, j: usize, theta: f64, c: f64, lambda: f64) -> f64 {
        match self {
            Penalty::Lasso => lambda,
            Penalty::AdaptiveLasso { weights } => lambda * weights[j],
            Penalty::Scad { a } => {
                let le = lambda / (2.0 * c);
                if theta <= le {
                    lambda
                } else {
                    2.0 * c * (a * le - theta).max(0.0) / (a - 1.0)
                }
            }
            Penalty::Mcp { gamma } => (lambda - 2.0 * c * theta / gamma).max(0.0),
        }
    }

    /// The penalty on the region around `|β| = θ > 0` as
    /// `slope·|β| + curvature·β²/2 + const`, valid for `lo ≤ |β| ≤ hi`.
    fn piece(&self, j: usize, theta: f64, c: f64, lambda: f64) -> Piece {
        let flat = |slope, lo, hi| Piece {
            slope,
            curvature: 0.0,
            lo,
            hi,
        };
        match self {
            Penalty::Lasso => flat(lambda, 0.0, f64::INFINITY),
            Penalty::AdaptiveLasso { weights } => flat(lambda * weights[j], 0.0, f64::INFINITY),
            Penalty::Scad { a } => {
                let le = lambda / (2.0 * c);
                if theta <= le {
                    flat(lambda, 0.0, le)
                } else if theta <= a * le {
                    Piece {
                        slope: 2.0 * c * a * le / (a - 1.0),
                        curvature: -2.0 * c / (a - 1.0),
                        lo: le,
                        hi: a * le,
                    }
                } else {
                    flat(0.0, a * le, f64::INFINITY)
                }
            }
            Penalty::Mcp { gamma } => {
                let le = lambda / (2.0 * c);
                if theta <= gamma * le {
                    Piece {
                        slope: lambda,
                        curvature: -2.0 * c / gamma,
                        lo: 0.0,
                        hi: gamma * le,
                    }
                } else {
                    flat(0.0, gamma * le, f64::INFINITY)
                }
            }
        }
    }

    /// Subgradient bound at zero (the slope at `0⁺`).
    fn slope_at_zero(&self, j: usize, lambda: f64) -> f64 {
        match self {
            Penalty::AdaptiveLasso { weights } => lambda * weights[j],
            _ => lambda,
        }
    }

    fn value(&self, j: usize, beta: f64, c: f64, lambda: f64) -> f64 {
        let t = beta.abs();
        if t == 0.0 {
            return 0.0;
        }
        match self {
            Penalty::Lasso => lambda * t,
            Penalty::AdaptiveLasso { weights } => lambda * weights[j] * t,
            Penalty::Scad { a } => {
                let le = lambda / (2.0 * c);
                let v = if t <= le {
                    le * t
                } else if t <= a * le {
                    (2.0 * a * le * t - t * t - le * le) / (2.0 * (a - 1.0))
                } else {
                    (a + 1.0) * le * le / 2.0
                };
                2.0 * c * v
            }
            Penalty::Mcp { gamma } => {
                let le = lambda / (2.0 * c);
                let v = if t <= gamma * le {
                    le * t - t * t / (2.0 * gamma)
                } else {
                    gamma * le * le / 2.0
                };
                2.0 * c * v
            }
        }
    }
}

/// One quadratic piece of a coordinate penalty.
#[derive(Debug, Clone, Copy)]
struct Piece {
    slope: f64,
    curvature: f64,
    lo: f64,
    hi: f64,
}

#[inline]
pub fn soft(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Adaptive weights `1/|β̂ⱼ|`, infinite where the initial estimate is zero.
pub fn adaptive_weights(beta_init: &[f64]) -> Vec<f64> {
    beta_init
        .iter()
        .map(|b| if *b == 0.0 { f64::INFINITY } else { 1.0 / b.abs() })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_sweeps: usize,
    /// Record the objective after every sweep.
    pub trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: DEFAULT_TOL,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta: Vec<f64>,
    pub lambda: f64,
    pub support: Vec<usize>,
    pub sweeps: usize,
    pub kkt_residual: f64,
    pub objective: f64,
    pub objective_trace: Vec<f64>,
}

impl FitResult {
    pub fn df(&self) -> usize {
        self.support.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaPath {
    values: Vec<f64>,
}

impl LambdaPath {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::arg("a lambda path needs at least two values"));
        }
        if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::arg("lambda values must be positive and finite"));
        }
        if values.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(Error::arg("lambda values must be strictly decreasing"));
        }
        Ok(LambdaPath { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn lambda_max(&self) -> f64 {
        self.values[0]
    }
}

/// Default smallest-to-largest ratio: 0.01 when `n < p`, 1e-4 otherwise.
pub fn default_ratio(n: usize, p: usize) -> f64 {
    if n < p {
        0.01
    } else {
        1e-4
    }
}

pub const DEFAULT_N_LAMBDA: usize = 100;

/// Smallest λ at which the penalized fit is identically zero.
pub fn lambda_max(x: &Matrix, y: &[f64], penalty: &Penalty) -> f64 {
    // same arithmetic as the coordinate update, so the fit at λ_max is exactly zero
    let inv_n = 1.0 / x.nrows() as f64;
    (0..x.ncols())
        .map(|j| {
            let s = 2.0 * (dot(x.col(j), y).abs() * inv_n);
            match penalty {
                Penalty::AdaptiveLasso { weights } => {
                    let w = weights[j];
                    if w > 0.0 && w.is_finite() {
                        s / w
                    } else {
                        0.0
                    }
                }
                _ => s,
            }
        })
        .fold(0.0, f64::max)
}

pub fn lambda_path(x: &Matrix, y: &[f64], n_lambda: usize, ratio: f64) -> Result<LambdaPath> {
    lambda_path_for(x, y, &Penalty::Lasso, n_lambda, ratio)
}

/// Log-spaced path from the penalty's `λ_max` down to `ratio·λ_max`.
pub fn lambda_path_for(
    x: &Matrix,
    y: &[f64],
    penalty: &Penalty,
    n_lambda: usize,
    ratio: f64,
) -> Result<LambdaPath> {
    check_shapes(x, y)?;
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::arg(format!("path ratio must lie in (0, 1), got {ratio}")));
    }
    if n_lambda < 2 {
        return Err(Error::arg("a lambda path needs at least two values"));
    }
    let lmax = lambda_max(x, y, penalty);
    let n = x.nrows() as f64;
    let max_norm = (0..x.ncols()).map(|j| linalg::norm2(x.col(j))).fold(0.0, f64::max);
    let noise_floor = 64.0 * f64::EPSILON * 2.0 * linalg::norm2(y) * max_norm / n;
    if !(lmax > noise_floor) {
        return Err(Error::DegeneratePath(
            "the response is orthogonal to every column (lambda_max = 0)".into(),
        ));
    }
    let step = ratio.ln() / (n_lambda - 1) as f64;
    let mut values: Vec<f64> = (0..n_lambda).map(|k| lmax * (step * k as f64).exp()).collect();
    values[0] = lmax;
    values[n_lambda - 1] = ratio * lmax;
    LambdaPath::new(values)
}

fn check_shapes(x: &Matrix, y: &[f64]) -> Result<()> {
    if y.len() != x.nrows() {
        return Err(Error::dim(format!("response has {} entries, design has {} rows", y.len(), x.nrows())));
    }
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::dim("empty design"));
    }
    Ok(())
}

/// Coordinate-descent workspace for one design.
struct Cd<'a> {
    x: &'a Matrix,
    inv_n: f64,
    c: Vec<f64>,
    gram: std::cell::RefCell<Vec<Option<Vec<f64>>>>,
}

impl<'a> Cd<'a> {
    fn new(x: &'a Matrix) -> Self {
        let inv_n = 1.0 / x.nrows() as f64;
        let c = (0..x.ncols()).map(|j| dot(x.col(j), x.col(j)) * inv_n).collect();
        let gram = std::cell::RefCell::new(vec![None; x.ncols()]);
        Cd { x, inv_n, c, gram }
    }

    fn frozen(&self, j: usize) -> bool {
        self.c[j] < FROZEN_CURVATURE
    }

    fn residual(&self, y: &[f64], beta: &[f64]) -> Vec<f64> {
        let mut r = y.to_vec();
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                axpy(-b, self.x.col(j), &mut r);
            }
        }
        r
    }

    fn objective(&self, r: &[f64], beta: &[f64], penalty: &Penalty, lambda: f64) -> f64 {
        let pen: f64 = beta
            .iter()
            .enumerate()
            .map(|(j, &b)| penalty.value(j, b, self.c[j], lambda))
            .sum();
        dot(r, r) * self.inv_n + pen
    }

    fn kkt(&self, r: &[f64], beta: &[f64], penalty: &Penalty, lambda: f64) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..beta.len() {
            if self.frozen(j) {
                continue;
            }
            let g = 2.0 * dot(self.x.col(j), r) * self.inv_n;
            let b = beta[j];
            let v = if b != 0.0 {
                (g - b.signum() * penalty.slope(j, b.abs(), self.c[j], lambda)).abs()
            } else {
                let bound = penalty.slope_at_zero(j, lambda);
                if bound.is_infinite() {
                    0.0
                } else {
                    (g.abs() - bound).max(0.0)
                }
            };
            worst = worst.max(v);
        }
        worst
    }

    fn sweep(
        &self,
        idx: impl Iterator<Item = usize>,
        beta: &mut [f64],
        r: &mut [f64],
        penalty: &Penalty,
        lambda: f64,
    ) -> f64 {
        let mut max_change = 0.0f64;
        for j in idx {
            if self.frozen(j) {
                continue;
            }
            let xj = self.x.col(j);
            let old = beta[j];
            let g = dot(xj, r) * self.inv_n + self.c[j] * old;
            let new = penalty.update(j, g, self.c[j], lambda);
            if new != old {
                axpy(old - new, xj, r);
                beta[j] = new;
                max_change = max_change.max((new - old).abs());
            }
        }
        max_change
    }

    /// Column `j` of `XᵀX/n`, computed on first use.
    fn gram_col(&self, j: usize) -> std::cell::Ref<'_, [f64]> {
        if self.gram.borrow()[j].is_none() {
            let col: Vec<f64> = self.x.tr_mul_vec(self.x.col(j)).into_iter().map(|v| v * self.inv_n).collect();
            self.gram.borrow_mut()[j] = Some(col);
        }
        std::cell::Ref::map(self.gram.borrow(), |g| g[j].as_deref().expect("just filled"))
    }

    /// Stationary point of the objective restricted to `active`, with every
    /// coordinate held to its current sign and penalty region, where the
    /// penalty is quadratic. `None` if that system is not positive definite.
    fn face_solution(&self, xty: &[f64], active: &[usize], beta: &[f64], pieces: &[Piece]) -> Option<Vec<f64>> {
        let m = active.len();
        let mut g = Matrix::zeros(m, m);
        for (b, &jb) in active.iter().enumerate() {
            let col = self.gram_col(jb);
            for (a, &ja) in active.iter().enumerate() {
                g[(a, b)] = col[ja];
            }
            g[(b, b)] += 0.5 * pieces[b].curvature;
        }
        let rhs = Matrix::from_fn(m, 1, |a, _| xty[active[a]] * self.inv_n - 0.5 * beta[active[a]].signum() * pieces[a].slope);
        let sol = linalg::spd_solve(&g, &rhs).ok()?;
        let out: Vec<f64> = (0..m).map(|a| sol[(a, 0)]).collect();
        out.iter().all(|v| v.is_finite()).then_some(out)
    }

    /// Replaces the CD iterate by a better point found with exact solves on
    /// the current support. Slow CD tails on correlated active sets usually
    /// have the right support and signs long before the coefficients settle.
    ///
    /// Convex penalties run a primal active-set loop: solve on the sign
    /// face, and if a sign would flip, stop at the first zero crossing, drop
    /// that coordinate and solve again. Each step lowers the objective.
    /// Nonconvex penalties take the face solution only when every
    /// coordinate stays in its penalty region and the objective drops.
    /// The caller still certifies convergence with a full sweep.
    #[allow(clippy::too_many_arguments)]
    fn polish(
        &self,
        y: &[f64],
        xty: &[f64],
        active: &[usize],
        beta: &mut [f64],
        r: &mut Vec<f64>,
        penalty: &Penalty,
        lambda: f64,
    ) -> bool {
        if active.is_empty() || active.len() >= self.x.nrows() {
            return false;
        }
        let mut act = active.to_vec();
        let mut cur: Vec<f64> = act.iter().map(|&j| beta[j]).collect();
        let convex = penalty.is_convex();
        let before = if convex { 0.0 } else { self.objective(r, beta, penalty, lambda) };
        let mut moved = false;
        for _ in 0..MAX_FACE_STEPS {
            let pieces: Vec<Piece> =
                act.iter().zip(&cur).map(|(&j, &b)| penalty.piece(j, b.abs(), self.c[j], lambda)).collect();
            let full: Vec<f64> = {
                let mut b = beta.to_vec();
                b.iter_mut().for_each(|v| *v = 0.0);
                for (&j, &v) in act.iter().zip(&cur) {
                    b[j] = v;
                }
                b
            };
            let Some(sol) = self.face_solution(xty, &act, &full, &pieces) else {
                break;
            };
            let inside = |a: usize, v: f64| {
                v != 0.0 && v.signum() == cur[a].signum() && v.abs() >= pieces[a].lo && v.abs() <= pieces[a].hi
            };
            if (0..act.len()).all(|a| inside(a, sol[a])) {
                cur = sol;
                moved = true;
                break;
            }
            if !convex {
                return false;
            }
            // walk toward the face solution until the first sign change
            let mut t = 1.0f64;
            let mut hit = 0;
            for a in 0..act.len() {
                if sol[a].signum() != cur[a].signum() || sol[a] == 0.0 {
                    let ta = cur[a] / (cur[a] - sol[a]);
                    if ta < t {
                        t = ta;
                        hit = a;
                    }
                }
            }
            for a in 0..act.len() {
                cur[a] += t * (sol[a] - cur[a]);
            }
            cur.remove(hit);
            act.remove(hit);
            moved = true;
            if act.is_empty() {
                break;
            }
        }
        if !moved {
            return false;
        }
        let saved = beta.to_vec();
        for &j in active {
            beta[j] = 0.0;
        }
        for (&j, &v) in act.iter().zip(&cur) {
            beta[j] = v;
        }
        let fresh = self.residual(y, beta);
        if !convex && self.objective(&fresh, beta, penalty, lambda) >= before {
            beta.copy_from_slice(&saved);
            return false;
        }
        *r = fresh;
        true
    }

    fn solve(
        &self,
        y: &[f64],
        lambda: f64,
        penalty: &Penalty,
        mut beta: Vec<f64>,
        opts: &SolverOptions,
    ) -> Result<FitResult> {
        let p = self.x.ncols();
        let mut r = self.residual(y, &beta);
        let mut sweeps = 0usize;
        let mut trace = Vec::new();
        let kkt_target = 10.0 * opts.tol;
        let mut tol = opts.tol;
        let mut kkt;
        let mut active: Vec<usize> = Vec::new();
        let mut xty: Option<Vec<f64>> = None;
        let mut interval = POLISH_EVERY;
        loop {
            loop {
                let change = self.sweep(0..p, &mut beta, &mut r, penalty, lambda);
                sweeps += 1;
                if opts.trace {
                    trace.push(self.objective(&r, &beta, penalty, lambda));
                }
                if change < tol {
                    break;
                }
                if sweeps >= opts.max_sweeps {
                    return Err(Error::NonConvergence {
                        sweeps,
                        max_change: change,
                        last_beta: beta,
                    });
                }
                let mut inner = 0usize;
                let mut next_polish = interval;
                loop {
                    active.clear();
                    active.extend((0..p).filter(|&j| beta[j] != 0.0));
                    let change = self.sweep(active.iter().copied(), &mut beta, &mut r, penalty, lambda);
                    sweeps += 1;
                    inner += 1;
                    if opts.trace {
                        trace.push(self.objective(&r, &beta, penalty, lambda));
                    }
                    if change < tol {
                        break;
                    }
                    if inner == next_polish {
                        let xty = xty.get_or_insert_with(|| self.x.tr_mul_vec(y));
                        if self.polish(y, xty, &active, &mut beta, &mut r, penalty, lambda) {
                            interval = POLISH_EVERY;
                            if opts.trace {
                                trace.push(self.objective(&r, &beta, penalty, lambda));
                            }
                            break;
                        }
                        interval *= 2;
                        next_polish = inner + interval;
                    }
                    if sweeps >= opts.max_sweeps {
                        return Err(Error::NonConvergence {
                            sweeps,
                            max_change: change,
                            last_beta: beta,
                        });
                    }
                }
            }
            // the update keeps r in sync incrementally; refresh before certifying
            r = self.residual(y, &beta);
            kkt = self.kkt(&r, &beta, penalty, lambda);
            if kkt <= kkt_target || tol < opts.tol * 1e-4 {
                break;
            }
            tol *= 0.1;
        }
        let support = (0..p).filter(|&j| beta[j] != 0.0).collect();
        let objective = self.objective(&r, &beta, penalty, lambda);
        Ok(FitResult {
            beta,
            lambda,
            support,
            sweeps,
            kkt_residual: kkt,
            objective,
            objective_trace: trace,
        })
    }
}

/// Lasso at a single λ.
pub fn fit_lasso(
    x: &Matrix,
    y: &[f64],
    lambda: f64,
    warm: Option<&[f64]>,
    opts: &SolverOptions,
) -> Result<FitResult> {
    fit_penalized(x, y, lambda, &Penalty::Lasso, warm, opts)
}

/// Any supported penalty at a single λ. Without a warm start, nonconvex
/// penalties start from the Lasso solution at the same λ.
pub fn fit_penalized(
    x: &Matrix,
    y: &[f64],
    lambda: f64,
    penalty: &Penalty,
    warm: Option<&[f64]>,
    opts: &SolverOptions,
) -> Result<FitResult> {
    check_shapes(x, y)?;
    penalty.validate(x.ncols())?;
    check_options(lambda, opts)?;
    let cd = Cd::new(x);
    let start = match warm {
        Some(w) => {
            if w.len() != x.ncols() {
                return Err(Error::dim(format!("warm start has {} entries for {} columns", w.len(), x.ncols())));
            }
            w.to_vec()
        }
        None if penalty.is_convex() => vec![0.0; x.ncols()],
        None => cd.solve(y, lambda, &Penalty::Lasso, vec![0.0; x.ncols()], opts)?.beta,
    };
    cd.solve(y, lambda, penalty, start, opts)
}

fn check_options(lambda: f64, opts: &SolverOptions) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::arg(format!("lambda must be finite and non-negative, got {lambda}")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::arg("solver tolerance must be positive"));
    }
    Ok(())
}

/// When to cut a path short: the fit is close to interpolating `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathStop {
    /// Stop after the first fit explaining at least this fraction of ‖y‖².
    pub dev_ratio: f64,
    /// Stop after the first fit with at least this many nonzeros.
    pub max_df: usize,
    /// The same for SCAD and MCP, whose coordinate descent crawls once the
    /// active Gram is close to singular.
    pub max_df_nonconvex: usize,
}

impl PathStop {
    pub fn never() -> Self {
        PathStop {
            dev_ratio: f64::INFINITY,
            max_df: usize::MAX,
            max_df_nonconvex: usize::MAX,
        }
    }

    /// 0.999 explained, or `min(n − 1, rank)` nonzeros on an `n`-row design
    /// (half of that, capped at `n/2`, for nonconvex penalties). Past the
    /// rank the Lasso solution is no longer unique and descent crawls.
    pub fn for_design(x: &Matrix) -> Self {
        let n = x.nrows();
        let rank = linalg::thin_svd(x).map_or(n, |s| s.rank());
        let max_df = n.saturating_sub(1).min(rank).max(1);
        PathStop {
            dev_ratio: 0.999,
            max_df,
            max_df_nonconvex: (n / 2).min(max_df).max(1),
        }
    }
}

/// Warm-started fits along `path`. Nonconvex penalties are started at each λ
/// from the Lasso solution at that λ, which itself is warm-started along the
/// path. The returned vector may be shorter than the path when `stop` fires,
/// or when a nonconvex fit after the first λ does not converge.
pub fn fit_path(
    x: &Matrix,
    y: &[f64],
    path: &LambdaPath,
    penalty: &Penalty,
    opts: &SolverOptions,
    stop: PathStop,
) -> Result<Vec<FitResult>> {
    check_shapes(x, y)?;
    penalty.validate(x.ncols())?;
    check_options(path.lambda_max(), opts)?;
    let cd = Cd::new(x);
    let tss = dot(y, y);
    let mut fits = Vec::with_capacity(path.len());
    let mut warm = vec![0.0; x.ncols()];
    let mut lasso_warm = vec![0.0; x.ncols()];
    for &lambda in path.values() {
        let fit = if penalty.is_convex() {
            cd.solve(y, lambda, penalty, warm.clone(), opts)?
        } else {
            let lasso = cd.solve(y, lambda, &Penalty::Lasso, lasso_warm.clone(), opts)?;
            lasso_warm.clone_from(&lasso.beta);
            match cd.solve(y, lambda, penalty, lasso.beta, opts) {
                Ok(fit) => fit,
                // the nonconvex tail past this point is not trusted either
                Err(Error::NonConvergence { .. }) if !fits.is_empty() => break,
                Err(e) => return Err(e),
            }
        };
        warm.clone_from(&fit.beta);
        let rss = residual_sum_of_squares(x, y, &fit.beta);
        let max_df = if penalty.is_convex() { stop.max_df } else { stop.max_df_nonconvex };
        let done = fit.df() >= max_df || (tss > 0.0 && 1.0 - rss / tss >= stop.dev_ratio);
        fits.push(fit);
        if done {
            break;
        }
    }
    Ok(fits)
}

pub fn residual_sum_of_squares(x: &Matrix, y: &[f64], beta: &[f64]) -> f64 {
    let r = Cd::new(x).residual(y, beta);
    dot(&r, &r)
}

/// Lasso KKT residual at `β`: the largest violation of the stationarity and
/// subgradient conditions with `g = (2/n)Xᵀ(y − Xβ)`.
pub fn kkt_residual(x: &Matrix, y: &[f64], lambda: f64, beta: &[f64]) -> f64 {
    kkt_residual_for(x, y, lambda, beta, &Penalty::Lasso)
}

pub fn kkt_residual_for(x: &Matrix, y: &[f64], lambda: f64, beta: &[f64], penalty: &Penalty) -> f64 {
    let cd = Cd::new(x);
    let r = cd.residual(y, beta);
    cd.kkt(&r, beta, penalty, lambda)
}

/// A fit on a transformed design together with how it was produced.
#[derive(Debug, Clone)]
pub struct ProdFit {
    pub fit: FitResult,
    pub spec: TransformSpec,
    pub centering: CenteringInfo,
    pub warnings: Vec<String>,
}

/// Centers `(x, y)`, applies `spec`, and fits `penalty` at `lambda`.
pub fn fit_prod(
    x: &Matrix,
    y: &[f64],
    spec: &TransformSpec,
    lambda: f64,
    penalty: &Penalty,
    opts: &SolverOptions,
) -> Result<ProdFit> {
    let (xc, yc, centering) = center_columns(x, y)?;
    let prepared = transform::prepare(&xc, &yc, spec)?;
    let fit = fit_penalized(&prepared.design, &prepared.response, lambda, penalty, None, opts)?;
    Ok(ProdFit {
        fit,
        spec: prepared.resolved,
        centering,
        warnings: prepared.warnings,
    })
}

/// Union of the supports fitted on `P_Z·X` at `lambda1` and on `(I − P_Z)·X`
/// at `lambda2`.
pub fn union_support_fit(
    x: &Matrix,
    y: &[f64],
    spec: &TransformSpec,
    lambda1: f64,
    lambda2: f64,
    penalty: &Penalty,
    opts: &SolverOptions,
) -> Result<Vec<usize>> {
    if !spec.is_prod() {
        return Err(Error::arg(format!("union of supports needs a PROD transform, got {}", spec.name())));
    }
    let (xc, yc, _) = center_columns(x, y)?;
    let prepared = transform::prepare(&xc, &yc, spec)?;
    let pz_x = prepared.pz_x.expect("PROD transforms return P_Z X");
    let first = fit_penalized(&pz_x, &yc, lambda1, penalty, None, opts)?;
    let second = fit_penalized(&prepared.design, &yc, lambda2, penalty, None, opts)?;
    Ok(union_sorted(&first.support, &second.support))
}

pub fn union_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut u: Vec<usize> = a.iter().chain(b).copied().collect();
    u.sort_unstable();
    u.dedup();
    u
}
