//! Experiment configuration (TOML) and the built-in table presets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::DEFAULT_SEED;
use crate::simgen::{CoefMode, Model, SimParams};
use crate::solver::SolverOptions;
use crate::transform::{QChoice, Tau, TransformSpec};
use crate::tuning::{Criterion, PathSettings, PenaltyKind, DEFAULT_FOLDS};

/// One simulated design setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCell {
    pub model: Model,
    pub n: usize,
    pub p: usize,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default = "default_coef")]
    pub coef: CoefMode,
    #[serde(default)]
    pub heteroscedastic: bool,
}

fn default_coef() -> CoefMode {
    CoefMode::Dirac05
}

impl GridCell {
    pub fn params(&self) -> SimParams {
        SimParams {
            n: self.n,
            p: self.p,
            k: self.k,
            rho: self.rho,
            coef_mode: self.coef,
            heteroscedastic: self.heteroscedastic,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.model.needs_rho() && self.rho.is_none() {
            return Err(Error::Config(format!("{} cells need rho", self.model)));
        }
        if self.k == 0 || self.k >= self.p {
            return Err(Error::Config(format!("cell needs 0 < k < p, got k={}, p={}", self.k, self.p)));
        }
        Ok(())
    }
}

/// A transform paired with a penalty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub transform: TransformSpec,
    #[serde(default = "default_penalty")]
    pub penalty: PenaltyKind,
}

fn default_penalty() -> PenaltyKind {
    PenaltyKind::Lasso
}

impl MethodSpec {
    pub fn new(transform: TransformSpec, penalty: PenaltyKind) -> Self {
        MethodSpec { transform, penalty }
    }

    pub fn lasso(transform: TransformSpec) -> Self {
        MethodSpec::new(transform, PenaltyKind::Lasso)
    }
}

/// Transform parameter as printed in result tables: `q=auto`, `tau=median`.
pub fn transform_param(spec: &TransformSpec) -> String {
    let q = |q: &QChoice| match q {
        QChoice::Auto => "q=auto".to_string(),
        QChoice::Fixed(v) => format!("q={v}"),
    };
    match spec {
        TransformSpec::Licm { q: qq } | TransformSpec::Rgz { q: qq, .. } | TransformSpec::Rgb { q: qq, .. } => q(qq),
        TransformSpec::Trim { tau: Tau::Median } => "tau=median".to_string(),
        TransformSpec::Trim { tau: Tau::Value(t) } => format!("tau={t}"),
        TransformSpec::None | TransformSpec::Puffer => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_criteria")]
    pub criteria: Vec<Criterion>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    /// Also report the cross-validated prediction error of each selected
    /// support.
    #[serde(default)]
    pub cmse: bool,
    #[serde(default)]
    pub path: PathSettings,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub methods: Vec<MethodSpec>,
    #[serde(default)]
    pub grid: Vec<GridCell>,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_replicates() -> usize {
    100
}

fn default_criteria() -> Vec<Criterion> {
    vec![Criterion::Cv, Criterion::Bic, Criterion::Gic]
}

fn default_folds() -> usize {
    DEFAULT_FOLDS
}

impl ExperimentConfig {
    pub fn new(name: impl Into<String>) -> Self {
        ExperimentConfig {
            name: name.into(),
            seed: DEFAULT_SEED,
            replicates: default_replicates(),
            criteria: default_criteria(),
            folds: DEFAULT_FOLDS,
            cmse: false,
            path: PathSettings::default(),
            solver: SolverOptions::default(),
            methods: Vec::new(),
            grid: Vec::new(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.folds < 2 {
            return Err(Error::Config("folds must be at least 2".into()));
        }
        if self.path.n_lambda == 0 {
            return Err(Error::Config("path.n_lambda must be at least 1".into()));
        }
        if let Some(r) = self.path.ratio {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::Config(format!("path.ratio must lie in (0, 1), got {r}")));
            }
        }
        for m in &self.methods {
            m.transform.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        for c in &self.grid {
            c.validate()?;
        }
        Ok(())
    }
}

fn licm() -> TransformSpec {
    TransformSpec::Licm { q: QChoice::Auto }
}

fn rgz() -> TransformSpec {
    TransformSpec::Rgz { q: QChoice::Auto, seed: 0 }
}

fn rgb() -> TransformSpec {
    TransformSpec::Rgb { q: QChoice::Auto, seed: 0 }
}

fn cell(model: Model, n: usize, p: usize, k: usize, rho: Option<f64>, coef: CoefMode) -> GridCell {
    GridCell {
        model,
        n,
        p,
        k,
        rho,
        coef,
        heteroscedastic: false,
    }
}

fn four_transforms() -> Vec<MethodSpec> {
    [licm(), TransformSpec::None, rgz(), rgb()].into_iter().map(MethodSpec::lasso).collect()
}

fn penalty_pairs() -> Vec<MethodSpec> {
    let mut out = Vec::new();
    for pen in [PenaltyKind::Lasso, PenaltyKind::Scad, PenaltyKind::Mcp, PenaltyKind::AdaLasso] {
        out.push(MethodSpec::new(TransformSpec::None, pen));
        out.push(MethodSpec::new(licm(), pen));
    }
    out
}

fn both_coefs(model: Model, n: usize, settings: &[(usize, usize, Option<f64>)]) -> Vec<GridCell> {
    settings
        .iter()
        .flat_map(|&(k, p, rho)| {
            [CoefMode::Dirac05, CoefMode::Unif01].map(|c| cell(model, n, p, k, rho, c))
        })
        .collect()
}

pub const PRESETS: [&str; 8] = [
    "table1", "table2", "table3", "table4", "table5", "table6", "table7", "figure1",
];

/// Configuration regenerating one of the published tables or the ROC
/// figure.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::new(name);
    let factor_grid = [(15, 200, None), (15, 500, None), (20, 500, None), (10, 1000, None), (15, 1000, None)];
    match name {
        "table1" => {
            cfg.methods = four_transforms();
            cfg.grid = both_coefs(Model::M1, 250, &factor_grid);
        }
        "table2" => {
            cfg.methods = four_transforms();
            cfg.grid = both_coefs(Model::M2, 250, &factor_grid);
        }
        "table3" => {
            cfg.methods = four_transforms();
            cfg.grid = both_coefs(
                Model::M3,
                250,
                &[
                    (15, 200, Some(0.5)),
                    (15, 500, Some(0.85)),
                    (20, 500, Some(0.7)),
                    (10, 1000, Some(0.6)),
                    (15, 1000, Some(0.9)),
                ],
            );
        }
        "table4" => {
            cfg.methods = penalty_pairs();
            cfg.grid = [(10, 1000), (10, 2000), (20, 2000)]
                .iter()
                .map(|&(k, p)| cell(Model::M4, 400, p, k, None, CoefMode::One))
                .collect();
        }
        "table5" => {
            cfg.methods = penalty_pairs();
            cfg.grid = [(10, 1000, 0.8), (10, 2000, 0.9), (20, 2000, 0.9)]
                .iter()
                .map(|&(k, p, rho)| cell(Model::M5, 400, p, k, Some(rho), CoefMode::One))
                .collect();
        }
        "table6" => {
            cfg.methods = [licm(), TransformSpec::Puffer, TransformSpec::Trim { tau: Tau::Median }]
                .into_iter()
                .map(MethodSpec::lasso)
                .collect();
            cfg.criteria = vec![Criterion::Cv];
            for model in [Model::M1, Model::M2, Model::M3, Model::M4] {
                let rho = model.needs_rho().then_some(0.9);
                for (n, p) in [(250, 1000), (400, 1000), (400, 2000)] {
                    cfg.grid.push(cell(model, n, p, 10, rho, CoefMode::One));
                }
            }
        }
        "table7" => {
            cfg.methods = four_transforms();
            let mut grid = both_coefs(Model::M1, 250, &[(15, 200, None), (15, 500, None)]);
            grid.extend(both_coefs(Model::M2, 250, &[(15, 500, None), (10, 1000, None)]));
            grid.extend(both_coefs(Model::M3, 250, &[(15, 1000, Some(0.5))]));
            for c in &mut grid {
                c.heteroscedastic = true;
            }
            cfg.grid = grid;
        }
        "figure1" => {
            cfg.methods = vec![MethodSpec::lasso(licm()), MethodSpec::lasso(TransformSpec::None)];
            cfg.criteria = Vec::new();
            cfg.grid = vec![
                cell(Model::M1, 250, 200, 15, None, CoefMode::Dirac05),
                cell(Model::M2, 250, 200, 15, None, CoefMode::Dirac05),
                cell(Model::M3, 250, 500, 20, Some(0.7), CoefMode::Dirac05),
            ];
        }
        other => {
            return Err(Error::Config(format!(
                "unknown preset `{other}` (expected one of {})",
                PRESETS.join(", ")
            )))
        }
    }
    Ok(cfg)
}
