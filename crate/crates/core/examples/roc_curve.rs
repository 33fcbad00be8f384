//! ROC points along the Lasso path for the raw and LICM designs, and the
//! TPR each reaches at a 5% false positive rate.

use prodreg::cli::experiment::tpr_at_fpr;
use prodreg::diagnostics::roc_path;
use prodreg::linalg::center_columns;
use prodreg::simgen::{generate, CoefMode, Model, SimParams};
use prodreg::solver::{lambda_path, Penalty, SolverOptions};
use prodreg::transform::{QChoice, TransformSpec};

fn main() -> prodreg::Result<()> {
    let params = SimParams {
        n: 250,
        p: 200,
        k: 15,
        rho: None,
        coef_mode: CoefMode::Unif01,
        heteroscedastic: false,
    };
    let inst = generate(Model::M2, &params, 4)?;
    let (xc, yc, _) = center_columns(&inst.x, &inst.y)?;
    let path = lambda_path(&xc, &yc, 60, 1e-3)?;
    for spec in [TransformSpec::None, TransformSpec::Licm { q: QChoice::Auto }] {
        let points = roc_path(&inst.x, &inst.y, &inst.support_true, &path, &Penalty::Lasso, &spec, &SolverOptions::default())?;
        let curve: Vec<(f64, f64)> = points.iter().map(|p| (p.fpr, p.tpr)).collect();
        println!("{}: TPR at FPR 0.05 = {:.3}", spec.name(), tpr_at_fpr(&curve, 0.05));
        for p in points.iter().step_by(10) {
            println!("  lambda {:.4}  FPR {:.3}  TPR {:.3}  df {}", p.lambda, p.fpr, p.tpr, p.df);
        }
    }
    Ok(())
}
