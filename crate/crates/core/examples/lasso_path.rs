//! Lasso path on a factor design, tuned by 5-fold CV, BIC and GIC.

use prodreg::linalg::center_columns;
use prodreg::simgen::{generate, CoefMode, Model, SimParams};
use prodreg::solver::{fit_path, default_ratio, lambda_path, Penalty, PathStop, SolverOptions};
use prodreg::transform::{prepare, TransformSpec};
use prodreg::tuning::{select_cv, select_ic_from_fits, Criterion};

fn main() -> prodreg::Result<()> {
    let params = SimParams {
        n: 250,
        p: 200,
        k: 15,
        rho: None,
        coef_mode: CoefMode::Dirac05,
        heteroscedastic: false,
    };
    let inst = generate(Model::M1, &params, 11)?;
    let (x, y, centering) = center_columns(&inst.x, &inst.y)?;
    let path = lambda_path(&x, &y, 100, default_ratio(x.nrows(), x.ncols()))?;
    let opts = SolverOptions::default();
    let fits = fit_path(&x, &y, &path, &Penalty::Lasso, &opts, PathStop::for_design(&x))?;
    println!("path: {} of {} fits, lambda_max {:.4}", fits.len(), path.len(), path.lambda_max());
    for i in (0..fits.len()).step_by(20) {
        println!("  lambda {:.5}  df {:3}  kkt {:.1e}", fits[i].lambda, fits[i].df(), fits[i].kkt_residual);
    }

    let prep = prepare(&x, &y, &TransformSpec::None)?;
    for criterion in [Criterion::Bic, Criterion::Gic] {
        let report = select_ic_from_fits(&x, &y, &fits, criterion)?;
        let chosen = &fits[report.selected_index];
        println!("{criterion}: lambda {:.5}, {} selected", report.selected_lambda, chosen.df());
    }
    let cv = select_cv(&prep, &path, &Penalty::Lasso, 5, 3, &opts)?;
    println!("cv: lambda {:.5} (index {})", cv.selected_lambda, cv.selected_index);
    let intercept = centering.intercept(&fits[cv.selected_index.min(fits.len() - 1)].beta);
    println!("intercept at the CV choice: {intercept:.4}");
    Ok(())
}
