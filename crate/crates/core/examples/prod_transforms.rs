//! Compares the design transforms on one correlated factor instance: the
//! support picked by BIC and its false positives.

use prodreg::diagnostics::support_metrics;
use prodreg::linalg::center_columns;
use prodreg::simgen::{generate, CoefMode, Model, SimParams};
use prodreg::solver::Penalty;
use prodreg::transform::{prepare, QChoice, Tau, TransformSpec};
use prodreg::tuning::{select_ic, Criterion, PathSettings};

fn main() -> prodreg::Result<()> {
    let params = SimParams {
        n: 250,
        p: 500,
        k: 15,
        rho: None,
        coef_mode: CoefMode::Dirac05,
        heteroscedastic: false,
    };
    let inst = generate(Model::M1, &params, 5)?;
    let (x, y, _) = center_columns(&inst.x, &inst.y)?;
    let specs = [
        TransformSpec::None,
        TransformSpec::Licm { q: QChoice::Auto },
        TransformSpec::Rgz { q: QChoice::Auto, seed: 1 },
        TransformSpec::Rgb { q: QChoice::Fixed(3), seed: 1 },
        TransformSpec::Puffer,
        TransformSpec::Trim { tau: Tau::Median },
    ];
    let settings = PathSettings::default();
    for spec in specs {
        let prep = prepare(&x, &y, &spec)?;
        let path = settings.path_for(&prep, &Penalty::Lasso)?;
        let (report, fits) = select_ic(&prep, &path, &Penalty::Lasso, Criterion::Bic, &Default::default())?;
        let support = &fits[report.selected_index].support;
        let m = support_metrics(support, &inst.support_true, x.ncols())?;
        println!(
            "{:7} resolved {:?}: TPR {:.2}  FP {:3}  FPR {:.4}",
            spec.name(),
            prep.resolved,
            m.tpr,
            m.fp_count,
            m.fpr
        );
        for w in &prep.warnings {
            println!("        warning: {w}");
        }
    }
    Ok(())
}
