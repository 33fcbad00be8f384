//! Lasso, SCAD, MCP and the adaptive Lasso at the BIC choice, with and
//! without LICM.

use prodreg::diagnostics::support_metrics;
use prodreg::linalg::center_columns;
use prodreg::simgen::{generate, CoefMode, Model, SimParams};
use prodreg::solver::SolverOptions;
use prodreg::transform::{prepare, QChoice, TransformSpec};
use prodreg::tuning::{resolve_penalty, select_ic, Criterion, PathSettings, PenaltyKind};

fn main() -> prodreg::Result<()> {
    let params = SimParams {
        n: 400,
        p: 400,
        k: 10,
        rho: None,
        coef_mode: CoefMode::One,
        heteroscedastic: false,
    };
    let inst = generate(Model::M4, &params, 9)?;
    let (x, y, _) = center_columns(&inst.x, &inst.y)?;
    let settings = PathSettings::default();
    let opts = SolverOptions::default();
    for spec in [TransformSpec::None, TransformSpec::Licm { q: QChoice::Auto }] {
        let prep = prepare(&x, &y, &spec)?;
        for kind in [PenaltyKind::Lasso, PenaltyKind::Scad, PenaltyKind::Mcp, PenaltyKind::AdaLasso] {
            let penalty = resolve_penalty(kind, &prep, &settings, 1, &opts)?;
            let path = settings.path_for(&prep, &penalty)?;
            let (report, fits) = select_ic(&prep, &path, &penalty, Criterion::Bic, &opts)?;
            let m = support_metrics(&fits[report.selected_index].support, &inst.support_true, x.ncols())?;
            println!("{:5} {:9} TPR {:.2}  FP {}", spec.name(), kind.to_string(), m.tpr, m.fp_count);
        }
    }
    Ok(())
}
