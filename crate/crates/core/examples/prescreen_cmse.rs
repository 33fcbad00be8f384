//! Marginal screening down to n/2 predictors, then the cross-validated
//! prediction error of an OLS refit on the true and on a padded support.

use prodreg::diagnostics::{cmse, prescreen};
use prodreg::simgen::{generate, CoefMode, Model, SimParams};

fn main() -> prodreg::Result<()> {
    let params = SimParams {
        n: 200,
        p: 2000,
        k: 5,
        rho: Some(0.5),
        coef_mode: CoefMode::One,
        heteroscedastic: false,
    };
    let inst = generate(Model::M3, &params, 2)?;
    let kept = prescreen(&inst.x, &inst.y, 100)?;
    let found = inst.support_true.iter().filter(|j| kept.contains(j)).count();
    println!("kept {} columns, {found} of {} true predictors among them", kept.len(), inst.support_true.len());
    println!("top five by |t|: {:?}", &kept[..5]);

    let true_err = cmse(&inst.x, &inst.y, &inst.support_true, 5, 1)?;
    let mut padded = inst.support_true.clone();
    padded.extend(kept.iter().filter(|j| !inst.support_true.contains(j)).take(20));
    let padded_err = cmse(&inst.x, &inst.y, &padded, 5, 1)?;
    println!("CMSE true support {true_err:.4}, with 20 extra columns {padded_err:.4}");
    Ok(())
}
